"""
产物导出服务
DOT、CSV、JSON、JSONL 的确定性文本生成与写入
"""
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from quverse.config.settings import AppSettings
from quverse.core.bisim import SigmaModel
from quverse.core.embedding import Codeword, Spectrum
from quverse.core.evidence import BPA, bel_table
from quverse.core.formula import render
from quverse.core.proximity import ProximitySpace, QuantumSet
from quverse.core.unfolding import StageModel, children_sets
from quverse.services.universe_service import RunTrace, StageState, universe_service
from quverse.utils.file_utils import (
    csv_text,
    write_json,
    write_jsonl,
    write_text,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def dot_graph(
    name: str,
    nodes: Sequence[str],
    edges: Iterable[Tuple[str, str]],
    labels: Optional[Dict[str, str]] = None
) -> str:
    """
    有向图的DOT文本

    节点按给定顺序编号为 N0, N1, ...；边按给定顺序输出，自环画作 Ni -> Ni。
    """
    ids = {node: f"N{i}" for i, node in enumerate(nodes)}
    labels = labels or {}
    lines = [f"digraph {_quote(name)} {{"]
    for node in nodes:
        lines.append(f"  {ids[node]}[label={_quote(labels.get(node, node))}];")
    for src, dst in edges:
        lines.append(f"  {ids[src]} -> {ids[dst]};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _ordered_pairs(worlds: Sequence[str], pairs: Iterable[Tuple[str, str]]) -> List[Tuple[str, str]]:
    index = {w: i for i, w in enumerate(worlds)}
    return sorted(pairs, key=lambda p: (index[p[0]], index[p[1]]))


def tree_dot(stage: StageModel) -> str:
    """M_U：父->子 边与每个世界的自环"""
    worlds = stage.kripke.worlds
    return dot_graph(f"M_U^{stage.alpha}", worlds, _ordered_pairs(worlds, stage.kripke.access))


def sigma_dot(sigma: SigmaModel, part: str = "full") -> str:
    """M_Σ 的 ⁺P、⁻P（含自环）或完整 P_Σ"""
    worlds = sigma.worlds
    if part == "plus":
        pairs = sigma.plus_pairs
    elif part == "minus":
        pairs = sigma.minus_pairs | {(w, w) for w in worlds}
    else:
        pairs = sigma.relation
    return dot_graph(f"M_Sigma_{part}", worlds, _ordered_pairs(worlds, pairs))


def tree_json(stage: StageModel) -> Dict:
    """展开树：行走键、深度、种子节点与规范公式"""
    return {
        "alpha": stage.alpha,
        "z_u": stage.z_u,
        "children_set_sizes": [len(ch) for ch in children_sets(stage)],
        "nodes": [
            {
                "key": n.walk_key,
                "depth": n.depth,
                "node": n.graph_node,
                "parent": n.parent,
                "formula": render(n.formula),
            }
            for n in stage.tree.nodes
        ],
    }


def spectrum_csv(spectrum: Spectrum) -> str:
    flagged = {i for pair in spectrum.degeneracy_flags for i in pair}
    rows = [(k, float(v), int(k in flagged)) for k, v in enumerate(spectrum.eigenvalues)]
    return csv_text(["index", "eigenvalue", "degenerate"], rows)


def matrix_csv(matrix: np.ndarray, labels: Sequence[str]) -> str:
    rows = [[labels[i]] + [float(x) for x in matrix[i]] for i in range(matrix.shape[0])]
    return csv_text([""] + list(labels), rows)


def codewords_text(words: Sequence[Codeword]) -> str:
    return "".join(f"{c.text()}\n" for c in words)


def bel_table_csv(b: BPA, modal: Optional[Sequence[Dict]] = None) -> str:
    """m/Bel/Pl 表；给出模态表时追加 bel_modal、pl_modal 两列"""
    table = bel_table(b)
    header = ["set", "m", "bel", "pl"]
    rows = [["{" + ",".join(r["set"]) + "}", r["mass"], r["bel"], r["pl"]] for r in table]
    if modal is not None:
        header += ["bel_modal", "pl_modal"]
        for row, extra in zip(rows, modal):
            row += [extra["bel"], extra["pl"]]
    return csv_text(header, rows)


def lattice_json(space: ProximitySpace, elements: Sequence[QuantumSet]) -> Dict:
    return {
        "space": space.to_dict(),
        "quantum_sets": [
            {"members": space.ordered(q.members), "witness": space.ordered(q.witness)} for q in elements
        ],
    }


def diagnostics_json(state: StageState) -> Dict:
    diag = state.diagnostics
    return {
        "alpha": state.alpha,
        "non_degenerate": diag.non_degenerate,
        "degeneracy_flags": [list(p) for p in diag.degeneracy_flags],
        "schoenberg_positive": diag.schoenberg_positive,
        "schoenberg_ok": diag.schoenberg_ok,
        "bisimulation": diag.bisimulation.to_dict() if diag.bisimulation is not None else None,
        "p_continuous": diag.p_continuous,
        "nesting_ok": diag.nesting_ok,
        "isometry_ok": diag.isometry_ok,
        "norm_ok": diag.norm_ok,
        "born_identity_residual": diag.born_identity_residual,
        "code": diag.code.model_dump() if diag.code is not None else None,
    }


class ExportService:
    """结果写入"""

    def write_trace(self, path: PathLike, trace: RunTrace) -> Path:
        """运行轨迹：每阶段一行"""
        return write_jsonl(path, trace.records)

    def write_stage_artifacts(self, directory: PathLike, state: StageState) -> List[Path]:
        """单阶段产物：树DOT、谱CSV、ω JSON、诊断JSON"""
        directory = Path(directory)
        prefix = f"stage_{state.alpha:03d}"
        written = []
        if state.stage_model is not None:
            written.append(write_text(directory / f"{prefix}_tree.dot", tree_dot(state.stage_model)))
        written.append(write_text(directory / f"{prefix}_spectrum.csv", spectrum_csv(state.basis.spectrum)))
        written.append(write_json(directory / f"{prefix}_weights.json", {
            "alpha": state.alpha,
            "worlds": list(state.worlds),
            "weights": [float(w) for w in state.born],
            "selected": state.selected,
        }))
        written.append(write_json(directory / f"{prefix}_diagnostics.json", diagnostics_json(state)))
        return written

    def write_run_directory(self, directory: PathLike, trace: RunTrace, settings: AppSettings) -> List[Path]:
        """运行目录：配置、轨迹、逐阶段产物、预测与解释"""
        directory = Path(directory)
        written = [
            write_json(directory / "config.json", settings.to_flat_dict()),
            self.write_trace(directory / "trace.jsonl", trace),
        ]
        for state in trace.states:
            written.extend(self.write_stage_artifacts(directory, state))
        written.append(write_jsonl(
            directory / "predictions.jsonl", [universe_service.predict(s) for s in trace.states]
        ))
        written.append(write_jsonl(
            directory / "explanations.jsonl",
            [universe_service.explain(a, b) for a, b in zip(trace.states, trace.states[1:])]
        ))
        return written

    def write_config(self, path: PathLike, settings: AppSettings) -> Path:
        return write_json(path, settings.to_flat_dict())


# 全局实例
export_service = ExportService()
