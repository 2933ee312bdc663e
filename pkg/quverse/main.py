"""
quverse 命令行主入口
子命令: unfold, bisim, lattice, ds, stage, run, spectrum
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from dotenv import load_dotenv

from quverse.config.logging import get_logger, setup_logging
from quverse.config.settings import AppSettings, PairingRule, PriorKind, load_settings, set_settings
from quverse.core.bisim import build_sigma, max_bisimulation, verify_bijective_bisimulation
from quverse.core.embedding import code_params, codewords, distance_matrix_d2, eigh, norm_check
from quverse.core.evidence import bpa_from_model, modal_table
from quverse.core.proximity import from_kripke, quantum_sets, tree_metric
from quverse.core.unfolding import SeedGraph, unfold
from quverse.schemas.files import BpaFile, ModelFile, PriorFile, ProximityFile, SeedFile
from quverse.schemas.records import BisimulationReport
from quverse.services.export_service import (
    bel_table_csv,
    codewords_text,
    export_service,
    lattice_json,
    matrix_csv,
    sigma_dot,
    spectrum_csv,
    tree_dot,
    tree_json,
)
from quverse.services.universe_service import universe_service
from quverse.utils.exceptions import BaseAppException, ConfigurationError
from quverse.utils.file_utils import load_json_file, parse_list, to_json_text, write_json, write_text

logger = get_logger("main")


# ---------------------------------------------------------------------------
# 参数定义
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    defaults = AppSettings()
    group = parser.add_argument_group("配置")
    group.add_argument("--config", help="key=value 配置文件（命令行参数优先）")
    group.add_argument("--depth-cap", type=int, help=f"展开深度上限 (默认: {defaults.unfold.depth_cap})")
    group.add_argument("--node-cap", type=int, help=f"展开节点上限 (默认: {defaults.unfold.node_cap})")
    group.add_argument("--eps-degenerate", type=float,
                       help=f"相对谱半径的简并阈值 (默认: {defaults.numeric.eps_degenerate})")
    group.add_argument("--eps-zero", type=float, help=f"零容差 (默认: {defaults.numeric.eps_zero})")
    group.add_argument("--pairing-rule", choices=[r.value for r in PairingRule],
                       help=f"世界与本征向量的配对规则 (默认: {defaults.selection.pairing_rule.value})")
    group.add_argument("--prior", choices=[p.value for p in PriorKind],
                       help=f"贝叶斯先验 (默认: {defaults.selection.prior.value})")
    group.add_argument("--prior-file", help="先验文件 {\"prior\": [...]}，配合 --prior file")
    group.add_argument("--log-level", help=f"日志级别 (默认: {defaults.logging.level})")


def _add_seed(parser: argparse.ArgumentParser, alpha: bool = True) -> None:
    parser.add_argument("--seed", required=True, help="种子点图JSON文件")
    if alpha:
        parser.add_argument("--alpha", type=int, required=True, help="展开阶段")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quverse",
        description="阶段展开、互模拟与谱选择模拟器",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("unfold", help="展开种子点图", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_seed(p)
    p.add_argument("--dot", help="输出展开树DOT（含自环）")
    p.add_argument("--json", help="输出展开树JSON")
    p.add_argument("--realize", default=None,
                   help="phi^0 原子标签覆盖，形如 node=tag,node=tag")
    _add_common(p)

    p = sub.add_parser("bisim", help="构造 M_Σ 并校验互模拟", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--seed", help="种子点图JSON文件（与 --alpha 一起使用）")
    p.add_argument("--alpha", type=int, help="展开阶段")
    p.add_argument("--left", help="左侧模型JSON（与 --right 一起计算最大互模拟，两根世界互模拟时成功）")
    p.add_argument("--right", help="右侧模型JSON")
    p.add_argument("--strict", action="store_true", help="条款(a)改为逐世界标签一致")
    p.add_argument("--report", help="输出互模拟报告JSON")
    p.add_argument("--dot-plus", help="输出 ⁺M_Σ 的DOT")
    p.add_argument("--dot-minus", help="输出 ⁻M_Σ 的DOT")
    p.add_argument("--dot-full", help="输出 P_Σ 的DOT")
    _add_common(p)

    p = sub.add_parser("lattice", help="邻近空间的量子集格", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--space", help="邻近空间JSON文件")
    p.add_argument("--seed", help="种子点图JSON文件（使用该阶段的 P_Σ）")
    p.add_argument("--alpha", type=int, help="展开阶段")
    p.add_argument("--out", help="输出格JSON")
    p.add_argument("--metric", help="输出树度量CSV")
    _add_common(p)

    p = sub.add_parser("ds", help="证据理论 Bel/Pl/m 表", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--model", help="带权SVA模型JSON")
    p.add_argument("--frame", help="逗号分隔的框架标签，配合 --model")
    p.add_argument("--bpa", help="BPA JSON文件")
    p.add_argument("--report", help="输出CSV表")
    _add_common(p)

    p = sub.add_parser("stage", help="运行到指定阶段并导出该阶段产物",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_seed(p)
    p.add_argument("--out", help="产物目录")
    _add_common(p)

    p = sub.add_parser("run", help="运行多个阶段并输出JSONL轨迹",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_seed(p, alpha=False)
    p.add_argument("--stages", type=int, required=True, help="推进步数 k")
    p.add_argument("--out", help="轨迹JSONL文件（缺省输出到stdout）")
    p.add_argument("--artifacts", help="逐阶段产物目录")
    _add_common(p)

    p = sub.add_parser("spectrum", help="码字、D_2 与谱", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_seed(p)
    p.add_argument("--csv", help="输出谱CSV")
    p.add_argument("--d2", help="输出 D_2 CSV")
    p.add_argument("--codewords", help="输出码字文本")
    _add_common(p)

    return parser


def _settings_from_args(args: argparse.Namespace) -> AppSettings:
    overrides = {
        "unfold.depth_cap": args.depth_cap,
        "unfold.node_cap": args.node_cap,
        "numeric.eps_degenerate": args.eps_degenerate,
        "numeric.eps_zero": args.eps_zero,
        "selection.pairing_rule": args.pairing_rule,
        "selection.prior": args.prior,
        "selection.prior_file": args.prior_file,
        "logging.level": args.log_level,
    }
    return load_settings(args.config, overrides)


# ---------------------------------------------------------------------------
# 子命令
# ---------------------------------------------------------------------------

def _load_seed(path: str) -> SeedGraph:
    return load_json_file(path, SeedFile).to_seed()


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        write_text(path, text)
    else:
        sys.stdout.write(text)


def _parse_realization(text: Optional[str]) -> Dict[str, str]:
    realization = {}
    for item in parse_list(text or ""):
        node, sep, tag = item.partition("=")
        if not sep or not node or not tag:
            raise ConfigurationError(f"无法解析的覆盖项: {item}", details={"item": item})
        realization[node] = tag
    return realization


def cmd_unfold(args: argparse.Namespace, settings: AppSettings) -> None:
    stage = unfold(_load_seed(args.seed), args.alpha, settings.unfold, _parse_realization(args.realize))
    if args.dot:
        write_text(args.dot, tree_dot(stage))
    if args.json or not args.dot:
        _emit(to_json_text(tree_json(stage)) + "\n", args.json)


def cmd_bisim(args: argparse.Namespace, settings: AppSettings) -> None:
    if args.seed is not None:
        if args.alpha is None:
            raise ConfigurationError("--seed 需要同时给出 --alpha")
        stage = unfold(_load_seed(args.seed), args.alpha, settings.unfold)
        sigma = build_sigma(stage)
        check = verify_bijective_bisimulation(stage.kripke, sigma.plus_model, sigma.pairing, args.strict)
        maximal = max_bisimulation(stage.kripke, sigma.plus_model)
        report = BisimulationReport(
            **check.to_dict(),
            maximal_pairs=sorted([list(p) for p in maximal.pairs]),
        )
        for path, part in ((args.dot_plus, "plus"), (args.dot_minus, "minus"), (args.dot_full, "full")):
            if path:
                write_text(path, sigma_dot(sigma, part))
    elif args.left and args.right:
        left = load_json_file(args.left, ModelFile).to_model()
        right = load_json_file(args.right, ModelFile).to_model()
        labels = (left.valuation, right.valuation) if args.strict else None
        maximal = max_bisimulation(left, right, labels)
        pairs = sorted([list(p) for p in maximal.pairs])
        # 根世界为各模型规范顺序中的第一个世界
        roots = (left.worlds[0], right.worlds[0])
        report = BisimulationReport(success=roots in maximal, strict=args.strict, pairs=pairs, maximal_pairs=pairs)
    else:
        raise ConfigurationError("需要 --seed/--alpha 或 --left/--right")
    _emit(to_json_text(report) + "\n", args.report)


def cmd_lattice(args: argparse.Namespace, settings: AppSettings) -> None:
    if args.space:
        space = load_json_file(args.space, ProximityFile).to_space()
    elif args.seed and args.alpha is not None:
        space = from_kripke(build_sigma(unfold(_load_seed(args.seed), args.alpha, settings.unfold)).kripke)
    else:
        raise ConfigurationError("需要 --space 或 --seed/--alpha")
    elements = quantum_sets(space, settings.numeric.lattice_dump_cap)
    _emit(to_json_text(lattice_json(space, elements)) + "\n", args.out)
    if args.metric:
        write_text(args.metric, matrix_csv(tree_metric(space).astype(float), list(space.carrier)))


def cmd_ds(args: argparse.Namespace, settings: AppSettings) -> None:
    if args.bpa:
        b = load_json_file(args.bpa, BpaFile).to_bpa()
        modal = None
    elif args.model and args.frame:
        model = load_json_file(args.model, ModelFile).to_model()
        frame = parse_list(args.frame)
        b = bpa_from_model(model, frame)
        modal = modal_table(model, frame)
    else:
        raise ConfigurationError("需要 --bpa 或 --model/--frame")
    _emit(bel_table_csv(b, modal), args.report)


def _prior(settings: AppSettings) -> Optional[List[float]]:
    if settings.selection.prior != PriorKind.FILE:
        return None
    if not settings.selection.prior_file:
        raise ConfigurationError("prior=file 需要 prior_file")
    return load_json_file(settings.selection.prior_file, PriorFile).prior


def cmd_stage(args: argparse.Namespace, settings: AppSettings) -> None:
    trace = universe_service.run(_load_seed(args.seed), args.alpha)
    state = trace.states[-1]
    summary = {
        "record": trace.records[-1],
        "prediction": universe_service.predict(state),
    }
    if len(trace.states) >= 2:
        summary["explanation"] = universe_service.explain(trace.states[-2], state, _prior(settings))
    if args.out:
        out = Path(args.out)
        export_service.write_config(out / "config.json", settings)
        export_service.write_stage_artifacts(out, state)
        write_json(out / "summary.json", summary)
    else:
        sys.stdout.write(to_json_text(summary) + "\n")


def cmd_run(args: argparse.Namespace, settings: AppSettings) -> None:
    trace = universe_service.run(_load_seed(args.seed), args.stages)
    if args.out:
        export_service.write_trace(args.out, trace)
    else:
        sys.stdout.write("".join(to_json_text(r) + "\n" for r in trace.records))
    if args.artifacts:
        export_service.write_run_directory(args.artifacts, trace, settings)


def cmd_spectrum(args: argparse.Namespace, settings: AppSettings) -> None:
    stage = unfold(_load_seed(args.seed), args.alpha, settings.unfold)
    words = codewords(stage.tree)
    d2 = distance_matrix_d2(words)
    spectrum = eigh(d2)
    if args.csv:
        write_text(args.csv, spectrum_csv(spectrum))
    if args.d2:
        write_text(args.d2, matrix_csv(d2, stage.tree.keys))
    if args.codewords:
        write_text(args.codewords, codewords_text(words))
    summary = {
        "alpha": stage.alpha,
        "n": len(words),
        "eigenvalues": [float(v) for v in spectrum.eigenvalues],
        "degeneracy_flags": [list(p) for p in spectrum.degeneracy_flags],
        "schoenberg_positive": spectrum.positive_count(),
        "norm_ok": norm_check(words),
        "code": code_params(words) if len(words) >= 2 else None,
    }
    sys.stdout.write(to_json_text(summary) + "\n")


COMMANDS = {
    "unfold": cmd_unfold,
    "bisim": cmd_bisim,
    "lattice": cmd_lattice,
    "ds": cmd_ds,
    "stage": cmd_stage,
    "run": cmd_run,
    "spectrum": cmd_spectrum,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    命令行入口

    Returns:
        int: 0 成功，1 领域错误，2 用法错误（由 argparse 退出）
    """
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = _settings_from_args(args)
        set_settings(settings)
        setup_logging(settings)
        COMMANDS[args.command](args, settings)
    except BaseAppException as e:
        logger.error(f"{e.error_code}: {e.message}")
        sys.stderr.write(json.dumps(e.to_dict(), ensure_ascii=False, sort_keys=True, default=str) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
