"""
宇宙阶段引擎服务
基础阶段 alpha=0、推进步 Ψ_α -> Ψ_(α+1)（展开 -> 互模拟 -> 度量 -> 嵌入 -> 谱 -> Born -> 选择）与运行轨迹
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from quverse.config.settings import PairingRule, get_settings
from quverse.core.bisim import BisimulationCheck, SigmaModel, build_sigma, sigma_key, verify_sigma
from quverse.core.embedding import (
    PreferredBasis,
    Spectrum,
    code_params,
    codewords,
    distance_matrix_d2,
    eigh,
    hamming_matrix,
    norm_check,
    preferred_basis,
)
from quverse.core.evidence import (
    bayes_posterior,
    belief_posterior,
    born_weights,
    generalized_born,
    inclusion,
    likelihoods,
    modal_born_masses,
)
from quverse.core.proximity import ProximitySpace, build_space, from_kripke, is_p_continuous, tree_metric
from quverse.core.unfolding import ROOT_KEY, SeedGraph, StageModel, point_world, unfold
from quverse.schemas.records import (
    CodeParameters,
    ExplanationReport,
    PredictionReport,
    StageRecord,
)
from quverse.utils.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StageDiagnostics:
    """单阶段诊断信息；简并与Schoenberg违反只记录，不抛异常"""

    degeneracy_flags: Tuple[Tuple[int, int], ...] = ()
    schoenberg_positive: int = 0
    schoenberg_ok: bool = True
    bisimulation: Optional[BisimulationCheck] = None
    p_continuous: bool = True
    nesting_ok: bool = True
    isometry_ok: bool = True
    norm_ok: bool = True
    born_identity_residual: float = 0.0
    code: Optional[CodeParameters] = None

    @property
    def non_degenerate(self) -> bool:
        return not self.degeneracy_flags

    @property
    def bisimulation_ok(self) -> bool:
        return self.bisimulation is None or self.bisimulation.success


@dataclass(frozen=True)
class StageState:
    """第alpha阶段的宇宙状态"""

    alpha: int
    worlds: Tuple[str, ...]
    basis: PreferredBasis
    psi: np.ndarray
    selected: str
    born: np.ndarray
    stage_model: Optional[StageModel] = None
    sigma: Optional[SigmaModel] = None
    space: Optional[ProximitySpace] = None
    diagnostics: StageDiagnostics = field(default_factory=StageDiagnostics)

    @property
    def dim(self) -> int:
        return len(self.worlds)

    @property
    def z_u(self) -> int:
        return self.stage_model.z_u if self.stage_model is not None else 1

    def proximity(self) -> ProximitySpace:
        """基上的邻近空间 P_Σ（载体与世界同序）"""
        if self.space is not None:
            return self.space
        return build_space([sigma_key(w) for w in self.worlds])


@dataclass
class RunTrace:
    """运行轨迹：逐阶段记录与状态"""

    records: List[StageRecord] = field(default_factory=list)
    states: List[StageState] = field(default_factory=list)

    def n_sequence(self) -> List[int]:
        return [r.n for r in self.records]


def _floats(values) -> List[float]:
    return [float(v) for v in values]


class UniverseService:
    """宇宙阶段引擎"""

    def init_stage0(self, seed: Optional[SeedGraph] = None) -> StageState:
        """
        基础阶段：ℋ⁰ 一维，b⁰ = {1}，Σ⁰ = id

        Args:
            seed: 可选种子；给出时附带 unfold(seed, 0) 的单世界模型

        Returns:
            StageState: alpha=0, Ψ₀ = (1), ω = (1)
        """
        spectrum = Spectrum(eigenvalues=np.array([1.0]), eigenvectors=np.eye(1))
        basis = PreferredBasis(
            worlds=(ROOT_KEY,), spectrum=spectrum, assignment={ROOT_KEY: 0}, rule=PairingRule.POSITIONAL
        )
        stage_model = unfold(seed, 0) if seed is not None else None
        sigma = build_sigma(stage_model) if stage_model is not None else None
        diagnostics = StageDiagnostics(
            schoenberg_positive=1,
            bisimulation=verify_sigma(stage_model, sigma) if sigma is not None else None,
        )
        return StageState(
            alpha=0,
            worlds=(ROOT_KEY,),
            basis=basis,
            psi=np.array([1.0]),
            selected=ROOT_KEY,
            born=np.array([1.0]),
            stage_model=stage_model,
            sigma=sigma,
            space=from_kripke(sigma.kripke) if sigma is not None else None,
            diagnostics=diagnostics,
        )

    def advance(self, state: StageState, seed: SeedGraph) -> StageState:
        """
        推进一步

        Args:
            state: 当前阶段状态
            seed: 整个运行中固定的种子

        Returns:
            StageState: 第 alpha+1 阶段
        """
        settings = get_settings()
        alpha = state.alpha + 1
        stage = unfold(seed, alpha)
        keys = stage.tree.keys

        sigma = build_sigma(stage)
        check = verify_sigma(stage, sigma)
        space = from_kripke(sigma.kripke)
        metric = tree_metric(space)

        words = codewords(stage.tree)
        d2 = distance_matrix_d2(words)
        spectrum = eigh(d2)
        basis = preferred_basis(keys, spectrum, settings.selection.pairing_rule)

        psi_in = inclusion(state.psi, state.worlds, keys)
        born = born_weights(psi_in, basis.matrix)

        selected = point_world(stage)
        psi = basis.vector(selected).copy()

        masses = modal_born_masses(stage.kripke, born)
        residual = float(np.max(np.abs(np.asarray(masses) - born)))

        positive = spectrum.positive_count()
        schoenberg_ok = positive == 1 or (len(keys) == 1 and positive == 0)
        diagnostics = StageDiagnostics(
            degeneracy_flags=spectrum.degeneracy_flags,
            schoenberg_positive=positive,
            schoenberg_ok=schoenberg_ok,
            bisimulation=check,
            p_continuous=is_p_continuous(space),
            nesting_ok=set(state.worlds) <= set(keys),
            isometry_ok=bool(np.array_equal(hamming_matrix(words), metric)),
            norm_ok=norm_check(words),
            born_identity_residual=residual,
            code=code_params(words) if len(words) >= 2 else None,
        )
        if not schoenberg_ok:
            logger.warning(f"Schoenberg性质不成立 - alpha: {alpha}, 正特征值个数: {positive}")
        if residual > 1e-12:
            logger.warning(f"Born恒等式残差偏大 - alpha: {alpha}, 残差: {residual:.3e}")
        if len(keys) == state.dim:
            logger.info(f"Z_U 未增长 - alpha: {alpha}, N: {len(keys)}")

        logger.info(f"阶段推进 - alpha: {alpha}, N: {len(keys)}, 选择: {selected}")
        return StageState(
            alpha=alpha,
            worlds=tuple(keys),
            basis=basis,
            psi=psi,
            selected=selected,
            born=born,
            stage_model=stage,
            sigma=sigma,
            space=space,
            diagnostics=diagnostics,
        )

    def record(self, state: StageState) -> StageRecord:
        """阶段状态的输出记录"""
        diag = state.diagnostics
        index = state.worlds.index(state.selected)
        return StageRecord(
            alpha=state.alpha,
            n=state.dim,
            z_u=state.z_u,
            selected_world=state.selected,
            selected_weight=float(state.born[index]),
            weights=_floats(state.born),
            psi=_floats(state.psi),
            eigenvalues=_floats(state.basis.spectrum.eigenvalues),
            degeneracy_flags=[list(p) for p in diag.degeneracy_flags],
            non_degenerate=diag.non_degenerate,
            schoenberg_positive=diag.schoenberg_positive,
            schoenberg_ok=diag.schoenberg_ok,
            bisimulation_ok=diag.bisimulation_ok,
            p_continuous=diag.p_continuous,
            nesting_ok=diag.nesting_ok,
            born_identity_residual=diag.born_identity_residual,
            weight_sum=math.fsum(state.born),
            code=diag.code,
        )

    def run(self, seed: SeedGraph, stages: int) -> RunTrace:
        """
        从基础阶段开始推进 stages 步

        Args:
            seed: 种子点图
            stages: 推进步数 k >= 0

        Returns:
            RunTrace: k+1 条记录
        """
        if stages < 0:
            raise ConfigurationError(f"阶段数不能为负: {stages}", details={"stages": stages})
        trace = RunTrace()
        state = self.init_stage0(seed)
        trace.states.append(state)
        trace.records.append(self.record(state))
        for _ in range(stages):
            state = self.advance(state, seed)
            trace.states.append(state)
            trace.records.append(self.record(state))
        logger.info(f"运行完成 - 阶段数: {stages}, N序列: {trace.n_sequence()}")
        return trace

    def predict(self, state: StageState) -> PredictionReport:
        """预测：Born权重与每个世界的广义Born值 P*"""
        space = state.proximity()
        return PredictionReport(
            alpha=state.alpha,
            worlds=list(state.worlds),
            weights=_floats(state.born),
            generalized=[generalized_born(space, state.born, x) for x in space.carrier],
        )

    def explain(
        self,
        previous: StageState,
        state: StageState,
        prior: Optional[Sequence[float]] = None
    ) -> ExplanationReport:
        """
        解释：旧基上的贝叶斯后验与信任后验

        Args:
            previous: 第alpha阶段
            state: 第alpha+1阶段
            prior: 旧基上的先验，缺省为均匀 1/N

        Returns:
            ExplanationReport: 似然、后验与信任后验
        """
        n = previous.dim
        prior = np.full(n, 1.0 / n) if prior is None else np.asarray(prior, dtype=float)
        lk = likelihoods(state.psi, previous.basis.matrix, previous.worlds, state.worlds)
        posteriors = [bayes_posterior(prior, lk, i) for i in range(n)]
        space = previous.proximity()
        return ExplanationReport(
            alpha=state.alpha,
            old_worlds=list(previous.worlds),
            prior=_floats(prior),
            likelihoods=_floats(lk),
            likelihood_sum=math.fsum(lk),
            posteriors=_floats(posteriors),
            belief_posteriors=[belief_posterior(space, posteriors, x) for x in space.carrier],
        )


# 全局实例
universe_service = UniverseService()


def init_stage0(seed: Optional[SeedGraph] = None) -> StageState:
    return universe_service.init_stage0(seed)


def advance(state: StageState, seed: SeedGraph) -> StageState:
    return universe_service.advance(state, seed)


def run(seed: SeedGraph, stages: int) -> RunTrace:
    return universe_service.run(seed, stages)


def predict(state: StageState) -> PredictionReport:
    return universe_service.predict(state)


def explain(previous: StageState, state: StageState, prior: Optional[Sequence[float]] = None) -> ExplanationReport:
    return universe_service.explain(previous, state, prior)
