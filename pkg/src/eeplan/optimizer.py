"""Closed-form SINR bounds and the EE-optimal design (zeta, M, K).

The ZF design is found by alternating closed-form updates of the
antennas-per-UE ratio ``cbar = M / K`` and the load ``K``, each of which
maximizes a quasi-concave section of the relaxed objective. A brute-force
grid search over integer (M, K) serves as the oracle and as the MR path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .moments import MomentSet
from .pathloss import PathLossModel
from .power import (
    MR,
    ZF,
    EEBreakdown,
    SystemConfig,
    ZFPowerCoefficients,
    apc_zf_coefficients,
    evaluate_design,
    normalize_scheme,
)

ROOT_IMAG_TOL = 1e-8
TIE_TOL = 1e-12


class InfeasibleDesign(ValueError):
    pass


class NonConvergence(RuntimeError):
    def __init__(self, message: str, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class DesignPoint:
    zeta: float
    M: float
    K: float

    @property
    def cbar(self) -> float:
        return self.M / self.K


@dataclass
class OptimizationProblem:
    lambda_: float
    gamma: float
    model: PathLossModel
    config: SystemConfig
    moments: MomentSet = None  # filled in from (model, lambda_) when omitted

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("target SINR must be positive")
        if self.moments is None:
            self.moments = MomentSet.compute(self.model, self.lambda_, self.config)
        self._power = apc_zf_coefficients(self.config, self.lambda_, self.moments.avg_tx_power_U)

    @property
    def power(self) -> ZFPowerCoefficients:
        return self._power

    @property
    def U(self) -> float:
        return self.moments.avg_tx_power_U

    def max_feasible_gamma(self, K: float) -> float:
        return self.config.tau_c / (K * self.moments.mu2)


# --- bounds -----------------------------------------------------------------


def _snr_terms(config: SystemConfig) -> tuple[float, float]:
    return 1.0 / config.SNR0, 1.0 / config.SNRp


def interference_term(zeta: float, K: float, mu1: float, mu2: float, config: SystemConfig) -> float:
    """Aggregate normalized interference plus noise of the ZF bound."""
    inv0, invp = _snr_terms(config)
    return (
        (K + inv0) * (1 + mu1 / zeta + invp)
        + K / zeta * (mu1**2 + mu2)
        + K * mu1 * (1 + invp)
        - K * (1 + mu2 / zeta)
    )


def prelog(config: SystemConfig, zeta: float, K: float) -> float:
    if zeta * K >= config.tau_c:
        raise InfeasibleDesign(f"pilot length zeta*K={zeta * K:g} must stay below tau_c={config.tau_c}")
    return config.xi * (1 - K * zeta / config.tau_c)


def _check_point(point: DesignPoint, config: SystemConfig):
    if point.zeta <= 0 or point.K <= 0:
        raise InfeasibleDesign("zeta and K must be positive")
    prelog(config, point.zeta, point.K)


def zf_sinr_bound(point: DesignPoint, problem: OptimizationProblem) -> tuple[float, float, float]:
    """Return ``(SINR, INT, SE)`` of the closed-form ZF bound."""
    _check_point(point, problem.config)
    if point.M <= point.K:
        raise InfeasibleDesign("ZF needs M > K")
    m = problem.moments
    inter = interference_term(point.zeta, point.K, m.mu1, m.mu2, problem.config)
    gain = point.M - point.K
    sinr = gain / (inter + gain * m.mu2 / point.zeta)
    se = prelog(problem.config, point.zeta, point.K) * math.log2(1 + sinr)
    return sinr, inter, se


def mr_sinr_bound(point: DesignPoint, problem: OptimizationProblem) -> tuple[float, float]:
    """Return ``(SINR, SE)`` of the closed-form MR bound."""
    _check_point(point, problem.config)
    m = problem.moments
    inter = interference_term(point.zeta, point.K, m.mu1, m.mu2, problem.config)
    denom = inter + point.K * (1 + m.mu2 / point.zeta) + point.M * m.mu2 / point.zeta
    sinr = point.M / denom
    return sinr, prelog(problem.config, point.zeta, point.K) * math.log2(1 + sinr)


def sinr_bound(point: DesignPoint, problem: OptimizationProblem, scheme: str) -> tuple[float, float]:
    if normalize_scheme(scheme) == ZF:
        sinr, _, se = zf_sinr_bound(point, problem)
        return sinr, se
    if normalize_scheme(scheme) == MR:
        return mr_sinr_bound(point, problem)
    raise ValueError("closed-form bounds exist for ZF and MR only")


# --- coefficients -----------------------------------------------------------


def B1(M: float, K: float, moments: MomentSet, config: SystemConfig) -> float:
    mu1, mu2 = moments.mu1, moments.mu2
    return K * (mu1 * (1 + mu1) - mu2) + M * mu2 + mu1 / config.SNR0


def B2(K: float, moments: MomentSet, config: SystemConfig) -> float:
    inv0, invp = _snr_terms(config)
    return K * (invp + moments.mu1 * (1 + invp)) + (1 + invp) * inv0


@dataclass(frozen=True)
class CoefficientSet:
    """Auxiliary coefficients of the relaxed problem.

    ``a`` (indexed 0..6) are functions of K for the cbar-step, ``b`` (0..9)
    are functions of cbar for the K-step. ``a[6]`` and ``b[8]`` carry the
    pilot transmit-power term; ``b[9]`` the pilot-length term of channel
    estimation and payload reception.
    """

    K: float
    cbar: float
    a: tuple[float, ...]
    b: tuple[float, ...]
    B1: float
    B2: float


def a_coefficients(K: float, problem: OptimizationProblem) -> tuple[float, ...]:
    m, cfg, pw = problem.moments, problem.config, problem.power
    g, tc = problem.gamma, cfg.tau_c
    inv0, invp = _snr_terms(cfg)
    a0 = g / tc * m.mu2 * K**2
    a1 = g * K / tc * (K * (m.mu1 * (1 + m.mu1) - m.mu2) + m.mu1 * inv0)
    a2 = K
    a3 = K * (1 + g * (invp + m.mu1 * (1 + invp))) + g * inv0 * (1 + invp)
    a4 = pw.D0 * K + pw.D1 * K**2 + pw.D2 * K**3
    a5 = pw.C0 + pw.C1 * K + pw.C3 * K**3
    a6 = tc * pw.C2 * K
    return (a0, a1, a2, a3, a4, a5, a6)


def b_coefficients(cbar: float, problem: OptimizationProblem) -> tuple[float, ...]:
    m, cfg, pw = problem.moments, problem.config, problem.power
    g, tc = problem.gamma, cfg.tau_c
    inv0, invp = _snr_terms(cfg)
    b0 = g / tc * (m.mu1 * (1 + m.mu1) + m.mu2 * (cbar - 1))
    b1 = g / tc * m.mu1 * inv0
    b2 = cbar - 1 - m.mu1 * g * (1 + invp) - g * invp
    b3 = g * inv0 * (1 + invp)
    b4 = pw.C0
    b5 = pw.C1 + pw.D0 * cbar
    b6 = pw.D1 * cbar
    b7 = pw.C3 + pw.D2 * cbar
    b8 = tc * pw.C2
    b9 = tc * pw.D3 * cbar
    return (b0, b1, b2, b3, b4, b5, b6, b7, b8, b9)


def coefficient_set(K: float, cbar: float, problem: OptimizationProblem) -> CoefficientSet:
    return CoefficientSet(
        K,
        cbar,
        a_coefficients(K, problem),
        b_coefficients(cbar, problem),
        B1(cbar * K, K, problem.moments, problem.config),
        B2(K, problem.moments, problem.config),
    )


# --- pilot reuse ------------------------------------------------------------


def optimal_zeta(M: float, K: float, gamma: float, problem: OptimizationProblem, scheme: str = ZF) -> tuple[float, bool]:
    """Pilot reuse meeting the SINR target exactly.

    Returns ``(zeta, within_bounds)``; the flag is False when zeta falls
    outside ``[1, tau_c / K)``.
    """
    scheme = normalize_scheme(scheme)
    m, cfg = problem.moments, problem.config
    b1, b2 = B1(M, K, m, cfg), B2(K, m, cfg)
    if scheme == ZF:
        num, den = b1 * gamma, M - K - b2 * gamma
    elif scheme == MR:
        num, den = (b1 + 2 * K * m.mu2) * gamma, M - K * gamma - b2 * gamma
    else:
        raise ValueError("closed-form pilot reuse exists for ZF and MR only")
    if den <= 0:
        raise InfeasibleDesign(f"SINR target {gamma:g} unreachable at M={M:g}, K={K:g}")
    zeta = num / den
    return zeta, 1.0 <= zeta < cfg.tau_c / K


# --- cbar step --------------------------------------------------------------


def _cbar_objective(cbar: float, K: float, a, Q1: float) -> float:
    # K * (1 - t) / per-cell power, t = zeta K / tau_c
    a0, a1, a2, a3, a4, a5, a6 = a
    t = (a0 * cbar + a1) / (a2 * cbar - a3)
    return K * (1 - t) / (a4 * cbar + a5 + (a6 + Q1 * cbar) * t)


def cbar_bounds(K: float, problem: OptimizationProblem) -> tuple[float, float]:
    """Interval of cbar giving ``1 <= zeta* <= tau_c / K``."""
    a0, a1, a2, a3 = a_coefficients(K, problem)[:4]
    tc = problem.config.tau_c
    if a2 <= a0:
        raise InfeasibleDesign(
            f"gamma={problem.gamma:g} exceeds the feasible limit tau_c/(K mu2)={problem.max_feasible_gamma(K):g}"
        )
    lo = (a1 + a3) / (a2 - a0)
    den = K * a2 - tc * a0
    hi = (tc * a1 + K * a3) / den if den > 0 else math.inf
    return lo, hi


def optimal_cbar(K: float, gamma: float, problem: OptimizationProblem) -> float:
    if gamma != problem.gamma:
        problem = OptimizationProblem(problem.lambda_, gamma, problem.model, problem.config, problem.moments)
    a = a_coefficients(K, problem)
    a0, a1, a2, a3, a4, a5, a6 = a
    Q1 = problem.config.tau_c * K**2 * problem.power.D3
    r0, r1 = a2 - a0, a1 + a3
    lo, hi = cbar_bounds(K, problem)
    q2 = a4 * a2 + Q1 * a0
    q1 = -a4 * a3 + a5 * a2 + a6 * a0 + Q1 * a1
    q0 = -a5 * a3 + a6 * a1
    ratio = r1 / r0
    disc = ratio**2 + q0 / q2 + q1 / q2 * ratio
    c0 = ratio + math.sqrt(disc) if disc >= 0 else lo
    if lo > hi:
        raise InfeasibleDesign(f"no cbar satisfies 1 <= zeta <= tau_c/K at K={K:g}")
    clamped = min(max(c0, lo), hi)
    if clamped != c0:
        # prefer the interior stationary point when it is as good as the boundary
        inside = lo <= c0 <= hi
        if inside and _cbar_objective(c0, K, a, Q1) >= _cbar_objective(clamped, K, a, Q1) * (1 - TIE_TOL):
            return c0
    return clamped


# --- K step -----------------------------------------------------------------


@dataclass(frozen=True)
class KSolution:
    K: float
    mode: str
    candidates: tuple[float, ...] = ()
    multiple_roots: bool = False
    fallback: bool = False


def _k_polynomials(b) -> tuple[np.ndarray, np.ndarray]:
    """Numerator and denominator (ascending coefficients) of the K-section."""
    b0, b1, b2, b3, b4, b5, b6, b7, b8, b9 = b
    num = np.array([0.0, -b3, b2 - b1, -b0])
    den = np.array([
        -b3 * b4,
        b2 * b4 - b3 * b5,
        b2 * b5 - b3 * b6 + b8 * b1,
        b2 * b6 - b3 * b7 + b8 * b0 + b9 * b1,
        b2 * b7 + b9 * b0,
    ])
    return num, den


def k_objective(K, cbar: float, problem: OptimizationProblem):
    num, den = _k_polynomials(b_coefficients(cbar, problem))
    return P.polyval(K, num) / P.polyval(K, den)


def stationary_polynomial(b) -> np.ndarray:
    num, den = _k_polynomials(b)
    return P.polysub(P.polymul(P.polyder(num), den), P.polymul(num, P.polyder(den)))


def _newton_polish(coeffs: np.ndarray, x: float, steps: int = 8) -> float:
    deriv = P.polyder(coeffs)
    for _ in range(steps):
        d = P.polyval(x, deriv)
        if d == 0:
            break
        step = P.polyval(x, coeffs) / d
        x -= step
        if abs(step) <= 1e-15 * max(1.0, abs(x)):
            break
    return x


def real_roots(coeffs: np.ndarray) -> list[float]:
    """Real roots via companion-matrix eigenvalues, Newton-polished."""
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if coeffs.size < 2:
        return []
    out = []
    for r in P.polyroots(coeffs):
        if abs(r.imag) <= ROOT_IMAG_TOL * max(abs(r.real), 1.0):
            out.append(_newton_polish(coeffs, float(r.real)))
    return sorted(out)


def k_bounds(cbar: float, problem: OptimizationProblem) -> tuple[float, float]:
    """Interval of K giving ``1 <= zeta* <= tau_c / K`` at fixed cbar."""
    b0, b1, b2, b3 = b_coefficients(cbar, problem)[:4]
    tc = problem.config.tau_c
    disc = (b2 - b1) ** 2 - 4 * b0 * b3
    if b2 <= b1 or disc < 0:
        raise InfeasibleDesign(f"no K satisfies zeta <= tau_c/K at cbar={cbar:g}")
    root = math.sqrt(disc)
    k11 = (b2 - b1 - root) / (2 * b0)
    k12 = (b2 - b1 + root) / (2 * b0)
    # zeta >= 1 caps K from above when the denominator grows faster than the pilot demand
    k2 = (tc * b1 + b3) / (b2 - tc * b0) if b2 > tc * b0 else math.inf
    lo, hi = max(k11, 0.0), min(k12, k2)
    if lo >= hi:
        raise InfeasibleDesign(f"empty K interval at cbar={cbar:g}")
    return lo, hi


def asymptotic_K(cbar: float, problem: OptimizationProblem) -> float:
    """Closed form valid for large L_BS, dense networks and SNR0 >> gamma."""
    b0, b1, b2 = b_coefficients(cbar, problem)[:3]
    pw = problem.power
    slope = pw.C1 + pw.D0 * cbar
    if b0 <= 0 or b2 <= b1:
        raise InfeasibleDesign(f"asymptotic K undefined at cbar={cbar:g}")
    return pw.C0 / slope * (math.sqrt(1 + (b2 - b1) / b0 * slope / pw.C0) - 1)


def optimal_K(cbar: float, gamma: float, problem: OptimizationProblem, mode: str = "quintic") -> KSolution:
    if gamma != problem.gamma:
        problem = OptimizationProblem(problem.lambda_, gamma, problem.model, problem.config, problem.moments)
    if mode == "asymptotic":
        return KSolution(asymptotic_K(cbar, problem), mode)
    if mode != "quintic":
        raise ValueError(f"unknown K mode {mode!r}")
    lo, hi = k_bounds(cbar, problem)
    b = b_coefficients(cbar, problem)
    roots = [r for r in real_roots(stationary_polynomial(b)) if lo < r < hi]
    upper = hi if math.isfinite(hi) else None
    candidates = list(roots) + [lo] + ([upper] if upper is not None else [])
    candidates = [k for k in candidates if k > 0]
    fallback = False
    if not roots:
        from scipy.optimize import minimize_scalar

        span_hi = upper if upper is not None else max(lo * 10, 1.0) * 10
        res = minimize_scalar(lambda k: -k_objective(k, cbar, problem), bounds=(max(lo, 1e-9), span_hi), method="bounded")
        candidates.append(float(res.x))
        fallback = True
    values = [k_objective(k, cbar, problem) for k in candidates]
    best = max(values)
    # interior stationary points win ties with the boundary
    pick = next(k for k, v in zip(candidates, values) if v >= best * (1 - TIE_TOL))
    return KSolution(pick, mode, tuple(candidates), len(roots) > 1, fallback)


# --- evaluation -------------------------------------------------------------


def design_performance(point: DesignPoint, problem: OptimizationProblem, scheme: str = ZF) -> EEBreakdown:
    _, se = sinr_bound(point, problem, scheme)
    return evaluate_design(scheme, point.zeta, point.M, point.K, se, problem.lambda_, problem.U, problem.config)


def design_at(M: float, K: float, problem: OptimizationProblem, scheme: str = ZF) -> tuple[DesignPoint, EEBreakdown, bool]:
    zeta, ok = optimal_zeta(M, K, problem.gamma, problem, scheme)
    point = DesignPoint(zeta, M, K)
    if zeta * K >= problem.config.tau_c:
        return point, None, False
    return point, design_performance(point, problem, scheme), ok


# --- alternating optimization -----------------------------------------------


@dataclass(frozen=True)
class TraceStep:
    iteration: int
    zeta: float
    cbar: float
    K: float
    ee: float


@dataclass(frozen=True)
class OptimizationResult:
    point: DesignPoint  # integer (M, K) with re-derived zeta
    relaxed: DesignPoint
    performance: EEBreakdown
    iterations: int
    converged: bool
    trace: tuple[TraceStep, ...] = field(default=())
    multiple_roots: bool = False


def _relaxed_ee(zeta: float, M: float, K: float, problem: OptimizationProblem) -> float:
    return design_performance(DesignPoint(zeta, M, K), problem, ZF).ee


def project_to_integers(relaxed: DesignPoint, problem: OptimizationProblem, scheme: str = ZF):
    """Nearest-integer projection, falling back to the best feasible neighbour."""
    M0, K0 = round(relaxed.M), max(1, round(relaxed.K))
    best = None
    candidates = [(M0, K0)] + [(M0 + dm, K0 + dk) for dm in (-1, 0, 1) for dk in (-1, 0, 1) if (dm, dk) != (0, 0)]
    for idx, (M, K) in enumerate(candidates):
        if K < 1 or M <= K:
            continue
        try:
            point, perf, ok = design_at(M, K, problem, scheme)
        except InfeasibleDesign:
            continue
        if not ok or perf is None:
            continue
        if idx == 0:
            return point, perf
        if best is None or perf.ee > best[1].ee:
            best = (point, perf)
    if best is None:
        raise InfeasibleDesign("no feasible integer design near the relaxed optimum")
    return best


def alternating_optimize(
    problem: OptimizationProblem,
    init: DesignPoint,
    epsilon: float = 1e-4,
    scheme: str = ZF,
    k_mode: str = "quintic",
    max_iter: int = 100,
) -> OptimizationResult:
    if normalize_scheme(scheme) != ZF:
        raise ValueError("alternating optimization is implemented for ZF only")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if init.M <= init.K:
        raise InfeasibleDesign("initial point needs M > K")
    zeta, cbar, K = init.zeta, init.cbar, float(init.K)
    trace = []
    multiple = False
    prev_ee = -math.inf
    for it in range(1, max_iter + 1):
        cbar_new = optimal_cbar(K, problem.gamma, problem)
        sol = optimal_K(cbar_new, problem.gamma, problem, k_mode)
        multiple |= sol.multiple_roots
        K_new = sol.K
        M_new = cbar_new * K_new
        zeta_new, _ = optimal_zeta(M_new, K_new, problem.gamma, problem, ZF)
        ee = _relaxed_ee(zeta_new, M_new, K_new, problem)
        trace.append(TraceStep(it, zeta_new, cbar_new, K_new, ee))
        if ee < prev_ee * (1 - 1e-9):
            raise NonConvergence(f"EE decreased at iteration {it}", tuple(trace))
        prev_ee = ee
        delta = max(
            abs(zeta_new - zeta) / max(abs(zeta_new), 1e-12),
            abs(cbar_new - cbar) / max(abs(cbar_new), 1e-12),
            abs(K_new - K) / max(abs(K_new), 1e-12),
        )
        zeta, cbar, K = zeta_new, cbar_new, K_new
        if delta < epsilon:
            relaxed = DesignPoint(zeta, cbar * K, K)
            point, perf = project_to_integers(relaxed, problem, ZF)
            return OptimizationResult(point, relaxed, perf, it, True, tuple(trace), multiple)
    raise NonConvergence(f"no convergence within {max_iter} iterations", tuple(trace))


# --- grid oracle ------------------------------------------------------------

FEASIBLE = 0
M_NOT_ABOVE_K = 1
UNREACHABLE = 2
ZETA_BELOW_ONE = 3
PILOTS_EXCEED_BLOCK = 4
REASONS = {
    FEASIBLE: "ok",
    M_NOT_ABOVE_K: "M<=K",
    UNREACHABLE: "sinr-unreachable",
    ZETA_BELOW_ONE: "zeta<1",
    PILOTS_EXCEED_BLOCK: "zeta*K>=tau_c",
}


@dataclass(frozen=True)
class GridResult:
    M_values: np.ndarray
    K_values: np.ndarray
    ee: np.ndarray  # (len(M), len(K)), NaN where infeasible
    zeta: np.ndarray
    apc: np.ndarray
    ase: np.ndarray
    reason: np.ndarray
    best: DesignPoint
    best_performance: EEBreakdown
    scheme: str

    @property
    def feasible_count(self) -> int:
        return int(np.sum(self.reason == FEASIBLE))


def grid_search(problem: OptimizationProblem, M_range, K_range, scheme: str = ZF) -> GridResult:
    scheme = normalize_scheme(scheme)
    Ms = np.asarray(list(M_range), dtype=int)
    Ks = np.asarray(list(K_range), dtype=int)
    shape = (Ms.size, Ks.size)
    ee = np.full(shape, np.nan)
    zetas = np.full(shape, np.nan)
    apc = np.full(shape, np.nan)
    ase = np.full(shape, np.nan)
    reason = np.zeros(shape, dtype=int)
    best = None
    for i, M in enumerate(Ms):
        for j, K in enumerate(Ks):
            if scheme == ZF and M <= K:
                reason[i, j] = M_NOT_ABOVE_K
                continue
            try:
                point, perf, ok = design_at(float(M), float(K), problem, scheme)
            except InfeasibleDesign:
                reason[i, j] = UNREACHABLE
                continue
            zetas[i, j] = point.zeta
            if point.zeta * K >= problem.config.tau_c:
                reason[i, j] = PILOTS_EXCEED_BLOCK
                continue
            if point.zeta < 1:
                reason[i, j] = ZETA_BELOW_ONE
                continue
            ee[i, j], apc[i, j], ase[i, j] = perf.ee, perf.apc, perf.ase
            if best is None or perf.ee > best[1].ee:
                best = (point, perf)
    if best is None:
        raise InfeasibleDesign("no feasible grid point")
    return GridResult(Ms, Ks, ee, zetas, apc, ase, reason, best[0], best[1], scheme)
