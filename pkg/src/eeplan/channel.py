"""Monte Carlo uplink: pilot reuse, MMSE estimation, combining and SE.

Everything is simulated in noise-normalized units: the channel of UE ``i``
in cell ``l`` seen at BS ``j`` is ``g = sqrt(p_li / sigma2) h`` with per-entry
variance ``SNR0 * beta^j_li / beta^l_li``, and the receiver noise has unit
variance. SINRs are invariant to this scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Deployment, sample_deployment
from .pathloss import PathLossModel
from .power import MMSE, MR, ZF, SystemConfig, normalize_scheme
from .rng import substream

T1 = "t1"
UATF = "uatf"
_BOUND_ALIASES = {"t1": T1, "theorem1": T1, "uatf": UATF}
GRAM_COND_LIMIT = 1e12

SE_CSV_FIELDS = ("scheme", "bound", "lambda", "zeta", "M", "K", "se_mean", "se_stderr", "n_dep", "n_ch", "seed")


class NumericalRankError(np.linalg.LinAlgError):
    pass


def normalize_bound(bound: str) -> str:
    try:
        return _BOUND_ALIASES[bound.lower()]
    except (KeyError, AttributeError):
        raise ValueError(f"unknown bound {bound!r}") from None


# --- pilots -----------------------------------------------------------------


def colour_probabilities(zeta: float) -> tuple[int, float]:
    """Return ``(n, q)``: ``n`` pilot subsets, the first drawn with probability ``q``
    and the rest uniformly, so two cells collide with probability ``1 / zeta``.
    """
    if zeta < 1:
        raise ValueError("pilot reuse factor must be at least 1")
    n = math.ceil(zeta - 1e-12)
    if n == 1:
        return 1, 1.0
    if abs(n - zeta) < 1e-12:
        return n, 1.0 / n
    m = n - 1
    a, b, c = 1 + 1 / m, -2 / m, 1 / m - 1 / zeta
    q = (-b + math.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
    return n, q


def sample_colours(zeta: float, count: int, rng: np.random.Generator) -> np.ndarray:
    n, q = colour_probabilities(zeta)
    if n == 1:
        return np.zeros(count, dtype=np.int64)
    first = rng.random(count) < q
    rest = 1 + rng.integers(0, n - 1, size=count)
    return np.where(first, 0, rest).astype(np.int64)


@dataclass(frozen=True)
class PilotAllocation:
    """Pilot subset ("colour") per cell; cells with equal colour share pilots
    index by index."""

    zeta: float
    K: int
    colours: np.ndarray

    @property
    def tau_p(self) -> float:
        return self.zeta * self.K

    @property
    def contamination(self) -> np.ndarray:
        """Symmetric boolean matrix ``a[l', l]`` with unit diagonal."""
        return self.colours[:, None] == self.colours[None, :]

    @property
    def sequence_index(self) -> np.ndarray:
        """Pilot sequence used by UE ``i`` of cell ``l``, shape (L, K)."""
        return self.colours[:, None] * self.K + np.arange(self.K)[None, :]


def allocate_pilots(
    deployment: Deployment, zeta: float, seed: int = 0, task: int = 0, rng: np.random.Generator | None = None
) -> PilotAllocation:
    if zeta < 1:
        raise ValueError("pilot reuse factor must be at least 1")
    rng = rng if rng is not None else substream(seed, task, "pilots")
    return PilotAllocation(zeta, deployment.K, sample_colours(zeta, deployment.n_bs, rng))


# --- channels and estimates -------------------------------------------------


@dataclass(frozen=True)
class LargeScale:
    """Large-scale gains of one deployment as seen by a subset of BSs."""

    observers: np.ndarray  # (J,)
    beta: np.ndarray  # (J, L, K) gain from every UE to each observing BS
    beta_own: np.ndarray  # (L, K) gain to the serving BS

    @property
    def relative(self) -> np.ndarray:
        return self.beta / self.beta_own[None]

    @classmethod
    def build(cls, deployment: Deployment, model: PathLossModel, observers=None) -> "LargeScale":
        obs = np.arange(deployment.n_bs) if observers is None else np.asarray(observers, dtype=int)
        dist = deployment.distances()
        beta_all = model.gain(np.maximum(dist, 1e-12))
        own = beta_all[np.arange(deployment.n_bs), np.arange(deployment.n_bs)]
        return cls(obs, beta_all[obs], own)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of channels and MMSE estimates at the observing BSs.

    ``g``/``g_hat`` have shape (J, L, K, M) in noise-normalized units;
    ``gamma_hat`` (J, L, K) is the normalized estimate variance.
    """

    large_scale: LargeScale
    allocation: PilotAllocation
    g: np.ndarray
    g_hat: np.ndarray
    gamma_hat: np.ndarray
    config: SystemConfig

    @property
    def M(self) -> int:
        return self.g.shape[-1]

    @property
    def K(self) -> int:
        return self.g.shape[2]

    @property
    def p(self) -> np.ndarray:
        """UL payload powers, (L, K), W."""
        return self.config.P0 / self.large_scale.beta_own

    def _scale(self) -> np.ndarray:
        # h = g * sigma / sqrt(p)
        return np.sqrt(self.config.sigma2 / self.p)[None, :, :, None]

    @property
    def h(self) -> np.ndarray:
        return self.g * self._scale()

    @property
    def h_hat(self) -> np.ndarray:
        return self.g_hat * self._scale()

    @property
    def gamma(self) -> np.ndarray:
        """Estimate variance in physical units, (J, L, K)."""
        return self.gamma_hat * self.config.sigma2 / self.p[None]

    def error_load(self, j: int) -> float:
        """Diagonal loading ``sum (beta - gamma) p / sigma2 + 1`` at observer ``j``."""
        rel = self.large_scale.relative[j]
        return float(np.sum(self.config.SNR0 * rel - self.gamma_hat[j]) + 1.0)

    def stacked_estimates(self, j: int) -> np.ndarray:
        """(M, L*K) matrix of all estimates at observer ``j``."""
        L, K, M = self.g_hat.shape[1:]
        return self.g_hat[j].reshape(L * K, M).T

    def stacked_channels(self, j: int) -> np.ndarray:
        L, K, M = self.g.shape[1:]
        return self.g[j].reshape(L * K, M).T

    def own_columns(self, j: int) -> slice:
        cell = int(self.large_scale.observers[j])
        return slice(cell * self.K, (cell + 1) * self.K)


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def draw_channels(
    large_scale: LargeScale,
    allocation: PilotAllocation,
    M: int,
    config: SystemConfig,
    channel_rng: np.random.Generator,
    noise_rng: np.random.Generator,
) -> ChannelRealization:
    rel = large_scale.relative  # (J, L, K)
    J, L, K = rel.shape
    snr0 = config.SNR0
    inv_snrp = 1.0 / config.SNRp
    inv_rho = snr0 / config.SNRp
    g = np.sqrt(snr0 * rel)[..., None] * _complex_normal(channel_rng, (J, L, K, M))

    _, cls = np.unique(allocation.colours, return_inverse=True)
    n_cls = int(cls.max()) + 1
    summed = np.zeros((J, n_cls, K, M), dtype=complex)
    np.add.at(summed, (slice(None), cls), g)
    rel_sum = np.zeros((J, n_cls, K))
    np.add.at(rel_sum, (slice(None), cls), rel)
    observation = summed + math.sqrt(inv_rho) * _complex_normal(noise_rng, (J, n_cls, K, M))

    denom = rel_sum[:, cls] + inv_snrp  # (J, L, K)
    g_hat = (rel / denom)[..., None] * observation[:, cls]
    gamma_hat = snr0 * rel**2 / denom
    return ChannelRealization(large_scale, allocation, g, g_hat, gamma_hat, config)


def estimate_channels(
    deployment: Deployment,
    allocation: PilotAllocation,
    model: PathLossModel,
    config: SystemConfig,
    seed: int,
    M: int,
    observers=None,
    task: int = 0,
) -> ChannelRealization:
    ls = LargeScale.build(deployment, model, observers)
    return draw_channels(
        ls, allocation, M, config, substream(seed, task, "channels"), substream(seed, task, "noise")
    )


# --- combining --------------------------------------------------------------


def combine(scheme: str, realization: ChannelRealization, j: int = 0) -> np.ndarray:
    """Combining matrix (M, K) for the UEs of observer ``j``'s cell."""
    scheme = normalize_scheme(scheme)
    G = realization.stacked_estimates(j)
    own = G[:, realization.own_columns(j)]
    if scheme == MR:
        return own
    if scheme == ZF:
        if realization.M <= realization.K:
            raise ValueError("ZF needs M > K")
        gram = own.conj().T @ own
        if np.linalg.cond(gram) > GRAM_COND_LIMIT:
            raise NumericalRankError("ill-conditioned Gram matrix of intra-cell estimates")
        return np.linalg.solve(gram, own.conj().T).conj().T
    cov = G @ G.conj().T + realization.error_load(j) * np.eye(realization.M)
    return np.linalg.solve(cov, own)


def instantaneous_sinr(V: np.ndarray, realization: ChannelRealization, j: int = 0) -> np.ndarray:
    """Per-UE SINR with estimated interference, estimation error and noise."""
    G = realization.stacked_estimates(j)
    proj = G.conj().T @ V  # (N, K)
    own = realization.own_columns(j)
    k = np.arange(V.shape[1])
    desired = np.abs(proj[own.start + k, k]) ** 2
    total = np.sum(np.abs(proj) ** 2, axis=0) + realization.error_load(j) * np.sum(np.abs(V) ** 2, axis=0)
    return desired / (total - desired)


# --- spectral efficiency ----------------------------------------------------


@dataclass(frozen=True)
class SEEstimate:
    scheme: str
    bound: str
    se_mean: float
    se_stderr: float
    n_dep: int
    n_ch: int
    bias: float = 0.0  # split-half estimate of the nested-MC bias (UatF only)
    per_deployment: np.ndarray = field(default=None, repr=False)


@dataclass
class _Accumulator:
    K: int
    log_sum: float = 0.0
    log_count: int = 0
    a: list = field(default_factory=list)  # desired-signal amplitudes per draw, (J*K,)
    b: list = field(default_factory=list)  # total received power through v
    c: list = field(default_factory=list)  # combiner norm


def _uatf_se(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    mean_a = np.abs(a.mean(axis=0)) ** 2
    sinr = mean_a / (b.mean(axis=0) - mean_a + c.mean(axis=0))
    return np.log2(1 + sinr)


def simulate_deployment(
    deployment: Deployment,
    zeta: float,
    M: int,
    schemes,
    model: PathLossModel,
    config: SystemConfig,
    n_draws: int,
    seed: int,
    task: int,
    observers: int = 1,
    uatf: bool = True,
) -> dict:
    """Per-scheme ``{"t1": mean log2(1+SINR'), "uatf": mean UatF log-rate,
    "uatf_half": same from the first half of the draws}``."""
    schemes = [normalize_scheme(s) for s in schemes]
    obs = np.arange(min(observers, deployment.n_bs))
    ls = LargeScale.build(deployment, model, obs)
    pilot_rng = substream(seed, task, "pilots")
    channel_rng = substream(seed, task, "channels")
    noise_rng = substream(seed, task, "noise")
    acc = {s: _Accumulator(deployment.K) for s in schemes}
    for _ in range(n_draws):
        alloc = allocate_pilots(deployment, zeta, rng=pilot_rng)
        real = draw_channels(ls, alloc, M, config, channel_rng, noise_rng)
        for s in schemes:
            a_row, b_row, c_row = [], [], []
            for j in range(len(obs)):
                V = combine(s, real, j)
                sinr = instantaneous_sinr(V, real, j)
                acc[s].log_sum += float(np.sum(np.log2(1 + sinr)))
                acc[s].log_count += sinr.size
                if uatf:
                    T = real.stacked_channels(j).conj().T @ V
                    own = real.own_columns(j)
                    k = np.arange(V.shape[1])
                    a_row.append(T[own.start + k, k])
                    b_row.append(np.sum(np.abs(T) ** 2, axis=0))
                    c_row.append(np.sum(np.abs(V) ** 2, axis=0))
            if uatf:
                acc[s].a.append(np.concatenate(a_row))
                acc[s].b.append(np.concatenate(b_row))
                acc[s].c.append(np.concatenate(c_row))
    out = {}
    for s in schemes:
        res = {T1: acc[s].log_sum / acc[s].log_count}
        if uatf:
            a, b, c = np.array(acc[s].a), np.array(acc[s].b), np.array(acc[s].c)
            res[UATF] = float(np.mean(_uatf_se(a, b, c)))
            half = max(1, n_draws // 2)
            res["uatf_half"] = float(np.mean(_uatf_se(a[:half], b[:half], c[:half])))
        out[s] = res
    return out


def simulate_se(
    schemes,
    lambda_: float,
    zeta: float,
    M: int,
    K: int,
    model: PathLossModel,
    config: SystemConfig,
    n_deployments: int,
    n_channel_draws: int,
    seed: int,
    side_length: float | None = None,
    observers: int = 1,
    uatf: bool = True,
) -> dict[tuple[str, str], SEEstimate]:
    """Ergodic (t1) and UatF SE estimates for several schemes on shared draws."""
    schemes = [normalize_scheme(s) for s in schemes]
    if zeta * K >= config.tau_c:
        raise ValueError(f"pilot length zeta*K={zeta * K:g} must stay below tau_c={config.tau_c}")
    if zeta < 1:
        raise ValueError("pilot reuse factor must be at least 1")
    if ZF in schemes and M <= K:
        raise ValueError("ZF needs M > K")
    if n_deployments < 2 or n_channel_draws < 1:
        raise ValueError("need at least 2 deployments and 1 channel draw")
    side = side_length if side_length is not None else math.sqrt(config.area)
    factor = config.xi * (1 - K * zeta / config.tau_c)
    per = {s: {T1: [], UATF: [], "uatf_half": []} for s in schemes}
    for task in range(n_deployments):
        dep = sample_deployment(lambda_, side, K, seed, task)
        res = simulate_deployment(dep, zeta, M, schemes, model, config, n_channel_draws, seed, task, observers, uatf)
        for s in schemes:
            for key, value in res[s].items():
                per[s][key].append(value)
    out = {}
    for s in schemes:
        bounds = (T1, UATF) if uatf else (T1,)
        for bnd in bounds:
            vals = factor * np.asarray(per[s][bnd])
            bias = 0.0
            if bnd == UATF:
                # bias shrinks as 1/draws: full-budget bias ~ (half - full)
                bias = float(factor * (np.mean(per[s]["uatf_half"]) - np.mean(per[s][UATF])))
            out[(s, bnd)] = SEEstimate(
                s, bnd, float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size)),
                n_deployments, n_channel_draws, bias, vals,
            )
    return out


def average_se(
    scheme: str,
    bound: str,
    lambda_: float,
    zeta: float,
    M: int,
    K: int,
    model: PathLossModel,
    config: SystemConfig,
    n_deployments: int,
    n_channel_draws: int,
    seed: int,
    **kwargs,
) -> SEEstimate:
    bound = normalize_bound(bound)
    res = simulate_se([scheme], lambda_, zeta, M, K, model, config, n_deployments, n_channel_draws, seed,
                      uatf=bound == UATF, **kwargs)
    return res[(normalize_scheme(scheme), bound)]


def se_csv_row(est: SEEstimate, lambda_: float, zeta: float, M: int, K: int, seed: int) -> dict:
    return dict(zip(SE_CSV_FIELDS, (
        est.scheme, est.bound, lambda_, zeta, M, K, est.se_mean, est.se_stderr, est.n_dep, est.n_ch, seed,
    )))
