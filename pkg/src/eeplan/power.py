"""Area power consumption, area spectral efficiency and energy efficiency."""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, fields

MR = "mr"
ZF = "zf"
MMSE = "mmse"
SCHEMES = (MR, ZF, MMSE)
_SCHEME_ALIASES = {"mr": MR, "zf": ZF, "mmse": MMSE, "m-mmse": MMSE}

GBIT = 1e9


def normalize_scheme(scheme: str) -> str:
    try:
        return _SCHEME_ALIASES[scheme.lower()]
    except (KeyError, AttributeError):
        raise ValueError(f"unknown combining scheme {scheme!r}") from None


def db_to_linear(db: float) -> float:
    return 10 ** (db / 10)


@dataclass(frozen=True)
class SystemConfig:
    """Radio and hardware constants (defaults from the reference hardware table).

    Powers in W, bandwidth in Hz, coding/backhaul coefficients in W per Gbit/s,
    ``L_BS`` in flops/W, area in km^2.
    """

    tau_c: int = 200
    B_w: float = 20e6
    xi: float = 1 / 3
    sigma2: float = db_to_linear(-94.0) * 1e-3
    SNR0: float = db_to_linear(5.0)
    SNRp: float = db_to_linear(15.0)
    P_FIX: float = 5.0
    P_LO: float = 0.1
    P_BS: float = 0.2
    P_UE: float = 0.1
    P_COD: float = 0.01
    P_DEC: float = 0.08
    P_BT: float = 0.025
    L_BS: float = 750e9
    eta: float = 0.5
    area: float = 1.0
    # count the rho-boosted pilot energy in the transmit power budget
    tx_pilot_boost: bool = True

    def __post_init__(self):
        powers = (self.P_FIX, self.P_LO, self.P_BS, self.P_UE, self.P_COD, self.P_DEC, self.P_BT)
        if any(p < 0 for p in powers) or self.sigma2 < 0:
            raise ValueError("powers must be non-negative")
        if not 0 < self.xi <= 1:
            raise ValueError("xi must lie in (0, 1]")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.tau_c < 2:
            raise ValueError("tau_c must be at least 2")
        if self.SNR0 <= 0 or self.SNRp < self.SNR0:
            raise ValueError("need SNRp >= SNR0 > 0 (rho >= 1)")
        if self.B_w <= 0 or self.L_BS <= 0 or self.area <= 0:
            raise ValueError("bandwidth, L_BS and area must be positive")

    @property
    def rho(self) -> float:
        return self.SNRp / self.SNR0

    @property
    def P0(self) -> float:
        return self.sigma2 * self.SNR0

    @property
    def flop_cost(self) -> float:
        """Power per (complex multiply per sample) at the BS: 3 B_w / (tau_c L_BS)."""
        return 3 * self.B_w / (self.tau_c * self.L_BS)

    @property
    def coding_coeff(self) -> float:
        """P_COD + P_DEC + P_BT in W per Gbit/s."""
        return self.P_COD + self.P_DEC + self.P_BT

    def replace(self, **changes) -> "SystemConfig":
        values = asdict(self)
        values.update(changes)
        return SystemConfig(**values)

    @property
    def fingerprint(self) -> str:
        key = repr(tuple((f.name, getattr(self, f.name)) for f in fields(self)))
        return hashlib.sha256(key.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class CircuitPower:
    P_FIX: float
    P_TC: float
    P_C_BH: float
    P_CE: float
    P_LP_r: float
    P_LP_c: float

    @property
    def total(self) -> float:
        return self.P_FIX + self.P_TC + self.P_C_BH + self.P_CE + self.P_LP_r + self.P_LP_c


@dataclass(frozen=True)
class EEBreakdown:
    se_per_ue: float  # bit/s/Hz
    ase: float  # bit/s/Hz/km^2
    p_tx: float  # W per cell
    p_cp: float  # W per cell
    apc: float  # W/km^2
    ee: float  # bit/J
    circuit: CircuitPower | None = None

    @property
    def throughput(self) -> float:
        """Area throughput in bit/s/km^2 (needs the bandwidth, so stored via ee * apc)."""
        return self.ee * self.apc


def _pilot_split(config: SystemConfig, zeta: float, K: float) -> tuple[float, float]:
    tau_p = zeta * K
    tau_u = config.xi * (config.tau_c - tau_p)
    if tau_u < 0:
        raise ValueError(f"pilot overhead zeta*K={tau_p:g} exceeds tau_c={config.tau_c}")
    return tau_p, tau_u


def transmit_power(config: SystemConfig, lambda_: float, zeta: float, K: float, U: float) -> float:
    """Average UL transmit power per cell (payload plus boosted pilots).

    ``U`` is the mean per-UE transmit power from :func:`mean_uplink_power`.
    ``lambda_`` enters only through ``U`` and is accepted for symmetry.
    """
    tau_p, tau_u = _pilot_split(config, zeta, K)
    boost = config.rho if config.tx_pilot_boost else 1.0
    return (tau_u + boost * tau_p) / config.tau_c * K * U


def combiner_power(scheme: str, M: float, K: float, zeta: float, config: SystemConfig, lambda_: float | None = None) -> float:
    """Power spent computing the combining vectors (one row per scheme)."""
    scheme = normalize_scheme(scheme)
    c = config.flop_cost
    if scheme == MR:
        ops = 7 / 3 * K
    elif scheme == ZF:
        ops = 1.5 * K**2 * M + K * M / 2 + (K**3 - K) / 3 + 7 / 3 * K
    else:
        if lambda_ is None:
            raise ValueError("M-MMSE combiner power needs the BS density")
        n_bs = lambda_ * config.area
        ops = (
            n_bs * (M**2 + 3 * M) * K / 2
            + (M**2 - M) * K
            + M**3 / 3
            + 2 * M
            + M * zeta * K**2 * (zeta - 1)
        )
    return c * ops


def circuit_power(
    scheme: str,
    M: float,
    K: float,
    zeta: float,
    se_per_ue: float,
    config: SystemConfig,
    lambda_: float | None = None,
) -> CircuitPower:
    # real-valued M and K are allowed so relaxed iterates can be evaluated
    if not (M > 0 and K > 0):
        raise ValueError("M and K must be positive")
    tau_p, tau_u = _pilot_split(config, zeta, K)
    c = config.flop_cost
    return CircuitPower(
        P_FIX=config.P_FIX,
        P_TC=M * config.P_BS + config.P_LO + K * config.P_UE,
        P_C_BH=config.B_w * K * se_per_ue / GBIT * config.coding_coeff,
        P_CE=c * K * M * (tau_p + 1),
        P_LP_r=c * M * K * tau_u,
        P_LP_c=combiner_power(scheme, M, K, zeta, config, lambda_),
    )


def energy_efficiency(
    lambda_: float,
    K: float,
    se_per_ue: float,
    p_tx: float,
    p_cp: float | CircuitPower,
    config: SystemConfig,
) -> EEBreakdown:
    circuit = p_cp if isinstance(p_cp, CircuitPower) else None
    p_cp = circuit.total if circuit is not None else float(p_cp)
    apc = lambda_ * (p_tx / config.eta + p_cp)
    if apc <= 0:
        raise ValueError("area power consumption must be positive")
    ase = lambda_ * K * se_per_ue
    return EEBreakdown(se_per_ue, ase, p_tx, p_cp, apc, config.B_w * ase / apc, circuit)


def evaluate_design(
    scheme: str,
    zeta: float,
    M: float,
    K: float,
    se_per_ue: float,
    lambda_: float,
    U: float,
    config: SystemConfig,
) -> EEBreakdown:
    """Full EE breakdown for one design point given its per-UE SE."""
    p_tx = transmit_power(config, lambda_, zeta, K, U)
    p_cp = circuit_power(scheme, M, K, zeta, se_per_ue, config, lambda_)
    return energy_efficiency(lambda_, K, se_per_ue, p_tx, p_cp, config)


@dataclass(frozen=True)
class ZFPowerCoefficients:
    """Polynomial form of the ZF area power consumption.

    ``APC = lambda * (C0 + C1 K + C2 zeta K^2 + C3 K^3 + D0 M + D1 M K
    + D2 M K^2 + D3 zeta M K^2) + A * B_w * ASE / 1e9``.

    ``D3`` collects the pilot-length dependence of channel estimation and
    payload reception; it vanishes when the whole non-pilot block is UL
    (``xi = 1``).
    """

    C0: float
    C1: float
    C2: float
    C3: float
    D0: float
    D1: float
    D2: float
    D3: float
    A: float

    def per_cell(self, zeta: float, M: float, K: float) -> float:
        """Per-cell power excluding the load-dependent coding/backhaul term."""
        return (
            self.C0
            + self.C1 * K
            + self.C2 * zeta * K**2
            + self.C3 * K**3
            + self.D0 * M
            + self.D1 * M * K
            + self.D2 * M * K**2
            + self.D3 * zeta * M * K**2
        )

    def apc(self, lambda_: float, zeta: float, M: float, K: float, ase: float, B_w: float) -> float:
        return lambda_ * self.per_cell(zeta, M, K) + self.A * B_w * ase / GBIT


def apc_zf_coefficients(config: SystemConfig, lambda_: float, U: float) -> ZFPowerCoefficients:
    c = config.flop_cost
    xi, eta, tau_c = config.xi, config.eta, config.tau_c
    boost = config.rho if config.tx_pilot_boost else 1.0
    return ZFPowerCoefficients(
        C0=config.P_FIX + config.P_LO,
        C1=config.P_UE + xi * U / eta + 2 * c,
        C2=(boost - xi) * U / (eta * tau_c),
        C3=c / 3,
        D0=config.P_BS,
        D1=c * (1.5 + xi * tau_c),
        D2=1.5 * c,
        D3=c * (1 - xi),
        A=config.coding_coeff,
    )
