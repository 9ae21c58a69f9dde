"""Analytic rates, repeater-versus-direct bounds, secret key rate and chain model.

Lengths are in km, times in seconds and the fiber light speed ``c`` in km/s.
Attenuation follows eta = 10**(-gamma * L).
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import qmath as qm

C_FIBER = 2e5  # km/s
GAMMA = 0.0173  # 1/km


@dataclass(frozen=True)
class NodeParams:
    """Performance vector of one repeater node."""

    P0_link: float
    tau: float
    F0: float
    F_swap_ions: float
    V: Optional[float] = None
    T0: float = 123e-6
    T_swap: float = 2157e-6
    K: Optional[int] = None
    T0_direct: float = 201e-6

    def __post_init__(self):
        for name in ("P0_link", "F0", "F_swap_ions"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.V is not None and not 0 <= self.V <= 1:
            raise ValueError(f"V={self.V} outside [0, 1]")
        if self.tau <= 0 or self.T0 < 0 or self.T_swap < 0:
            raise ValueError("times must be positive")
        if self.K is not None and self.K < 1:
            raise ValueError("K must be >= 1")


@dataclass(frozen=True)
class LinkParams:
    L: float
    gamma: float = GAMMA
    c: float = C_FIBER
    L0: float = 50.0

    def __post_init__(self):
        if self.L < 0 or self.gamma < 0 or self.c <= 0:
            raise ValueError("invalid link parameters")

    @property
    def eta(self) -> float:
        return channel_eta(self.gamma, self.L)


CURRENT = NodeParams(P0_link=0.018, tau=0.062, F0=0.96, F_swap_ions=0.95,
                     V=None, T0=123e-6, T_swap=2157e-6, K=190)
ENHANCED = NodeParams(P0_link=0.21, tau=0.63, F0=0.99, F_swap_ions=0.99,
                      V=0.98, T0=123e-6, T_swap=2157e-6, K=None)
PRESETS = {"current": CURRENT, "enhanced": ENHANCED}


def channel_eta(gamma, L):
    """Fiber transmission 10**(-gamma L)."""
    if np.any(np.asarray(gamma) < 0) or np.any(np.asarray(L) < 0):
        raise ValueError("gamma and L must be nonnegative")
    return 10.0 ** (-np.asarray(gamma) * np.asarray(L))


# --- rates -----------------------------------------------------------------

def rkr_direct(node: NodeParams, link: LinkParams) -> float:
    """Direct-transmission rate: two photons per attempt, either may arrive.

    The attempt takes ``node.T0_direct + 2L/c``.
    """
    p = node.P0_link * link.eta
    ps = 1 - (1 - p) ** 2
    return ps / (node.T0_direct + 2 * link.L / link.c)


def renewal_stats(p_arm: float, K: Optional[int]):
    """Per-cycle bookkeeping of the Loop-1/Loop-2 restart process.

    A cycle runs Loop-1 attempts (both arms, success ``p_arm`` each) until at
    least one arm clicks, then, if only one clicked, up to ``K`` Loop-2
    attempts on the other arm. A failed Loop 2 restarts.

    Returns
    -------
    attempts : float
        Expected attempts per cycle.
    success : float
        Probability that a cycle ends in a delivered pair.
    p_both, p_single : float
        Conditional Loop-1 outcome probabilities.
    """
    P = p_arm
    if P <= 0:
        return np.inf, 0.0, 0.0, 0.0
    q = 1 - P
    p1 = 1 - q * q
    p_both = P * P / p1
    p_single = 2 * P * q / p1
    qK = 0.0 if K is None else q ** K
    attempts = 1 / p1 + p_single * (1 - qK) / P
    success = p_both + p_single * (1 - qK)
    return attempts, success, p_both, p_single


def mean_attempts(p_arm: float, K: Optional[int]) -> float:
    """Expected number of attempts per delivered pair, n-bar."""
    attempts, success, _, _ = renewal_stats(p_arm, K)
    return attempts / success if success > 0 else np.inf


def repeater_attempt_time(node: NodeParams, link: LinkParams) -> float:
    # arm length L/2 out and the herald back: T0 + L/c
    return node.T0 + link.L / link.c


def rkr_repeater(node: NodeParams, link: LinkParams, K: Optional[int] = -1) -> float:
    """Repeater raw rate 1/(n-bar T + T_swap).

    ``K=-1`` takes the node's own memory cap; ``None`` means no cap.
    """
    K = node.K if K == -1 else K
    p_arm = node.P0_link * np.sqrt(link.eta)
    nbar = mean_attempts(p_arm, K)
    return 1 / (nbar * repeater_attempt_time(node, link) + node.T_swap)


def crossover_length(f, g, lmin, lmax, step=1.0):
    """Largest L in [lmin, lmax] where f - g changes sign from negative to positive.

    Refined by bisection. Returns None if ``f > g`` is never reached.
    """
    Ls = np.arange(lmin, lmax + step / 2, step)
    d = np.array([f(L) - g(L) for L in Ls])
    idx = np.nonzero((d[:-1] <= 0) & (d[1:] > 0))[0]
    if len(idx) == 0:
        return None
    a, b = Ls[idx[-1]], Ls[idx[-1] + 1]
    for _ in range(60):
        m = (a + b) / 2
        if f(m) - g(m) > 0:
            b = m
        else:
            a = m
    return (a + b) / 2


# --- bounds ----------------------------------------------------------------

def bound_min_length(gamma: float) -> float:
    """Minimum length for a repeater advantage, L* = -2 log10(2/3)/gamma."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return -2 * np.log10(2 / 3) / gamma


def bound_storage_time(P0_link: float, gamma: float = GAMMA, c: float = C_FIBER) -> float:
    """Required storage time 3 log10(3/2)/(P0 c gamma)."""
    if not 0 < P0_link <= 1:
        raise ValueError("P0_link must be in (0, 1]")
    return 3 * np.log10(1.5) / (P0_link * c * gamma)


def bound_khat(P0_link: float) -> float:
    """Average number of memory attempts 3/(2 P0)."""
    if not 0 < P0_link <= 1:
        raise ValueError("P0_link must be in (0, 1]")
    return 3 / (2 * P0_link)


def bound_perfect(P0_link: float, gamma: float = GAMMA, c: float = C_FIBER):
    """Advantage condition for a memory without decay.

    Returns
    -------
    eta_star : float
        Transmission below which the repeater wins, sqrt(eta*) = 2 P0/3.
    t_perfect : float
        -3 log10(2 P0/3)/(P0^2 gamma c).
    """
    x = 2 * P0_link / 3
    if not 0 < x < 1:
        raise ValueError("bound is vacuous for P0_link >= 1.5")
    return x * x, -3 * np.log10(x) / (P0_link ** 2 * gamma * c)


def repeaterless_requirements(L: float, target_rate: float,
                              gamma: float = GAMMA, c: float = C_FIBER):
    """Attempt rate and multiplexed modes a direct link needs for ``target_rate``."""
    if L <= 0 or target_rate <= 0:
        raise ValueError("L and target_rate must be positive")
    attempt_rate = target_rate / channel_eta(gamma, L)
    return float(attempt_rate), float(attempt_rate * 2 * L / c)


def efficiency_budget(factors):
    """Product of independent efficiencies with relative-error propagation.

    Parameters
    ----------
    factors : sequence of (value, sigma)
    """
    vals = np.array([f[0] for f in factors], dtype=float)
    sig = np.array([f[1] for f in factors], dtype=float)
    if np.any((vals < 0) | (vals > 1)):
        raise ValueError("efficiencies must lie in [0, 1]")
    if np.any((vals == 0) & (sig > 0)):
        raise ValueError("relative error undefined for a zero factor")
    prod = float(np.prod(vals))
    if prod == 0:
        return 0.0, 0.0
    if np.all(vals == 1):
        return 1.0, float(np.sqrt(np.sum(sig ** 2)))
    return prod, float(prod * np.sqrt(np.sum((sig / vals) ** 2)))


# Loop-1 budgets per node (value, sigma); unstated sigmas are half the last digit
BUDGET_NODE_A = [(0.52, 0.005), (0.78, 0.02), (0.96, 0.01), (0.81, 0.03), (0.23, 0.01),
                 (0.55, 0.005), (0.36, 0.005), (0.5, 0.0), (0.71, 0.005), (0.75, 0.02)]
BUDGET_NODE_B = [(0.52, 0.005), (0.78, 0.02), (0.96, 0.01), (0.81, 0.03), (0.23, 0.01),
                 (0.46, 0.005), (0.42, 0.005), (0.5, 0.0), (0.56, 0.005), (0.75, 0.02)]


# --- chain model -----------------------------------------------------------

def chain_time(n_levels: int, P0_link: float, L0: float = 50.0, T0: float = 175e-6,
               gamma: float = GAMMA, c: float = C_FIBER) -> float:
    """Mean entanglement distribution time over 2**n links of length L0."""
    if n_levels < 0:
        raise ValueError("n_levels must be >= 0")
    eta_t = 10 ** (-gamma * L0 / 2)
    base = (L0 / c + T0) / (P0_link ** 2 * eta_t ** 2)
    if n_levels == 0:
        return base
    return base * 3 ** n_levels / 2 ** (n_levels - 1)


def link_state(F0: float, V: float) -> np.ndarray:
    """Ion-ion state after photonic swap: F Psi- + (1-F) Psi+."""
    F = (1 + V * (1 - 2 * F0) ** 2) / 2
    return qm.bell_diagonal([0, 0, 1 - F, F])


def chain_fidelity(n_levels: int, F0: float, F_swap_ions: float, V: float) -> float:
    """Fidelity after ``n_levels`` rounds of pairwise swapping and gate noise."""
    for v in (F0, F_swap_ions, V):
        if not 0 <= v <= 1:
            raise ValueError("parameters must lie in [0, 1]")
    rho = link_state(F0, V)
    for _ in range(n_levels):
        rho, _ = qm.entanglement_swap(rho, rho, qm.BellLabel.PhiPlus)
        rho = qm.depolarize(rho, F_swap_ions)
    return qm.nearest_max_entangled_fidelity(rho)


# --- secret key rate -------------------------------------------------------

def binary_entropy(p):
    p = np.clip(np.asarray(p, dtype=float), 0, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    return np.nan_to_num(h, nan=0.0)


def skf_six_state(eX: float, eY: float, eZ: float) -> float:
    """Asymptotic six-state secret key fraction, clipped to [0, 1]."""
    for e in (eX, eY, eZ):
        if not -1e-12 <= e <= 0.5 + 1e-12:
            raise ValueError(f"QBER {e} outside [0, 0.5]")
    eX, eY, eZ = (min(max(e, 0.0), 0.5) for e in (eX, eY, eZ))
    h = binary_entropy
    # eZ * h((1 + (eX-eY)/eZ)/2) vanishes as eZ -> 0 since |eX - eY| <= eZ
    # holds for every physical state; drop it in that limit
    mixed = 0.0 if eZ < 1e-15 else eZ * h(np.clip((1 + (eX - eY) / eZ) / 2, 0, 1))
    last = (1 - eZ) * h(np.clip((1 - (eX + eY + eZ) / 2) / (1 - eZ), 0, 1))
    r = 1 - h(eZ) - mixed - last
    return float(np.clip(r, 0, 1))


def skf_state(rho) -> float:
    return skf_six_state(*qm.qber(rho))


def memory_state(node: NodeParams, t: float) -> np.ndarray:
    """Delivered state after the first qubit waited ``t`` in memory."""
    rho0 = qm.depolarize(qm.bell_state(0), node.F0)
    return qm.depolarize(qm.dephase_gaussian(rho0, t, node.tau), node.F_swap_ions)


def skf_cutoff(node: NodeParams, T: float, threshold: float = 0.1, kmax: int = 10**6) -> int:
    """Largest k with SKF(rho'_k) >= threshold (0 if none)."""
    if skf_state(memory_state(node, T)) < threshold:
        return 0
    lo, hi = 1, 2
    while hi < kmax and skf_state(memory_state(node, hi * T)) >= threshold:
        lo, hi = hi, 2 * hi
    hi = min(hi, kmax)
    # invariant: SKF(lo) >= threshold, SKF(hi) < threshold (or hi == kmax)
    while hi - lo > 1:
        m = (lo + hi) // 2
        if skf_state(memory_state(node, m * T)) >= threshold:
            lo = m
        else:
            hi = m
    return lo


@dataclass
class SKRResult:
    skr: float
    K: int
    rkr: float
    skf: float


def skr_pipeline(node: NodeParams, link: LinkParams, threshold: float = 0.1,
                 cap_with_node_K: bool = True) -> SKRResult:
    """Three-stage secret key rate estimate.

    Stage 1 finds the memory cut-off K, stage 2 the truncated rate and the
    success-weighted state sum over memory attempts 1..K, stage 3 applies
    the key fraction to that sum.
    """
    T = repeater_attempt_time(node, link)
    K = skf_cutoff(node, T, threshold)
    if K == 0:
        return SKRResult(0.0, 0, 0.0, 0.0)
    if cap_with_node_K and node.K is not None:
        K = min(K, node.K)
    p_arm = node.P0_link * np.sqrt(link.eta)
    nbar = mean_attempts(p_arm, K)
    rkr = 1 / (nbar * T + node.T_swap)
    # weighted sum with P_k = P'(1-P')^(k-1); not renormalized, so the
    # weight lost past the cut-off counts as uncorrelated noise
    rho = _weighted_memory_state(node, T, p_arm, K)
    skf = skf_state(rho)
    return SKRResult(rkr * skf, K, rkr, skf)


def _weighted_memory_state(node, T, p_arm, K):
    k = np.arange(1, K + 1)
    Pk = p_arm * (1 - p_arm) ** (k - 1)
    # the map is linear in the Gaussian flip weight, so sum the weights first
    rho0 = qm.depolarize(qm.bell_state(0), node.F0)
    Z = np.kron(qm.SZ, qm.I2)
    flipped = (rho0 + Z @ rho0 @ Z) / 2
    pk = qm.dephasing_weight(k * T, node.tau)
    a = np.sum(Pk * (1 - 2 * pk))
    # (1-p) rho0 + p Z rho0 Z = (1-2p) rho0 + 2p * flipped
    rho = a * rho0 + (np.sum(Pk) - a) * flipped
    return qm.depolarize(rho, node.F_swap_ions)


def skr_bound(link: LinkParams) -> float:
    """Repeaterless capacity bound -log2(1 - eta) c/L."""
    if link.L <= 0:
        raise ValueError("L must be positive")
    return float(-np.log2(1 - link.eta) * link.c / link.L)


def skr_crossover(node: NodeParams, lmin=10.0, lmax=300.0, step=2.0, **link_kw):
    """Length where the repeater key rate overtakes the repeaterless bound."""
    f = lambda L: skr_pipeline(node, LinkParams(L, **link_kw)).skr
    g = lambda L: skr_bound(LinkParams(L, **link_kw))
    return crossover_length(f, g, lmin, lmax, step)


def rate_crossover(node: NodeParams, lmin=1.0, lmax=200.0, step=1.0, **link_kw):
    """Length where the repeater raw rate overtakes direct transmission."""
    f = lambda L: rkr_repeater(node, LinkParams(L, **link_kw))
    g = lambda L: rkr_direct(node, LinkParams(L, **link_kw))
    return crossover_length(f, g, lmin, lmax, step)
