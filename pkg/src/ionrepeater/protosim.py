"""Monte-Carlo simulation of the two-loop repeater protocol and the direct link.

Each trial is one protocol execution: initialisation, Loop 1 (both ions
emit, up to ``loop1_max`` attempts), then either the swap (both photons
heralded), Loop 2 (one photon heralded, the other ion retries up to ``K``
times) or a restart. Trials are drawn in fixed-size chunks, each from its
own ``default_rng([seed, chunk])`` stream, so results do not depend on how
chunks are scheduled.
"""
from dataclasses import dataclass, asdict, replace
from typing import Optional

import numpy as np

from . import qmath as qm
from .ratemodel import NodeParams, LinkParams, C_FIBER

CHUNK = 1 << 18
HIST_PAD = 100_000  # histograms are padded to K when K is at most this

# initialisation: Doppler 4 ms, 393 nm hold pulse 150 us, repump 20 us,
# Doppler 50 us, pumping 20 us, ground-state cooling 3 ms, pumping 20 us
T_INIT = 4e-3 + 150e-6 + 20e-6 + 50e-6 + 20e-6 + 3e-3 + 20e-6

# measured per-attempt detection probabilities with polarization analysis
P_A1, P_B1, P_A2, P_B2 = 3.06e-3, 2.36e-3, 2.64e-3, 1.81e-3


@dataclass(frozen=True)
class ProtocolConfig:
    """Timing and detection parameters of one protocol run.

    ``t_wait=None`` derives the herald wait from the fiber: L/c in repeater
    mode (each arm is L/2 long) and 2L/c for the direct link.
    """

    p_A1: float = P_A1
    p_B1: float = P_B1
    p_A2: float = P_A2
    p_B2: float = P_B2
    loop1_max: int = 29
    K: int = 190
    t_attempt_loop1: float = 175e-6
    t_attempt_loop2: float = 123e-6
    t_wait: Optional[float] = None
    t_swap: float = 2157e-6
    t_init: float = T_INIT
    mode: str = "repeater"
    L: float = 50.0
    c: float = C_FIBER

    def __post_init__(self):
        for name in ("p_A1", "p_B1", "p_A2", "p_B2"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.loop1_max < 1 or self.K < 1:
            raise ValueError("loop caps must be >= 1")
        times = (self.t_attempt_loop1, self.t_attempt_loop2, self.t_swap, self.t_init)
        if min(times) < 0 or (self.t_wait is not None and self.t_wait < 0):
            raise ValueError("times must be nonnegative")
        if self.mode not in ("repeater", "direct"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def wait(self) -> float:
        if self.t_wait is not None:
            return self.t_wait
        return (1 if self.mode == "repeater" else 2) * self.L / self.c

    @classmethod
    def from_node(cls, node: NodeParams, link: LinkParams, mode="repeater", **kw):
        """Configuration matching the analytic rate model for ``node``.

        Repeater arms see sqrt(eta) each and every attempt lasts T0 + L/c;
        the direct link sends two photons over the full length.
        """
        if mode == "repeater":
            p = node.P0_link * np.sqrt(link.eta)
            base = dict(p_A1=p, p_B1=p, p_A2=p, p_B2=p, t_attempt_loop1=node.T0,
                        t_attempt_loop2=node.T0, K=node.K or 10**7,
                        loop1_max=10**9)
        else:
            p = node.P0_link * link.eta
            base = dict(p_A1=p, p_B1=p, p_A2=p, p_B2=p, t_attempt_loop1=node.T0_direct,
                        loop1_max=10**9)
        base.update(t_swap=node.T_swap, mode=mode, L=link.L, c=link.c)
        base.update(kw)
        return cls(**base)


@dataclass
class SimStats:
    trials: int
    successes: int
    P_s: float
    k_histogram: np.ndarray
    active_rate: float
    absolute_rate: float
    alpha: float
    alpha_max: float
    mean_storage_time: float
    loop2_entries: int = 0
    P2: float = float("nan")
    active_time: float = 0.0

    def to_dict(self):
        d = asdict(self)
        d["k_histogram"] = [int(x) for x in self.k_histogram]
        return {k: (float(v) if isinstance(v, np.floating) else v) for k, v in d.items()}


def _geometric(rng, p, size):
    """First-success index (>= 1); ``inf`` encoded as a huge integer for p = 0."""
    if p <= 0:
        return np.full(size, np.iinfo(np.int64).max // 4, dtype=np.int64)
    if p >= 1:
        return np.ones(size, dtype=np.int64)
    return rng.geometric(p, size).astype(np.int64)


def _chunk_repeater(cfg: ProtocolConfig, n: int, rng):
    T1 = cfg.t_attempt_loop1 + cfg.wait
    T2 = cfg.t_attempt_loop2 + cfg.wait
    gA = _geometric(rng, cfg.p_A1, n)
    gB = _geometric(rng, cfg.p_B1, n)
    g = np.minimum(gA, gB)
    in_loop1 = g <= cfg.loop1_max
    both = in_loop1 & (gA == gB)
    a_only = in_loop1 & (gA < gB)
    b_only = in_loop1 & (gB < gA)
    n1 = np.where(in_loop1, g, cfg.loop1_max)

    # Loop 2: the ion whose photon was lost keeps trying
    k = np.zeros(n, dtype=np.int64)
    kB = _geometric(rng, cfg.p_B2, n)
    kA = _geometric(rng, cfg.p_A2, n)
    k[a_only] = kB[a_only]
    k[b_only] = kA[b_only]
    loop2 = a_only | b_only
    ok2 = loop2 & (k <= cfg.K)
    n2 = np.where(loop2, np.minimum(k, cfg.K), 0)

    success = both | ok2
    time = n1 * T1 + n2 * T2 + success * cfg.t_swap
    hist = np.bincount(k[ok2])
    return dict(successes=int(success.sum()), time=float(time.sum()),
                hist=hist, loop2=int(loop2.sum()), ok2=int(ok2.sum()),
                storage=float((k[ok2] * T2).sum()))


def _chunk_direct(cfg: ProtocolConfig, n: int, rng):
    T = cfg.t_attempt_loop1 + cfg.wait
    g = np.minimum(_geometric(rng, cfg.p_A1, n), _geometric(rng, cfg.p_B1, n))
    success = g <= cfg.loop1_max
    n1 = np.where(success, g, cfg.loop1_max)
    return dict(successes=int(success.sum()), time=float((n1 * T).sum()),
                hist=np.zeros(1, dtype=np.int64), loop2=0, ok2=0, storage=0.0)


def _add_padded(a, b):
    if len(b) > len(a):
        a, b = b, a
    a = a.copy()
    a[: len(b)] += b
    return a


def _run(cfg: ProtocolConfig, trials: int, seed: int, chunk: int):
    if trials <= 0:
        raise ValueError("trials must be positive")
    fn = _chunk_repeater if cfg.mode == "repeater" else _chunk_direct
    acc = dict(successes=0, time=0.0, hist=np.zeros(min(cfg.K, HIST_PAD) + 1, dtype=np.int64),
               loop2=0, ok2=0, storage=0.0)
    for i, start in enumerate(range(0, trials, chunk)):
        rng = np.random.default_rng([seed, i])
        part = fn(cfg, min(chunk, trials - start), rng)
        acc["hist"] = _add_padded(acc["hist"], part.pop("hist"))
        for key in part:
            acc[key] = acc[key] + part[key]
    succ = acc["successes"]
    active = acc["time"]
    absolute = active + trials * cfg.t_init
    P2 = acc["ok2"] / acc["loop2"] if acc["loop2"] else float("nan")
    if cfg.mode == "repeater" and cfg.p_A1 > 0 and cfg.p_B1 > 0:
        alpha, alpha_max = enhancement_factors(cfg.p_A1, cfg.p_B1, P2)
    else:
        alpha = alpha_max = float("nan")
    return SimStats(
        trials=trials, successes=succ, P_s=succ / trials,
        k_histogram=acc["hist"][1:],
        active_rate=succ / active if active > 0 else float("inf"),
        absolute_rate=succ / absolute if absolute > 0 else float("inf"),
        alpha=alpha, alpha_max=alpha_max,
        mean_storage_time=acc["storage"] / acc["ok2"] if acc["ok2"] else 0.0,
        loop2_entries=acc["loop2"], P2=P2, active_time=active)


def simulate_repeater(cfg: ProtocolConfig, trials: int, seed: int = 0, chunk: int = CHUNK) -> SimStats:
    """Simulate ``trials`` executions of the repeater protocol."""
    if cfg.mode != "repeater":
        cfg = replace(cfg, mode="repeater")
    return _run(cfg, trials, seed, chunk)


def simulate_direct(cfg: ProtocolConfig, trials: int, seed: int = 0, chunk: int = CHUNK) -> SimStats:
    """Simulate the direct configuration: two photons per attempt, one click suffices."""
    if cfg.mode != "direct":
        cfg = replace(cfg, mode="direct")
    return _run(cfg, trials, seed, chunk)


def enhancement_factors(p_A1: float, p_B1: float, P2: float):
    """Memory enhancement of the success probability.

    Returns
    -------
    alpha, alpha_max : float
        alpha_max = (pA + pB)/(2 pA pB) and alpha = alpha_max * P2.
    """
    if p_A1 <= 0 or p_B1 <= 0:
        raise ValueError("probabilities must be positive")
    alpha_max = (p_A1 + p_B1) / (2 * p_A1 * p_B1)
    return alpha_max * P2, alpha_max


def loop2_weights(cfg: ProtocolConfig):
    """Which ion ends up retrying, given Loop 1 had exactly one click.

    Returns
    -------
    wB, wA : float
        Probability that ion B (A) is the one generating in Loop 2.
    """
    a = cfg.p_A1 * (1 - cfg.p_B1)
    b = cfg.p_B1 * (1 - cfg.p_A1)
    if a + b == 0:
        # a single click never happens; Loop 2 is unreachable
        return 0.5, 0.5
    return a / (a + b), b / (a + b)


def analytic_P2(cfg: ProtocolConfig) -> float:
    """Loop-2 success probability averaged over which ion retries."""
    wB, wA = loop2_weights(cfg)
    return wB * (1 - (1 - cfg.p_B2) ** cfg.K) + wA * (1 - (1 - cfg.p_A2) ** cfg.K)


def analytic_Ps(cfg: ProtocolConfig) -> float:
    """Success probability of one protocol execution."""
    pA, pB, n1 = cfg.p_A1, cfg.p_B1, cfg.loop1_max
    q = (1 - pA) * (1 - pB)
    reach = 1 - q ** n1
    if reach == 0:
        return 0.0
    both = pA * pB / (1 - q)
    return reach * (both + (1 - both) * analytic_P2(cfg))


def success_k_distribution(cfg: ProtocolConfig) -> np.ndarray:
    """Probability that a delivered pair waited k Loop-2 attempts, k = 0..K."""
    pA, pB = cfg.p_A1, cfg.p_B1
    k = np.arange(1, cfg.K + 1)
    w = np.empty(cfg.K + 1)
    w[0] = pA * pB
    w[1:] = (pA * (1 - pB) * cfg.p_B2 * (1 - cfg.p_B2) ** (k - 1)
             + pB * (1 - pA) * cfg.p_A2 * (1 - cfg.p_A2) ** (k - 1))
    return w / w.sum()


def _swap_order(rho):
    # (q1, q2) -> (q2, q1)
    return rho.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)


def photon_pair_state(rho_mem, rho_fresh):
    """Photon-photon state after a perfect ion Bell measurement and feedforward.

    Both inputs are ion-photon states ordered (ion, photon).
    """
    out = np.zeros((4, 4), dtype=complex)
    left = _swap_order(rho_mem)  # (photon a, ion A)
    for b in qm.BellLabel:
        r, p = qm.entanglement_swap(left, rho_fresh, b)
        out += p * r
    return out


def predicted_final_fidelity(cfg: ProtocolConfig = ProtocolConfig(), F0: float = 0.96,
                             tau: float = 0.062, t_attempt: float = 64e-3 / 195,
                             k_weights=None) -> float:
    """Photon-photon Bell fidelity expected from memory dephasing alone.

    The stored ion-photon pair decays as ``dephase_gaussian`` for
    ``k * t_attempt``; the fresh pair is used at t = 0. Both start as
    depolarized Phi+ with fidelity ``F0``.
    """
    w = success_k_distribution(cfg) if k_weights is None else np.asarray(k_weights, float)
    w = w / w.sum()
    rho0 = qm.depolarize(qm.bell_state(0), F0)
    # the delivered state is affine in the flip weight, so mix the two extremes
    pk = qm.dephasing_weight(np.arange(len(w)) * t_attempt, tau)
    p_bar = float(np.sum(w * pk))
    Z = np.kron(qm.SZ, qm.I2)
    mem = (1 - p_bar) * rho0 + p_bar * (Z @ rho0 @ Z)
    return qm.fidelity(photon_pair_state(mem, rho0), qm.bell_state(0))
