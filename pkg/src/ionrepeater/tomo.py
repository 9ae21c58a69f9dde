"""Two-qubit polarization tomography.

Pipeline: raw coincidence counts and attempt counters are turned into
conditional outcome probabilities, reconstructed by maximum likelihood,
rotated into Bell form, combined into a feedforward state and given
Monte-Carlo error bars.

Polarization conventions: |H> = |0>, |V> = |1>, |D> = (|H> + |V>)/sqrt2,
|A> = (|H> - |V>)/sqrt2, |R> = (|H> + i|V>)/sqrt2, |L> = (|H> - i|V>)/sqrt2.
Each basis has a ``plus`` and a ``minus`` projector (H/V, D/A, R/L).
"""
from dataclasses import dataclass, field
import itertools
import json

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import qmath as qm

BASES = ("HV", "DA", "RL")
PROJS = ("plus", "minus")
_r = 1 / np.sqrt(2)
BASIS_VECTORS = {
    ("HV", "plus"): np.array([1, 0], dtype=complex),
    ("HV", "minus"): np.array([0, 1], dtype=complex),
    ("DA", "plus"): np.array([_r, _r], dtype=complex),
    ("DA", "minus"): np.array([_r, -_r], dtype=complex),
    ("RL", "plus"): np.array([_r, 1j * _r], dtype=complex),
    ("RL", "minus"): np.array([_r, -1j * _r], dtype=complex),
}
BASIS_PAIRS = list(itertools.product(BASES, BASES))
# order of the four outcomes inside a basis pair
OUTCOMES = list(itertools.product(PROJS, PROJS))


def projector(basisA, basisB, projA, projB) -> np.ndarray:
    """Two-qubit pure-state projector O = |a><a| x |b><b|."""
    v = np.kron(BASIS_VECTORS[basisA, projA], BASIS_VECTORS[basisB, projB])
    return np.outer(v, v.conj())


def pair_projectors(pair) -> np.ndarray:
    """The four projectors of a basis pair, shape (4, 4, 4), in OUTCOMES order."""
    return np.array([projector(pair[0], pair[1], a, b) for a, b in OUTCOMES])


# ---------------------------------------------------------------- datasets

@dataclass
class Setting:
    """Counters for one projector setting.

    ``C[i]`` are coincidences heralded by ion outcome i, ``N_A`` the
    Loop-1 detections at node A, ``M_A`` the Raman pulses on ion A and
    ``M_B_given_A`` the Loop-2 pulses on ion B after a success at A.
    """

    basisA: str
    basisB: str
    projA: str
    projB: str
    C: np.ndarray
    N_A: int
    M_A: int
    M_B_given_A: int

    def __post_init__(self):
        if self.basisA not in BASES or self.basisB not in BASES:
            raise ValueError(f"unknown basis {self.basisA}/{self.basisB}")
        if self.projA not in PROJS or self.projB not in PROJS:
            raise ValueError(f"unknown projector {self.projA}/{self.projB}")
        self.C = np.asarray(self.C, dtype=float)
        if self.C.shape != (4,):
            raise ValueError("C must hold one count per ion outcome")
        if (self.C < 0).any() or min(self.N_A, self.M_A, self.M_B_given_A) < 0:
            raise ValueError("counters must be nonnegative")
        if self.N_A > self.M_A or self.C.sum() > self.M_B_given_A:
            raise ValueError("more detections than attempts")

    @property
    def key(self):
        return (self.basisA, self.basisB, self.projA, self.projB)

    def to_dict(self):
        return {"basisA": self.basisA, "basisB": self.basisB, "projA": self.projA,
                "projB": self.projB, "C": [int(c) for c in self.C], "N_A": int(self.N_A),
                "M_A": int(self.M_A), "M_B_given_A": int(self.M_B_given_A)}


@dataclass
class TomoDataset:
    settings: list = field(default_factory=list)

    def __post_init__(self):
        keys = [s.key for s in self.settings]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate projector setting")

    def lookup(self):
        return {s.key: s for s in self.settings}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls([Setting(**s) for s in d["settings"]])
        except (KeyError, TypeError) as e:
            raise ValueError(f"malformed dataset: {e}") from None

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def to_dict(self):
        return {"settings": [s.to_dict() for s in self.settings]}

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=1)


def synthetic_dataset(states, rng, photons=1e5, priors=None, eta_A=0.5,
                      M_A=10**7, unequal=True) -> TomoDataset:
    """Poisson counts drawn from four conditional two-qubit states.

    ``photons`` is the expected number of Loop-2 detections per setting
    (summed over ion outcomes). With ``unequal`` the Loop-2 attempt
    counters vary between settings by up to a factor 3, which the Bayes
    weighting must undo.
    """
    states = [np.asarray(s, dtype=complex) for s in states]
    if len(states) != 4:
        raise ValueError("need one state per ion outcome")
    priors = np.full(4, 0.25) if priors is None else np.asarray(priors, float)
    out = []
    for bA, bB in BASIS_PAIRS:
        for pA, pB in OUTCOMES:
            O = projector(bA, bB, pA, pB)
            OA = sum(projector(bA, bB, pA, q) for q in PROJS)
            joint = np.array([p * np.real(np.trace(O @ r)) for p, r in zip(priors, states)])
            pa = sum(p * np.real(np.trace(OA @ r)) for p, r in zip(priors, states))
            scale = rng.uniform(0.5, 1.5) if unequal else 1.0
            MB = int(photons * scale * 10)
            C = rng.poisson(photons * scale * joint / max(pa, 1e-300))
            N_A = min(rng.poisson(M_A * eta_A * pa), M_A)
            out.append(Setting(bA, bB, pA, pB, C, int(N_A), M_A, MB))
    return TomoDataset(out)


# ---------------------------------------------------------------- Bayes

def bayes_probabilities(data: TomoDataset, ion_outcome: int):
    """Conditional outcome probabilities per basis pair for one ion outcome.

    P(b b' | i) is proportional to C_{i,bb'} N_{A,b} / (M_{A,b} M_{B,b'|A,b});
    the prior P(i) cancels when the four values of a basis pair are
    normalized.

    Returns
    -------
    probs : dict
        basis pair -> 4-vector in ``OUTCOMES`` order.
    weights : dict
        basis pair -> total raw counts, used as multinomial sample size.
    """
    lut = data.lookup()
    probs, weights = {}, {}
    for pair in BASIS_PAIRS:
        vals, raw = [], 0.0
        for pA, pB in OUTCOMES:
            s = lut.get((pair[0], pair[1], pA, pB))
            if s is None:
                raise ValueError(f"missing setting {pair} {pA}/{pB}")
            if s.M_A == 0 or s.M_B_given_A == 0:
                raise ValueError(f"zero attempt counter at {s.key}")
            c = s.C[ion_outcome]
            vals.append(c * s.N_A / s.M_A / s.M_B_given_A)
            raw += c
        vals = np.array(vals)
        if vals.sum() <= 0:
            raise ValueError(f"no counts in basis pair {pair}")
        probs[pair] = vals / vals.sum()
        weights[pair] = raw
    return probs, weights


# ---------------------------------------------------------------- MLE

@dataclass
class MLEResult:
    rho: np.ndarray
    loglik: float
    iterations: int
    converged: bool


def _loglik(P, f, rho):
    p = np.einsum("nij,ji->n", P, rho).real
    m = f > 0
    return float(np.sum(f[m] * np.log(np.maximum(p[m], 1e-300)))), p


def mle_projectors(P, f, max_iter: int = 10_000, tol: float = 1e-10,
                   rho0=None) -> MLEResult:
    """Maximum-likelihood state for projectors ``P`` and frequencies ``f``.

    Diluted R rho R iteration: R = sum_j (f_j/p_j) O_j / sum f, and the step
    rho -> (1 + eps R) rho (1 + eps R) / norm. ``eps`` grows after accepted
    steps and is halved until the likelihood does not decrease, so the
    log-likelihood is monotone. Stops once the gain of an accepted step
    falls below ``tol``.
    """
    P = np.asarray(P, dtype=complex)
    f = np.asarray(f, dtype=float)
    f = f / f.sum()
    d = P.shape[1]
    rho = np.eye(d, dtype=complex) / d if rho0 is None else np.array(rho0, dtype=complex)
    L, p = _loglik(P, f, rho)
    eps, Id = 1.0, np.eye(d)
    for it in range(1, max_iter + 1):
        R = np.einsum("n,nij->ij", np.where(f > 0, f / np.maximum(p, 1e-300), 0), P)
        while True:
            A = Id + eps * R
            new = A @ rho @ A
            new = (new + new.conj().T) / 2
            new /= np.trace(new).real
            Ln, pn = _loglik(P, f, new)
            if Ln >= L or eps < 1e-12:
                break
            eps /= 2
        if Ln < L:
            return MLEResult(rho, L, it, True)  # no ascent direction left
        gain = Ln - L
        assert gain >= 0
        rho, L, p = new, Ln, pn
        if gain < tol:
            return MLEResult(rho, L, it, True)
        eps = min(eps * 2, 1e8)
    return MLEResult(rho, L, max_iter, False)


def _stack(probs, weights, rotate=None):
    P, f = [], []
    for pair, vec in probs.items():
        Ps = pair_projectors(pair)
        if rotate is not None:
            Ps = np.einsum("ij,njk,lk->nil", rotate, Ps, rotate.conj())
        P.append(Ps)
        f.append(np.asarray(vec, float) * weights[pair])
    return np.concatenate(P), np.concatenate(f)


def mle_reconstruct(probs, weights=None, **kw) -> MLEResult:
    """ML state from per-basis-pair probabilities.

    Each basis pair is one multinomial whose sample size is its weight
    (total raw counts); equal weights are used when ``weights`` is None.
    """
    if weights is None:
        weights = {k: 1.0 for k in probs}
    if len(probs) < 9:
        raise ValueError("tomographically incomplete: need all 9 basis pairs")
    P, f = _stack(probs, weights)
    return mle_projectors(P, f, **kw)


def born_probabilities(rho):
    """Exact per-basis-pair outcome probabilities of a state."""
    return {pair: np.einsum("nij,ji->n", pair_projectors(pair), rho).real
            for pair in BASIS_PAIRS}


# ---------------------------------------------------------------- Bell form

def _local(x):
    return np.kron(qm.zyz_unitary(x[:3]), qm.zyz_unitary(x[3:6]))


def _multistart(fun, dim, restarts, seed, tol=1e-8, extra=()):
    rng = np.random.default_rng(seed)
    starts = [np.zeros(dim), *extra] + list(rng.uniform(0, 2 * np.pi, size=(restarts, dim)))
    best = None
    for x0 in starts:
        r = minimize(fun, x0, method="Nelder-Mead",
                     options={"xatol": 1e-10, "fatol": tol, "maxiter": 20000,
                              "maxfev": 40000, "adaptive": True})
        if best is None or r.fun < best.fun:
            best = r
    # polish the winner
    return minimize(fun, best.x, method="Nelder-Mead",
                    options={"xatol": 1e-12, "fatol": tol * 1e-3, "maxiter": 20000,
                             "adaptive": True})


def _rotated_fidelity(U, rho, psi):
    v = U.conj().T @ psi
    return float(np.real(v.conj() @ rho @ v))


def bell_form_search(states, restarts: int = 32, seed: int = 0):
    """Single local rotation taking four states onto the four Bell states.

    Minimizes 4 - sum_i F_i**2 with F_i = <B_i| U rho_i U^dag |B_i> and
    U = u1 x u2.

    Returns
    -------
    u1, u2 : ndarray (2, 2)
    fidelities : ndarray (4,)
    """
    states = [np.asarray(s, dtype=complex) for s in states]

    def fids(x):
        U = _local(x)
        return np.array([_rotated_fidelity(U, r, qm.BELL_VECTORS[i])
                         for i, r in enumerate(states)])

    res = _multistart(lambda x: 4 - np.sum(fids(x) ** 2), 6, restarts, seed)
    return qm.zyz_unitary(res.x[:3]), qm.zyz_unitary(res.x[3:]), fids(res.x)


def _rz_phase(theta):
    # exp(i sigma_z theta)
    return np.diag([np.exp(1j * theta), np.exp(-1j * theta)])


@dataclass
class RestrictedFit:
    theta_Amem: float
    theta_Bmem: float
    u_a: np.ndarray
    u_b: np.ndarray
    fidelities: np.ndarray
    unitaries: list
    overlaps: np.ndarray  # with the unrestricted nearest maximally entangled state


def _wrap_half(theta):
    # exp(i sz (theta + pi)) = -exp(i sz theta): only theta mod pi is observable
    return float((theta + np.pi / 2) % np.pi - np.pi / 2)


def restricted_fit_unitaries(theta_A, theta_B, u_a, u_b):
    """The constrained rotation family for the four ion-photon states.

    Order: [A-memory ion A / photon a, A-memory ion B / photon b,
    B-memory ion A / photon a, B-memory ion B / photon b].
    """
    return [np.kron(qm.I2, u_a), np.kron(_rz_phase(theta_A), u_b),
            np.kron(_rz_phase(theta_B), u_a), np.kron(qm.I2, u_b)]


def restricted_rotation_fit(states, restarts: int = 32, seed: int = 0) -> RestrictedFit:
    """Fit shared fiber rotations plus one sigma_z angle per memory assignment.

    F'_i = <Phi+| U'_i rho_i U'_i^dag |Phi+>; the fit minimizes 4 - sum F'_i.
    Angles are reported in [-pi/2, pi/2) since a shift by pi only flips the
    global sign of the rotation.
    """
    states = [np.asarray(s, dtype=complex) for s in states]
    phi = qm.BELL_VECTORS[0]

    def fids(x):
        Us = restricted_fit_unitaries(x[0], x[1], qm.zyz_unitary(x[2:5]), qm.zyz_unitary(x[5:8]))
        return np.array([_rotated_fidelity(U, r, phi) for U, r in zip(Us, states)])

    res = _multistart(lambda x: 4 - fids(x).sum(), 8, restarts, seed)
    x = res.x
    u_a, u_b = qm.zyz_unitary(x[2:5]), qm.zyz_unitary(x[5:8])
    Us = restricted_fit_unitaries(x[0], x[1], u_a, u_b)
    overlaps = []
    for U, r in zip(Us, states):
        psi = qm.nearest_max_entangled_state(r)[1]
        overlaps.append(abs(np.vdot(psi, U.conj().T @ phi)) ** 2)
    return RestrictedFit(_wrap_half(x[0]), _wrap_half(x[1]), u_a, u_b, fids(x), Us,
                         np.array(overlaps))


# ---------------------------------------------------------------- feedforward

def feedforward_reconstruct(groups, U_A, U_B, **kw) -> MLEResult:
    """ML estimate of the state after ideal feedforward.

    ``groups`` holds eight ``(probs, weights)`` tuples ordered as
    [A in memory, outcome 1..4] then [B in memory, outcome 1..4]. State
    rho_i of group i is mapped to S_i U rho_i U^dag S_i ~ Phi+, so its
    projectors become O' = (S_i U) O (S_i U)^dag. U_A and U_B are the 4x4
    local rotations found beforehand; they are not refitted.
    """
    if len(groups) != 8:
        raise ValueError("need 8 groups (2 memory assignments x 4 outcomes)")
    U_A, U_B = np.asarray(U_A, complex), np.asarray(U_B, complex)
    if U_A.shape != (4, 4) or U_B.shape != (4, 4):
        raise ValueError("U_A and U_B must be 4x4")
    P, f = [], []
    for g, (probs, weights) in enumerate(groups):
        if len(probs) != 9:
            raise ValueError(f"group {g} is incomplete")
        W = qm.CORRECTIONS[g % 4] @ (U_A if g < 4 else U_B)
        Pg, fg = _stack(probs, weights, rotate=W)
        P.append(Pg)
        f.append(fg)
    return mle_projectors(np.concatenate(P), np.concatenate(f), **kw)


def ideal_photon_states(theta_A: float, theta_B: float):
    """The eight ideal two-photon states after the ion Bell measurement.

    Both ions start in Phi+ with their photons; the stored ion of each
    memory assignment sees no rotation while the other ion picks up
    exp(i sigma_z theta). Order as in ``feedforward_reconstruct``.
    """
    phi = qm.BELL_VECTORS[0]
    out = []
    for mem, theta in (("A", theta_A), ("B", theta_B)):
        R = _rz_phase(theta)
        # qubit order A, a, B, b
        RA, RB = (qm.I2, R) if mem == "A" else (R, qm.I2)
        psi = np.kron(np.kron(RA, qm.I2) @ phi, np.kron(RB, qm.I2) @ phi)
        psi = psi.reshape(2, 2, 2, 2)
        for k in range(4):
            bell = qm.BELL_VECTORS[k].reshape(2, 2)
            # project ions A, B onto B_k, leaves photons a, b
            ph = np.einsum("xy,xayb->ab", bell.conj(), psi).reshape(4)
            out.append(ph / np.linalg.norm(ph))
    return out


def distinct_state_count(theta_A: float, theta_B: float, tol: float = 1e-9) -> int:
    """Number of different two-photon states among the eight outcomes."""
    reps = []
    for v in ideal_photon_states(theta_A, theta_B):
        if not any(abs(np.vdot(r, v)) ** 2 >= 1 - tol for r in reps):
            reps.append(v)
    return len(reps)


# ---------------------------------------------------------------- Monte Carlo

@dataclass(frozen=True)
class MCConfig:
    resamples: int = 500
    quantile: float = 0.1590
    zero_substitute: int = 1
    seed: int = 0
    max_dropped: float = 0.05

    def __post_init__(self):
        if not 0 < self.quantile < 0.5:
            raise ValueError("quantile must lie in (0, 0.5)")
        if self.resamples < 1:
            raise ValueError("need at least one resample")


def _resample(data: TomoDataset, rng, sub: int) -> TomoDataset:
    out = []
    for s in data.settings:
        C = rng.poisson(np.where(s.C == 0, sub, s.C))
        N = rng.poisson(s.N_A if s.N_A > 0 else sub)
        out.append(Setting(s.basisA, s.basisB, s.projA, s.projB, C,
                           int(min(N, s.M_A)), s.M_A, max(s.M_B_given_A, int(C.sum()))))
    return TomoDataset(out)


def mc_error_bars(data: TomoDataset, statistic, cfg: MCConfig = MCConfig(),
                  ion_outcome: int = 0, **mle_kw):
    """Poisson-resampling error bars of a state statistic.

    Returns
    -------
    value : float
        Statistic of the point estimate (no zero substitution).
    delta_minus, delta_plus : float
        Median minus lower ``quantile`` and upper quantile minus median.
    """
    point = mle_reconstruct(*bayes_probabilities(data, ion_outcome), **mle_kw)
    value = float(statistic(point.rho))
    vals, dropped = [], 0
    for r in range(cfg.resamples):
        rng = np.random.default_rng([cfg.seed, r])
        try:
            res = mle_reconstruct(*bayes_probabilities(_resample(data, rng, cfg.zero_substitute),
                                                       ion_outcome), **mle_kw)
        except ValueError:
            res = None
        if res is None or not res.converged:
            dropped += 1
            continue
        vals.append(float(statistic(res.rho)))
    if dropped > cfg.max_dropped * cfg.resamples:
        raise RuntimeError(f"{dropped} of {cfg.resamples} resamples failed")
    lo, med, hi = np.quantile(vals, [cfg.quantile, 0.5, 1 - cfg.quantile])
    return value, float(med - lo), float(hi - med)


# ---------------------------------------------------------------- memory fit

def fit_memory_tau(points, rho0, tmax: float = 10.0, rtol: float = 1e-6) -> float:
    """Least-squares Gaussian dephasing time from (t, F) points.

    F(t) is the overlap of dephase_gaussian(rho0, t, tau) with the
    maximally entangled state nearest to rho0.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValueError("need at least two (t, F) points")
    t, F = pts[:, 0], pts[:, 1]
    if (t < 0).any():
        raise ValueError("times must be nonnegative")
    if np.ptp(t) == 0:
        raise ValueError("all points share one time; tau is not identifiable")
    rho0 = np.asarray(rho0, dtype=complex)
    psi = qm.nearest_max_entangled_state(rho0)[1]
    ref = qm.ket_to_dm(psi)
    # fidelity is linear in the flip weight p: F = F_0 + p (F_flip - F_0)
    F0 = qm.fidelity(rho0, ref)
    Z = np.kron(qm.SZ, qm.I2)
    Fflip = qm.fidelity(Z @ rho0 @ Z, ref)

    def sse(log_tau):
        p = qm.dephasing_weight(t, np.exp(log_tau))
        return np.sum((F0 + p * (Fflip - F0) - F) ** 2)

    grid = np.linspace(np.log(1e-6), np.log(tmax), 400)
    i = int(np.argmin([sse(g) for g in grid]))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    r = minimize_scalar(sse, bounds=(lo, hi), method="bounded", options={"xatol": rtol})
    return float(np.exp(r.x))
