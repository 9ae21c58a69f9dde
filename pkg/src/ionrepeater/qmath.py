"""Two-qubit state and channel algebra.

States are plain ``numpy`` arrays. Tensor order is (qubit 1) x (qubit 2) in
the computational basis |00>, |01>, |10>, |11> with |0> = H and |1> = V.
"""
from enum import IntEnum

import numpy as np
from scipy.optimize import minimize

ATOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


class BellLabel(IntEnum):
    """Bell states, numbered so that ``B_i`` is ``BellLabel(i - 1)``."""

    PhiPlus = 0
    PhiMinus = 1
    PsiPlus = 2
    PsiMinus = 3


class PauliFrame(IntEnum):
    """One-sided corrections I x P acting on the second qubit."""

    I = 0
    Z = 1
    X = 2
    Y = 3

    @property
    def matrix(self) -> np.ndarray:
        return np.kron(I2, (I2, SZ, SX, SY)[self])


_s = 1 / np.sqrt(2)
BELL_VECTORS = np.array([
    [_s, 0, 0, _s],      # Phi+
    [_s, 0, 0, -_s],     # Phi-
    [0, _s, _s, 0],      # Psi+
    [0, _s, -_s, 0],     # Psi-
], dtype=complex)

# S_i maps B_i onto Phi+ (PauliFrame index equals BellLabel index)
CORRECTIONS = [PauliFrame(i).matrix for i in range(4)]


def ket_to_dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def bell_state(label) -> np.ndarray:
    """Pure Bell state density matrix (dim 4)."""
    return ket_to_dm(BELL_VECTORS[BellLabel(label)])


def is_density_matrix(rho, atol: float = ATOL) -> bool:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if not np.allclose(rho, rho.conj().T, atol=atol):
        return False
    if abs(np.trace(rho) - 1) > atol:
        return False
    return np.linalg.eigvalsh(rho).min() >= -atol


def repair(rho, atol: float = ATOL) -> np.ndarray:
    """Hermitize, clip tiny negative eigenvalues and renormalize.

    Raises
    ------
    ValueError
        If an eigenvalue is below ``-atol``.
    """
    rho = np.asarray(rho, dtype=complex)
    rho = (rho + rho.conj().T) / 2
    w, v = np.linalg.eigh(rho)
    if w.min() < -atol:
        raise ValueError(f"matrix is not positive (min eigenvalue {w.min():.3g})")
    if w.min() < 0:
        w = np.clip(w, 0, None)
        rho = (v * w) @ v.conj().T
    return rho / np.trace(rho).real


def fidelity(rho, psi) -> float:
    """Overlap Tr(|psi><psi| rho) with a pure target.

    ``psi`` may be a state vector or a pure density matrix.
    """
    rho = np.asarray(rho)
    psi = np.asarray(psi)
    if psi.ndim == 1:
        psi = ket_to_dm(psi)
    if rho.shape != psi.shape:
        raise ValueError(f"dimension mismatch {rho.shape} vs {psi.shape}")
    return float(np.real(np.trace(psi @ rho)))


def purity_bound(rho) -> float:
    """sqrt(Tr rho^2), an upper bound on the overlap with any pure state."""
    rho = np.asarray(rho)
    return float(np.sqrt(np.real(np.trace(rho @ rho))))


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("concurrence needs a two-qubit state")
    yy = np.kron(SY, SY)
    r = rho @ yy @ rho.conj() @ yy
    lam = np.sqrt(np.clip(np.sort(np.linalg.eigvals(r).real)[::-1], 0, None))
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def _check_unitary(u, name="u"):
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not np.allclose(u @ u.conj().T, I2, atol=ATOL):
        raise ValueError(f"{name} is not a 2x2 unitary")
    return u


def local_rotate(rho, u1, u2) -> np.ndarray:
    """(u1 x u2) rho (u1 x u2)^dagger."""
    U = np.kron(_check_unitary(u1, "u1"), _check_unitary(u2, "u2"))
    return U @ rho @ U.conj().T


def depolarize(rho, F: float) -> np.ndarray:
    """One-sided depolarizing channel.

    M(rho, F) = F rho + (1 - F)/3 (Sz rho Sz + Sy rho Sy + Sx rho Sx),
    Paulis on the second qubit.
    """
    if not 0 <= F <= 1:
        raise ValueError(f"F={F} outside [0, 1]")
    rho = np.asarray(rho, dtype=complex)
    out = F * rho
    for S in CORRECTIONS[1:]:
        out = out + (1 - F) / 3 * (S @ rho @ S)
    return out


def dephasing_weight(t, tau) -> float:
    """Flip probability p(t) = (1 - exp(-t^2/tau^2))/2."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be nonnegative")
    return (1 - np.exp(-(np.asarray(t) / tau) ** 2)) / 2


_SZ_ION = np.kron(SZ, I2)


def dephase_gaussian(rho, t: float, tau: float) -> np.ndarray:
    """Gaussian dephasing of the ion (first) qubit.

    (1 - p) rho + p Sz rho Sz with Sz = sigma_z x I, so that ion coherences
    decay as exp(-t^2/tau^2) and the photon qubit is untouched.
    """
    p = float(dephasing_weight(t, tau))
    rho = np.asarray(rho, dtype=complex)
    return (1 - p) * rho + p * (_SZ_ION @ rho @ _SZ_ION)


# sign of <target|s_b x s_b|target> for b = X, Y, Z
_CORR_OPS = [np.kron(SX, SX), np.kron(SY, SY), np.kron(SZ, SZ)]


def qber(rho, target=BellLabel.PhiPlus):
    """Quantum bit error rates (eX, eY, eZ) relative to a Bell target."""
    tgt = bell_state(target)
    out = []
    for op in _CORR_OPS:
        s = np.sign(np.real(np.trace(op @ tgt)))
        out.append(float((1 - s * np.real(np.trace(op @ rho))) / 2))
    return tuple(out)


def bell_weights(rho) -> np.ndarray:
    """Diagonal of rho in the Bell basis, ordered as BellLabel."""
    return np.real(np.einsum("ij,jk,ik->i", BELL_VECTORS.conj(), rho, BELL_VECTORS))


def bell_diagonal(weights) -> np.ndarray:
    """Bell-diagonal state with the given BellLabel-ordered weights."""
    return np.einsum("i,ij,ik->jk", np.asarray(weights, dtype=float),
                     BELL_VECTORS, BELL_VECTORS.conj())


def is_bell_diagonal(rho, atol: float = 1e-12) -> bool:
    return np.allclose(bell_diagonal(bell_weights(rho)), rho, atol=atol)


def entanglement_swap(rho_ab, rho_cd, outcome):
    """Bell measurement on qubits B, C followed by the Pauli correction.

    Returns
    -------
    rho_ad : ndarray
        Corrected, normalized state of qubits A and D.
    prob : float
        Probability of ``outcome``.
    """
    outcome = BellLabel(outcome)
    big = np.kron(rho_ab, rho_cd).reshape([2] * 8)  # a b c d , a' b' c' d'
    b = BELL_VECTORS[outcome].reshape(2, 2)
    # <B|_{bc} rho |B>_{b'c'}
    red = np.einsum("bc,abcdefgh,fg->adeh", b.conj(), big, b).reshape(4, 4)
    prob = float(np.real(np.trace(red)))
    if prob < 1e-14:
        raise ValueError(f"outcome {outcome.name} has vanishing probability")
    S = CORRECTIONS[outcome]
    return S @ (red / prob) @ S, prob


def _su2(params):
    a, b, c = params
    rz = lambda x: np.diag([np.exp(-0.5j * x), np.exp(0.5j * x)])
    ry = np.array([[np.cos(b / 2), -np.sin(b / 2)], [np.sin(b / 2), np.cos(b / 2)]])
    return rz(a) @ ry @ rz(c)


zyz_unitary = _su2


def nearest_max_entangled_state(rho, restarts: int = 16, seed: int = 0):
    """Closest maximally entangled pure state and its overlap with rho.

    Every maximally entangled state is (I x V)|Phi+> up to phase, so the
    search runs over a single SU(2) element. Bell-diagonal inputs return
    their dominant Bell state directly.

    Returns
    -------
    F : float
    psi : ndarray, shape (4,)
    """
    rho = np.asarray(rho, dtype=complex)
    w = bell_weights(rho)
    best_F, best_psi = float(w.max()), BELL_VECTORS[int(np.argmax(w))]
    if is_bell_diagonal(rho):
        return best_F, best_psi.copy()
    phi = BELL_VECTORS[0]

    def vec(x):
        return np.kron(I2, _su2(x)) @ phi

    def neg(x):
        v = vec(x)
        return -np.real(v.conj() @ rho @ v)

    rng = np.random.default_rng(seed)
    starts = [np.zeros(3), [0, np.pi, 0], [np.pi, 0, 0], [0, np.pi, np.pi]]
    starts += list(rng.uniform(0, 2 * np.pi, size=(restarts, 3)))
    for x0 in starts:
        res = minimize(neg, x0, method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000})
        if -res.fun > best_F:
            best_F, best_psi = float(-res.fun), vec(res.x)
    return best_F, best_psi


def nearest_max_entangled_fidelity(rho, restarts: int = 16, seed: int = 0) -> float:
    """Largest overlap of rho with a maximally entangled pure state."""
    return nearest_max_entangled_state(rho, restarts, seed)[0]
