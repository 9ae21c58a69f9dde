"""Physical models of a two-ion cavity node.

Cavity coupling geometry, linear recoil heating of the motional modes,
a qutrit model of imperfect spin echoes averaged over thermal phonon
distributions, and the Gaussian Ramsey decay law.
"""
from dataclasses import dataclass, replace
import warnings

import numpy as np
from scipy.optimize import brentq, minimize_scalar

MODES = ("radialCOM", "radialROCK", "axialCOM", "axialSTR")
MODE_FREQS_MHZ = np.array([2.155, 1.928, 0.963, 1.668])
NBAR_START = np.array([8.0, 9.0, 0.0, 11.0])
NBAR_END = np.array([29.0, 34.0, 9.2, 16.0])
# phonons per photon-generation attempt, from the endpoints over 210 attempts
HEATING_RATES = np.array([0.100, 0.119, 0.0438, 0.0238])
LOOP2_ATTEMPTS = 210
# eta_i = ETA_SCALE / sqrt(f_i / MHz); fixed by C(start) = 0.92
ETA_SCALE = 0.049664


# ---------------------------------------------------------------- cavity

@dataclass(frozen=True)
class CavityGeometry:
    g_max: float = 2 * np.pi * 1.53e6  # rad/s
    waist: float = 12.31               # um
    wavelength: float = 854.0          # nm
    ion_separation: float = 5.8        # um
    axis_angle: float = 85.5           # deg between ion axis and cavity axis

    def __post_init__(self):
        if min(self.waist, self.wavelength, self.ion_separation) <= 0:
            raise ValueError("waist, wavelength and separation must be positive")

    @property
    def projected_separation(self) -> float:
        """Ion separation along the cavity axis, nm."""
        return 1e3 * self.ion_separation * np.cos(np.radians(self.axis_angle))

    @property
    def transverse_offset(self) -> float:
        """Distance of each ion from the cavity axis, um."""
        return self.ion_separation / 2


def cavity_coupling(axial_offset, transverse_offset, geom: CavityGeometry = CavityGeometry()):
    """Coupling relative to g_max: |cos(2 pi z / lambda)| exp(-r^2 / w^2).

    ``axial_offset`` (nm) is measured from an antinode and
    ``transverse_offset`` (um) from the cavity axis.
    """
    z = np.asarray(axial_offset, dtype=float)
    return np.abs(np.cos(2 * np.pi * z / geom.wavelength)) * np.exp(
        -(transverse_offset / geom.waist) ** 2)


def ion_couplings(offset, geom: CavityGeometry = CavityGeometry()):
    """Couplings of both ions when ion 1 sits ``offset`` nm from an antinode."""
    r = geom.transverse_offset
    return (cavity_coupling(offset, r, geom),
            cavity_coupling(np.asarray(offset) + geom.projected_separation, r, geom))


def equalize_coupling(geom: CavityGeometry = CavityGeometry()):
    """Cavity position giving both ions the same, largest coupling.

    Equal couplings need the two ions placed symmetrically about an
    antinode or a node, i.e. ion 1 at -d/2 + m lambda/4 from an antinode.

    Returns
    -------
    offset : float
        Position of ion 1 relative to the nearest antinode, nm.
    coupling : float
        Common coupling relative to g_max.
    """
    lam, d = geom.wavelength, geom.projected_separation
    half = lam / 2
    rem = d % half
    if min(rem, half - rem) < 1e-9 * lam:
        # both ions see the same standing-wave phase for every cavity position
        return 0.0, float(cavity_coupling(0.0, geom.transverse_offset, geom))
    cands = np.array([-d / 2, -d / 2 + lam / 4])
    g1, g2 = ion_couplings(cands, geom)
    i = int(np.argmax(g1))
    off = (cands[i] + lam / 4) % half - lam / 4  # fold to the nearest antinode
    return float(off), float(g1[i])


def offset_scan(geom: CavityGeometry = CavityGeometry(), span: float = None, step: float = 1.0):
    """Rows (offset_nm, g_ion1, g_ion2) across one standing-wave period."""
    span = geom.wavelength / 2 if span is None else span
    z = np.arange(-span, span + step / 2, step)
    g1, g2 = ion_couplings(z, geom)
    return np.column_stack([z, g1, g2])


# ---------------------------------------------------------------- motion

def lamb_dicke(scale: float = ETA_SCALE, freqs=MODE_FREQS_MHZ) -> np.ndarray:
    """Lamb-Dicke template eta_i = scale / sqrt(f_i / MHz)."""
    return scale / np.sqrt(np.asarray(freqs, dtype=float))


@dataclass(frozen=True)
class MotionalState:
    """Four motional modes in ``MODES`` order."""

    nbar: tuple = tuple(NBAR_START)
    eta: tuple = tuple(lamb_dicke())
    freqs: tuple = tuple(MODE_FREQS_MHZ)

    def __post_init__(self):
        for name in ("nbar", "eta", "freqs"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (4,):
                raise ValueError(f"{name} needs one value per mode")
            object.__setattr__(self, name, tuple(float(x) for x in v))
        if min(self.nbar) < 0:
            raise ValueError("mean phonon numbers must be nonnegative")
        if not all(0 <= e < 0.3 for e in self.eta):
            raise ValueError("Lamb-Dicke parameters must lie in [0, 0.3)")


def heating_trajectory(k: int, rates=HEATING_RATES, start: MotionalState = MotionalState()):
    """Mean phonon numbers after k photon-generation attempts (linear heating)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return replace(start, nbar=tuple(np.asarray(start.nbar) + k * np.asarray(rates)))


TEMPS = {
    "start": MotionalState(),
    "mid": heating_trajectory(LOOP2_ATTEMPTS // 2),
    "end": heating_trajectory(LOOP2_ATTEMPTS),
}


# ---------------------------------------------------------------- spin echo

@dataclass(frozen=True)
class SpinEchoConfig:
    """Spin-echo model settings.

    ``phases`` are the effective drive phases of the three pi pulses
    (S-D', S'-D', S-D'). ``calibration`` selects how the nominal pulse
    length is set at ``calibration_state``: ``"optimal"`` maximizes the
    visibility there, ``"mean"`` uses the Rabi frequency at the mean
    phonon numbers.
    """

    n_echoes: int = 40
    grid_max: object = 40
    C0: float = 0.99
    calibration_state: MotionalState = MotionalState()
    calibration: str = "optimal"
    miscalibration: float = 0.0
    phases: tuple = (0.0, 0.0, 0.0)
    chunk: int = 200_000

    def __post_init__(self):
        if self.n_echoes < 1:
            raise ValueError("n_echoes must be >= 1")
        if np.min(self.grid_max) < 1:
            raise ValueError("grid_max must be >= 1")
        if self.calibration not in ("optimal", "mean"):
            raise ValueError("calibration is 'optimal' or 'mean'")


def pulse(theta, a: int, b: int, phi: float) -> np.ndarray:
    """Resonant pulse of area ``theta`` between qutrit levels a and b.

    Qutrit order is [S, S', D']. Returns shape (N, 3, 3).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    U = np.zeros((theta.size, 3, 3), dtype=complex)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    spectator = 3 - a - b
    U[:, spectator, spectator] = 1
    U[:, a, a] = c
    U[:, b, b] = c
    U[:, a, b] = 1j * np.exp(1j * phi) * s
    U[:, b, a] = 1j * np.exp(-1j * phi) * s
    return U


def repump(rho) -> np.ndarray:
    """Return D' population to S and S' equally, discarding its coherences."""
    rho = np.array(rho, dtype=complex)
    p = rho[..., 2, 2].real.copy()
    rho[..., 2, :] = 0
    rho[..., :, 2] = 0
    rho[..., 0, 0] += p / 2
    rho[..., 1, 1] += p / 2
    return rho


def echo_train(theta, n_echoes: int = 40, phases=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Final qutrit states after ``n_echoes`` echoes from (|S> + |S'>)/sqrt2."""
    theta = np.atleast_1d(theta)
    U = pulse(theta, 0, 2, phases[0])
    U = pulse(theta, 1, 2, phases[1]) @ U
    U = pulse(theta, 0, 2, phases[2]) @ U
    Ud = np.conj(np.swapaxes(U, 1, 2))
    rho = np.zeros((theta.size, 3, 3), dtype=complex)
    rho[:, :2, :2] = 0.5
    for _ in range(n_echoes):
        rho = repump(U @ rho @ Ud)
    return rho


def echo_coherence(theta, n_echoes: int = 40, phases=(0.0, 0.0, 0.0)) -> np.ndarray:
    """rho_SS' after the echo train, same result as ``echo_train(...)[:, 0, 1]``.

    After each repump the state lives in the {S, S'} block, so one echo is
    a linear map on that 2x2 block: rho -> B rho B^dag + (c rho c^dag / 2) I
    with B = U[:2, :2] and c = U[2, :2].
    """
    theta = np.atleast_1d(theta)
    U = pulse(theta, 0, 2, phases[0])
    U = pulse(theta, 1, 2, phases[1]) @ U
    U = pulse(theta, 0, 2, phases[2]) @ U
    B, c = U[:, :2, :2], U[:, 2, :2]
    T = np.einsum("nik,njl->nijkl", B, B.conj())
    cc = np.einsum("nk,nl->nkl", c, c.conj()) / 2
    T[:, 0, 0] += cc
    T[:, 1, 1] += cc
    T = T.reshape(-1, 4, 4)
    v = np.full((theta.size, 4, 1), 0.5, dtype=complex)
    for _ in range(n_echoes):
        v = T @ v
    return v[:, 1, 0]


def thermal_weights(nbar: float, nmax: int) -> np.ndarray:
    """P(n) = nbar^n / (nbar + 1)^(n + 1) for n = 0..nmax (not renormalized)."""
    n = np.arange(nmax + 1)
    if nbar == 0:
        return (n == 0).astype(float)
    return np.exp(n * np.log(nbar) - (n + 1) * np.log1p(nbar))


def _grid(temps: MotionalState, grid_max):
    nmax = np.broadcast_to(np.asarray(grid_max), (4,))
    ws, idx = [], []
    for nb, m in zip(temps.nbar, nmax):
        w = thermal_weights(nb, int(m))
        if w.sum() < 0.999:
            warnings.warn(f"grid [0, {int(m)}] holds only {w.sum():.4f} of the n̄={nb} "
                          "thermal weight", RuntimeWarning, stacklevel=3)
        ws.append(w / w.sum())
        idx.append(np.nonzero(w > 0)[0])
    mesh = np.meshgrid(*idx, indexing="ij")
    ns = np.stack([m.ravel() for m in mesh])
    w = np.prod([ws[i][ns[i]] for i in range(4)], axis=0)
    return ns, w


def _rabi_factor(eta, n):
    eta = np.asarray(eta)[:, None] if np.ndim(n) == 2 else np.asarray(eta)
    return np.prod(1 - eta ** 2 * n, axis=0)


def _coherence(temps: MotionalState, cfg: SpinEchoConfig, area: float) -> complex:
    """Thermally averaged rho_SS' for nominal pulse area ``area`` (pi = calibrated)."""
    ns, w = _grid(temps, cfg.grid_max)
    theta = area * _rabi_factor(temps.eta, ns)
    tot = 0j
    for sl in range(0, theta.size, cfg.chunk):
        r = echo_coherence(theta[sl:sl + cfg.chunk], cfg.n_echoes, cfg.phases)
        tot += np.sum(w[sl:sl + cfg.chunk] * r)
    return tot


def calibrated_area(eta, cfg: SpinEchoConfig = SpinEchoConfig()) -> float:
    """Nominal pulse area (relative to the bare Rabi frequency) after calibration."""
    cal = replace(cfg.calibration_state, eta=tuple(eta))
    base = np.pi / _rabi_factor(cal.eta, np.asarray(cal.nbar))
    if cfg.calibration == "mean":
        return float(base)
    ccfg = replace(cfg, miscalibration=0.0)
    r = minimize_scalar(lambda m: -abs(_coherence(cal, ccfg, base * (1 + m))),
                        bounds=(-0.05, 0.1), method="bounded", options={"xatol": 1e-5})
    return float(base * (1 + r.x))


def spin_echo_visibility(temps: MotionalState, cfg: SpinEchoConfig = SpinEchoConfig(),
                         area: float = None) -> float:
    """Ramsey fringe amplitude after an imperfect spin-echo train.

    Every phonon tuple on the grid gets pulse area
    area * (1 + miscalibration) * prod_i (1 - eta_i^2 n_i); the final
    states are averaged with product thermal weights (renormalized on the
    grid) and C = C0 * 2 |rho_SS'|.
    ``area`` defaults to the calibrated value for ``temps.eta``.
    """
    if area is None:
        area = calibrated_area(temps.eta, cfg)
    return float(cfg.C0 * 2 * abs(_coherence(temps, cfg, area * (1 + cfg.miscalibration))))


def miscalibration_drop(temps: MotionalState, cfg: SpinEchoConfig = SpinEchoConfig(),
                        frac: float = 0.01):
    """Visibility and its largest drop under a +-frac pulse-length error."""
    area = calibrated_area(temps.eta, cfg)
    c = spin_echo_visibility(temps, cfg, area)
    others = [spin_echo_visibility(temps, replace(cfg, miscalibration=s * frac), area)
              for s in (-1, 1)]
    return c, c - min(others)


def calibrate_eta_scale(target: float = 0.92, temps: MotionalState = None,
                        cfg: SpinEchoConfig = SpinEchoConfig(), bracket=(0.03, 0.08),
                        xtol: float = 1e-5) -> float:
    """Lamb-Dicke scale s with eta_i = s / sqrt(f_i) such that C(temps) = target."""
    temps = cfg.calibration_state if temps is None else temps

    def gap(s):
        eta = lamb_dicke(s, temps.freqs)
        state = replace(temps, eta=tuple(eta))
        c = replace(cfg, calibration_state=replace(cfg.calibration_state, eta=tuple(eta)))
        return spin_echo_visibility(state, c) - target

    return float(brentq(gap, *bracket, xtol=xtol))


def ramsey_amplitude(t, tau: float, C0: float = 0.99):
    """Gaussian Ramsey decay C0 exp(-t^2 / tau^2)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return C0 * np.exp(-(np.asarray(t) / tau) ** 2)
