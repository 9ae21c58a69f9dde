"""Headline numbers of the repeater node, computed and compared to the measured values."""
from dataclasses import dataclass, asdict
import warnings

import numpy as np

from . import nodephysics as npx
from . import protosim as ps
from . import ratemodel as rm
from .ratemodel import CURRENT, ENHANCED, LinkParams


@dataclass
class Check:
    name: str
    computed: float
    reference: float
    lo: float
    hi: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.computed) and self.lo <= self.computed <= self.hi)

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _band(name, value, ref, tol):
    return Check(name, float(value), ref, ref - tol, ref + tol)


def headline_checks(slow: bool = True, seed: int = 0, current=CURRENT, enhanced=ENHANCED):
    """All headline comparisons; ``slow`` adds the Monte-Carlo and spin-echo rows."""
    out = [
        _band("chain fidelity, 4 levels", rm.chain_fidelity(4, enhanced.F0, enhanced.F_swap_ions,
                                                            enhanced.V or 0.98), 0.61, 0.005),
        _band("chain time, 4 levels [s]", rm.chain_time(4, enhanced.P0_link), 0.715, 0.005),
        _band("chain time, 0 levels [s]", rm.chain_time(0, enhanced.P0_link), 0.0706, 0.0005),
        _band("min advantage length [km]", rm.bound_min_length(rm.GAMMA), 20.36, 0.01),
        _band("storage-time bound [ms]", 1e3 * rm.bound_storage_time(current.P0_link), 8.5, 0.1),
        _band("perfect-memory time, current [s]", rm.bound_perfect(current.P0_link)[1], 5.1, 0.1),
        _band("perfect-memory time, enhanced [ms]", 1e3 * rm.bound_perfect(enhanced.P0_link)[1], 16.8, 0.2),
        Check("repeater rate at 50 km [Hz]", rm.rkr_repeater(current, LinkParams(50)), 9.2, 8, 11),
        Check("direct rate at 50 km [Hz]", rm.rkr_direct(current, LinkParams(50)), 6.7, 5.6, 8.0),
        Check("rate crossover [km]", rm.rate_crossover(current), 30, 25, 35),
    ]
    cfg = ps.ProtocolConfig()
    P2 = ps.analytic_P2(cfg)
    alpha, amax = ps.enhancement_factors(cfg.p_A1, cfg.p_B1, P2)
    out += [
        _band("P2 (analytic)", P2, 0.336, 0.015),
        _band("alpha_max", amax, 375, 2),
        Check("alpha", alpha, 128, 120, 135),
        _band("photon-photon fidelity from memory model", ps.predicted_final_fidelity(), 0.813, 0.02),
        _band("Ramsey C at 66 ms, tau 59 ms", npx.ramsey_amplitude(0.066, 0.059), 0.27, 0.04),
        _band("Ramsey C at 66 ms, tau 108 ms", npx.ramsey_amplitude(0.066, 0.108), 0.67, 0.03),
    ]
    Lx = rm.skr_crossover(enhanced)
    Kx = rm.skr_pipeline(enhanced, LinkParams(Lx)).K
    out += [
        Check("SKR crossover, enhanced [km]", Lx, 150, 130, 170),
        Check("memory cut-off at crossover", Kx, 520, 440, 600),
        Check("SKR at 50 km, current [Hz]", rm.skr_pipeline(current, LinkParams(50)).skr, 0, 0, 0.1),
        _band("coupling at antinode", npx.cavity_coupling(0, 2.9), 0.946, 0.004),
        _band("coupling at 455 nm", npx.cavity_coupling(455, 2.9), 0.926, 0.004),
        _band("equalized coupling", npx.equalize_coupling()[1], 0.941, 0.006),
        Check("efficiency node A", rm.efficiency_budget(rm.BUDGET_NODE_A)[0], 3.8e-3, 3.61e-3, 3.99e-3),
        Check("efficiency node B", rm.efficiency_budget(rm.BUDGET_NODE_B)[0], 2.9e-3, 2.755e-3, 3.045e-3),
    ]
    rate, modes = rm.repeaterless_requirements(800, 1.4)
    out += [
        Check("repeaterless attempt rate [Hz]", rate, 1e14, 0.5e14, 2e14),
        Check("repeaterless modes", modes, 8e11, 0.4e12, 2e12),
    ]
    if slow:
        for L in (10, 25, 50, 100):
            link = LinkParams(L)
            mc = ps.simulate_repeater(ps.ProtocolConfig.from_node(current, link), 10**6, seed=seed)
            ratio = mc.active_rate / rm.rkr_repeater(current, link)
            out.append(_band(f"MC / analytic rate at {L} km", ratio, 1.0, 0.02))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            area = npx.calibrated_area(npx.TEMPS["start"].eta)
            out.append(_band("spin-echo C, start of Loop 2",
                             npx.spin_echo_visibility(npx.TEMPS["start"], area=area), 0.92, 0.005))
            out.append(_band("spin-echo C, mid Loop 2",
                             npx.spin_echo_visibility(npx.TEMPS["mid"], area=area), 0.67, 0.10))
    return out
