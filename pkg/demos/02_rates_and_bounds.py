"""Analytic repeater rates, advantage bounds and secret key rates."""
# %%
import numpy as np

from ionrepeater import ratemodel as rm
from ionrepeater.ratemodel import CURRENT, ENHANCED, LinkParams

# %% raw key rates of the present node against direct transmission
print(" L km   repeater Hz   direct Hz")
for L in (10, 25, 50, 100, 150):
    link = LinkParams(L)
    print(f"{L:5d}  {rm.rkr_repeater(CURRENT, link):11.3f}  {rm.rkr_direct(CURRENT, link):10.3f}")
print(f"repeater overtakes direct beyond {rm.rate_crossover(CURRENT):.1f} km")

# %% closed-form bounds on when a memory helps
print(f"minimum length       {rm.bound_min_length(rm.GAMMA):.2f} km")
print(f"storage-time bound   {rm.bound_storage_time(CURRENT.P0_link) * 1e3:.2f} ms")
for name, node in (("current", CURRENT), ("enhanced", ENHANCED)):
    eta_star, t = rm.bound_perfect(node.P0_link)
    print(f"perfect-memory time  {name:8s} {t:.4g} s at eta*={eta_star:.3g}")

# %% secret key rate with a memory cut-off against the repeaterless bound
print(" L km   SKR Hz    bound Hz   cut-off K")
for L in np.arange(100, 201, 20):
    link = LinkParams(float(L))
    res = rm.skr_pipeline(ENHANCED, link)
    print(f"{L:5.0f}  {res.skr:8.3f}  {rm.skr_bound(link):9.3f}  {res.K:6d}")
print(f"enhanced node beats the bound from {rm.skr_crossover(ENHANCED):.1f} km")
print(f"present node at 50 km: {rm.skr_pipeline(CURRENT, LinkParams(50)).skr:.3g} Hz")

# %% a chain of enhanced nodes over 800 km
print(f"4 nesting levels: time {rm.chain_time(4, ENHANCED.P0_link):.3f} s, "
      f"fidelity {rm.chain_fidelity(4, ENHANCED.F0, ENHANCED.F_swap_ions, ENHANCED.V):.3f}")
rate, modes = rm.repeaterless_requirements(800, 1.4)
print(f"without repeaters: {rate:.2e} Hz attempt rate, {modes:.2e} modes")
