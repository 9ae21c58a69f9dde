"""Monte-Carlo simulation of the two-loop repeater protocol."""
# %%
import numpy as np

from ionrepeater import protosim as ps
from ionrepeater import ratemodel as rm
from ionrepeater.ratemodel import CURRENT, LinkParams

# %% the measured per-attempt probabilities
cfg = ps.ProtocolConfig()
stats = ps.simulate_repeater(cfg, 10**6, seed=1)
print(f"P_s={stats.P_s:.5f} (analytic {ps.analytic_Ps(cfg):.5f})")
print(f"P2={stats.P2:.4f} (analytic {ps.analytic_P2(cfg):.4f})")
print(f"enhancement alpha={stats.alpha:.1f} of at most {stats.alpha_max:.1f}")

# %% the memory attempt histogram is a truncated geometric distribution
h = stats.k_histogram
print("first memory attempts:", h[:5], " last:", h[-3:])

# %% simulated rates track the analytic renewal model
for L in (10, 25, 50, 100):
    link = LinkParams(L)
    mc = ps.simulate_repeater(ps.ProtocolConfig.from_node(CURRENT, link), 10**6, seed=L).active_rate
    print(f"{L:4d} km  MC {mc:7.3f} Hz  analytic {rm.rkr_repeater(CURRENT, link):7.3f} Hz")

# %% final photon-photon fidelity predicted from the memory model
print(f"predicted fidelity after the swap: {ps.predicted_final_fidelity():.3f}")
w = ps.success_k_distribution(cfg)
print(f"mean storage attempts per success: {np.sum(np.arange(len(w)) * w):.1f}")
