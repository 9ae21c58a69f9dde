"""Cavity coupling geometry, ion heating and the spin-echo model."""
# %%
import warnings

import numpy as np

from ionrepeater import nodephysics as npx

# %% coupling of two ions to the cavity standing wave
print(f"antinode, 2.9 um off axis: {npx.cavity_coupling(0, 2.9):.4f}")
print(f"455 nm along the axis:     {npx.cavity_coupling(455, 2.9):.4f}")
off, g = npx.equalize_coupling()
print(f"equal coupling {g:.4f} at offset {off:.2f} nm")

# %% heating during memory attempts
for k in (0, 105, 210):
    print(k, "attempts:", np.round(npx.heating_trajectory(k).nbar, 2))

# %% spin-echo visibility, calibrated on the cold string (about 10 s per point)
cfg = npx.SpinEchoConfig()
with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    area = npx.calibrated_area(npx.TEMPS["start"].eta, cfg)
    for name in ("start", "mid"):
        print(f"{name:6s} C = {npx.spin_echo_visibility(npx.TEMPS[name], cfg, area):.3f}")

# %% Ramsey decay during storage
for tau in (0.059, 0.108):
    print(f"tau={tau * 1e3:.0f} ms: C(66 ms) = {npx.ramsey_amplitude(0.066, tau):.3f}")
