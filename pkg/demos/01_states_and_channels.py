"""Two-qubit states, noise channels and entanglement swapping."""
# %%
import numpy as np

from ionrepeater import qmath as qm

phi = qm.bell_state(qm.BellLabel.PhiPlus)
print("Bell weights of Phi+:", qm.bell_weights(phi).round(6))

# %% depolarizing to fidelity F gives a Werner state with concurrence 2F-1
for F in (1.0, 0.9, 0.75, 0.5):
    rho = qm.depolarize(phi, F)
    print(f"F={F:.2f}  fidelity={qm.fidelity(rho, phi):.4f}  concurrence={qm.concurrence(rho):.4f}")

# %% Gaussian dephasing of the ion qubit, coherence decays as exp(-t^2/tau^2)
tau = 0.062
for t in (0, 0.02, 0.05, 0.1):
    rho = qm.dephase_gaussian(phi, t, tau)
    print(f"t={t * 1e3:5.1f} ms  |rho_03|={2 * abs(rho[0, 3]):.4f}  expected={np.exp(-(t / tau) ** 2):.4f}")

# %% swapping two Werner pairs: every outcome gives the same corrected state
a = qm.depolarize(phi, 0.95)
for outcome in range(4):
    out, prob = qm.entanglement_swap(a, a, outcome)
    print(f"outcome {outcome}: p={prob:.3f}  F={qm.fidelity(out, phi):.6f}")

# %% nearest maximally entangled state for a rotated input
u = qm.zyz_unitary([0.3, 1.1, -0.4])
rot = np.kron(np.eye(2), u) @ qm.depolarize(phi, 0.9) @ np.kron(np.eye(2), u).conj().T
print("overlap with Phi+:", round(qm.fidelity(rot, phi), 4),
      " best maximally entangled overlap:", round(qm.nearest_max_entangled_fidelity(rot), 4))
