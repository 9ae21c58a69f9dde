"""State reconstruction from simulated photon counts."""
# %%
import numpy as np

from ionrepeater import qmath as qm
from ionrepeater import tomo

rng = np.random.default_rng(3)
phi = qm.bell_state(0)

# %% 36 measurement settings of a slightly noisy state, one per ion outcome
states = [qm.depolarize(qm.bell_state(i), 0.92) for i in range(4)]
data = tomo.synthetic_dataset(states, rng, photons=1e5)
print(len(data.settings), "settings")

# %% Bayes conversion to conditional probabilities, then maximum likelihood
for i in range(4):
    probs, weights = tomo.bayes_probabilities(data, i)
    res = tomo.mle_reconstruct(probs, weights)
    print(f"ion outcome {i + 1}: F to its Bell state {qm.fidelity(res.rho, qm.bell_state(i)):.4f}"
          f"  concurrence {qm.concurrence(res.rho):.4f}  iterations {res.iterations}")

# %% Monte-Carlo error bars on the fidelity
mc = tomo.MCConfig(resamples=50, seed=1)
v, lo, hi = tomo.mc_error_bars(data, lambda r: qm.fidelity(r, phi), mc)
print(f"F = {v:.4f} -{lo:.4f} +{hi:.4f}")

# %% local rotations that bring four measured states to Bell form
u = np.kron(qm.zyz_unitary([0.2, 0.5, 0.1]), qm.zyz_unitary([1.0, -0.3, 0.7]))
rotated = [u @ r @ u.conj().T for r in states]
u1, u2, F = tomo.bell_form_search(rotated, restarts=8)
print("Bell-form fidelities after correction:", F.round(4))

# %% how many distinct photon states the phase-shift family produces
for th in [(0, 0), (0.7, 0.7), (0.7, 1.1)]:
    print(th, "->", tomo.distinct_state_count(*th), "distinct states")
