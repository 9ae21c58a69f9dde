import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings, strategies as st

from ionrepeater import qmath as qm
from ionrepeater import ratemodel as rm
from ionrepeater.ratemodel import CURRENT, ENHANCED, LinkParams


def markov_nbar(P, K):
    """Attempts per success from the absorbing-chain fundamental matrix.

    States: 0 = Loop 1, j = 1..K Loop 2 with j-1 memory attempts done.
    """
    q = 1 - P
    n = K + 1
    Q = np.zeros((n, n))
    Q[0, 0] = q * q
    Q[0, 1] = 2 * P * q
    for j in range(1, K + 1):
        if j < K:
            Q[j, j + 1] = q
        else:
            Q[j, 0] = q  # cut-off: restart
    N = np.linalg.inv(np.eye(n) - Q)
    return N[0].sum()


@pytest.mark.parametrize("P,K", [(0.3, 1), (0.1, 5), (0.02, 40), (0.0066, 190)])
def test_nbar_matches_markov_chain(P, K):
    assert rm.mean_attempts(P, K) == pytest.approx(markov_nbar(P, K), rel=1e-10)


def test_channel_eta():
    assert rm.channel_eta(0.0173, 0) == 1
    assert rm.channel_eta(0.0173, 50) == pytest.approx(0.1365, abs=1e-4)
    assert rm.channel_eta(0.0173, 800) == pytest.approx(1.44e-14, rel=0.01)


def test_rkr_direct_examples():
    ideal = replace(CURRENT, P0_link=1.0, T0_direct=0.0)
    assert rm.rkr_direct(ideal, LinkParams(50, gamma=0)) == pytest.approx(2e5 / 100)
    r = rm.rkr_direct(CURRENT, LinkParams(50))
    assert 6.5 < r < 7.5
    half = rm.rkr_direct(replace(CURRENT, P0_link=0.009), LinkParams(50))
    assert half / r == pytest.approx(0.5, rel=0.01)


def test_rkr_repeater_asymptotic():
    # K infinite, small P', no swap time -> 2P'/(3T)
    P0 = 1e-3
    node = replace(CURRENT, P0_link=P0, T_swap=0.0, K=None)
    link = LinkParams(0.0)
    T = node.T0
    assert rm.rkr_repeater(node, link) * T / (2 * P0 / 3) == pytest.approx(1, rel=0.01)


def test_rkr_repeater_current_at_50km():
    r = rm.rkr_repeater(CURRENT, LinkParams(50))
    assert 8 <= r <= 11


def test_rate_crossover_near_30km():
    assert 25 <= rm.rate_crossover(CURRENT) <= 35


def test_ratio_at_min_length_is_one():
    node = replace(CURRENT, T0=0.0, T0_direct=0.0, T_swap=0.0, K=10**6, P0_link=1e-4)
    L = rm.bound_min_length(rm.GAMMA)
    ratio = rm.rkr_repeater(node, LinkParams(L)) / rm.rkr_direct(node, LinkParams(L))
    assert ratio == pytest.approx(1, rel=0.02)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 0.5), st.integers(1, 300))
def test_rate_monotone_in_K(P0, K):
    node = replace(CURRENT, P0_link=P0)
    link = LinkParams(40)
    assert rm.rkr_repeater(node, link, K) <= rm.rkr_repeater(node, link, K + 1) + 1e-12
    assert rm.rkr_repeater(node, link, K) <= rm.rkr_repeater(node, link, None) + 1e-12


def test_bounds():
    assert rm.bound_min_length(0.0173) == pytest.approx(20.36, abs=0.01)
    assert rm.bound_min_length(0.0346) == pytest.approx(rm.bound_min_length(0.0173) / 2)
    assert rm.bound_storage_time(0.018) * 1e3 == pytest.approx(8.5, abs=0.1)
    assert rm.bound_storage_time(0.036) == pytest.approx(rm.bound_storage_time(0.018) / 2)
    assert rm.bound_khat(0.018) == pytest.approx(83.33, abs=0.01)
    assert rm.bound_perfect(0.018)[1] == pytest.approx(5.1, abs=0.1)
    assert rm.bound_perfect(0.21)[1] * 1e3 == pytest.approx(16.8, abs=0.2)
    assert np.sqrt(rm.bound_perfect(0.018)[0]) == pytest.approx(0.012)
    with pytest.raises(ValueError):
        rm.bound_perfect(1.5)


def test_chain_time():
    assert rm.chain_time(4, 0.21) == pytest.approx(0.715, abs=0.005)
    assert rm.chain_time(0, 0.21) == pytest.approx(0.0706, abs=0.0005)
    assert rm.chain_time(4, 0.42) == pytest.approx(rm.chain_time(4, 0.21) / 4)
    for n in range(6):
        a = rm.chain_time(n, 0.1) * 0.1 ** 2
        assert a == pytest.approx(rm.chain_time(n, 0.37) * 0.37 ** 2)


def convolution_chain(n, F0, Fs, V):
    # independent route: Bell weights under XOR convolution and depolarizing mixing
    F = (1 + V * (1 - 2 * F0) ** 2) / 2
    w = np.array([0, 0, 1 - F, F])
    for _ in range(n):
        out = np.zeros(4)
        for i in range(4):
            for j in range(4):
                out[i ^ j] += w[i] * w[j]
        w = Fs * out + (1 - Fs) / 3 * (1 - out)
    return w.max()


def test_chain_fidelity_headline():
    assert rm.chain_fidelity(4, 0.99, 0.99, 0.98) == pytest.approx(0.610, abs=0.005)


@pytest.mark.parametrize("n", range(5))
def test_chain_fidelity_matches_convolution(n):
    got = rm.chain_fidelity(n, 0.97, 0.98, 0.9)
    assert got == pytest.approx(convolution_chain(n, 0.97, 0.98, 0.9), abs=1e-12)


def test_chain_fidelity_limits():
    for n in range(4):
        assert rm.chain_fidelity(n, 1, 1, 1) == pytest.approx(1)
    # no ion swap: the bare photonic-swap link
    assert rm.chain_fidelity(0, 1, 1, 0.8) == pytest.approx(0.9)
    assert rm.chain_fidelity(1, 1, 1, 0.8) == pytest.approx(0.9**2 + 0.1**2)


def test_chain_fidelity_monotone():
    grid = [0.9, 0.95, 0.99]
    for n in range(1, 4):
        assert rm.chain_fidelity(n + 1, 0.99, 0.99, 0.98) <= rm.chain_fidelity(n, 0.99, 0.99, 0.98)
    for a, b in zip(grid, grid[1:]):
        assert rm.chain_fidelity(2, a, 0.99, 0.98) <= rm.chain_fidelity(2, b, 0.99, 0.98)
        assert rm.chain_fidelity(2, 0.99, a, 0.98) <= rm.chain_fidelity(2, 0.99, b, 0.98)
        assert rm.chain_fidelity(2, 0.99, 0.99, a) <= rm.chain_fidelity(2, 0.99, 0.99, b)


def test_skf_examples():
    assert rm.skf_six_state(0, 0, 0) == 1
    assert rm.skf_six_state(0.5, 0.5, 0.5) == 0
    with pytest.raises(ValueError):
        rm.skf_six_state(0.6, 0, 0)


def test_skf_symmetric_threshold():
    from scipy.optimize import brentq
    root = brentq(lambda Q: rm.skf_six_state(Q, Q, Q) - 1e-12, 0.05, 0.2)
    assert 0.120 <= root <= 0.130


def test_skf_unclipped_symmetric_closed_form():
    # symmetric six-state rate: 1 + (1-3Q/2)log2(1-3Q/2) + (3Q/2)log2(Q/2)
    Q = 0.05
    expect = 1 + (1 - 1.5 * Q) * np.log2(1 - 1.5 * Q) + 1.5 * Q * np.log2(Q / 2)
    assert rm.skf_six_state(Q, Q, Q) == pytest.approx(expect, abs=1e-12)


def test_skf_ez_zero_limit_continuous():
    a = rm.skf_six_state(0.1, 0.1, 0.0)
    b = rm.skf_six_state(0.1, 0.1, 1e-9)
    assert a == pytest.approx(b, abs=1e-6)


def test_skr_perfect_memory():
    node = replace(ENHANCED, tau=1e6, F0=1.0, F_swap_ions=1.0)
    res = rm.skr_pipeline(node, LinkParams(100))
    assert res.skf == pytest.approx(1, abs=1e-9)
    assert res.skr == pytest.approx(res.rkr, rel=1e-9)


def test_skr_current_vanishes():
    assert rm.skr_pipeline(CURRENT, LinkParams(50)).skr < 0.1


@pytest.mark.parametrize("L", [20, 80, 160, 250])
def test_skr_below_rkr(L):
    for node in (CURRENT, ENHANCED):
        res = rm.skr_pipeline(node, LinkParams(L))
        assert 0 <= res.skr <= res.rkr + 1e-12
        if res.skf == 0:
            assert res.skr == 0


def test_weighted_state_matches_direct_sum():
    node, T, P, K = ENHANCED, 900e-6, 0.013, 50
    k = np.arange(1, K + 1)
    direct = sum(P * (1 - P) ** (j - 1) * rm.memory_state(node, j * T) for j in k)
    assert np.allclose(rm._weighted_memory_state(node, T, P, K), direct, atol=1e-13)


def test_skf_cutoff_is_last_good_k():
    node, T = ENHANCED, 900e-6
    K = rm.skf_cutoff(node, T)
    assert rm.skf_state(rm.memory_state(node, K * T)) >= 0.1
    assert rm.skf_state(rm.memory_state(node, (K + 1) * T)) < 0.1


def test_skr_bound():
    assert rm.skr_bound(LinkParams(150)) == pytest.approx(4.9, abs=0.05)
    assert rm.skr_bound(LinkParams(1)) > rm.skr_bound(LinkParams(2))
    link = LinkParams(300)
    assert rm.skr_bound(link) == pytest.approx(link.eta / np.log(2) * link.c / link.L, rel=0.01)


def test_repeaterless_requirements():
    rate, modes = rm.repeaterless_requirements(800, 1.4)
    assert 0.5e14 <= rate <= 2e14
    assert 0.4e12 <= modes <= 2e12
    assert rm.repeaterless_requirements(10, 3.0, gamma=0)[0] == pytest.approx(3.0)


def test_efficiency_budget():
    a = rm.efficiency_budget(rm.BUDGET_NODE_A)
    b = rm.efficiency_budget(rm.BUDGET_NODE_B)
    assert a[0] == pytest.approx(3.8e-3, rel=0.05)
    assert b[0] == pytest.approx(2.9e-3, rel=0.05)
    assert a[1] == pytest.approx(0.3e-3, abs=0.05e-3)
    assert b[1] == pytest.approx(0.2e-3, abs=0.05e-3)
    assert rm.efficiency_budget([(0.5, 0.05)]) == pytest.approx((0.5, 0.05))
    one = rm.efficiency_budget([(1, 0.01), (1, 0.02)])
    assert one == pytest.approx((1, np.hypot(0.01, 0.02)))
    with pytest.raises(ValueError):
        rm.efficiency_budget([(0.0, 0.1)])


def test_node_params_validation():
    with pytest.raises(ValueError):
        replace(CURRENT, F0=1.2)
    with pytest.raises(ValueError):
        replace(CURRENT, K=0)
