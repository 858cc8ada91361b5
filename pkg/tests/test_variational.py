import math

import numpy as np
import pytest

from treerecon import (
    BadDimension,
    CenterSingularity,
    OptimizerConfig,
    compute_c,
    make_channel,
    near_center_limit,
    permute_channel,
    potts_cbar,
    potts_channel,
    ratio,
)


@pytest.fixture(scope="module")
def c_binary(binary_0301):
    return compute_c(binary_0301)


def test_ratio_center_singularity(binary_0301):
    with pytest.raises(CenterSingularity):
        ratio(binary_0301.stationary, binary_0301)
    with pytest.raises(CenterSingularity):
        ratio(binary_0301.stationary + np.array([1e-13, -1e-13]), binary_0301)


def test_ratio_boundary_is_zero(binary_0301):
    assert ratio(np.array([1.0, 0.0]), binary_0301) == 0.0
    assert ratio(np.array([0.0, 1.0]), binary_0301) == 0.0


def test_ratio_below_supremum():
    ch = potts_channel(2, 1.0)
    val = ratio(np.array([0.9, 0.1]), ch)
    assert 0.0 < val <= math.tanh(1.0) ** 2 + 1e-12


def test_ratio_shape_check(binary_0301):
    with pytest.raises(BadDimension):
        ratio(np.array([0.2, 0.3, 0.5]), binary_0301)


def test_near_center_closed_forms(binary_0301):
    for beta in (0.3, 1.0):
        got = near_center_limit(potts_channel(2, beta))
        assert abs(got - math.tanh(beta) ** 2) <= 1e-12
    assert abs(near_center_limit(potts_channel(3, 0.0))) <= 1e-12
    # for two-state channels the directional limit is the squared eigenvalue
    assert abs(near_center_limit(binary_0301) - 0.04) <= 1e-12
    from treerecon import binary_channel
    assert abs(near_center_limit(binary_channel(0.3, 0.7)) - 0.16) <= 1e-12


def test_ising_closed_form_single():
    res = compute_c(potts_channel(2, 0.5))
    assert abs(res.value - math.tanh(0.5) ** 2) <= 1e-6
    assert res.trace.method == "grid-1d"
    assert res.trace.near_center_is_max
    assert res.value >= res.trace.near_center_value - 1e-12


def test_asymmetric_two_state(c_binary, binary_0301):
    assert abs(c_binary.value - 0.0579) <= 0.0005
    # interior maximizer beats the directional limit here
    assert not c_binary.trace.near_center_is_max
    assert c_binary.value > near_center_limit(binary_0301) + 0.01
    assert abs(ratio(c_binary.argmax, binary_0301) - c_binary.value) <= 1e-9


def test_result_invariants(c_binary):
    assert c_binary.value >= 0.0
    assert c_binary.argmax.shape == (2,)
    assert abs(c_binary.argmax.sum() - 1.0) <= 1e-9
    assert c_binary.trace.seed == 0


def test_lower_bound_consistency(c_binary, binary_0301):
    assert c_binary.value >= near_center_limit(binary_0301) - 1e-9
    res = compute_c(potts_channel(2, 1.3))
    assert res.value >= near_center_limit(potts_channel(2, 1.3)) - 1e-9


def test_zero_information_channel(quick_config):
    assert compute_c(potts_channel(2, 0.0)).value <= 1e-12
    assert compute_c(potts_channel(3, 0.0), quick_config).value <= 1e-12


def test_potts_reduction_q2():
    # tanh^2(beta) = tanh(beta) * cbar forces cbar = tanh(beta)
    for beta in (0.4, 1.1):
        assert abs(potts_cbar(2, beta) - math.tanh(beta)) <= 1e-6


def test_potts_reduction_q3():
    beta = 1.0
    lam = math.expm1(2 * beta) / (math.exp(2 * beta) + 2)
    full = compute_c(potts_channel(3, beta), threads=4).value
    reduced = lam * potts_cbar(3, beta, threads=4)
    assert abs(full - reduced) <= 1e-6


def test_boundary_decay(c_binary, binary_0301):
    # the ratio collapses toward 0 at the simplex boundary
    for p in ([1e-9, 1.0 - 1e-9], [1.0 - 1e-9, 1e-9]):
        assert ratio(np.array(p), binary_0301) < 0.5 * c_binary.value
    ch = potts_channel(2, 1.0)
    c = compute_c(ch).value
    assert c > 0.01
    assert ratio(np.array([1e-9, 1.0 - 1e-9]), ch) < 0.5 * c


def test_deterministic_across_runs_and_threads():
    cfg = OptimizerConfig(starts=12, seed=3)
    ch = potts_channel(3, 0.6)
    a = compute_c(ch, cfg, threads=1)
    b = compute_c(ch, cfg, threads=1)
    c = compute_c(ch, cfg, threads=4)
    assert a.value == b.value == c.value
    np.testing.assert_array_equal(a.argmax, c.argmax)


def test_seed_changes_are_bounded():
    # different multistart seeds may find different local maxima, but the
    # reported value never drops below the directional limit
    ch = potts_channel(3, 0.8)
    lo = near_center_limit(ch)
    for seed in (0, 1):
        cfg = OptimizerConfig(starts=8, seed=seed)
        assert compute_c(ch, cfg).value >= lo - 1e-9


def test_permutation_invariance_quick():
    ch = make_channel([[0.8, 0.2], [0.2, 0.8]])
    flipped = permute_channel(ch, [1, 0])
    a = compute_c(ch).value
    b = compute_c(flipped).value
    assert abs(a - b) <= 1e-6
    assert abs(a - 0.36) <= 1e-6


def test_convexity_quick():
    # mixtures within the symmetric two-state family share the uniform
    # stationary law, so the constant is convex along the segment
    m1 = make_channel([[0.9, 0.1], [0.1, 0.9]])
    m2 = make_channel([[0.6, 0.4], [0.4, 0.6]])
    c1 = compute_c(m1).value
    c2 = compute_c(m2).value
    for lam in (0.3, 0.7):
        mix = make_channel(lam * m1.matrix + (1 - lam) * m2.matrix)
        assert compute_c(mix).value <= lam * c1 + (1 - lam) * c2 + 1e-5
