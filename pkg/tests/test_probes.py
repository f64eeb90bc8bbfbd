import numpy as np
import pytest
from scipy.stats import norm

from relurand.errors import DegenerateInput
from relurand.network import Architecture, InitMode, TiePolicy, build_network, forward
from relurand.probes import (
    probe_activation_margin,
    probe_dist_equiv,
    probe_gaussian_spectral,
    probe_gradient_smoothness,
    probe_scale_preservation,
    probe_segment_spectral,
    probe_sign_flip,
    probe_value_gradient,
)
from relurand.rng import RngStream


def net_and_input(seed, d=64, widths=(64, 64)):
    rng = RngStream(seed)
    net = build_network(Architecture(d, widths), InitMode.STANDARD, rng)
    return net, rng.sphere_point(d, norm=np.sqrt(d)), rng


class TestValueGradient:
    def test_linear_chi_concentration(self):
        # l = 0: ||grad|| = ||w||, w ~ N(0, I/d), concentrates at 1 for d >= 64
        rep = probe_value_gradient(Architecture(64, ()), 200, 0.1, master_seed=1)
        assert rep.summary["grad_bound_freq"] >= 0.99  # bound is 1/2 at l = 0

    def test_two_layer_stated_constant(self):
        rep = probe_value_gradient(Architecture(256, (256, 256)), 200, 0.1, master_seed=2)
        assert rep.summary["grad_bound_freq"] >= 0.99  # 2^-3 bound

    def test_euler_identity_across_ensemble(self):
        rep = probe_value_gradient(Architecture(64, (64,)), 100, 0.1, master_seed=3)
        assert np.max(rep.measurements["euler_error"]) <= 1e-10 * (
            1.0 + np.max(rep.measurements["abs_f"]))


class TestScalePreservation:
    def test_zero_radius(self):
        net, x, rng = net_and_input(5)
        rep = probe_scale_preservation(net, x, 0.0, 10, rng)
        assert np.max(rep.measurements["pre_spread_over_radius"]) == 0.0
        assert np.max(rep.measurements["post_spread_over_radius"]) == 0.0

    def test_layer1_operator_norm_bound(self):
        net, x, rng = net_and_input(6)
        radius = 1.0
        W1_norm = np.linalg.norm(net.weights[0], 2)
        rep = probe_scale_preservation(net, x, radius, 20, rng)
        # ||ft_1(x) - ft_1(y)|| <= ||W_1|| ||x - y|| <= ||W_1|| radius
        assert np.all(rep.measurements["pre_spread_over_radius"][:, 0] <= W1_norm + 1e-12)

    def test_no_norm_violations_at_width_512(self):
        violations = 0
        for k in range(20):
            net, x, rng = net_and_input(700 + k, d=512, widths=(512, 512))
            rep = probe_scale_preservation(net, x, np.sqrt(512) / 10, 5, rng)
            violations += rep.summary["norm_violations"]
        assert violations == 0


class TestActivationMargin:
    def test_zero_alpha_rejected(self):
        net, x, rng = net_and_input(8)
        with pytest.raises(ValueError):
            probe_activation_margin(net, x, 0.0, rng)

    def test_tiny_alpha_count_is_full(self):
        net, x, rng = net_and_input(9, d=128, widths=(128, 128))
        rep = probe_activation_margin(net, x, 1e-12, rng)
        assert np.all(rep.measurements["counts"] == 128)

    def test_single_neuron_density_oracle(self):
        # per-neuron miss probability P(|Z| <= 0.1) vs the 0.1 sqrt(2/pi) density bound
        miss = 2 * norm.cdf(0.1) - 1
        assert miss <= 0.1 * np.sqrt(2 / np.pi)
        assert miss == pytest.approx(0.0797, abs=1e-3)

    def test_low_violation_rate(self):
        viol = pairs = 0
        for k in range(30):
            net, x, rng = net_and_input(900 + k, d=512, widths=(512, 512, 512))
            rep = probe_activation_margin(net, x, 0.1, rng)
            viol += rep.summary["violations"]
            pairs += rep.summary["layers"]
        assert viol / pairs <= 0.01


class TestGradientSmoothness:
    def test_zero_radius(self):
        net, x, rng = net_and_input(10)
        rep = probe_gradient_smoothness(net, x, 0.0, 5, rng)
        assert np.max(rep.measurements["grad_drift"]) == 0.0
        assert np.max(rep.measurements["mask_flips"]) == 0

    def test_triangle_inequality(self):
        net, x, rng = net_and_input(11)
        rep = probe_gradient_smoothness(net, x, 2.0, 30, rng)
        sums = rep.measurements["term_norms"].sum(axis=1)
        assert np.all(sums + 1e-12 >= rep.measurements["grad_drift"])

    def test_drift_shrinks_with_radius(self):
        # drift ratio stays well below 1 at 5% relative radius; cutting the
        # radius by 10x cuts it at least in half (the mask-flip term scales
        # like sqrt of the radius, not linearly)
        big, small = [], []
        for k in range(10):
            net, x, rng = net_and_input(1100 + k, d=1024, widths=(1024, 1024))
            r = 0.05 * np.sqrt(1024)
            big.append(probe_gradient_smoothness(net, x, r, 10, rng).summary["max_drift_ratio"])
            small.append(probe_gradient_smoothness(net, x, r / 10, 10, rng).summary["max_drift_ratio"])
        assert np.median(big) <= 0.5
        assert np.median(small) <= 0.5 * np.median(big)


class TestSegmentSpectral:
    def test_single_factor_segment(self):
        # all masks forced on: the segment norm is exactly ||W|| of that layer
        from relurand.probes import _masked_segment
        net, x, rng = net_and_input(12, d=16, widths=(8, 16))
        trace = forward(net, x, TiePolicy.RANDOMIZED, rng)
        ones = tuple(np.ones_like(m) for m in trace.masks)
        forced = type(trace)(trace.x, trace.preactivations, ones,
                             trace.postactivations, trace.output)
        M = _masked_segment(net, forced, 1, 0)
        assert np.array_equal(M, net.weights[0])

    def test_zero_masks_kill_segment(self):
        from relurand.probes import _masked_segment
        net, x, rng = net_and_input(13, d=16, widths=(8, 16))
        trace = forward(net, x, TiePolicy.RANDOMIZED, rng)
        zeros = tuple(np.zeros_like(m) for m in trace.masks)
        killed = type(trace)(trace.x, trace.preactivations, zeros,
                             trace.postactivations, trace.output)
        M = _masked_segment(net, killed, 2, 0)
        assert np.all(M == 0.0)

    def test_bounds_hold_with_calibrated_constant(self):
        net, x, rng = net_and_input(14, d=512, widths=(512, 64, 512))
        rep = probe_segment_spectral(net, x, np.sqrt(512) / 10, 20, rng)
        assert rep.summary["violations"] == 0


class TestSignFlip:
    def test_identical_inputs(self):
        x = np.array([1.0, 2.0])
        out = probe_sign_flip(x, x, 1000, RngStream(0))
        assert out["empirical"] == 0.0 and out["oracle"] == 0.0

    def test_antipodal(self):
        x = np.array([1.0, 0.0, 0.0])
        out = probe_sign_flip(x, -x, 1000, RngStream(1))
        assert out["oracle"] == pytest.approx(1.0)
        assert out["bound"] is None  # r > R: formula precondition violated

    def test_orthogonal_half(self):
        x = np.array([1.0, 0.0])
        y = np.array([0.0, 1.0])
        out = probe_sign_flip(x, y, 100_000, RngStream(2))
        assert out["oracle"] == pytest.approx(0.5)
        assert abs(out["empirical"] - 0.5) <= 3 * out["std_error"]

    def test_zero_vector_rejected(self):
        with pytest.raises(DegenerateInput):
            probe_sign_flip(np.zeros(3), np.ones(3), 10, RngStream(3))

    def test_empirical_below_bound_small_r(self):
        rng = RngStream(4)
        x = rng.sphere_point(50, norm=10.0)
        y = x + rng.sphere_point(50, norm=0.5)
        out = probe_sign_flip(x, y, 100_000, rng)
        assert out["empirical"] <= out["bound"]


class TestDistEquiv:
    def test_linear_case_passes(self):
        out = probe_dist_equiv(Architecture(64, ()), 1000, master_seed=6)
        assert out["pass"]

    def test_two_layer_passes(self):
        out = probe_dist_equiv(Architecture(128, (128, 128)), 1000, master_seed=7)
        assert out["pass"]

    def test_mismatched_control_fails(self):
        out = probe_dist_equiv(Architecture(128, (128, 128)), 1000, master_seed=8,
                               control_p=0.9)
        assert not out["pass"]


class TestGaussianSpectral:
    def test_scalar_case(self):
        out = probe_gaussian_spectral(1, 1, 0.1, 100, master_seed=9)
        assert out["violations"] == 0  # bound >= 6, |N(0,1)| essentially never

    def test_stated_bound(self):
        out = probe_gaussian_spectral(200, 300, 0.01, 100, master_seed=10)
        assert out["violations"] <= 1

    def test_marchenko_pastur_edge(self):
        out = probe_gaussian_spectral(500, 500, 0.01, 30, master_seed=11)
        assert 0.9 <= out["mean_norm_over_edge"] <= 1.1
