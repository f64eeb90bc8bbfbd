import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relurand.errors import DomainError, FormatError
from relurand.network import (
    Architecture,
    InitMode,
    TiePolicy,
    bottleneck_decomposition,
    build_network,
    forward,
    grad_difference_decomposition,
    gradient,
    load_network,
    network_from_weights,
    paper_radius,
    save_network,
)
from relurand.rng import RngStream


def random_net(seed, d=20, widths=(16, 12)):
    rng = RngStream(seed)
    return build_network(Architecture(d, widths), InitMode.STANDARD, rng), rng


class TestBuild:
    def test_shapes_and_std(self):
        net, _ = random_net(0, d=3, widths=(2,))
        assert net.weights[0].shape == (2, 3)
        assert net.weights[1].shape == (1, 2)

    def test_frobenius_concentration(self):
        # E ||W_1||_F^2 = d_1 d_0 / d_0 = d_1
        for seed in range(5):
            net, _ = random_net(seed, d=100, widths=(100,))
            assert 0.8 <= np.sum(net.weights[0] ** 2) / 100 <= 1.2

    def test_depth_collapse_variance(self):
        # entry variance 2/fan-in at every layer
        sums = np.zeros(2)
        for seed in range(40):
            rng = RngStream(seed)
            net = build_network(Architecture(5, (7,)), InitMode.DEPTH_COLLAPSE, rng)
            sums += [net.weights[0].var(), net.weights[1].var()]
        assert sums[0] / 40 == pytest.approx(2 / 5, rel=0.2)
        assert sums[1] / 40 == pytest.approx(2 / 7, rel=0.4)


class TestForward:
    def test_hand_relu(self):
        net = network_from_weights([[[1.0]], [[1.0]]])
        assert forward(net, np.array([2.0])).output == 2.0
        assert forward(net, np.array([-2.0])).output == 0.0

    def test_positive_homogeneity(self):
        net, rng = random_net(1)
        x = rng.normal(20)
        t1 = forward(net, x, TiePolicy.RANDOMIZED, rng)
        t2 = forward(net, 3.7 * x, TiePolicy.RANDOMIZED, rng)
        assert t2.output == pytest.approx(3.7 * t1.output, rel=1e-12)
        for m1, m2 in zip(t1.masks, t2.masks):
            assert np.array_equal(m1, m2)

    def test_randomized_tie_is_fair(self):
        net = network_from_weights([[[1.0]], [[1.0]]])
        x = np.array([0.0])
        ones = sum(
            forward(net, x, TiePolicy.RANDOMIZED, RngStream(99, k)).masks[0][0]
            for k in range(10_000)
        )
        assert 4700 <= ones <= 5300  # Bernoulli(1/2), 10^4 draws

    def test_tie_policies(self):
        net = network_from_weights([[[1.0]], [[1.0]]])
        x = np.array([0.0])
        assert forward(net, x, TiePolicy.TIES_TO_ONE).masks[0][0] == 1.0
        assert forward(net, x, TiePolicy.TIES_TO_ZERO).masks[0][0] == 0.0

    def test_determinism(self):
        net, _ = random_net(2)
        x = RngStream(5).normal(20)
        a = forward(net, x, TiePolicy.RANDOMIZED, RngStream(6))
        b = forward(net, x, TiePolicy.RANDOMIZED, RngStream(6))
        assert a.output == b.output
        assert all(np.array_equal(m, n) for m, n in zip(a.masks, b.masks))

    def test_mask_invariants(self):
        net, rng = random_net(3)
        t = forward(net, rng.normal(20), TiePolicy.RANDOMIZED, rng)
        for pre, mask, post in zip(t.preactivations, t.masks, t.postactivations):
            assert np.array_equal(mask == 1.0, pre > 0.0)  # no exact ties hit
            assert np.array_equal(post, mask * pre)


class TestGradient:
    def test_linear_net(self):
        w = np.array([[1.0, -2.0, 0.5]])
        net = network_from_weights([w])
        x = np.array([1.0, 1.0, 1.0])
        t = forward(net, x)
        assert np.array_equal(gradient(net, t), w[0])

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_euler_identity(self, seed):
        net, rng = random_net(seed)
        x = rng.normal(20)
        t = forward(net, x, TiePolicy.RANDOMIZED, rng)
        g = gradient(net, t)
        assert abs(t.output - g @ x) <= 1e-10 * (abs(t.output) + 1e-30)

    def test_finite_differences_with_mask_guard(self):
        net, rng = random_net(7, d=50, widths=(40, 40))
        x = rng.sphere_point(50, norm=np.sqrt(50))
        t = forward(net, x, TiePolicy.RANDOMIZED, rng)
        g = gradient(net, t)
        h = 1e-5 * np.linalg.norm(x)
        checked = 0
        for k in range(100):
            u = rng.sphere_point(50)
            tp = forward(net, x + h * u, TiePolicy.RANDOMIZED, rng)
            tm = forward(net, x - h * u, TiePolicy.RANDOMIZED, rng)
            same = all(np.array_equal(a, b) and np.array_equal(a, c)
                       for a, b, c in zip(t.masks, tp.masks, tm.masks))
            if not same:
                continue
            checked += 1
            fd = (tp.output - tm.output) / (2 * h)
            assert fd == pytest.approx(g @ u, rel=1e-5, abs=1e-12)
        assert checked > 50


class TestGradDecomposition:
    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_sum_is_gradient_difference(self, seed):
        net, rng = random_net(seed, d=24, widths=(20, 16, 12))
        x = rng.normal(24)
        y = x + 0.5 * rng.normal(24)
        tx = forward(net, x, TiePolicy.RANDOMIZED, rng)
        ty = forward(net, y, TiePolicy.RANDOMIZED, rng)
        dec = grad_difference_decomposition(net, tx, ty)
        lhs = sum(dec.terms)
        rhs = dec.grad_x - dec.grad_y
        tol = 1e-10 * (np.linalg.norm(dec.grad_x) + np.linalg.norm(dec.grad_y) + 1e-30)
        assert np.linalg.norm(lhs - rhs) <= tol

    def test_identical_traces_give_zero(self):
        net, rng = random_net(11)
        t = forward(net, rng.normal(20), TiePolicy.RANDOMIZED, rng)
        dec = grad_difference_decomposition(net, t, t)
        assert all(np.all(term == 0.0) for term in dec.terms)

    def test_agreeing_layer_mask_gives_exact_zero(self):
        net, rng = random_net(12)
        x = rng.normal(20)
        tx = forward(net, x, TiePolicy.RANDOMIZED, rng)
        ty = forward(net, x * 2.0, TiePolicy.RANDOMIZED, rng)  # same masks by homogeneity
        dec = grad_difference_decomposition(net, tx, ty)
        for j, term in enumerate(dec.terms):
            if np.array_equal(tx.masks[j], ty.masks[j]):
                assert np.all(term == 0.0)


class TestBottleneck:
    def test_examples(self):
        dec = bottleneck_decomposition(Architecture(10, (5, 3, 7)))
        assert dec.indices == (2, 1, 0)
        assert dec.widths == (3, 5, 10)
        assert bottleneck_decomposition(Architecture(4, (8, 16))).indices == (0,)
        assert bottleneck_decomposition(Architecture(10, (8, 6, 4))).indices == (3, 2, 1, 0)

    @given(st.lists(st.integers(1, 50), min_size=0, max_size=8), st.integers(1, 50))
    @settings(max_examples=100, deadline=None)
    def test_invariants(self, widths, d):
        arch = Architecture(d, tuple(widths))
        dec = bottleneck_decomposition(arch)
        all_w = (d, *widths)
        assert dec.indices[-1] == 0
        ws = dec.widths
        assert all(ws[j] < ws[j + 1] for j in range(len(ws) - 1))
        for j in range(len(dec.indices) - 1):
            hi, lo = dec.indices[j], dec.indices[j + 1]
            assert all(all_w[k] >= all_w[lo] for k in range(lo, hi))


class TestPaperRadius:
    def test_large_formula_value(self):
        # d_min = d_max = 10^6, l = 2: R = 1000 / (2 ln 10^6)^160
        arch = Architecture(10 ** 6, (10 ** 6, 10 ** 6))
        expected = np.exp(np.log(1000.0) - 160 * np.log(2 * np.log(10 ** 6)))
        assert paper_radius(arch) == pytest.approx(expected, rel=1e-10)

    def test_monotone_in_d_min(self):
        r1 = paper_radius(Architecture(100, (500,)))
        r2 = paper_radius(Architecture(200, (500,)))
        assert r2 > r1

    def test_domain_error(self):
        with pytest.raises(DomainError):
            paper_radius(Architecture(2, (2,)))  # ln 2 < 1
        with pytest.raises(DomainError):
            paper_radius(Architecture(5, ()))


class TestSerialization:
    def test_round_trip(self, tmp_path):
        net, _ = random_net(31, d=9, widths=(6, 4))
        path = tmp_path / "net.rrnn"
        save_network(net, path)
        loaded = load_network(path)
        assert loaded.arch == net.arch
        assert loaded.mode == net.mode
        assert loaded.master_seed == net.master_seed
        for a, b in zip(net.weights, loaded.weights):
            assert np.array_equal(a, b)

    def test_truncated_file(self, tmp_path):
        net, _ = random_net(32)
        path = tmp_path / "net.rrnn"
        save_network(net, path)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) // 2])
        with pytest.raises(FormatError):
            load_network(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "net.rrnn"
        path.write_bytes(b"NOPE" + bytes(64))
        with pytest.raises(FormatError, match="magic"):
            load_network(path)

    def test_bad_version(self, tmp_path):
        net, _ = random_net(33)
        path = tmp_path / "net.rrnn"
        save_network(net, path)
        data = bytearray(path.read_bytes())
        data[4] = 99
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError, match="99"):
            load_network(path)
