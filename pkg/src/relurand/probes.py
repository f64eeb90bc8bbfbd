"""Monte Carlo probes of the concentration bounds behind the sign-flip
phenomenon.

Each probe measures an ensemble quantity and reports how often the
corresponding bound is violated, never a hard failure: the bounds are
probabilistic and the checks are statistical at stated levels.  Bounds
with explicit numerals (2^-(l+1), 3(sqrt m + sqrt n + ...),
3r/R sqrt(log R/r), 1 - 2 sqrt(2/pi) alpha) are tested at face value;
bounds with unnamed absolute constants get a fitted/parameterized
constant reported alongside.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateInput
from .linalg import gaussian_matrix, ks_critical_value, ks_two_sample, spectral_norm
from .network import (
    Architecture,
    ForwardTrace,
    InitMode,
    Network,
    TiePolicy,
    bottleneck_decomposition,
    build_network,
    forward,
    grad_difference_decomposition,
    gradient,
)
from .rng import RngStream

__all__ = [
    "ProbeReport",
    "probe_value_gradient",
    "probe_scale_preservation",
    "probe_activation_margin",
    "probe_gradient_smoothness",
    "probe_segment_spectral",
    "probe_sign_flip",
    "probe_dist_equiv",
    "probe_gaussian_spectral",
]


@dataclass
class ProbeReport:
    name: str
    params: dict
    measurements: dict            # column name -> list/array of per-trial values
    summary: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    violation_frequency: Optional[float] = None

    def quantiles(self, key: str) -> dict:
        v = np.asarray(self.measurements[key], dtype=np.float64)
        qs = np.quantile(v, [0.0, 0.01, 0.5, 0.99, 1.0])
        return {"min": qs[0], "p01": qs[1], "median": qs[2], "p99": qs[3], "max": qs[4]}


def _fixed_input(arch: Architecture, rng: RngStream) -> np.ndarray:
    return rng.sphere_point(arch.input_dim, norm=np.sqrt(arch.input_dim))


def probe_value_gradient(arch: Architecture, trials: int, delta: float,
                         master_seed: int, c: float = 8.0) -> ProbeReport:
    """|f(x)| and ||grad f(x)|| over independent nets at a fixed sphere input.

    Checks the lower bound ||grad|| >= 2^-(l+1) at its stated constant and
    |f| <= c 2^l sqrt(log 1/delta) with c a calibration parameter (the
    theory's c is an unnamed absolute constant; default 8).
    """
    ell = arch.ell
    x = _fixed_input(arch, RngStream(master_seed, 0))
    grad_bound = 2.0 ** (-(ell + 1))
    value_bound = c * 2.0 ** ell * np.sqrt(np.log(1.0 / delta))
    f_vals, g_norms, euler_err = [], [], []
    for k in range(trials):
        rng = RngStream(master_seed, k + 1)
        net = build_network(arch, InitMode.STANDARD, rng)
        trace = forward(net, x, TiePolicy.RANDOMIZED, rng)
        g = gradient(net, trace)
        f_vals.append(abs(trace.output))
        g_norms.append(float(np.linalg.norm(g)))
        euler_err.append(abs(trace.output - float(g @ x)))
    f_vals = np.array(f_vals)
    g_norms = np.array(g_norms)
    grad_ok = float(np.mean(g_norms >= grad_bound))
    value_ok = float(np.mean(f_vals <= value_bound))
    rep = ProbeReport(
        "value_gradient",
        {"arch": arch.dims, "trials": trials, "delta": delta, "c": c,
         "master_seed": master_seed},
        {"abs_f": f_vals, "grad_norm": g_norms, "euler_error": np.array(euler_err)},
        bounds={"grad_lower": grad_bound, "value_upper": value_bound},
    )
    rep.summary = {
        "grad_bound_freq": grad_ok,
        "value_bound_freq": value_ok,
        **{f"grad_norm_{k}": v for k, v in rep.quantiles("grad_norm").items()},
    }
    rep.violation_frequency = 1.0 - grad_ok
    return rep


def probe_scale_preservation(net: Network, x: np.ndarray, radius: float,
                             n_samples: int, rng: RngStream) -> ProbeReport:
    """Layer image norms vs the sqrt(d_i)/2^i lower bound, and how far the
    images of a ball around x spread, normalized by the ball radius."""
    trace = forward(net, x, TiePolicy.RANDOMIZED, rng)
    dims = net.arch.dims
    ell = net.arch.ell
    norms = np.array([np.linalg.norm(f) for f in trace.postactivations])
    bounds = np.array([np.sqrt(dims[i + 1]) / 2.0 ** (i + 1) for i in range(ell)])
    pre_spread = np.zeros((n_samples, ell))
    post_spread = np.zeros((n_samples, ell))
    for s in range(n_samples):
        y = rng.ball_point(x, radius)
        ty = forward(net, y, TiePolicy.RANDOMIZED, rng)
        for i in range(ell):
            pre_spread[s, i] = np.linalg.norm(trace.preactivations[i] - ty.preactivations[i])
            post_spread[s, i] = np.linalg.norm(trace.postactivations[i] - ty.postactivations[i])
    scale = radius if radius > 0 else 1.0
    rep = ProbeReport(
        "scale_preservation",
        {"arch": dims, "radius": radius, "n_samples": n_samples},
        {"layer_norms": norms,
         "pre_spread_over_radius": pre_spread / scale,
         "post_spread_over_radius": post_spread / scale},
        bounds={"norm_lower": bounds},
    )
    violations = int(np.sum(norms < bounds))
    rep.summary = {
        "norm_violations": violations,
        "max_pre_spread_over_radius": float(pre_spread.max() / scale) if n_samples else 0.0,
    }
    rep.violation_frequency = violations / ell
    return rep


def probe_activation_margin(net: Network, x: np.ndarray, alpha: float,
                            rng: RngStream, include_output: bool = False) -> ProbeReport:
    """Count of next-layer neurons with margin >= alpha ||f_i|| / sqrt(d_i),
    against the (1 - 2 sqrt(2/pi) alpha) d_{i+1} lower bound.

    The single-row output layer is excluded by default: with one neuron
    the bound degenerates to a per-neuron event of constant probability.
    """
    if not (0.0 < alpha < np.sqrt(np.pi / 8.0)):
        raise ValueError("alpha must lie in (0, sqrt(pi/8)) for a positive bound")
    trace = forward(net, x, TiePolicy.RANDOMIZED, rng)
    dims = net.arch.dims
    ell = net.arch.ell
    last = ell if include_output else ell - 1
    counts, bounds = [], []
    factor = 1.0 - 2.0 * np.sqrt(2.0 / np.pi) * alpha
    for i in range(1, last + 1):
        f_i = trace.postactivations[i - 1]
        norm_i = np.linalg.norm(f_i)
        if norm_i == 0.0:
            raise DegenerateInput(f"layer {i} image is the zero vector")
        thresh = alpha * norm_i / np.sqrt(dims[i])
        inner = net.weights[i] @ f_i
        counts.append(int(np.sum(np.abs(inner) >= thresh)))
        bounds.append(factor * dims[i + 1])
    counts = np.array(counts, dtype=np.float64)
    bounds = np.array(bounds)
    violations = int(np.sum(counts < bounds))
    rep = ProbeReport(
        "activation_margin",
        {"arch": dims, "alpha": alpha, "include_output": include_output},
        {"counts": counts},
        bounds={"count_lower": bounds},
    )
    rep.summary = {"layers": len(counts), "violations": violations}
    rep.violation_frequency = violations / max(len(counts), 1)
    return rep


def probe_gradient_smoothness(net: Network, x: np.ndarray, radius: float,
                              n_samples: int, rng: RngStream) -> ProbeReport:
    """Gradient drift over a ball: ||grad(x) - grad(y)||, the per-layer
    decomposition term norms, mask flip counts, and the drift ratio
    relative to ||grad(x)||."""
    trace = forward(net, x, TiePolicy.RANDOMIZED, rng)
    g_x = gradient(net, trace)
    g_norm = float(np.linalg.norm(g_x))
    ell = net.arch.ell
    drifts = np.zeros(n_samples)
    term_norms = np.zeros((n_samples, ell))
    flip_counts = np.zeros((n_samples, ell), dtype=np.int64)
    for s in range(n_samples):
        y = rng.ball_point(x, radius)
        ty = forward(net, y, TiePolicy.RANDOMIZED, rng)
        dec = grad_difference_decomposition(net, trace, ty)
        drifts[s] = np.linalg.norm(dec.grad_x - dec.grad_y)
        for j in range(ell):
            term_norms[s, j] = np.linalg.norm(dec.terms[j])
            flip_counts[s, j] = int(np.sum(np.abs(trace.masks[j] - ty.masks[j])))
    rep = ProbeReport(
        "gradient_smoothness",
        {"arch": net.arch.dims, "radius": radius, "n_samples": n_samples},
        {"grad_drift": drifts, "term_norms": term_norms, "mask_flips": flip_counts},
    )
    max_drift = float(drifts.max()) if n_samples else 0.0
    rep.summary = {
        "grad_norm_x": g_norm,
        "max_drift": max_drift,
        "max_drift_ratio": max_drift / g_norm if g_norm > 0 else np.inf,
    }
    rep.violation_frequency = 0.0
    return rep


def _masked_segment(net: Network, trace: ForwardTrace, top: int, bottom: int) -> np.ndarray:
    """Matrix D_top W_top ... D_{bottom+1} W_{bottom+1} with masks from trace."""
    P = trace.masks[bottom][:, None] * net.weights[bottom]
    for k in range(bottom + 1, top):
        P = trace.masks[k][:, None] * (net.weights[k] @ P)
    return P


def probe_segment_spectral(net: Network, x: np.ndarray, radius: float,
                           n_samples: int, rng: RngStream, c_ref: float = 8.0) -> ProbeReport:
    """Spectral norms of masked products between consecutive bottlenecks for
    sampled y in the ball, against (c l log d_max)^{(i_j - i_{j+1})/2}."""
    dec = bottleneck_decomposition(net.arch)
    if len(dec.indices) < 2:
        raise ValueError("need at least two bottleneck indices (m >= 2)")
    ell = net.arch.ell
    pairs = list(zip(dec.indices[:-1], dec.indices[1:]))
    growth = c_ref * ell * np.log(net.arch.d_max)
    bounds = np.array([growth ** ((hi - lo) / 2.0) for hi, lo in pairs])
    norms = np.zeros((n_samples, len(pairs)))
    for s in range(n_samples):
        y = rng.ball_point(x, radius)
        ty = forward(net, y, TiePolicy.RANDOMIZED, rng)
        for p, (hi, lo) in enumerate(pairs):
            M = _masked_segment(net, ty, hi, lo)
            norms[s, p] = spectral_norm(M, tol=1e-8, max_iters=10_000)
    violations = int(np.sum(norms > bounds))
    rep = ProbeReport(
        "segment_spectral",
        {"arch": net.arch.dims, "radius": radius, "n_samples": n_samples,
         "bottlenecks": dec.indices, "c_ref": c_ref},
        {"segment_norms": norms},
        bounds={"segment_upper": bounds},
    )
    # fitted constant: smallest c making every observed norm satisfy the bound
    with np.errstate(divide="ignore"):
        exps = np.array([(hi - lo) / 2.0 for hi, lo in pairs])
        c_fit = float(np.max(norms ** (1.0 / exps) / (ell * np.log(net.arch.d_max))))
    rep.summary = {"violations": violations, "fitted_c": c_fit}
    rep.violation_frequency = violations / norms.size
    return rep


def probe_sign_flip(x: np.ndarray, y: np.ndarray, n_draws: int, rng: RngStream) -> dict:
    """Probability that a random gaussian hyperplane separates x and y.

    empirical over n_draws gaussian normals; bound 3r/R sqrt(log R/r) with
    R = ||x||, r = ||x - y|| (absent when r > R or r = 0); oracle is the
    exact angle/pi by rotational symmetry.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    R = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if R == 0.0 or ny == 0.0:
        raise DegenerateInput("x and y must be nonzero")
    r = float(np.linalg.norm(x - y))
    d = x.shape[0]
    W = rng.normal((n_draws, d))
    empirical = float(np.mean(np.sign(W @ x) != np.sign(W @ y)))
    if 0.0 < r < R:
        bound = float(3.0 * (r / R) * np.sqrt(np.log(R / r)))
    else:
        bound = None  # formula degenerate at r >= R
    if r == 0.0:
        oracle = 0.0
    else:
        cos_theta = np.clip(float(x @ y) / (R * ny), -1.0, 1.0)
        oracle = float(np.arccos(cos_theta) / np.pi)
    std_err = float(np.sqrt(max(oracle * (1.0 - oracle), 1.0 / n_draws) / n_draws))
    return {"empirical": empirical, "bound": bound, "oracle": oracle,
            "std_error": std_err, "n_draws": n_draws}


def _bernoulli_product_norm(arch: Architecture, p: float, rng: RngStream) -> float:
    """||W_{l+1} prod D_i W_i|| with iid Bernoulli(p) diagonal masks."""
    net = build_network(arch, InitMode.STANDARD, rng)
    v = net.weights[-1][0].copy()
    for W in net.weights[-2::-1]:
        mask = rng.bernoulli(p, W.shape[0]).astype(np.float64)
        v = (v * mask) @ W
    return float(np.linalg.norm(v))


def probe_dist_equiv(arch: Architecture, trials: int, master_seed: int,
                     level: float = 0.01, control_p: Optional[float] = None) -> dict:
    """KS two-sample test of the mask-randomization distributional identity.

    Sample A: gradient norms of standard nets with data-dependent masks at
    a fixed sphere input.  Sample B: norms of the same weight products
    with iid Bernoulli(1/2) masks.  The identity predicts equality in
    distribution; control_p substitutes a different mask probability to
    demonstrate the test's power.
    """
    x = _fixed_input(arch, RngStream(master_seed, 0))
    p = 0.5 if control_p is None else control_p
    a, b = [], []
    for k in range(trials):
        rng_a = RngStream(master_seed, 2 * k + 1)
        net = build_network(arch, InitMode.STANDARD, rng_a)
        trace = forward(net, x, TiePolicy.RANDOMIZED, rng_a)
        a.append(float(np.linalg.norm(gradient(net, trace))))
        rng_b = RngStream(master_seed, 2 * k + 2)
        b.append(_bernoulli_product_norm(arch, p, rng_b))
    stat = ks_two_sample(a, b)
    threshold = ks_critical_value(trials, trials, level)
    return {"ks_statistic": stat, "threshold": threshold, "pass": stat <= threshold,
            "mask_p": p, "trials": trials}


def probe_gaussian_spectral(m: int, n: int, delta: float, samples: int,
                            master_seed: int) -> dict:
    """Violation count of ||A|| <= 3(sqrt m + sqrt n + sqrt(log 1/delta))
    for iid standard gaussian matrices."""
    bound = 3.0 * (np.sqrt(m) + np.sqrt(n) + np.sqrt(np.log(1.0 / delta)))
    norms = np.zeros(samples)
    for k in range(samples):
        rng = RngStream(master_seed, k)
        A = gaussian_matrix(m, n, 1.0, rng)
        norms[k] = spectral_norm(A, tol=1e-8, max_iters=10_000)
    violations = int(np.sum(norms > bound))
    return {"violations": violations, "bound": float(bound), "samples": samples,
            "mean_norm": float(norms.mean()),
            "mean_norm_over_edge": float(norms.mean() / (np.sqrt(m) + np.sqrt(n)))}
