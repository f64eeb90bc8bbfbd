"""Depth collapse: arc-cosine kernel dynamics and deep-network simulation.

One random ReLU layer maps the normalized expected inner product of two
inputs by rho' = sin(theta)/pi + (1 - theta/pi) cos(theta).  Iterating
drives any pair's correlation monotonically up to 1, so a very deep
2/fan-in network sends all sphere inputs to nearly the same output.

The quantitative collapse regime needs depths >= d^3 and widths
>= (l d)^20, far beyond anything runnable; this module verifies the
mechanism at feasible scale (kernel tracking, monotone correlation
convergence, norm preservation, and the constancy trend with depth) and
makes no claim about a C sqrt(log d / d) constancy rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .rng import RngStream

__all__ = [
    "kernel_map",
    "kernel_mc_estimate",
    "kernel_iterate",
    "KernelTrace",
    "sin_cos_gap",
    "collapse_simulate",
    "CollapseReport",
]


def kernel_map(theta: float) -> float:
    """One-layer update of the normalized expected inner product."""
    if not (0.0 <= theta <= np.pi):
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    return float(np.sin(theta) / np.pi + (1.0 - theta / np.pi) * np.cos(theta))


def kernel_mc_estimate(theta: float, n_draws: int, rng: RngStream) -> dict:
    """Monte Carlo cross-check of kernel_map via its defining 2-d expectation.

    Draws g ~ N(0, I_2) against x = (1,0), y = (cos theta, sin theta);
    the denominator E relu(g.x)^2 = ||x||^2 / 2 is used exactly, so the
    reported std_error is the numerator's standard error on the estimate
    scale and "within 3 std errors of kernel_map" is directly testable.
    """
    if not (0.0 <= theta <= np.pi):
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    g = rng.normal((n_draws, 2))
    px = np.maximum(g[:, 0], 0.0)
    py = np.maximum(g[:, 0] * np.cos(theta) + g[:, 1] * np.sin(theta), 0.0)
    prod = px * py
    denom = 0.5  # exact E relu(g.x)^2 for unit x
    estimate = float(prod.mean() / denom)
    std_error = float(prod.std(ddof=1) / np.sqrt(n_draws) / denom)
    return {"estimate": estimate, "std_error": std_error, "n_draws": n_draws}


@dataclass(frozen=True)
class KernelTrace:
    theta_0: float
    thetas: np.ndarray  # theta_1..theta_steps
    rhos: np.ndarray    # rho_1..rho_steps, rho_t = cos(theta_t)


def kernel_iterate(theta_0: float, steps: int) -> KernelTrace:
    """Iterate the kernel map: rho_{t+1} = kernel_map(theta_t)."""
    if not (0.0 <= theta_0 <= np.pi):
        raise DomainError(f"theta_0 must lie in [0, pi], got {theta_0}")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    thetas = np.zeros(steps)
    rhos = np.zeros(steps)
    theta = theta_0
    for t in range(steps):
        rho = kernel_map(theta)
        theta = float(np.arccos(np.clip(rho, -1.0, 1.0)))
        thetas[t] = theta
        rhos[t] = rho
    return KernelTrace(theta_0, thetas, rhos)


def sin_cos_gap(n_grid: int) -> dict:
    """Minimum of sin(x) - x cos(x) - (1 - cos x)^{3/2}/15 on a grid of [0, pi]."""
    if n_grid < 100:
        raise ValueError("n_grid must be >= 100")
    x = np.linspace(0.0, np.pi, n_grid)
    margin = np.sin(x) - x * np.cos(x) - (1.0 - np.cos(x)) ** 1.5 / 15.0
    i = int(np.argmin(margin))
    return {"min_margin": float(margin[i]), "argmin": float(x[i])}


@dataclass(frozen=True)
class CollapseReport:
    d: int
    width: int
    depth: int
    n_pairs: int
    initial_angles: np.ndarray       # per pair
    layer_cosines: np.ndarray        # n_pairs x depth
    layer_norms: np.ndarray          # (2 n_pairs) x depth, images of every input
    norm_ratios: np.ndarray          # (2 n_pairs) x depth, length-preservation per layer
    kernel_track: np.ndarray         # n_pairs x depth, kernel_iterate prediction
    checkpoint_depths: tuple[int, ...]
    constancy_ratios: np.ndarray     # n_pairs x len(checkpoint_depths)
    small_output_flags: np.ndarray   # |f(x)| < 1e-6 at each checkpoint


def collapse_simulate(d: int, width: int, depth: int, n_pairs: int,
                      master_seed: int, checkpoint_depths=None,
                      pairs=None) -> CollapseReport:
    """Propagate input pairs through a deep 2/fan-in network, layer by layer.

    Weights are generated per layer from a derived stream and discarded,
    so depth 200 at width 2000 stays within memory.  At each checkpoint
    depth the same sampled output vector (variance 2/width) is applied to
    the current images, giving the output constancy ratio a depth-t
    network would produce.

    pairs overrides the uniform-sphere sampling with explicit (x, y)
    pairs; used by tests to force degenerate geometry.
    """
    if d < 2 or width < 8 or depth < 1 or n_pairs < 1:
        raise ValueError("require d >= 2, width >= 8, depth >= 1, n_pairs >= 1")
    if checkpoint_depths is None:
        checkpoint_depths = (min(5, depth), depth)
    checkpoint_depths = tuple(sorted(set(int(t) for t in checkpoint_depths)))
    if any(t < 1 or t > depth for t in checkpoint_depths):
        raise ValueError("checkpoint depths must lie in [1, depth]")

    pair_rng = RngStream(master_seed, 0)
    if pairs is None:
        pairs = [(pair_rng.sphere_point(d), pair_rng.sphere_point(d))
                 for _ in range(n_pairs)]
    else:
        pairs = [(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
                 for a, b in pairs]
        n_pairs = len(pairs)

    # columns: x_1, y_1, x_2, y_2, ...
    X = np.stack([v for p in pairs for v in p], axis=1)
    angles = np.zeros(n_pairs)
    for p, (a, b) in enumerate(pairs):
        c = np.clip(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)), -1.0, 1.0)
        angles[p] = np.arccos(c)

    w_out = np.sqrt(2.0 / width) * RngStream(master_seed, 1).normal(width)

    layer_cos = np.zeros((n_pairs, depth))
    layer_norms = np.zeros((2 * n_pairs, depth))
    norm_ratios = np.zeros((2 * n_pairs, depth))
    constancy = np.zeros((n_pairs, len(checkpoint_depths)))
    small_flags = np.zeros((n_pairs, len(checkpoint_depths)), dtype=bool)

    cur = X
    fan_in = d
    prev_norms = np.linalg.norm(X, axis=0)
    for t in range(1, depth + 1):
        rng = RngStream(master_seed, t + 1)
        W = np.sqrt(2.0 / fan_in) * rng.normal((width, fan_in))
        cur = np.maximum(W @ cur, 0.0)
        norms = np.linalg.norm(cur, axis=0)
        layer_norms[:, t - 1] = norms
        # the 2/fan-in scaling gives E ||f_t||^2 = (width/fan_in) ||f_{t-1}||^2;
        # ratio 1 means the layer preserved length at its expected scale
        expected = np.sqrt(width / fan_in) * prev_norms
        norm_ratios[:, t - 1] = np.divide(norms, expected,
                                          out=np.zeros_like(norms),
                                          where=expected > 0)
        prev_norms = norms
        fan_in = width
        for p in range(n_pairs):
            nx, ny = norms[2 * p], norms[2 * p + 1]
            if nx == 0.0 or ny == 0.0:
                layer_cos[p, t - 1] = np.nan
            else:
                layer_cos[p, t - 1] = cur[:, 2 * p] @ cur[:, 2 * p + 1] / (nx * ny)
        if t in checkpoint_depths:
            j = checkpoint_depths.index(t)
            out = w_out @ cur
            for p in range(n_pairs):
                fx, fy = out[2 * p], out[2 * p + 1]
                constancy[p, j] = abs(fx - fy) / (abs(fx) + 1e-12)
                small_flags[p, j] = abs(fx) < 1e-6

    kernel_track = np.zeros((n_pairs, depth))
    for p in range(n_pairs):
        kernel_track[p] = kernel_iterate(angles[p], depth).rhos

    return CollapseReport(d, width, depth, n_pairs, angles, layer_cos,
                          layer_norms, norm_ratios, kernel_track,
                          checkpoint_depths, constancy, small_flags)
