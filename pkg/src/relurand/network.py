"""Random ReLU networks: construction, evaluation, gradients, decompositions.

A network is f(x) = W_{l+1} relu(W_l relu(... relu(W_1 x))), no biases,
scalar output.  Standard initialization draws layer i entries from
N(0, 1/d_{i-1}); depth-collapse initialization uses variance 2/fan-in at
every layer.  Exactly-zero preactivations are resolved by a tie policy;
the default randomizes the activation bit with probability 1/2.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DomainError, FormatError
from .linalg import gaussian_matrix
from .rng import RngStream

__all__ = [
    "Architecture",
    "InitMode",
    "TiePolicy",
    "Network",
    "ForwardTrace",
    "GradDecomposition",
    "BottleneckDecomposition",
    "build_network",
    "network_from_weights",
    "forward",
    "gradient",
    "grad_difference_decomposition",
    "bottleneck_decomposition",
    "paper_radius",
    "save_network",
    "load_network",
]


class InitMode(Enum):
    STANDARD = 0        # layer i entries ~ N(0, 1/d_{i-1})
    DEPTH_COLLAPSE = 1  # layer entries ~ N(0, 2/fan_in), all layers


class TiePolicy(Enum):
    RANDOMIZED = 0   # zero preactivation active with probability 1/2
    TIES_TO_ONE = 1
    TIES_TO_ZERO = 2


@dataclass(frozen=True)
class Architecture:
    """Shape of a network: d_0 = input_dim, hidden widths d_1..d_l, output 1."""

    input_dim: int
    hidden_widths: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim < 1 or any(w < 1 for w in self.hidden_widths):
            raise ValueError("all dimensions must be >= 1")

    @property
    def ell(self) -> int:
        return len(self.hidden_widths)

    @property
    def dims(self) -> tuple[int, ...]:
        """(d_0, d_1, ..., d_l, 1)."""
        return (self.input_dim, *self.hidden_widths, 1)

    @property
    def d_min(self) -> int:
        return min(self.input_dim, *self.hidden_widths) if self.hidden_widths else self.input_dim

    @property
    def d_max(self) -> int:
        return max(self.input_dim, *self.hidden_widths) if self.hidden_widths else self.input_dim


@dataclass(frozen=True)
class Network:
    arch: Architecture
    mode: InitMode
    weights: tuple[np.ndarray, ...]  # W_1..W_{l+1}, weights[i]: d_{i+1} x d_i
    master_seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        dims = self.arch.dims
        for i, W in enumerate(self.weights):
            if W.shape != (dims[i + 1], dims[i]):
                raise ValueError(
                    f"weight {i + 1} has shape {W.shape}, expected {(dims[i + 1], dims[i])}"
                )


@dataclass(frozen=True)
class ForwardTrace:
    """Everything forward() computes for one input."""

    x: np.ndarray
    preactivations: tuple[np.ndarray, ...]   # ft_1..ft_l
    masks: tuple[np.ndarray, ...]            # 0/1 float vectors D_1..D_l
    postactivations: tuple[np.ndarray, ...]  # f_1..f_l
    output: float


@dataclass(frozen=True)
class GradDecomposition:
    """The l per-layer terms whose sum is exactly grad(x) - grad(y)."""

    terms: tuple[np.ndarray, ...]
    grad_x: np.ndarray
    grad_y: np.ndarray


@dataclass(frozen=True)
class BottleneckDecomposition:
    """Recursive argmin-width indices i_1 > ... > i_m = 0 (d_0 included)."""

    indices: tuple[int, ...]
    widths: tuple[int, ...]


def _layer_stds(arch: Architecture, mode: InitMode) -> list[float]:
    dims = arch.dims
    if mode is InitMode.STANDARD:
        return [1.0 / np.sqrt(dims[i]) for i in range(arch.ell + 1)]
    return [np.sqrt(2.0 / dims[i]) for i in range(arch.ell + 1)]


def build_network(arch: Architecture, mode: InitMode, rng: RngStream) -> Network:
    """Sample all weight matrices for the given mode from rng."""
    dims = arch.dims
    stds = _layer_stds(arch, mode)
    weights = tuple(
        gaussian_matrix(dims[i + 1], dims[i], stds[i], rng)
        for i in range(arch.ell + 1)
    )
    return Network(arch, mode, weights, rng.master_seed, rng.stream_id)


def network_from_weights(weights, mode: InitMode = InitMode.STANDARD) -> Network:
    """Test-oriented constructor from explicit weight matrices."""
    weights = tuple(np.atleast_2d(np.asarray(W, dtype=np.float64)) for W in weights)
    input_dim = weights[0].shape[1]
    hidden = tuple(W.shape[0] for W in weights[:-1])
    if weights[-1].shape[0] != 1:
        raise ValueError("output layer must have a single row")
    return Network(Architecture(input_dim, hidden), mode, weights)


def forward(
    net: Network,
    x: np.ndarray,
    policy: TiePolicy = TiePolicy.RANDOMIZED,
    rng: Optional[RngStream] = None,
) -> ForwardTrace:
    """Evaluate the network, recording preactivations and activation masks.

    rng is consumed only when a preactivation is exactly 0.0 under the
    randomized tie policy.  Zero detection is exact equality: an epsilon
    band would break positive homogeneity and the Euler identity.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.arch.input_dim,):
        raise ValueError(f"input has shape {x.shape}, expected ({net.arch.input_dim},)")
    pres, masks, posts = [], [], []
    cur = x
    for W in net.weights[:-1]:
        pre = W @ cur
        mask = (pre > 0.0).astype(np.float64)
        zeros = pre == 0.0
        if zeros.any():
            if policy is TiePolicy.RANDOMIZED:
                if rng is None:
                    raise ValueError("randomized tie policy hit a zero preactivation without an rng")
                mask[zeros] = rng.bernoulli(0.5, int(zeros.sum())).astype(np.float64)
            elif policy is TiePolicy.TIES_TO_ONE:
                mask[zeros] = 1.0
        cur = mask * pre
        pres.append(pre)
        masks.append(mask)
        posts.append(cur)
    out = float(net.weights[-1][0] @ cur)
    return ForwardTrace(x, tuple(pres), tuple(masks), tuple(posts), out)


def gradient(net: Network, trace: ForwardTrace) -> np.ndarray:
    """grad f(x) = W_{l+1} D_l W_l ... D_1 W_1 as a vector of dimension d.

    Masks come from the trace, so function value and gradient stay
    consistent even at tie points.
    """
    v = net.weights[-1][0].copy()
    for W, mask in zip(net.weights[-2::-1], trace.masks[::-1]):
        v = (v * mask) @ W
    return v


def grad_difference_decomposition(
    net: Network, trace_x: ForwardTrace, trace_y: ForwardTrace
) -> GradDecomposition:
    """Exact layerwise decomposition of grad(x) - grad(y).

    Term j is W_{l+1} (prod_{i=l..j+1} D_i(x) W_i) (D_j(x) - D_j(y)) W_j
    (prod_{i=j-1..1} D_i(y) W_i); the terms sum to the gradient
    difference up to float roundoff.
    """
    ell = net.arch.ell
    # suffix[j] = W_{l+1} prod_{i=l..j+1} D_i(x) W_i, a row of dim d_j
    suffix = [None] * (ell + 1)
    v = net.weights[-1][0].copy()
    suffix[ell] = v
    for j in range(ell, 0, -1):
        v = (v * trace_x.masks[j - 1]) @ net.weights[j - 1]
        suffix[j - 1] = v
    terms = []
    for j in range(1, ell + 1):
        t = (suffix[j] * (trace_x.masks[j - 1] - trace_y.masks[j - 1])) @ net.weights[j - 1]
        for i in range(j - 1, 0, -1):
            t = (t * trace_y.masks[i - 1]) @ net.weights[i - 1]
        terms.append(t)
    return GradDecomposition(tuple(terms), gradient(net, trace_x), gradient(net, trace_y))


def bottleneck_decomposition(arch: Architecture) -> BottleneckDecomposition:
    """Recursive bottleneck indices, ending at the input layer (index 0).

    i_1 minimizes width over indices 0..l, and each subsequent index
    minimizes over indices strictly below the previous one.  Argmin ties
    break to the smallest index, which is the only rule under which the
    widths are strictly increasing along the sequence.
    """
    widths = np.array((arch.input_dim, *arch.hidden_widths))
    indices = []
    hi = len(widths)
    while hi > 0:
        i = int(np.argmin(widths[:hi]))
        indices.append(i)
        hi = i
    return BottleneckDecomposition(tuple(indices), tuple(int(widths[i]) for i in indices))


def paper_radius(arch: Architecture) -> float:
    """Reference perturbation radius sqrt(d_min)/(l ln d_max)^{80 l}.

    Astronomically small at desk scale; probes take a user radius and
    report this value for context only.
    """
    ell = arch.ell
    if ell < 1:
        raise DomainError("radius requires at least one hidden layer")
    base = ell * np.log(arch.d_max)
    if base <= 1.0:
        raise DomainError(f"l*ln(d_max) = {base} <= 1; radius formula is meaningless")
    # log space: the denominator overflows float64 long before the ratio does
    return float(np.exp(0.5 * np.log(arch.d_min) - 80 * ell * np.log(base)))


_MAGIC = b"RRNN"
_VERSION = 1


def save_network(net: Network, path, tie_policy: TiePolicy = TiePolicy.RANDOMIZED) -> None:
    """Binary format: magic 'RRNN', u32 LE version, mode byte, tie-policy
    byte, l+2 dims as u32 LE, each W_i row-major f64 LE, 8-byte master seed."""
    dims = net.arch.dims
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(bytes([net.mode.value, tie_policy.value]))
        fh.write(struct.pack(f"<{len(dims)}I", *dims))
        for W in net.weights:
            fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
        fh.write(struct.pack("<Q", net.master_seed % (1 << 64)))


def load_network(path) -> Network:
    with open(path, "rb") as fh:
        data = fh.read()

    def take(n: int, what: str) -> bytes:
        nonlocal off
        if off + n > len(data):
            raise FormatError(f"truncated file while reading {what}")
        chunk = data[off:off + n]
        off += n
        return chunk

    off = 0
    if take(4, "magic") != _MAGIC:
        raise FormatError("bad magic bytes; not a network file")
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != _VERSION:
        raise FormatError(f"unsupported format version {version} (supported: {_VERSION})")
    mode_byte, policy_byte = take(2, "mode/policy bytes")
    try:
        mode = InitMode(mode_byte)
        TiePolicy(policy_byte)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    # dims: we do not know l yet; it is recoverable because the final dim is 1
    # and every other dim is >= 1, so read until the trailing weight payload fits.
    # The format stores exactly l+2 dims; recover l from the remaining length.
    remaining = len(data) - off - 8  # minus trailing seed
    # Try increasing l until dims + weights account for the payload.
    ell = None
    for cand in range(0, 10_000):
        ndims = cand + 2
        if off + 4 * ndims > len(data) - 8:
            break
        dims = struct.unpack(f"<{ndims}I", data[off:off + 4 * ndims])
        wbytes = 8 * sum(dims[i + 1] * dims[i] for i in range(ndims - 1))
        if 4 * ndims + wbytes == remaining and dims[-1] == 1 and all(d >= 1 for d in dims):
            ell = cand
            break
    if ell is None:
        raise FormatError("dimension table inconsistent with file length")
    ndims = ell + 2
    dims = struct.unpack(f"<{ndims}I", take(4 * ndims, "dimensions"))
    weights = []
    for i in range(ndims - 1):
        n = dims[i + 1] * dims[i]
        raw = take(8 * n, f"weight matrix {i + 1}")
        weights.append(np.frombuffer(raw, dtype="<f8").reshape(dims[i + 1], dims[i]).copy())
    (seed,) = struct.unpack("<Q", take(8, "master seed"))
    arch = Architecture(dims[0], dims[1:-1])
    return Network(arch, mode, tuple(weights), seed, 0)
