"""Dense matrix utilities, a small feed-forward network engine, and RMSprop.

Everything here operates on plain float64 numpy arrays.  A "matrix" is a
2-d array of shape (n, d) holding one sample per row.  Networks are lists
of :class:`Layer` objects; forward/backward passes are pure functions so
the same parameter set can be shared safely across concurrent callers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist


def as_matrix(x, name: str = "x") -> np.ndarray:
    """Validate and convert ``x`` to a float64 matrix of shape (n, d).

    Raises ``ValueError`` if the input is not 2-dimensional or contains
    non-finite entries.
    """
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def pairwise_distance_matrix(a) -> np.ndarray:
    """Euclidean distances between all row pairs of ``a``.

    Parameters
    ----------
    a : (n, d) array_like
        Sample matrix, one point per row.

    Returns
    -------
    (n, n) ndarray
        Symmetric matrix with zero diagonal; entry (i, j) is the
        Euclidean distance between rows i and j.
    """
    a = as_matrix(a, "a")
    if a.shape[0] < 1:
        raise ValueError("need at least one row")
    d = cdist(a, a)
    np.fill_diagonal(d, 0.0)
    return d


@dataclass
class Layer:
    """One affine layer: ``output = input @ weight + bias``."""

    weight: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray    # (fan_out,)

    def copy(self) -> "Layer":
        return Layer(self.weight.copy(), self.bias.copy())


ParameterSet = list  # list[Layer]; consecutive layers must chain shapes


def check_params(params: list[Layer]) -> None:
    """Validate that layer shapes chain and all entries are finite."""
    if not params:
        raise ValueError("parameter set is empty")
    for k, layer in enumerate(params):
        if layer.weight.ndim != 2 or layer.bias.ndim != 1:
            raise ValueError(f"layer {k} has malformed shapes")
        if layer.weight.shape[1] != layer.bias.shape[0]:
            raise ValueError(f"layer {k} bias width does not match weight")
        if not (np.all(np.isfinite(layer.weight)) and np.all(np.isfinite(layer.bias))):
            raise ValueError(f"layer {k} contains non-finite entries")
        if k > 0 and params[k - 1].weight.shape[1] != layer.weight.shape[0]:
            raise ValueError(f"layer {k} input width does not chain with layer {k - 1}")


def init_params(widths, rng: np.random.Generator) -> list[Layer]:
    """Initialize layers for the given width chain.

    Weights are uniform on +-sqrt(6 / fan_in), biases zero.
    """
    widths = list(widths)
    if len(widths) < 2 or any(w < 1 for w in widths):
        raise ValueError("widths must be >= 2 positive integers")
    params = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = np.sqrt(6.0 / fan_in)
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        params.append(Layer(w, np.zeros(fan_out)))
    return params


def clone_params(params: list[Layer]) -> list[Layer]:
    return [layer.copy() for layer in params]


def zeros_like_params(params: list[Layer]) -> list[Layer]:
    return [Layer(np.zeros_like(p.weight), np.zeros_like(p.bias)) for p in params]


def add_scaled(acc: list[Layer], grads: list[Layer], scale: float = 1.0) -> None:
    """In-place ``acc += scale * grads`` for gradient accumulation."""
    for a, g in zip(acc, grads):
        a.weight += scale * g.weight
        a.bias += scale * g.bias


def params_to_vector(params: list[Layer]) -> np.ndarray:
    return np.concatenate([np.concatenate([p.weight.ravel(), p.bias]) for p in params])


def vector_to_params(vec: np.ndarray, like: list[Layer]) -> list[Layer]:
    out = []
    pos = 0
    for p in like:
        nw = p.weight.size
        w = vec[pos:pos + nw].reshape(p.weight.shape).copy()
        pos += nw
        b = vec[pos:pos + p.bias.size].copy()
        pos += p.bias.size
        out.append(Layer(w, b))
    if pos != vec.size:
        raise ValueError("vector length does not match parameter set")
    return out


def leaky_relu(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z > 0.0, z, slope * z)


def leaky_relu_grad(z: np.ndarray, slope: float) -> np.ndarray:
    # Derivative at exactly zero is defined as the slope.
    return np.where(z > 0.0, 1.0, slope)


@dataclass
class ForwardCache:
    """Per-layer activations retained by :func:`mlp_forward` for backprop."""

    inputs: list      # input matrix fed to each layer
    preacts: list     # affine outputs of each layer, before activation
    layers: list      # the Layer objects used in the pass (by reference)
    slope: float


def mlp_forward(params: list[Layer], x, slope: float = 0.2) -> tuple[np.ndarray, ForwardCache]:
    """Run ``x`` through the network.

    Leaky-ReLU with the given slope is applied between layers; the final
    layer output is returned without activation.

    Returns
    -------
    (output, cache)
        ``output`` has one row per input row; ``cache`` suffices for
        :func:`mlp_backward`.
    """
    x = as_matrix(x, "x")
    check_params(params)
    if x.shape[1] != params[0].weight.shape[0]:
        raise ValueError(
            f"input width {x.shape[1]} does not match first layer "
            f"({params[0].weight.shape[0]})"
        )
    inputs, preacts = [], []
    h = x
    last = len(params) - 1
    for k, layer in enumerate(params):
        inputs.append(h)
        z = h @ layer.weight + layer.bias
        preacts.append(z)
        h = z if k == last else leaky_relu(z, slope)
    return h, ForwardCache(inputs, preacts, params, slope)


def mlp_backward(cache: ForwardCache, grad_output) -> tuple[list[Layer], np.ndarray]:
    """Backpropagate ``grad_output`` through a cached forward pass.

    Returns
    -------
    (grads, grad_input)
        ``grads`` mirrors the parameter set; ``grad_input`` is the
        gradient with respect to the network input.
    """
    grad_output = np.asarray(grad_output, dtype=np.float64)
    n_layers = len(cache.preacts)
    if grad_output.shape != cache.preacts[-1].shape:
        raise ValueError(
            f"grad_output shape {grad_output.shape} does not match "
            f"output shape {cache.preacts[-1].shape}"
        )
    grads: list = [None] * n_layers
    g = grad_output
    for k in range(n_layers - 1, -1, -1):
        dz = g if k == n_layers - 1 else g * leaky_relu_grad(cache.preacts[k], cache.slope)
        grads[k] = Layer(cache.inputs[k].T @ dz, dz.sum(axis=0))
        g = dz @ cache.layers[k].weight.T
    return grads, g


def finite_difference_gradient(lossfn, params: list[Layer], h: float = 1e-6) -> list[Layer]:
    """Central-difference gradient of ``lossfn`` at ``params``.

    ``lossfn`` maps a parameter set to a scalar.  Intended as a testing
    oracle; cost is two loss evaluations per parameter coordinate.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    work = clone_params(params)
    grads = zeros_like_params(params)
    for layer, glayer in zip(work, grads):
        for arr, garr in ((layer.weight, glayer.weight), (layer.bias, glayer.bias)):
            flat = arr.ravel()
            gflat = garr.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = lossfn(work)
                flat[i] = orig - h
                down = lossfn(work)
                flat[i] = orig
                gflat[i] = (up - down) / (2.0 * h)
    return grads


@dataclass
class RmsPropState:
    """Running squared-gradient averages plus the optimizer settings."""

    square_avg: list            # list[Layer], shapes mirror the parameters
    learning_rate: float
    decay: float = 0.99
    eps: float = 1e-8
    weight_decay: float = 0.0
    step_count: int = 0


def rmsprop_init(params: list[Layer], learning_rate: float, weight_decay: float = 0.0,
                 decay: float = 0.99, eps: float = 1e-8) -> RmsPropState:
    return RmsPropState(zeros_like_params(params), learning_rate, decay, eps, weight_decay)


def rmsprop_step(params: list[Layer], grads: list[Layer],
                 state: RmsPropState) -> tuple[list[Layer], RmsPropState]:
    """One RMSprop update.

    The squared-gradient average is v <- decay*v + (1-decay)*g**2; the
    parameter step is theta <- theta - lr*(g + wd*theta)/(sqrt(v) + eps),
    with the decoupled weight-decay term added to the gradient before the
    adaptive scaling.  Inputs are not mutated.
    """
    if len(grads) != len(params) or len(state.square_avg) != len(params):
        raise ValueError("parameter/gradient/state lengths differ")
    new_params, new_avg = [], []
    lr, rho, eps, wd = (state.learning_rate, state.decay, state.eps, state.weight_decay)
    for p, g, v in zip(params, grads, state.square_avg):
        if p.weight.shape != g.weight.shape or p.bias.shape != g.bias.shape:
            raise ValueError("gradient shapes do not mirror parameters")
        if not (np.all(np.isfinite(g.weight)) and np.all(np.isfinite(g.bias))):
            raise ValueError("non-finite gradient")
        vw = rho * v.weight + (1.0 - rho) * g.weight ** 2
        vb = rho * v.bias + (1.0 - rho) * g.bias ** 2
        w = p.weight - lr * (g.weight + wd * p.weight) / (np.sqrt(vw) + eps)
        b = p.bias - lr * (g.bias + wd * p.bias) / (np.sqrt(vb) + eps)
        new_params.append(Layer(w, b))
        new_avg.append(Layer(vw, vb))
    new_state = RmsPropState(new_avg, lr, rho, eps, wd, state.step_count + 1)
    return new_params, new_state
