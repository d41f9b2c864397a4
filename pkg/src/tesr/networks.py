"""Network constructors for representation maps and prediction heads.

All networks are small fully connected nets with LeakyReLU(0.2) between
layers and a linear final layer, built on the engine in ``numkit``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numkit import ForwardCache, Layer, check_params, init_params, mlp_forward


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths (input first, output last) and activation slope."""

    widths: tuple[int, ...]
    slope: float = 0.2

    def __post_init__(self):
        if len(self.widths) < 2:
            raise ValueError("need at least an input and an output width")
        if any(w < 1 for w in self.widths):
            raise ValueError("widths must be positive")


@dataclass
class MlpNet:
    spec: MlpSpec
    params: list[Layer]

    def __post_init__(self):
        check_params(self.params)
        shapes = [p.weight.shape for p in self.params]
        expect = list(zip(self.spec.widths[:-1], self.spec.widths[1:]))
        if shapes != expect:
            raise ValueError(f"params {shapes} do not realize spec {expect}")

    @property
    def in_dim(self) -> int:
        return self.spec.widths[0]

    @property
    def out_dim(self) -> int:
        return self.spec.widths[-1]

    def with_params(self, params: list[Layer]) -> "MlpNet":
        return MlpNet(spec=self.spec, params=params)


def build_rep_net(
    d: int,
    r: int,
    hidden: tuple[int, ...] = (64, 32),
    slope: float = 0.2,
    rng: np.random.Generator | None = None,
) -> MlpNet:
    """Representation network mapping R^d -> R^r.

    Default hidden widths (64, 32) give the stack d -> 64 -> 32 -> r used
    for all tabular experiments here; pass e.g. hidden=(64, 64) for wider
    variants.
    """
    if d < 1 or r < 1:
        raise ValueError("d and r must be positive")
    if rng is None:
        rng = np.random.default_rng()
    spec = MlpSpec(widths=(d, *hidden, r), slope=slope)
    return MlpNet(spec=spec, params=init_params(list(spec.widths), rng))


def build_head_net(r_in: int, out: int, rng: np.random.Generator | None = None) -> MlpNet:
    """Prediction head r_in -> 64 -> out.

    out = 1 for regression or a binary logit, = number of classes for
    multiclass logits.
    """
    if r_in < 1 or out < 1:
        raise ValueError("r_in and out must be positive")
    if rng is None:
        rng = np.random.default_rng()
    spec = MlpSpec(widths=(r_in, 64, out))
    return MlpNet(spec=spec, params=init_params(list(spec.widths), rng))


def net_forward(net: MlpNet, x) -> tuple[np.ndarray, ForwardCache]:
    """Forward pass returning both the output and the backprop cache."""
    return mlp_forward(net.params, x, net.spec.slope)


def rep_forward(net: MlpNet, x) -> np.ndarray:
    """Forward pass returning the network output only."""
    out, _ = net_forward(net, x)
    return out
