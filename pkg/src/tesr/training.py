"""Two-stage transfer representation learning and target-only baselines.

Stage I pools several source domains and learns a representation R_c
whose output is (a) strongly dependent on each source response, (b) close
to standard Gaussian within each source, and (c) independent of which
domain a sample came from.  Stage II freezes R_c and fits an extra
target-only representation R_t that adds whatever target-specific signal
R_c missed, while staying independent of R_c.  The combined features
[R_c(x), R_t(x)] then feed an ordinary supervised head.

Baselines: ``train_ddr`` is the target-only ablation of Stage I (no
invariance term, no sources), and ``train_dnn`` is an end-to-end net with
logistic or squared loss.

All optimization is mini-batch RMSprop on the hand-rolled engine in
``numkit``; every loss here exposes its analytic gradient so the whole
stack is finite-difference checkable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import ceil

import numpy as np

from .dependence import (
    dcov_grad_u,
    dcov_u,
    energy_distance,
    energy_grad_u,
    gaussian_reference,
)
from .networks import MlpNet, build_head_net, build_rep_net, net_forward, rep_forward
from .numkit import (
    add_scaled,
    as_matrix,
    mlp_backward,
    mlp_forward,
    rmsprop_init,
    rmsprop_step,
    zeros_like_params,
)

TASKS = ("regression", "classification")


@dataclass
class DomainDataset:
    """One domain's sample: covariates, response, and task kind.

    For classification ``y`` holds integer labels in [0, n_classes); for
    regression it holds real values, one column per response coordinate.
    """

    x: np.ndarray
    y: np.ndarray
    task: str
    domain_id: int = 0
    n_classes: int = 0

    def __post_init__(self):
        self.x = as_matrix(self.x, "x")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == "classification":
            y = np.asarray(self.y)
            if y.ndim == 2 and y.shape[1] == 1:
                y = y[:, 0]
            if y.ndim != 1:
                raise ValueError("classification labels must be a vector")
            labels = y.astype(np.int64)
            if np.any(labels != np.asarray(y, dtype=np.float64)):
                raise ValueError("classification labels must be integers")
            if self.n_classes == 0:
                self.n_classes = int(labels.max()) + 1 if labels.size else 2
            if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
                raise ValueError("labels outside [0, n_classes)")
            self.y = labels
        else:
            y = np.asarray(self.y, dtype=np.float64)
            if y.ndim == 1:
                y = y[:, None]
            self.y = as_matrix(y, "y")
        if len(self.y) != len(self.x):
            raise ValueError("x and y row counts differ")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def response_matrix(self) -> np.ndarray:
        """Response encoded for distance computations.

        Regression responses pass through as (n, q).  Binary labels become
        a single {0, 1} column; labels over more than two classes become
        one-hot rows.
        """
        if self.task == "regression":
            return self.y
        if self.n_classes == 2:
            return self.y.astype(np.float64)[:, None]
        return np.eye(self.n_classes)[self.y]

    def subset(self, idx) -> "DomainDataset":
        return DomainDataset(
            x=self.x[idx],
            y=self.y[idx],
            task=self.task,
            domain_id=self.domain_id,
            n_classes=self.n_classes,
        )


@dataclass(frozen=True)
class TesrConfig:
    """Hyperparameters shared by both training stages and the baselines."""

    r_c: int = 32
    r_t: int = 32
    lambda_e: float = 0.1
    lambda_z: float = 0.1
    lambda_c: float = 0.1
    lambda_e0: float = 0.1
    batch_size: int = 64
    epochs: int = 300
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    hidden: tuple[int, ...] = (64, 32)
    slope: float = 0.2

    def __post_init__(self):
        if self.batch_size < 4:
            raise ValueError("batch_size must be at least 4")
        if min(self.lambda_e, self.lambda_z, self.lambda_c, self.lambda_e0) < 0:
            raise ValueError("penalty weights must be non-negative")
        if self.r_c < 1 or self.r_t < 1:
            raise ValueError("representation dims must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")


@dataclass
class TesrModel:
    """Frozen Stage-I network plus the target augmentation network."""

    rc_net: MlpNet
    rt_net: MlpNet

    @property
    def r_c(self) -> int:
        return self.rc_net.out_dim

    @property
    def r_t(self) -> int:
        return self.rt_net.out_dim


def domain_onehot(counts: list[int]) -> np.ndarray:
    """Stacked one-hot domain indicator for pooled batches of given sizes."""
    return np.repeat(np.eye(len(counts)), counts, axis=0)


def source_loss(
    rep_batches: list[np.ndarray],
    y_batches: list[np.ndarray],
    gamma_batches: list[np.ndarray],
    lambda_e: float,
    lambda_z: float,
) -> tuple[float, list[np.ndarray]]:
    """Pooled source objective and its gradient in each representation batch.

    For source s with representation output R_s and response Y_s,

        loss = sum_s [ -dcov_u(R_s, Y_s) + lambda_e * energy(R_s, gamma_s) ]
               + lambda_z * dcov_u(stack(R_s), Z)

    where Z is the one-hot domain indicator of the stacked rows.  The
    pooled term is skipped when lambda_z is 0 or there is a single source.
    Returns (loss, gradients aligned with rep_batches).
    """
    if not rep_batches:
        raise ValueError("need at least one source batch")
    if len(rep_batches) != len(y_batches) or len(rep_batches) != len(gamma_batches):
        raise ValueError("batch lists must align")
    for rep in rep_batches:
        if rep.shape[0] < 4:
            raise ValueError("each batch needs at least 4 rows")
    loss = 0.0
    grads = []
    for rep, y, gamma in zip(rep_batches, y_batches, gamma_batches):
        loss -= dcov_u(rep, y)
        grad = -dcov_grad_u(rep, y)
        if lambda_e != 0.0:
            loss += lambda_e * energy_distance(rep, gamma)
            grad += lambda_e * energy_grad_u(rep, gamma)
        grads.append(grad)
    if lambda_z != 0.0 and len(rep_batches) > 1:
        pooled = np.vstack(rep_batches)
        z = domain_onehot([rep.shape[0] for rep in rep_batches])
        loss += lambda_z * dcov_u(pooled, z)
        pooled_grad = lambda_z * dcov_grad_u(pooled, z)
        start = 0
        for k, rep in enumerate(rep_batches):
            stop = start + rep.shape[0]
            grads[k] += pooled_grad[start:stop]
            start = stop
    return float(loss), grads


def target_loss(
    rt_out: np.ndarray,
    rc_out: np.ndarray,
    y0: np.ndarray,
    gamma: np.ndarray,
    lambda_c: float,
    lambda_e0: float,
) -> tuple[float, np.ndarray]:
    """Target-stage objective and its gradient in ``rt_out`` only.

        loss = -dcov_u([rt, rc], y0) + lambda_c * dcov_u(rt, rc)
               + lambda_e0 * energy(rt, gamma)

    ``rc_out`` is treated as a constant: no gradient flows to the frozen
    Stage-I network.
    """
    if rt_out.shape[0] != rc_out.shape[0]:
        raise ValueError("rt and rc batches must have equal rows")
    if rt_out.shape[0] < 4:
        raise ValueError("batch needs at least 4 rows")
    r_t = rt_out.shape[1]
    joint = np.hstack([rt_out, rc_out])
    loss = -dcov_u(joint, y0)
    grad = -dcov_grad_u(joint, y0)[:, :r_t]
    if lambda_c != 0.0:
        loss += lambda_c * dcov_u(rt_out, rc_out)
        grad += lambda_c * dcov_grad_u(rt_out, rc_out)
    if lambda_e0 != 0.0:
        loss += lambda_e0 * energy_distance(rt_out, gamma)
        grad += lambda_e0 * energy_grad_u(rt_out, gamma)
    return float(loss), grad


def _steps_per_epoch(n_min: int, batch_size: int) -> int:
    return ceil(n_min / batch_size)


def _draw_batch(ds: DomainDataset, batch_size: int, rng: np.random.Generator):
    b = min(batch_size, ds.n)
    idx = rng.choice(ds.n, size=b, replace=False)
    return ds.x[idx], ds.response_matrix()[idx]


def _project_standard_normal(params, x_full: np.ndarray, slope: float,
                             max_gain: float = 10.0) -> None:
    """Reparameterize the output layer so the representation has mean zero
    and identity covariance on ``x_full``.

    The population objective constrains the representation to N(0, I),
    but the soft energy penalty alone cannot hold it there: the dcov
    reward grows linearly in the representation scale, and it also pays
    to copy the single most informative direction into every coordinate.
    Left alone, the scale runs away and the coordinates collapse onto
    one direction.  Applying the whitening transform to the last linear
    layer after each epoch is a projection onto the first two moments of
    the constraint set; it stays inside the same network class because
    an affine map of an affine layer is again an affine layer.  The
    energy penalty is left to handle everything beyond second moments.

    Eigendirections with very small variance are amplified by at most
    ``max_gain`` per call, so dormant coordinates are inflated over a few
    epochs instead of being blown up out of the numerical noise at once.
    """
    rep, _ = mlp_forward(params, x_full, slope)
    mu = rep.mean(axis=0)
    centered = rep - mu
    cov = centered.T @ centered / rep.shape[0]
    w, v = np.linalg.eigh(cov)
    gain = np.minimum(1.0 / np.sqrt(np.maximum(w, 1e-12)), max_gain)
    t = (v * gain) @ v.T
    params[-1].weight[:] = params[-1].weight @ t
    params[-1].bias[:] = (params[-1].bias - mu) @ t


def train_stage1(
    sources: list[DomainDataset],
    cfg: TesrConfig,
    rng: np.random.Generator,
    loss_log: list | None = None,
) -> MlpNet:
    """Learn the shared representation R_c from the source domains.

    Per optimizer step, one mini-batch of size ``cfg.batch_size`` (capped
    at the domain size) is drawn from every source; the pooled invariance
    term operates on exactly those rows.  An epoch is
    ceil(min_s n_s / batch_size) steps; the final-epoch network is
    returned (no early stopping).  After every epoch the representation
    is projected back onto the zero-mean, identity-covariance constraint.
    """
    if not sources:
        raise ValueError("need at least one source")
    d = sources[0].d
    if any(s.d != d for s in sources):
        raise ValueError("sources must share the covariate dimension")
    net = build_rep_net(d, cfg.r_c, cfg.hidden, cfg.slope, rng)
    state = rmsprop_init(net.params, cfg.learning_rate, cfg.weight_decay)
    params = net.params
    steps = _steps_per_epoch(min(s.n for s in sources), cfg.batch_size)
    x_pool = np.vstack([s.x for s in sources])
    for _ in range(cfg.epochs):
        for _ in range(steps):
            xs, ys, caches, reps, gammas = [], [], [], [], []
            for ds in sources:
                xb, yb = _draw_batch(ds, cfg.batch_size, rng)
                rep, cache = net_forward(net.with_params(params), xb)
                xs.append(xb)
                ys.append(yb)
                reps.append(rep)
                caches.append(cache)
                gammas.append(gaussian_reference(xb.shape[0], cfg.r_c, rng))
            loss, rep_grads = source_loss(reps, ys, gammas, cfg.lambda_e, cfg.lambda_z)
            acc = zeros_like_params(params)
            for cache, g in zip(caches, rep_grads):
                grads, _ = mlp_backward(cache, g)
                add_scaled(acc, grads)
            params, state = rmsprop_step(params, acc, state)
            if loss_log is not None:
                loss_log.append(loss)
        _project_standard_normal(params, x_pool, cfg.slope)
    return net.with_params(params)


def train_stage2(
    target: DomainDataset,
    rc_net: MlpNet,
    cfg: TesrConfig,
    rng: np.random.Generator,
    loss_log: list | None = None,
) -> MlpNet:
    """Learn the target augmentation R_t with the Stage-I network frozen."""
    if target.d != rc_net.in_dim:
        raise ValueError("target covariate dim does not match the frozen net")
    net = build_rep_net(target.d, cfg.r_t, cfg.hidden, cfg.slope, rng)
    state = rmsprop_init(net.params, cfg.learning_rate, cfg.weight_decay)
    params = net.params
    steps = _steps_per_epoch(target.n, cfg.batch_size)
    for _ in range(cfg.epochs):
        for _ in range(steps):
            xb, yb = _draw_batch(target, cfg.batch_size, rng)
            rc_out = rep_forward(rc_net, xb)
            rt_out, cache = net_forward(net.with_params(params), xb)
            gamma = gaussian_reference(xb.shape[0], cfg.r_t, rng)
            loss, g = target_loss(rt_out, rc_out, yb, gamma, cfg.lambda_c, cfg.lambda_e0)
            grads, _ = mlp_backward(cache, g)
            params, state = rmsprop_step(params, grads, state)
            if loss_log is not None:
                loss_log.append(loss)
        # Shrink-only here: with only n_0 target rows the small
        # eigendirections of the representation covariance are dominated by
        # estimation error, so inflating them toward unit variance would
        # amplify noise rather than enforce the constraint.
        _project_standard_normal(params, target.x, cfg.slope, max_gain=1.0)
    return net.with_params(params)


def train_tesr(
    sources: list[DomainDataset],
    target: DomainDataset,
    cfg: TesrConfig,
    rng: np.random.Generator,
) -> TesrModel:
    """Run both stages and return the combined representation model."""
    rc_net = train_stage1(sources, cfg, rng)
    rt_net = train_stage2(target, rc_net, cfg, rng)
    return TesrModel(rc_net=rc_net, rt_net=rt_net)


def tesr_features(model: TesrModel, x) -> np.ndarray:
    """Combined feature matrix [R_c(x), R_t(x)], r_c + r_t columns."""
    return np.hstack([rep_forward(model.rc_net, x), rep_forward(model.rt_net, x)])


def train_ddr(
    target: DomainDataset,
    cfg: TesrConfig,
    rng: np.random.Generator,
    loss_log: list | None = None,
) -> MlpNet:
    """Target-only representation baseline.

    Identical to Stage I run on the target alone with the invariance
    term switched off: maximize dcov to the response under the Gaussian
    energy penalty.
    """
    return train_stage1([target], replace(cfg, lambda_z=0.0), rng, loss_log)


def _head_out_dim(ds: DomainDataset) -> int:
    if ds.task == "regression":
        return ds.y.shape[1]
    return 1 if ds.n_classes == 2 else ds.n_classes


def supervised_loss_grad(out: np.ndarray, ds_y, task: str, n_classes: int):
    """Mean supervised loss and its gradient in the network output.

    Regression uses half squared error; binary classification a single
    logit with logistic loss; multiclass softmax cross-entropy.
    """
    n = out.shape[0]
    if task == "regression":
        resid = out - ds_y
        return 0.5 * float((resid**2).sum()) / n, resid / n
    y = np.asarray(ds_y)
    if n_classes == 2:
        z = out[:, 0]
        loss = float(np.logaddexp(0.0, z).sum() - (y * z).sum()) / n
        grad = ((1.0 / (1.0 + np.exp(-z))) - y)[:, None] / n
        return loss, grad
    zmax = out.max(axis=1, keepdims=True)
    logsum = zmax[:, 0] + np.log(np.exp(out - zmax).sum(axis=1))
    loss = float(logsum.sum() - out[np.arange(n), y].sum()) / n
    soft = np.exp(out - zmax)
    soft /= soft.sum(axis=1, keepdims=True)
    soft[np.arange(n), y] -= 1.0
    return loss, soft / n


def _train_supervised(
    net: MlpNet,
    x: np.ndarray,
    y,
    task: str,
    n_classes: int,
    cfg: TesrConfig,
    rng: np.random.Generator,
    loss_log: list | None = None,
) -> MlpNet:
    """Generic mini-batch RMSprop loop for a supervised objective."""
    state = rmsprop_init(net.params, cfg.learning_rate, cfg.weight_decay)
    params = net.params
    n = x.shape[0]
    steps = _steps_per_epoch(n, cfg.batch_size)
    y_arr = np.asarray(y)
    for _ in range(cfg.epochs):
        for _ in range(steps):
            idx = rng.choice(n, size=min(cfg.batch_size, n), replace=False)
            out, cache = net_forward(net.with_params(params), x[idx])
            loss, g = supervised_loss_grad(out, y_arr[idx], task, n_classes)
            grads, _ = mlp_backward(cache, g)
            params, state = rmsprop_step(params, grads, state)
            if loss_log is not None:
                loss_log.append(loss)
    return net.with_params(params)


def train_dnn(
    target: DomainDataset,
    cfg: TesrConfig,
    rng: np.random.Generator,
    loss_log: list | None = None,
) -> MlpNet:
    """End-to-end baseline: one fused net from covariates to predictions.

    The architecture stacks the representation widths and the head, with
    LeakyReLU between every pair of consecutive layers.
    """
    out_dim = _head_out_dim(target)
    widths = (target.d, *cfg.hidden, cfg.r_c, 64, out_dim)
    net = build_rep_net(target.d, out_dim, hidden=widths[1:-1], slope=cfg.slope, rng=rng)
    return _train_supervised(
        net, target.x, target.y, target.task, target.n_classes, cfg, rng, loss_log
    )


def train_predictor(
    features: np.ndarray,
    y,
    task: str,
    cfg: TesrConfig,
    rng: np.random.Generator,
    n_classes: int = 0,
    loss_log: list | None = None,
) -> MlpNet:
    """Train a prediction head on a frozen feature matrix."""
    features = as_matrix(features, "features")
    y_arr = np.asarray(y)
    if task == "regression":
        if y_arr.ndim == 1:
            y_arr = y_arr[:, None]
        out_dim = y_arr.shape[1]
    else:
        if n_classes == 0:
            n_classes = int(y_arr.max()) + 1
        out_dim = 1 if n_classes == 2 else n_classes
    net = build_head_net(features.shape[1], out_dim, rng)
    return _train_supervised(net, features, y_arr, task, n_classes, cfg, rng, loss_log)


def predict(net: MlpNet, x, task: str, n_classes: int = 0) -> np.ndarray:
    """Labels (classification) or values (regression) from a trained net.

    Binary nets emit one logit, thresholded at 0; multiclass nets emit one
    logit per class, argmax with ties toward the lowest index.
    """
    out = rep_forward(net, x)
    if task == "regression":
        return out
    if out.shape[1] == 1:
        return (out[:, 0] > 0.0).astype(np.int64)
    return out.argmax(axis=1)
