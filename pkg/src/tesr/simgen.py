"""Synthetic multi-domain studies for benchmarking transfer of representations.

Four generator families are provided.  Each builds several regression
source domains plus one or two target domains (binary classification via
a logistic link, except the all-regression variant), along with a fresh
test set per target:

* ``gen_example1``: AR-correlated Gaussian covariates, four sources that
  share nonlinear components with the target at varying coefficients.
* ``gen_example2``: two independent target tasks on disjoint covariate
  blocks, sources that mix components from both blocks.
* ``gen_example3``: a schedule of source/target discrepancy controlled by
  coefficients (gamma_s1, gamma_s2), with two pure-noise sources.
* ``gen_example_s1``: an all-regression variant on uniform covariates.

Logistic targets are centered: g(x) = g0(x) - E g0(X), with the
expectation estimated once per (family, d) by Monte Carlo on a dedicated
fixed seed and cached for the life of the process, so every replication
of a study shares the same centering constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .training import DomainDataset

# Dedicated seed for centering-constant and diagnostic Monte Carlo streams,
# independent of any experiment seed.
CENTER_SEED = 20_240_601

_center_cache: dict[tuple[str, int], float] = {}


# ------------------------------------------------------------- components
# Family "ex1": nonlinear components on (correlated) Gaussian covariates.
# Family "s1": components for the all-regression uniform-covariate study.


def _ex1_f1(u):
    return (u - 0.9) ** 2


def _ex1_f2(u, v):
    return -u * v * (u - 0.5) ** 2


def _ex1_f3(u, v):
    return np.sin(-0.2 * np.pi * u * v) + 1.0


def _ex1_f4(u, v):
    return u * (np.abs(v) + 1.0) ** 2


def _ex1_f5(u):
    return np.sin(0.5 * np.pi * u) + 1.0


def _ex1_f6(u):
    return 2.0 * np.sin(np.pi * u) / (2.0 - np.sin(np.pi * u))


def _s1_f1(u):
    return np.asarray(u, dtype=np.float64) + 0.0


def _s1_f2(u):
    return 2.0 * u + 1.0


def _s1_f3(u):
    return 2.0 * u - 1.0


def _s1_f4(u):
    return 0.1 * np.sin(np.pi * u) + 0.2 * np.cos(np.pi * u)


def _s1_f5(u):
    return np.sin(np.pi * u) / (2.0 - np.sin(np.pi * u))


def _s1_f6(u):
    return u * (np.abs(u) + 1.0) ** 2


_FAMILIES = {
    "ex1": (_ex1_f1, _ex1_f2, _ex1_f3, _ex1_f4, _ex1_f5, _ex1_f6),
    "s1": (_s1_f1, _s1_f2, _s1_f3, _s1_f4, _s1_f5, _s1_f6),
}


def eval_component(family: str, index: int, *args):
    """Evaluate component f_index of a family at the given argument(s).

    ``index`` is 1-based.  In family "ex1" components 2, 3 and 4 are
    bivariate; everything else is univariate.  Accepts scalars or arrays.
    """
    if family not in _FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if not 1 <= index <= 6:
        raise ValueError("component index must be in 1..6")
    fn = _FAMILIES[family][index - 1]
    arity = 2 if (family == "ex1" and index in (2, 3, 4)) else 1
    if len(args) != arity:
        raise ValueError(f"component {index} of {family!r} takes {arity} argument(s)")
    return fn(*args)


# ------------------------------------------------------- covariate samplers


def ar_covariance(d: int, rho: float = 0.2) -> np.ndarray:
    """Covariance matrix with entries rho^|i-j|."""
    idx = np.arange(d)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def sample_ar_gaussian(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """N(0, Sigma) draws with Sigma_ij = 0.2^|i-j|, via the Cholesky factor."""
    chol = np.linalg.cholesky(ar_covariance(d))
    return rng.standard_normal((n, d)) @ chol.T


def sample_std_gaussian(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((n, d))


def sample_uniform(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random((n, d))


# --------------------------------------------------- regression functions
# All g functions take an (n, d) matrix and return an (n,) vector.
# Covariate indices in comments are 1-based, matching the model write-ups.


def example1_target_g0(x):
    # 2 f1(x1) + f2(x2,x3) + f3(x3,x4) + f4(x4,x5)
    return (
        2.0 * _ex1_f1(x[:, 0])
        + _ex1_f2(x[:, 1], x[:, 2])
        + _ex1_f3(x[:, 2], x[:, 3])
        + _ex1_f4(x[:, 3], x[:, 4])
    )


_EX1_SOURCE_COEF = {
    # s: (c1 on f1(x1), c2 on f2(x2,x3), c5 on f5(x6), c6 on f6(x7))
    1: (3.0, 1.0, 1.0, 0.0),
    2: (3.0, 1.0, 2.0, 0.0),
    3: (2.0, 1.5, 0.0, 1.0),
    4: (2.0, 1.5, 0.0, 2.0),
}


def example1_source_g(s: int):
    if s not in _EX1_SOURCE_COEF:
        raise ValueError("source index must be in 1..4")
    c1, c2, c5, c6 = _EX1_SOURCE_COEF[s]

    def g(x):
        val = (
            c1 * _ex1_f1(x[:, 0])
            + c2 * _ex1_f2(x[:, 1], x[:, 2])
            + _ex1_f3(x[:, 2], x[:, 3])
        )
        if c5:
            val = val + c5 * _ex1_f5(x[:, 5])
        if c6:
            val = val + c6 * _ex1_f6(x[:, 6])
        return val

    return g


def example2_target_g0(which: int):
    if which == 1:
        return example1_target_g0
    if which == 2:

        def g(x):
            # 2 f1(x8) + f2(x9,x10) + f3(x10,x11) + f4(x11,x12)
            return (
                2.0 * _ex1_f1(x[:, 7])
                + _ex1_f2(x[:, 8], x[:, 9])
                + _ex1_f3(x[:, 9], x[:, 10])
                + _ex1_f4(x[:, 10], x[:, 11])
            )

        return g
    raise ValueError("which must be 1 or 2")


_EX2_SOURCE_SPEC = {
    # s: (f1 column, f2/f3 column block start, f5 column, f5 coefficient)
    1: (0, 8, 5, 1.0),
    2: (0, 8, 5, 2.0),
    3: (7, 1, 12, 2.0),
    4: (7, 1, 12, 2.0),
}


def example2_source_g(s: int):
    if s not in _EX2_SOURCE_SPEC:
        raise ValueError("source index must be in 1..4")
    j1, jb, j5, c5 = _EX2_SOURCE_SPEC[s]

    def g(x):
        return (
            _ex1_f1(x[:, j1])
            + 2.0 * _ex1_f2(x[:, jb], x[:, jb + 1])
            + 2.0 * _ex1_f3(x[:, jb + 1], x[:, jb + 2])
            + c5 * _ex1_f5(x[:, j5])
        )

    return g


def example3_gamma(departure: str, s: int) -> tuple[float, float]:
    """Coefficient schedule controlling source/target discrepancy.

    Departure "l1": (1 + 0.5 s, 1 + 0.5 s) for s in 1..6.
    Departure "cosine": (cos(s pi/3) - sin(s pi/3), cos(s pi/3) + sin(s pi/3)).
    Sources 7 and 8 carry no signal in either schedule: (0, 0).
    """
    if departure not in ("l1", "cosine"):
        raise ValueError("departure must be 'l1' or 'cosine'")
    if not 1 <= s <= 8:
        raise ValueError("source index must be in 1..8")
    if s >= 7:
        return (0.0, 0.0)
    if departure == "l1":
        return (1.0 + 0.5 * s, 1.0 + 0.5 * s)
    a = s * np.pi / 3.0
    return (float(np.cos(a) - np.sin(a)), float(np.cos(a) + np.sin(a)))


def example3_source_g(departure: str, s: int):
    g1, g2 = example3_gamma(departure, s)

    def g(x):
        return (
            2.0 * g1 * _ex1_f1(x[:, 0])
            + g2 * (_ex1_f2(x[:, 1], x[:, 2]) + _ex1_f3(x[:, 2], x[:, 3]))
            + 2.0 * _ex1_f5(x[:, 5])
        )

    return g


def example_s1_target_g(x):
    # 3 f1(x1) + 1.5 f2(x2) f3(x3) + f6(x6)
    return 3.0 * _s1_f1(x[:, 0]) + 1.5 * _s1_f2(x[:, 1]) * _s1_f3(x[:, 2]) + _s1_f6(
        x[:, 5]
    )


_S1_SOURCE_COEF = {
    # s: (c1, c2 on the f2*f3 product, c4 on f4(x4), c5 on f5(x5))
    1: (2.0, 1.0, 1.0, 0.0),
    2: (2.0, 1.0, 2.0, 0.0),
    3: (2.0, 1.5, 0.0, 1.0),
    4: (2.0, 1.5, 0.0, 2.0),
}


def example_s1_source_g(s: int):
    if s not in _S1_SOURCE_COEF:
        raise ValueError("source index must be in 1..4")
    c1, c2, c4, c5 = _S1_SOURCE_COEF[s]

    def g(x):
        val = c1 * _s1_f1(x[:, 0]) + c2 * _s1_f2(x[:, 1]) * _s1_f3(x[:, 2])
        if c4:
            val = val + c4 * _s1_f4(x[:, 3])
        if c5:
            val = val + c5 * _s1_f5(x[:, 4])
        return val

    return g


# --------------------------------------------------------- Monte Carlo


def mc_center(g, sampler, d: int, n_mc: int = 10**6, seed: int = CENTER_SEED) -> float:
    """Monte Carlo estimate of E g(X) under the sampler's covariate law.

    Evaluated in chunks to bound memory; n_mc of at least 1e5 keeps the
    standard error of typical components below 1e-2.
    """
    if n_mc < 10**5:
        raise ValueError("n_mc must be at least 1e5")
    rng = np.random.default_rng(seed)
    chunk = 10**5
    total = 0.0
    done = 0
    while done < n_mc:
        m = min(chunk, n_mc - done)
        total += float(np.sum(g(sampler(m, d, rng))))
        done += m
    return total / n_mc


def _cached_center(key: str, d: int, g, sampler) -> float:
    k = (key, d)
    if k not in _center_cache:
        _center_cache[k] = mc_center(g, sampler, d)
    return _center_cache[k]


def _mc_pair_values(g1, g2, sampler, d, n_mc, seed):
    rng = np.random.default_rng(seed)
    chunk = 10**5
    v1, v2 = [], []
    done = 0
    while done < n_mc:
        m = min(chunk, n_mc - done)
        x = sampler(m, d, rng)
        v1.append(g1(x))
        v2.append(g2(x))
        done += m
    return np.concatenate(v1), np.concatenate(v2)


def fn_l1_distance(g1, g2, sampler, d: int, n_mc: int = 10**5,
                   seed: int = CENTER_SEED) -> float:
    """Monte Carlo estimate of the L1 distance E|g1(X) - g2(X)|."""
    v1, v2 = _mc_pair_values(g1, g2, sampler, d, n_mc, seed)
    return float(np.mean(np.abs(v1 - v2)))


def fn_cosine_distance(g1, g2, sampler, d: int, n_mc: int = 10**5,
                       seed: int = CENTER_SEED) -> float:
    """Monte Carlo estimate of 1 - Cor[g1(X), g2(X)].

    Lies in [0, 1) when the functions correlate positively, (1, 2] when
    negatively.  Both functions must be non-constant under the law.
    """
    v1, v2 = _mc_pair_values(g1, g2, sampler, d, n_mc, seed)
    if v1.std() == 0.0 or v2.std() == 0.0:
        raise ValueError("cosine distance undefined for constant functions")
    return float(1.0 - np.corrcoef(v1, v2)[0, 1])


# ------------------------------------------------------------- studies


@dataclass
class GeneratedStudy:
    """Sources, targets, matched fresh test sets, and ground-truth info."""

    sources: list[DomainDataset]
    targets: list[DomainDataset]
    test_sets: list[DomainDataset]
    metadata: dict = field(default_factory=dict)


def _regression_domain(x, g, noise_sd, rng, domain_id):
    y = g(x) + noise_sd * rng.standard_normal(x.shape[0])
    return DomainDataset(x=x, y=y, task="regression", domain_id=domain_id)


def _logistic_domain(x, g_centered, rng, domain_id):
    p = expit(g_centered(x))
    y = (rng.random(x.shape[0]) < p).astype(np.int64)
    return DomainDataset(x=x, y=y, task="classification", domain_id=domain_id, n_classes=2)


def gen_example1(n_s: int, n_0: int, d: int, seed: int,
                 n_test: int = 10_000) -> GeneratedStudy:
    """Four regression sources and a logistic target on AR-correlated
    Gaussian covariates; the target has a private component in x5 while
    x6, x7 are active only in the sources."""
    if d < 7:
        raise ValueError("d must be at least 7")
    center = _cached_center("ex1", d, example1_target_g0, sample_ar_gaussian)

    def g(x):
        return example1_target_g0(x) - center

    rng = np.random.default_rng(seed)
    sources = [
        _regression_domain(
            sample_ar_gaussian(n_s, d, rng), example1_source_g(s), 0.5, rng, s
        )
        for s in (1, 2, 3, 4)
    ]
    target = _logistic_domain(sample_ar_gaussian(n_0, d, rng), g, rng, 0)
    test = _logistic_domain(sample_ar_gaussian(n_test, d, rng), g, rng, 0)
    meta = {
        "example": "ex1",
        "center": center,
        "target_g": g,
        "source_g": [example1_source_g(s) for s in (1, 2, 3, 4)],
        "noise_sd": 0.5,
        "sampler": sample_ar_gaussian,
    }
    return GeneratedStudy(sources=sources, targets=[target], test_sets=[test], metadata=meta)


def gen_example2(n_s: int, n_0: int, d: int, seed: int,
                 n_test: int = 10_000) -> GeneratedStudy:
    """Four regression sources and two independent binary targets on
    disjoint covariate blocks {x1..x5} and {x8..x12}; everything is
    standard Gaussian, including unit-variance source noise."""
    if d < 13:
        raise ValueError("d must be at least 13")
    centers = [
        _cached_center(f"ex2_t{k}", d, example2_target_g0(k), sample_std_gaussian)
        for k in (1, 2)
    ]

    def centered(k):
        g0 = example2_target_g0(k)
        c = centers[k - 1]
        return lambda x: g0(x) - c

    gs = [centered(1), centered(2)]
    rng = np.random.default_rng(seed)
    sources = [
        _regression_domain(
            sample_std_gaussian(n_s, d, rng), example2_source_g(s), 1.0, rng, s
        )
        for s in (1, 2, 3, 4)
    ]
    targets = [
        _logistic_domain(sample_std_gaussian(n_0, d, rng), gs[k], rng, k)
        for k in (0, 1)
    ]
    tests = [
        _logistic_domain(sample_std_gaussian(n_test, d, rng), gs[k], rng, k)
        for k in (0, 1)
    ]
    meta = {
        "example": "ex2",
        "center": centers,
        "target_g": gs,
        "source_g": [example2_source_g(s) for s in (1, 2, 3, 4)],
        "noise_sd": 1.0,
        "sampler": sample_std_gaussian,
    }
    return GeneratedStudy(sources=sources, targets=targets, test_sets=tests, metadata=meta)


def gen_example3(departure: str, sources_used, n_s: int = 2000, n_0: int = 300,
                 d: int = 20, seed: int = 0, n_test: int = 10_000) -> GeneratedStudy:
    """Sources with scheduled discrepancy from the target.

    ``departure`` selects the coefficient schedule ("l1" or "cosine");
    ``sources_used`` is the subset of indices 1..8 to generate.  Sources
    7, 8 are pure noise relative to the target signal.  Covariates are
    standard Gaussian; the target model matches gen_example1's form.
    """
    if d < 6:
        raise ValueError("d must be at least 6")
    sources_used = sorted(set(int(s) for s in sources_used))
    if not sources_used or sources_used[0] < 1 or sources_used[-1] > 8:
        raise ValueError("sources_used must be a non-empty subset of 1..8")
    center = _cached_center("ex3", d, example1_target_g0, sample_std_gaussian)

    def g(x):
        return example1_target_g0(x) - center

    rng = np.random.default_rng(seed)
    sources = [
        _regression_domain(
            sample_std_gaussian(n_s, d, rng), example3_source_g(departure, s), 0.5, rng, s
        )
        for s in sources_used
    ]
    target = _logistic_domain(sample_std_gaussian(n_0, d, rng), g, rng, 0)
    test = _logistic_domain(sample_std_gaussian(n_test, d, rng), g, rng, 0)
    meta = {
        "example": "ex3",
        "departure": departure,
        "sources_used": sources_used,
        "center": center,
        "target_g": g,
        "source_g": {s: example3_source_g(departure, s) for s in sources_used},
        "gammas": {s: example3_gamma(departure, s) for s in sources_used},
        "noise_sd": 0.5,
        "sampler": sample_std_gaussian,
    }
    return GeneratedStudy(sources=sources, targets=[target], test_sets=[test], metadata=meta)


def gen_example_s1(n_s: int, n_0: int, d: int, seed: int,
                   n_test: int = 10_000) -> GeneratedStudy:
    """All-regression study on uniform(0,1) covariates; the target response
    is continuous, so no centering is involved."""
    if d < 6:
        raise ValueError("d must be at least 6")
    rng = np.random.default_rng(seed)
    sources = [
        _regression_domain(
            sample_uniform(n_s, d, rng), example_s1_source_g(s), 0.5, rng, s
        )
        for s in (1, 2, 3, 4)
    ]
    target = _regression_domain(sample_uniform(n_0, d, rng), example_s1_target_g, 0.5, rng, 0)
    test = _regression_domain(sample_uniform(n_test, d, rng), example_s1_target_g, 0.5, rng, 0)
    meta = {
        "example": "s1",
        "target_g": example_s1_target_g,
        "source_g": [example_s1_source_g(s) for s in (1, 2, 3, 4)],
        "noise_sd": 0.5,
        "sampler": sample_uniform,
    }
    return GeneratedStudy(sources=sources, targets=[target], test_sets=[test], metadata=meta)


def example3_distance_profile(departure: str, d: int = 20, n_mc: int = 10**5,
                              seed: int = CENTER_SEED) -> list[tuple[int, float]]:
    """Per-source function distances to the target for the given schedule.

    Departure "l1" reports the L1 distance E|g_s - g|; "cosine" reports
    1 - Cor[g_s, g].  The target function is the centered logistic signal.
    """
    center = _cached_center("ex3", d, example1_target_g0, sample_std_gaussian)

    def g(x):
        return example1_target_g0(x) - center

    out = []
    for s in range(1, 9):
        gs = example3_source_g(departure, s)
        if departure == "l1":
            val = fn_l1_distance(gs, g, sample_std_gaussian, d, n_mc, seed)
        else:
            val = fn_cosine_distance(gs, g, sample_std_gaussian, d, n_mc, seed)
        out.append((s, val))
    return out
