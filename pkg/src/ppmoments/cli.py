"""Batch entry point: run verification suites and emit JSON-lines reports.

Usage:
    ppmoments run --suite exact-gnz --seed 1 --out report.jsonl
    ppmoments run --config experiment.json
    ppmoments list-suites
    ppmoments explain transform-invariance

A report stream starts with one header record carrying the version, a hash
of the effective configuration and a timestamp (the only nondeterministic
field, quarantined there so report bodies diff cleanly), followed by one
record per instance and a closing summary record. The exit status is 0 when
every gate passes, 1 on gate failure, 2 on config parse errors and 3 on
validation errors.

The environment variable PPMOMENTS_THREADS caps worker parallelism. The
current implementation evaluates every suite sequentially (an effective
parallelism of 1, below any cap); the variable is validated and recorded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .combinatorics import stirling_reindex_gap
from .difference_ops import diff, diff_multi, product_expansion_gap
from .finite_model import load_model
from .identities import (
    IdentityReport,
    factorial_moment_identity,
    joint_factorial_identity,
    partition_moment_identity,
    poisson_independence_check,
    stirling_moment_identity,
)
from .instances import generate_random_instance
from .montecarlo import (
    PoissonModel,
    StraussModel,
    Window,
    estimate_factorial_identity,
    estimate_partition_moment,
    gnz_estimates,
    process_from_config,
    sample_many,
    sample_poisson,
    z_score,
)
from .transforms import (
    TransformSpec,
    invariance_suite,
    region_from_config,
    rho_tau_check,
    verify_transform_condition,
)

EXIT_PASS = 0
EXIT_GATE_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_VALIDATION_ERROR = 3

EXACT_GATE = 1e-9
EXPANSION_GATE = 1e-10
Z_GATE = 4.0
P_GATE = 1e-3


@dataclass
class SuiteConfig:
    """Validated suite invocation."""

    suite: str
    seed: int
    instance_count: int | None = None
    parameters: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "SuiteConfig":
        if "suite" not in raw:
            raise ValueError("config must name a suite")
        suite = str(raw["suite"])
        if suite not in SUITES:
            raise ValueError(f"unknown suite {suite!r}")
        seed = raw.get("seed")
        if seed is None:
            raise ValueError("config must provide a seed")
        count = raw.get("instance_count")
        parameters = raw.get("parameters", {})
        if not isinstance(parameters, dict):
            raise ValueError("parameters must be an object")
        return cls(suite, int(seed), None if count is None else int(count), parameters)

    def canonical(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "instance_count": self.instance_count,
            "parameters": self.parameters,
        }


def _child_seed(seed: int, index: int) -> int:
    return (seed * 1_000_003 + index) % (1 << 62)


def _emit(stream, record: dict):
    stream.write(json.dumps(record, sort_keys=True) + "\n")


def _identity_record(report: IdentityReport, instance: int, gate: float) -> dict:
    record = report.to_dict()
    record["record"] = "identity"
    record["instance"] = instance
    record["gate"] = gate
    record["passed"] = report.rel_gap <= gate
    return record


def _estimate_record(name, instance, lhs, rhs, target=None) -> dict:
    z = z_score(lhs, rhs)
    record = {
        "record": "estimate",
        "name": name,
        "instance": instance,
        "lhs": lhs.to_dict(),
        "rhs": rhs.to_dict(),
        "z": z,
        "gate": Z_GATE,
        "passed": abs(z) <= Z_GATE,
    }
    if target is not None:
        record["target"] = target
    return record


# -- suite runners -------------------------------------------------------------
# Each runner yields report records; a record with "passed": False fails the
# suite gate.


def _model_for(config: SuiteConfig, bounds: dict, seed: int, kind: str) -> dict:
    path = config.parameters.get("model_file")
    bundle = generate_random_instance(kind, bounds, seed)
    if path is not None:
        bundle["model"] = load_model(path)
    return bundle


def _run_exact_gnz(config: SuiteConfig):
    count = config.instance_count or 200
    bounds = {"m_min": 3, "m_max": int(config.parameters.get("m_max", 8)),
              "n_kernels": int(config.parameters.get("kernels", 5))}
    for i in range(count):
        bundle = _model_for(config, bounds, _child_seed(config.seed, i), "gnz")
        model = bundle["model"]
        for j, kernel in enumerate(bundle["kernels"]):
            lhs, rhs = model.gnz_residual(kernel)
            report = IdentityReport.build(
                "gnz", lhs, rhs, {"instance": i, "kernel": j, "sites": model.m}
            )
            yield _identity_record(report, i, EXACT_GATE)


def _run_exact_factorial(config: SuiteConfig):
    count = config.instance_count or 100
    bounds = {"m_min": 3, "m_max": int(config.parameters.get("m_max", 7)),
              "n_max": int(config.parameters.get("n_max", 3))}
    for i in range(count):
        bundle = _model_for(config, bounds, _child_seed(config.seed, i), "factorial")
        report = factorial_moment_identity(
            bundle["model"], bundle["functional"], bundle["region"], bundle["n"]
        )
        yield _identity_record(report, i, EXACT_GATE)


def _run_exact_joint(config: SuiteConfig):
    count = config.instance_count or 50
    bounds = {"m_min": 4, "m_max": int(config.parameters.get("m_max", 7)),
              "n_max": int(config.parameters.get("n_max", 4))}
    for i in range(count):
        bundle = _model_for(config, bounds, _child_seed(config.seed, i), "joint")
        report = joint_factorial_identity(
            bundle["model"], bundle["functional"], bundle["regions"], bundle["orders"]
        )
        yield _identity_record(report, i, EXACT_GATE)


def _run_exact_stirling(config: SuiteConfig):
    count = config.instance_count or 50
    bounds = {"m_min": 3, "m_max": int(config.parameters.get("m_max", 7)),
              "n_max": int(config.parameters.get("n_max", 3))}
    for i in range(count):
        bundle = _model_for(config, bounds, _child_seed(config.seed, i), "stirling")
        report = stirling_moment_identity(
            bundle["model"], bundle["functional"], bundle["region"], bundle["n"]
        )
        yield _identity_record(report, i, EXACT_GATE)


def _run_exact_partition(config: SuiteConfig):
    count = config.instance_count or 50
    bounds = {"m_min": 3, "m_max": int(config.parameters.get("m_max", 6)),
              "n_max": int(config.parameters.get("n_max", 3))}
    for i in range(count):
        bundle = _model_for(config, bounds, _child_seed(config.seed, i), "partition")
        report = partition_moment_identity(bundle["model"], bundle["kernel"], bundle["n"])
        yield _identity_record(report, i, EXACT_GATE)


def _run_exact_independence(config: SuiteConfig):
    count = config.instance_count or 25
    bounds = {"m_min": 6, "m_max": int(config.parameters.get("m_max", 8)),
              "n_max": int(config.parameters.get("n_max", 3))}
    for i in range(count):
        bundle = generate_random_instance(
            "independence", bounds, _child_seed(config.seed, i)
        )
        reports = poisson_independence_check(
            bundle["model"], bundle["regions"], bundle["max_order"]
        )
        for report in reports:
            yield _identity_record(report, i, EXACT_GATE)


def _run_stir1(config: SuiteConfig):
    matrices = config.instance_count or 20
    n_max = int(config.parameters.get("n_max", 4))
    m_max = int(config.parameters.get("m_max", 3))
    p_max = int(config.parameters.get("p_max", 2))
    instance = 0
    for n in range(1, n_max + 1):
        for m in range(1, m_max + 1):
            for p in range(1, p_max + 1):
                rng = np.random.default_rng(
                    np.random.SeedSequence(_child_seed(config.seed, instance))
                )
                for k in range(matrices):
                    alphas = [[float(v) for v in rng.uniform(-1, 1, m)] for _ in range(p)]
                    betas = [float(v) for v in rng.uniform(-1, 1, p)]
                    lhs, rhs = stirling_reindex_gap(alphas, betas, n, m)
                    report = IdentityReport.build(
                        "stirling-reindex", lhs, rhs,
                        {"n": n, "m": m, "p": p, "matrix": k},
                    )
                    yield _identity_record(report, instance, EXACT_GATE)
                instance += 1


def _run_ddd0(config: SuiteConfig):
    count = config.instance_count or 50
    l_max = int(config.parameters.get("l_max", 3))
    bounds = {"m_min": 3, "m_max": int(config.parameters.get("m_max", 6)),
              "l_max": l_max}
    for i in range(count):
        bundle = generate_random_instance(
            "expansion", bounds, _child_seed(config.seed, i)
        )
        lhs, rhs = product_expansion_gap(
            bundle["kernels"], bundle["points"], bundle["config"]
        )
        report = IdentityReport.build(
            "product-expansion", lhs, rhs,
            {"length": len(bundle["points"]), "sites": bundle["model"].m},
        )
        yield _identity_record(report, i, EXPANSION_GATE)
        # alternating-sum versus composed differences on the same data
        kernel = bundle["kernels"][0]
        points = bundle["points"]
        functional = lambda cfg, k=kernel, x=points[0]: k(x, cfg)
        multi = diff_multi(functional, points)(bundle["config"])
        composed = functional
        for x in points:
            composed = diff(composed, x)
        comp_value = composed(bundle["config"])
        report = IdentityReport.build(
            "difference-composition", multi, comp_value,
            {"length": len(points)},
        )
        yield _identity_record(report, i, EXPANSION_GATE)
    lemma_count = int(config.parameters.get("lemma_count", 25))
    for i in range(lemma_count):
        bundle = generate_random_instance(
            "cover-lemma", bounds, _child_seed(config.seed, 10_000 + i)
        )
        lhs, rhs = product_expansion_gap(
            bundle["kernels"], bundle["points"], bundle["config"]
        )
        report = IdentityReport.build(
            "cover-implication", lhs, 0.0,
            {"length": len(bundle["points"]), "sites": bundle["model"].m},
        )
        yield _identity_record(report, i, EXPANSION_GATE)


def _window_from(parameters: dict) -> Window:
    raw = parameters.get("window")
    if raw is None:
        return Window(0.0, 1.0, 0.0, 1.0)
    return Window(
        float(raw["x_min"]), float(raw["x_max"]),
        float(raw["y_min"]), float(raw["y_max"]),
    )


def _run_mc_poisson(config: SuiteConfig):
    replicates = config.instance_count or 100_000
    window = _window_from(config.parameters)
    intensity = float(config.parameters.get("intensity", 3.0 / window.area))
    orders = config.parameters.get("orders", [1, 2, 3])
    target_mean = intensity * window.area
    rng_seeds = np.random.SeedSequence(config.seed).spawn(replicates)
    counts = np.empty(replicates, dtype=np.int64)
    for rep, child in enumerate(rng_seeds):
        rng = np.random.Generator(np.random.PCG64(child))
        counts[rep] = len(sample_poisson(window, intensity, rng))
    for order in orders:
        values = np.ones(replicates, dtype=float)
        for k in range(order):
            values *= counts - k
        est = float(values.mean())
        se = float(values.std(ddof=1) / np.sqrt(replicates))
        target = target_mean**order
        z = (est - target) / se if se > 0.0 else 0.0
        yield {
            "record": "moment",
            "name": "poisson-factorial-moment",
            "order": order,
            "estimate": est,
            "se": se,
            "target": target,
            "z": z,
            "gate": Z_GATE,
            "passed": abs(z) <= Z_GATE,
        }


def _run_mc_gibbs(config: SuiteConfig):
    window = _window_from(config.parameters)
    beta = float(config.parameters.get("beta", 30.0 / window.area))
    gamma = float(config.parameters.get("gamma", 0.5))
    radius = float(config.parameters.get("r", 0.05))
    n_samples = config.instance_count or 1500
    n_steps = int(config.parameters.get("n_steps", 900))
    model = StraussModel(window, beta, gamma, radius)
    kernels = [
        lambda x, cfg: 1.0,
        lambda x, cfg: x[0],
        lambda x, cfg: float(len(cfg)),
    ]
    pairs = gnz_estimates(model, kernels, n_samples, _child_seed(config.seed, 0), n_steps)
    for j, (lhs, rhs) in enumerate(pairs):
        record = _estimate_record("strauss-gnz", j, lhs, rhs)
        record["kernel"] = j
        yield record
    # gamma = 1 chain against the direct sampler, mean count
    poisson_like = StraussModel(window, beta, 1.0, radius)
    chain = sample_many(poisson_like, max(400, n_samples // 3),
                        _child_seed(config.seed, 1), n_steps)
    direct = sample_many(PoissonModel(window, beta), 4 * n_samples,
                         _child_seed(config.seed, 2))
    chain_counts = np.array([len(c) for c in chain], dtype=float)
    direct_counts = np.array([len(c) for c in direct], dtype=float)
    gap = float(chain_counts.mean() - direct_counts.mean())
    se = float(
        np.hypot(
            chain_counts.std(ddof=1) / np.sqrt(chain_counts.size),
            direct_counts.std(ddof=1) / np.sqrt(direct_counts.size),
        )
    )
    z = gap / se if se > 0.0 else 0.0
    yield {
        "record": "comparison",
        "name": "gibbs-vs-poisson-mean-count",
        "chain_mean": float(chain_counts.mean()),
        "direct_mean": float(direct_counts.mean()),
        "z": z,
        "gate": Z_GATE,
        "passed": abs(z) <= Z_GATE,
    }


def _run_mc_identity(config: SuiteConfig):
    experiments = config.parameters.get("experiments")
    if experiments is None:
        window = _window_from(config.parameters)
        n_samples = config.instance_count or 20_000
        experiments = [
            {
                "process": "poisson", "window": _window_dict(window),
                "intensity": float(config.parameters.get("intensity", 3.0 / window.area)),
                "identity": "factorial", "n": 2, "n_samples": n_samples,
            },
            {
                "process": "strauss", "window": _window_dict(window),
                "beta": float(config.parameters.get("beta", 12.0 / window.area)),
                "gamma": float(config.parameters.get("gamma", 0.5)),
                "r": float(config.parameters.get("r", 0.08)),
                "identity": "factorial", "n": 2,
                "n_samples": max(2000, n_samples // 10),
                "n_steps": int(config.parameters.get("n_steps", 600)),
            },
            {
                "process": "poisson", "window": _window_dict(window),
                "intensity": float(config.parameters.get("intensity", 3.0 / window.area)),
                "identity": "partition", "n": 3, "n_samples": n_samples,
            },
            {
                "process": "strauss", "window": _window_dict(window),
                "beta": float(config.parameters.get("beta", 12.0 / window.area)),
                "gamma": float(config.parameters.get("gamma", 0.5)),
                "r": float(config.parameters.get("r", 0.08)),
                "identity": "partition", "n": 2,
                "n_samples": max(2000, n_samples // 10),
                "n_steps": int(config.parameters.get("n_steps", 600)),
            },
        ]
    for index, experiment in enumerate(experiments):
        yield _run_one_experiment(experiment, index, _child_seed(config.seed, index))


def _window_dict(window: Window) -> dict:
    return {"x_min": window.x_min, "x_max": window.x_max,
            "y_min": window.y_min, "y_max": window.y_max}


def _run_one_experiment(experiment: dict, index: int, seed: int) -> dict:
    """One estimator run from an experiment description.

    The test integrands are fixed bounded functions of the window: the
    region is the left half, the functional 1 + 0.1 |omega| and the kernel
    1 + y - 0.05 |omega|; experiment files select the process, the identity
    ("gnz", "factorial" or "partition"), the order n and the sample counts.
    """
    model = process_from_config(experiment)
    identity = experiment.get("identity", "factorial")
    n_samples = int(experiment.get("n_samples", 10_000))
    n_steps = experiment.get("n_steps")
    n_steps = None if n_steps is None else int(n_steps)
    seed = int(experiment.get("seed", seed))
    window = model.window
    half_x = (window.x_min + window.x_max) / 2.0
    region = lambda x, cfg: x[0] <= half_x
    functional = lambda cfg: 1.0 + 0.1 * len(cfg)
    kernel = lambda x, cfg: 1.0 + x[1] - 0.05 * len(cfg)
    name = f"{experiment.get('process', 'poisson')}-{identity}"
    if identity == "gnz":
        lhs, rhs = gnz_estimates(model, [kernel], n_samples, seed, n_steps)[0]
    elif identity == "factorial":
        lhs, rhs = estimate_factorial_identity(
            model, functional, region, int(experiment.get("n", 2)),
            n_samples, seed, n_steps,
        )
    elif identity == "partition":
        lhs, rhs = estimate_partition_moment(
            model, kernel, int(experiment.get("n", 2)), n_samples, seed, n_steps
        )
    else:
        raise ValueError(f"unknown identity {identity!r}")
    return _estimate_record(name, index, lhs, rhs)


_DEFAULT_REGIONS = (
    {"type": "box", "x_min": -0.6, "x_max": -0.2, "y_min": -0.2, "y_max": 0.2},
    {"type": "box", "x_min": 0.2, "x_max": 0.6, "y_min": -0.2, "y_max": 0.2},
    {"type": "box", "x_min": -0.2, "x_max": 0.2, "y_min": 0.3, "y_max": 0.62},
)


def _run_transform_invariance(config: SuiteConfig):
    params = config.parameters
    offset = float(params.get("offset", 0.37))
    intensity = float(params.get("intensity", 40.0))
    replicates = config.instance_count or 10_000
    window_raw = params.get("window")
    window = (
        Window(-1.05, 1.05, -1.05, 1.05)
        if window_raw is None
        else _window_from(params)
    )
    regions = [region_from_config(r) for r in params.get("regions", _DEFAULT_REGIONS)]
    report = invariance_suite(
        TransformSpec(offset), window, intensity, regions, replicates, config.seed
    )
    for row in report.gof:
        yield {
            "record": "gof", "name": "transform-invariance", **row,
            "gate": P_GATE, "passed": row["p_value"] >= P_GATE,
        }
    for row in report.covariances:
        yield {
            "record": "covariance", "name": "transform-invariance", **row,
            "gate": Z_GATE, "passed": abs(row["z"]) <= Z_GATE,
        }
    for row in report.moments:
        yield {
            "record": "moment", "name": "transform-invariance", **row,
            "gate": Z_GATE, "passed": abs(row["z"]) <= Z_GATE,
        }
    # the vanishing-difference condition on sampled tuples
    condition_count = int(params.get("condition_instances", 20))
    rng = np.random.default_rng(np.random.SeedSequence(_child_seed(config.seed, 1)))
    for i in range(condition_count):
        sample = sample_poisson(window, intensity / 4.0, rng)
        length = int(rng.integers(1, 4))
        points = tuple(
            (float(x), float(y)) for x, y in rng.uniform(-1.1, 1.1, (length, 2))
        )
        ok = verify_transform_condition(TransformSpec(offset), sample, points, 1e-9)
        yield {
            "record": "condition",
            "name": "transform-condition",
            "instance": i,
            "tuple_length": length,
            "passed": bool(ok),
        }


def _run_rho_tau(config: SuiteConfig):
    params = config.parameters
    offset = float(params.get("offset", 0.37))
    intensity = float(params.get("intensity", 30.0))
    replicates = config.instance_count or 5_000
    window_raw = params.get("window")
    window = (
        Window(-1.05, 1.05, -1.05, 1.05)
        if window_raw is None
        else _window_from(params)
    )
    report = rho_tau_check(
        TransformSpec(offset), window, intensity, replicates, config.seed,
        grid_size=int(params.get("grid_size", 3)),
    )
    for row in report.first_moments:
        yield {
            "record": "moment", "name": "rho-tau-first", **row,
            "gate": Z_GATE, "passed": abs(row["z"]) <= Z_GATE,
        }
    for row in report.second_moments:
        yield {
            "record": "moment", "name": "rho-tau-second", **row,
            "gate": Z_GATE, "passed": abs(row["z"]) <= Z_GATE,
        }


SUITES = {
    "exact-gnz": (
        _run_exact_gnz,
        "Exact two-sided check of the Georgii-Nguyen-Zessin identity on "
        "random finite models.",
    ),
    "exact-factorial": (
        _run_exact_factorial,
        "Exact factorial moment identity E[F N(A)_(n)] for random "
        "configuration-dependent regions.",
    ),
    "exact-joint": (
        _run_exact_joint,
        "Exact joint factorial moment identity for families of disjoint "
        "random regions.",
    ),
    "exact-stirling": (
        _run_exact_stirling,
        "Exact raw-moment identity E[F N(A)^n] via Stirling numbers over "
        "the factorial representation.",
    ),
    "exact-partition": (
        _run_exact_partition,
        "Exact moment identity for sums sum_x u(x, omega) via set "
        "partitions.",
    ),
    "exact-independence": (
        _run_exact_independence,
        "Factorization of joint factorial moments for swap regions of the "
        "q = 1 model (independent Poisson-type counts).",
    ),
    "stir1": (
        _run_stir1,
        "Stirling reindexing identity (id stir1): composition/position-set "
        "sums against partition/index-tuple sums, by direct enumeration.",
    ),
    "ddd0": (
        _run_ddd0,
        "Product difference expansion (id ddd0): iterated differences of "
        "kernel products against sums over index-subset families, the "
        "alternating-sum form against composed differences, and the "
        "vanishing-cover implication.",
    ),
    "mc-poisson": (
        _run_mc_poisson,
        "Monte Carlo factorial moments of Poisson counts against "
        "(intensity * area)^n.",
    ),
    "mc-gibbs": (
        _run_mc_gibbs,
        "Birth-death chain for the Strauss process: Monte Carlo GNZ "
        "residuals and the gamma = 1 reduction to Poisson.",
    ),
    "mc-identity": (
        _run_mc_identity,
        "Monte Carlo two-sided estimates of the factorial and partition "
        "moment identities on continuous windows.",
    ),
    "transform-invariance": (
        _run_transform_invariance,
        "Distribution invariance of the Poisson process under the "
        "hull-conditioned rotation: chi-square goodness of fit, "
        "covariances, factorial moments, and the vanishing-difference "
        "condition.",
    ),
    "rho-tau": (
        _run_rho_tau,
        "First and second factorial moment measures of the transformed "
        "Poisson process against the constant-correlation prediction.",
    ),
}

_EXPLANATIONS = {
    "exact-gnz": (
        "For a finite model with hereditary density q and Papangelou density "
        "c(x, omega) = q(omega u x)/q(omega), the identity "
        "E[sum_{x in omega} u(x, omega)] = sum_x sigma_x E[c(x, omega) "
        "u(x, omega u x)] holds exactly; the suite evaluates both sides by "
        "full enumeration on random models and kernels."
    ),
    "exact-factorial": (
        "E[F N(A)_(n)] equals the sum over ordered n-tuples of distinct "
        "sites of the sigma-weighted expectation of the compound Papangelou "
        "density times F and the region indicators evaluated after adding "
        "the tuple. A is allowed to depend on the configuration."
    ),
    "exact-joint": (
        "The joint version: E[F prod_i N(A_i)_(n_i)] equals the tensorized "
        "tuple sum when the random regions are disjoint for every "
        "configuration."
    ),
    "exact-stirling": (
        "E[F N(A)^n] = sum_k S(n,k) T_k where T_k is the order-k factorial "
        "right side and S(n,k) are Stirling numbers of the second kind."
    ),
    "exact-partition": (
        "E[(sum_{x in omega} u(x, omega))^n] expands over set partitions of "
        "{1..n}: each partition with k blocks contributes an ordered "
        "k-tuple sum with u raised to the block sizes."
    ),
    "exact-independence": (
        "For the q = 1 model and disjoint regions with configuration-"
        "independent weight multisets satisfying the vanishing-cover "
        "condition, joint factorial moments factorize into the per-region "
        "predictions n! e_n(p_x), the atomic analogue of independent "
        "Poisson counts with parameters sigma(A_i)."
    ),
    "stir1": (
        "The combinatorial identity equating (a) sums over compositions "
        "n_1+...+n_p = n and disjoint position sets I_1..I_p covering "
        "{1..m} weighted by Stirling numbers and factorials with (b) sums "
        "over m-block partitions of {1..n} and index tuples; it is the "
        "reindexing step that turns factorial moment identities into raw "
        "moment identities."
    ),
    "ddd0": (
        "D_{x_1}...D_{x_l}(u_1(x_1,.) ... u_l(x_l,.)) equals the sum over "
        "all families (Theta_1..Theta_l) of index subsets with union "
        "{1..l} of the product of D_{Theta_j} u_j; when every family of "
        "nonempty subsets yields zero, the full difference vanishes."
    ),
    "mc-poisson": (
        "Empirical factorial moments E[N(A)_(n)] of a sampled Poisson "
        "process must match (intensity * |A|)^n within Monte Carlo error."
    ),
    "mc-gibbs": (
        "A birth-death Metropolis-Hastings chain with acceptance ratios "
        "driven by c(x, omega) = beta gamma^t targets the Strauss process; "
        "the GNZ identity must hold statistically, and gamma = 1 reduces "
        "the chain to the Poisson process."
    ),
    "mc-identity": (
        "The factorial and partition moment identities estimated on "
        "continuous windows: left sides from sampled configurations, right "
        "sides from the window-uniform importance representation of the "
        "intensity integrals."
    ),
    "transform-invariance": (
        "The hull-conditioned star rotation preserves Lebesgue measure and "
        "satisfies the vanishing-difference condition, so it maps the "
        "Poisson process to itself: counts of fixed disjoint regions stay "
        "independent Poisson with unchanged parameters."
    ),
    "rho-tau": (
        "The transformed Poisson process keeps correlation function "
        "identically 1: first moments of disjoint boxes match intensity * "
        "area and second product moments match the products."
    ),
}


def run_suite(config: SuiteConfig, stream) -> int:
    """Execute a suite, writing JSON-lines records to the stream.

    Returns the exit status (0 pass, 1 gate failure, 3 validation error).
    """
    runner, _ = SUITES[config.suite]
    threads = _thread_cap()
    header = {
        "record": "header",
        "version": __version__,
        "suite": config.suite,
        "config_hash": hashlib.sha256(
            json.dumps(config.canonical(), sort_keys=True).encode()
        ).hexdigest(),
        "threads": threads,
        "timestamp": time.time(),
    }
    _emit(stream, header)
    failures = 0
    total = 0
    try:
        for record in runner(config):
            total += 1
            if not record.get("passed", True):
                failures += 1
            _emit(stream, record)
    except ValueError as exc:
        _emit(stream, {"record": "error", "message": str(exc)})
        return EXIT_VALIDATION_ERROR
    _emit(
        stream,
        {
            "record": "summary",
            "suite": config.suite,
            "n_records": total,
            "n_failures": failures,
            "passed": failures == 0,
        },
    )
    return EXIT_PASS if failures == 0 else EXIT_GATE_FAILURE


def _thread_cap() -> int:
    raw = os.environ.get("PPMOMENTS_THREADS")
    if raw is None:
        return 1
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"PPMOMENTS_THREADS must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ValueError("PPMOMENTS_THREADS must be at least 1")
    return cap


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ppmoments",
        description="Verification suites for point process moment identities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_parser = sub.add_parser("run", help="run a verification suite")
    run_parser.add_argument("--suite", help="suite name (see list-suites)")
    run_parser.add_argument("--config", help="path to a JSON suite config")
    run_parser.add_argument("--seed", type=int, help="seed (overrides config)")
    run_parser.add_argument(
        "--instances", type=int, help="instance count (overrides config)"
    )
    run_parser.add_argument("--out", help="output path (default: stdout)")
    sub.add_parser("list-suites", help="list available suites")
    explain_parser = sub.add_parser("explain", help="describe what a suite verifies")
    explain_parser.add_argument("suite")

    args = parser.parse_args(argv)

    if args.command == "list-suites":
        for name in sorted(SUITES):
            print(f"{name}: {SUITES[name][1]}")
        return EXIT_PASS

    if args.command == "explain":
        if args.suite not in SUITES:
            print(f"unknown suite {args.suite!r}", file=sys.stderr)
            return EXIT_VALIDATION_ERROR
        print(f"{args.suite}: {SUITES[args.suite][1]}")
        print()
        print(_EXPLANATIONS[args.suite])
        return EXIT_PASS

    raw: dict = {}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as handle:
                raw = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"cannot read config: {exc}", file=sys.stderr)
            return EXIT_CONFIG_ERROR
        if not isinstance(raw, dict):
            print("config must be a JSON object", file=sys.stderr)
            return EXIT_CONFIG_ERROR
    if args.suite is not None:
        raw["suite"] = args.suite
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.instances is not None:
        raw["instance_count"] = args.instances

    try:
        config = SuiteConfig.from_dict(raw)
        _thread_cap()
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION_ERROR

    if args.out is None:
        return run_suite(config, sys.stdout)
    with open(args.out, "w", encoding="utf-8") as handle:
        return run_suite(config, handle)


if __name__ == "__main__":
    sys.exit(main())
