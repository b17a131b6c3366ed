"""Exact two-sided evaluation of the moment identities on finite models.

Each evaluator computes the left side by brute-force expectation and the
right side by the tuple-sum representation it is supposed to equal, then
packages both into an IdentityReport. The identities are theorems, so any
gap beyond float roundoff is an implementation bug; the reports make that
check mechanical.

Right sides sum over ordered tuples of distinct sites. Tuples that meet
the current configuration or repeat a site contribute zero through the
compound Campbell density, which is what makes the atomic convention
consistent with counting ordered distinct tuples of points.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Sequence

from .combinatorics import falling_factorial, partitions, stirling2
from .finite_model import Configuration, FiniteModel, Functional, Kernel, RandomSet

MAX_IDENTITY_ORDER = 4
MAX_IDENTITY_SITES = 12
_EXHAUSTIVE_REGION_LIMIT = 10
_REGION_SAMPLES = 1000


class DisjointnessError(ValueError):
    """Raised when supposedly disjoint random regions overlap for some omega."""


class NotPoissonError(ValueError):
    """Raised when the independence check receives a non-Poisson model."""


class RandomWeightError(ValueError):
    """Raised when a region's weight multiset varies with the configuration."""


class CoverConditionError(ValueError):
    """Raised when the vanishing-cover hypothesis fails on sampled points."""


@dataclass
class IdentityReport:
    """Two-sided evaluation of one identity instance."""

    name: str
    lhs: float
    rhs: float
    abs_gap: float
    rel_gap: float
    parameters: dict = field(default_factory=dict)

    @classmethod
    def build(cls, name: str, lhs: float, rhs: float, parameters: dict) -> "IdentityReport":
        abs_gap = abs(lhs - rhs)
        rel_gap = abs_gap / (1.0 + max(abs(lhs), abs(rhs)))
        return cls(name, lhs, rhs, abs_gap, rel_gap, parameters)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "abs_gap": self.abs_gap,
            "rel_gap": self.rel_gap,
            "parameters": self.parameters,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# -- shared helpers -----------------------------------------------------------


def _guard(model: FiniteModel, n: int):
    if not (1 <= n <= MAX_IDENTITY_ORDER):
        raise ValueError(f"order must satisfy 1 <= n <= {MAX_IDENTITY_ORDER}")
    if model.m > MAX_IDENTITY_SITES:
        raise ValueError(f"identity evaluators support at most {MAX_IDENTITY_SITES} sites")


def region_count(region: RandomSet, config: Configuration) -> int:
    """N(A)(omega): number of points of omega lying in A(omega)."""
    return sum(1 for x in config if region(x, config))


def validate_disjoint(model: FiniteModel, regions: Sequence[RandomSet]):
    """Check that the regions are pairwise disjoint for every configuration.

    Exhaustive for small models, sampled above. Raises DisjointnessError.
    """
    masks: Sequence[int]
    if model.m <= _EXHAUSTIVE_REGION_LIMIT:
        masks = range(1 << model.m)
    else:
        step = max(1, (1 << model.m) // _REGION_SAMPLES)
        masks = range(0, 1 << model.m, step)
    for mask in masks:
        config = model.config(mask)
        for x in range(model.m):
            hits = sum(1 for region in regions if region(x, config))
            if hits > 1:
                raise DisjointnessError(
                    f"regions overlap at site {x} for configuration {sorted(config)}"
                )


def _tuple_weight(model: FiniteModel, sites: tuple) -> float:
    w = 1.0
    for x in sites:
        w *= model.weights[x]
    return w


def _epsilon_rhs(model: FiniteModel, sites: tuple, integrand) -> float:
    """sum_omega P(omega) chat(sites, omega) integrand(omega u sites).

    integrand receives the bitmask of the augmented configuration.
    """
    q = model._q
    prob = model._prob
    tmask = 0
    for x in sites:
        tmask |= 1 << x
    acc = 0.0
    for mask in model.support:
        if mask & tmask:
            continue
        q_up = q[mask | tmask]
        if q_up == 0.0:
            continue
        value = integrand(mask | tmask)
        if value == 0.0:
            continue
        acc += prob[mask] * (q_up / q[mask]) * value
    return acc


# -- identity evaluators ------------------------------------------------------


def factorial_moment_identity(
    model: FiniteModel, functional: Functional, region: RandomSet, n: int
) -> IdentityReport:
    """Factorial moment identity for a random region.

    lhs = E[F N(A)_(n)] and rhs sums, over ordered n-tuples of distinct
    sites, the sigma-weights times E[chat(tuple, omega) * F(omega u tuple)
    * prod_k 1_{A(omega u tuple)}(x_k)].
    """
    _guard(model, n)
    lhs = model.expectation(
        lambda cfg: functional(cfg) * falling_factorial(region_count(region, cfg), n)
    )
    rhs = _factorial_rhs(model, functional, region, n)
    return IdentityReport.build(
        "factorial-moment", lhs, rhs, {"n": n, "sites": model.m}
    )


def _factorial_rhs(model, functional, region, n):
    total = 0.0
    for sites in permutations(range(model.m), n):

        def integrand(umask, sites=sites):
            cfg = model.config(umask)
            for x in sites:
                if not region(x, cfg):
                    return 0.0
            return functional(cfg)

        total += _tuple_weight(model, sites) * _epsilon_rhs(model, sites, integrand)
    return total


def joint_factorial_identity(
    model: FiniteModel,
    functional: Functional,
    regions: Sequence[RandomSet],
    orders: Sequence[int],
) -> IdentityReport:
    """Joint factorial moment identity for a.s. disjoint random regions.

    lhs = E[F prod_i N(A_i)_(n_i)]; rhs sums over ordered distinct
    n-tuples whose first n_1 coordinates carry region 1's indicator, the
    next n_2 region 2's, and so on.
    """
    if len(regions) != len(orders) or not regions:
        raise ValueError("need matching nonempty regions and orders")
    if any(k < 1 for k in orders):
        raise ValueError("orders must be positive")
    n = sum(orders)
    _guard(model, n)
    validate_disjoint(model, regions)

    def lhs_functional(cfg):
        value = functional(cfg)
        for region, order in zip(regions, orders):
            if value == 0.0:
                return 0.0
            value *= falling_factorial(region_count(region, cfg), order)
        return value

    lhs = model.expectation(lhs_functional)
    rhs = _joint_rhs(model, functional, regions, orders)
    return IdentityReport.build(
        "joint-factorial", lhs, rhs, {"orders": list(orders), "sites": model.m}
    )


def _position_regions(regions, orders):
    slots = []
    for region, order in zip(regions, orders):
        slots.extend([region] * order)
    return slots


def _joint_rhs(model, functional, regions, orders):
    n = sum(orders)
    slots = _position_regions(regions, orders)
    total = 0.0
    for sites in permutations(range(model.m), n):

        def integrand(umask, sites=sites):
            cfg = model.config(umask)
            for x, region in zip(sites, slots):
                if not region(x, cfg):
                    return 0.0
            return functional(cfg)

        total += _tuple_weight(model, sites) * _epsilon_rhs(model, sites, integrand)
    return total


def stirling_moment_identity(
    model: FiniteModel, functional: Functional, region: RandomSet, n: int
) -> IdentityReport:
    """Raw moment identity E[F N(A)^n] = sum_k S(n,k) (factorial rhs at k)."""
    _guard(model, n)
    lhs = model.expectation(
        lambda cfg: functional(cfg) * float(region_count(region, cfg)) ** n
    )
    rhs = 0.0
    for k in range(1, n + 1):
        rhs += stirling2(n, k) * _factorial_rhs(model, functional, region, k)
    return IdentityReport.build(
        "stirling-moment", lhs, rhs, {"n": n, "sites": model.m}
    )


def partition_moment_identity(
    model: FiniteModel, kernel: Kernel, n: int
) -> IdentityReport:
    """Moment identity for a configuration-dependent process u.

    lhs = E[(sum_{x in omega} u(x, omega))^n]; rhs sums over partitions of
    {1..n} into k blocks and ordered distinct k-tuples of sites the
    sigma-weighted E[chat * prod_j u(x_j, omega u tuple)^{|B_j|}].
    """
    _guard(model, n)

    def lhs_functional(cfg):
        return sum(kernel(x, cfg) for x in cfg) ** n

    lhs = model.expectation(lhs_functional)

    cache: dict[tuple, float] = {}

    def u_value(x, umask):
        key = (x, umask)
        value = cache.get(key)
        if value is None:
            value = kernel(x, model.config(umask))
            cache[key] = value
        return value

    rhs = 0.0
    for part in partitions(n):
        sizes = part.block_sizes()
        k = len(sizes)
        for sites in permutations(range(model.m), k):

            def integrand(umask, sites=sites, sizes=sizes):
                prod_value = 1.0
                for x, exponent in zip(sites, sizes):
                    prod_value *= u_value(x, umask) ** exponent
                    if prod_value == 0.0:
                        return 0.0
                return prod_value

            rhs += _tuple_weight(model, sites) * _epsilon_rhs(model, sites, integrand)
    return IdentityReport.build(
        "partition-moment", lhs, rhs, {"n": n, "sites": model.m}
    )


def dtheta_joint_expansion(
    model: FiniteModel,
    functional: Functional,
    regions: Sequence[RandomSet],
    orders: Sequence[int],
) -> IdentityReport:
    """Joint factorial identity with the right side recomputed through the
    difference-operator expansion.

    For each tuple, the integrand F * tensorized indicators is expanded as
    the sum over all index subsets Theta of the multi-point difference
    D_Theta evaluated at the base configuration, every term computed
    separately. The result must agree with the direct representation, so
    the report's lhs is joint_factorial_identity's rhs and the rhs here is
    the difference-expansion total.
    """
    if len(regions) != len(orders) or not regions:
        raise ValueError("need matching nonempty regions and orders")
    n = sum(orders)
    _guard(model, n)
    validate_disjoint(model, regions)

    direct = _joint_rhs(model, functional, regions, orders)

    slots = _position_regions(regions, orders)
    q = model._q
    prob = model._prob
    expanded = 0.0
    subset_masks = list(range(1 << n))
    signs = {}
    for theta in subset_masks:
        for eta in subset_masks:
            if eta & ~theta:
                continue
            bits = bin(theta).count("1") - bin(eta).count("1")
            signs[(theta, eta)] = 1.0 if bits % 2 == 0 else -1.0

    for sites in permutations(range(model.m), n):
        tmask = 0
        bits = []
        for x in sites:
            bits.append(1 << x)
            tmask |= 1 << x
        weight = _tuple_weight(model, sites)
        acc = 0.0
        for mask in model.support:
            if mask & tmask:
                continue
            q_up = q[mask | tmask]
            if q_up == 0.0:
                continue
            chat = q_up / q[mask]
            # g[eta] = F and indicators evaluated at omega u {points in eta}
            g = []
            for eta in subset_masks:
                emask = mask
                for j in range(n):
                    if eta >> j & 1:
                        emask |= bits[j]
                cfg = model.config(emask)
                value = functional(cfg)
                if value != 0.0:
                    for j, region in enumerate(slots):
                        if not region(sites[j], cfg):
                            value = 0.0
                            break
                g.append(value)
            theta_total = 0.0
            for theta in subset_masks:
                eta = theta
                while True:
                    theta_total += signs[(theta, eta)] * g[eta]
                    if eta == 0:
                        break
                    eta = (eta - 1) & theta
            acc += prob[mask] * chat * theta_total
        expanded += weight * acc

    return IdentityReport.build(
        "dtheta-joint-expansion",
        direct,
        expanded,
        {"orders": list(orders), "sites": model.m},
    )


# -- Poisson independence ----------------------------------------------------


def poisson_independence_check(
    model: FiniteModel, regions: Sequence[RandomSet], max_order: int
) -> list[IdentityReport]:
    """Factorization of joint factorial moments for the q = 1 model.

    For regions that are a.s. disjoint, have configuration-independent
    weight multisets, and satisfy the vanishing-cover condition, the counts
    N(A_i) are independent with the same law as the count of a fixed region
    carrying the same weights. The check reports, for every multi-order
    (n_1, ..., n_p) with sum <= max_order,

        lhs = E[prod_i N(A_i)_(n_i)]  versus
        rhs = prod_i n_i! e_{n_i}(p_x : x in A_i),

    where p_x = sigma_x / (1 + sigma_x) is the inclusion probability of
    site x and e_k is the elementary symmetric polynomial. The rhs is the
    atomic-space analogue of the product of sigma(A_i)^{n_i}.
    """
    if max_order < 1:
        raise ValueError("max_order must be positive")
    if not regions:
        raise ValueError("need at least one region")
    _assert_poisson(model)
    validate_disjoint(model, regions)
    weight_multisets = [_region_weight_multiset(model, region) for region in regions]
    _assert_cover_condition(model, regions)

    predictions = []
    for weights in weight_multisets:
        probs = [w / (1.0 + w) for w in weights]
        predictions.append(_factorial_moment_table(probs, max_order))

    reports = []
    p = len(regions)
    for orders in product(range(1, max_order + 1), repeat=p):
        if sum(orders) > max_order:
            continue

        def lhs_functional(cfg, orders=orders):
            value = 1.0
            for region, order in zip(regions, orders):
                value *= falling_factorial(region_count(region, cfg), order)
                if value == 0.0:
                    return 0.0
            return value

        lhs = model.expectation(lhs_functional)
        rhs = 1.0
        for i, order in enumerate(orders):
            rhs *= predictions[i][order]
        reports.append(
            IdentityReport.build(
                "poisson-independence",
                lhs,
                rhs,
                {"orders": list(orders), "sites": model.m},
            )
        )
    return reports


def _assert_poisson(model: FiniteModel):
    q = model._q
    base = q[0]
    for mask in range(1 << model.m):
        if abs(q[mask] - base) > 1e-12 * base:
            raise NotPoissonError("model density is not identically 1")


def _region_weight_multiset(model: FiniteModel, region: RandomSet) -> tuple:
    reference = None
    for mask in range(1 << model.m):
        cfg = model.config(mask)
        weights = tuple(
            sorted(model.weights[x] for x in range(model.m) if region(x, cfg))
        )
        if reference is None:
            reference = weights
        elif weights != reference:
            raise RandomWeightError(
                "region weight multiset varies with the configuration"
            )
    return reference or ()


def _assert_cover_condition(model: FiniteModel, regions: Sequence[RandomSet]):
    from .difference_ops import cover_condition_holds

    kernels = [
        (lambda region: lambda x, cfg: 1.0 if region(x, cfg) else 0.0)(region)
        for region in regions
    ]
    base_configs = [frozenset(), frozenset(range(0, model.m, 2))]
    sites = list(range(model.m))
    # deterministic sample: all singles, a spread of pairs and triples
    tuples: list[tuple] = [(x,) for x in sites]
    pairs = [(a, b) for a in sites for b in sites if a != b]
    tuples.extend(pairs[:: max(1, len(pairs) // 12)])
    triples = [
        (a, b, c) for a in sites for b in sites for c in sites
        if len({a, b, c}) == 3
    ]
    tuples.extend(triples[:: max(1, len(triples) // 12)])
    for config in base_configs:
        for points in tuples:
            for kernel in kernels:
                family = [kernel] * len(points)
                if not cover_condition_holds(family, points, config, tol=1e-9):
                    raise CoverConditionError(
                        f"cover condition fails at points {points}"
                    )


def _factorial_moment_table(probs: Sequence[float], max_order: int) -> list[float]:
    """table[k] = k! e_k(probs), the k-th factorial moment of the count."""
    elementary = [0.0] * (max_order + 1)
    elementary[0] = 1.0
    for p in probs:
        for k in range(min(max_order, len(probs)), 0, -1):
            elementary[k] += p * elementary[k - 1]
    return [math.factorial(k) * elementary[k] for k in range(max_order + 1)]
