"""Exact engine: point processes on a finite weighted ground space.

A model is a hereditary unnormalized density q over the subsets of m sites,
together with strictly positive site weights playing the role of the
intensity measure. Probabilities, expectations, Papangelou densities and
the compound Campbell density are all computed by full enumeration of the
2^m configurations, so identities can be checked to float roundoff.

Sites are integers 0..m-1 and a configuration is a frozenset of sites.
Functionals, random sets and kernels are plain callables:

    Functional: Configuration -> float
    RandomSet:  (site, Configuration) -> bool
    Kernel:     (site, Configuration) -> float
"""

from __future__ import annotations

import json
import math
import random as _stdlib_random
from array import array
from dataclasses import dataclass
from typing import Callable, Sequence

Configuration = frozenset
Functional = Callable[[Configuration], float]
RandomSet = Callable[[object, Configuration], bool]
Kernel = Callable[[object, Configuration], float]

MAX_SITES = 22
_CONFIG_CACHE_LIMIT = 16
_HEREDITARY_SAMPLE_LIMIT = 16
_HEREDITARY_SAMPLES = 1000


@dataclass(frozen=True)
class GroundSpace:
    """Finite ground space: m sites with strictly positive weights."""

    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) < 1:
            raise ValueError("ground space needs at least one site")
        if any(not (w > 0.0) for w in self.weights):
            raise ValueError("all site weights must be strictly positive")

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def sites(self) -> range:
        return range(len(self.weights))


class FiniteModel:
    """Point process defined by a hereditary unnormalized density.

    The density is supplied in log scale; return -inf for forbidden
    configurations. The partition constant Z and the probability of every
    configuration are computed once at construction; the model is
    immutable afterwards.
    """

    def __init__(self, space: GroundSpace, log_density: Functional):
        m = space.m
        if m > MAX_SITES:
            raise ValueError(f"at most {MAX_SITES} sites supported, got {m}")
        self.space = space
        self.log_density = log_density
        n_conf = 1 << m

        q = array("d", bytes(8 * n_conf))
        for mask in range(n_conf):
            value = log_density(_mask_to_config(mask))
            q[mask] = 0.0 if value == -math.inf else math.exp(value)
            if not math.isfinite(q[mask]):
                raise ValueError("density overflow at a configuration")
        if not q[0] > 0.0:
            raise ValueError("q(empty) must be strictly positive")
        self._q = q

        self._check_hereditary()

        w = array("d", bytes(8 * n_conf))
        w[0] = 1.0
        for mask in range(1, n_conf):
            low = mask & -mask
            w[mask] = w[mask ^ low] * space.weights[low.bit_length() - 1]
        z = 0.0
        for mask in range(n_conf):
            z += q[mask] * w[mask]
        if not (math.isfinite(z) and z > 0.0):
            raise ValueError("partition constant must be positive and finite")
        self.partition_constant = z

        prob = array("d", bytes(8 * n_conf))
        for mask in range(n_conf):
            prob[mask] = q[mask] * w[mask] / z
        self._prob = prob
        self._support = array("q", (m for m in range(n_conf) if prob[m] > 0.0))

        self._configs: list[Configuration] | None = None
        if m <= _CONFIG_CACHE_LIMIT:
            self._configs = [_mask_to_config(mask) for mask in range(n_conf)]

    # -- structure ---------------------------------------------------------

    @property
    def m(self) -> int:
        return self.space.m

    @property
    def weights(self) -> tuple[float, ...]:
        return self.space.weights

    def config(self, mask: int) -> Configuration:
        if self._configs is not None:
            return self._configs[mask]
        return _mask_to_config(mask)

    def mask(self, config: Configuration) -> int:
        mask = 0
        for x in config:
            if not (0 <= x < self.m):
                raise ValueError(f"site {x!r} outside the ground space")
            mask |= 1 << x
        return mask

    def q(self, config: Configuration) -> float:
        return self._q[self.mask(config)]

    @property
    def support(self):
        """Bitmasks of all configurations with positive probability."""
        return self._support

    def _check_hereditary(self):
        m = self.space.m
        q = self._q
        if m <= _HEREDITARY_SAMPLE_LIMIT:
            # single-point removals cover all eta < omega pairs by induction
            for mask in range(1 << m):
                if q[mask] <= 0.0:
                    continue
                rest = mask
                while rest:
                    low = rest & -rest
                    if q[mask ^ low] <= 0.0:
                        raise ValueError("density is not hereditary")
                    rest ^= low
        else:
            rng = _stdlib_random.Random(0)
            n_conf = 1 << m
            for _ in range(_HEREDITARY_SAMPLES):
                mask = rng.randrange(n_conf)
                if q[mask] <= 0.0:
                    continue
                sub = mask & rng.randrange(n_conf)
                if q[sub] <= 0.0:
                    raise ValueError("density is not hereditary (sampled check)")

    # -- probabilistic quantities -------------------------------------------

    def probability(self, config: Configuration) -> float:
        """P(omega) = q(omega) prod_{x in omega} sigma_x / Z."""
        return self._prob[self.mask(config)]

    def expectation(self, functional: Functional) -> float:
        """Exact expectation by enumeration over all configurations."""
        total = 0.0
        prob = self._prob
        for mask in self._support:
            total += prob[mask] * functional(self.config(mask))
        return total

    def papangelou(self, x, config: Configuration) -> float:
        """Papangelou density c(x, omega) = q(omega u {x}) / q(omega).

        Returns 0 when x already lies in omega (the convention that makes
        the atomic Georgii-Nguyen-Zessin identity exact) and 0 on forbidden
        configurations.
        """
        return self._papangelou_mask(x, self.mask(config))

    def _papangelou_mask(self, x, mask: int) -> float:
        bit = 1 << x
        if mask & bit:
            return 0.0
        q = self._q
        if q[mask] == 0.0:
            return 0.0
        return q[mask | bit] / q[mask]

    def compound_campbell(self, points: Sequence, config: Configuration) -> float:
        """Compound Campbell density of a tuple of sites.

        Product form: c(x_1, omega) c(x_2, omega u {x_1}) ... which, under
        hereditarity, telescopes to q(omega u points) / q(omega). Returns 1
        for the empty tuple and 0 when the tuple has repeats or meets omega.
        """
        return self._chat_mask(tuple(points), self.mask(config))

    def _chat_mask(self, points: tuple, mask: int) -> float:
        if not points:
            return 1.0
        tmask = 0
        for x in points:
            bit = 1 << x
            if tmask & bit:
                return 0.0
            tmask |= bit
        if tmask & mask:
            return 0.0
        q = self._q
        if q[mask] == 0.0:
            return 0.0
        return q[mask | tmask] / q[mask]

    def gnz_residual(self, u: Kernel) -> tuple[float, float]:
        """Both sides of the Georgii-Nguyen-Zessin identity, exactly.

        lhs = E[sum_{x in omega} u(x, omega)],
        rhs = sum_x sigma_x E[c(x, omega) u(x, omega u {x})].
        """
        prob = self._prob
        q = self._q
        lhs = 0.0
        for mask in self._support:
            cfg = self.config(mask)
            inner = 0.0
            for x in cfg:
                inner += u(x, cfg)
            lhs += prob[mask] * inner
        rhs = 0.0
        for x in range(self.m):
            bit = 1 << x
            sigma_x = self.space.weights[x]
            acc = 0.0
            for mask in self._support:
                if mask & bit:
                    continue
                c = q[mask | bit] / q[mask]
                if c == 0.0:
                    continue
                acc += prob[mask] * c * u(x, self.config(mask | bit))
            rhs += sigma_x * acc
        return lhs, rhs

    def correlation(self, points: Sequence) -> float:
        """Correlation function rho_n(points) = E[chat(points, omega)]."""
        pts = tuple(points)
        if len(set(pts)) != len(pts):
            raise ValueError("correlation requires distinct sites")
        total = 0.0
        prob = self._prob
        for mask in self._support:
            total += prob[mask] * self._chat_mask(pts, mask)
        return total


# -- densities and model descriptions ----------------------------------------


def poisson_log_density() -> Functional:
    """q identically 1: the atomic analogue of a Poisson process."""

    def log_q(config: Configuration) -> float:
        return 0.0

    return log_q


def pairwise_log_density(gamma: float, pairs: Sequence[tuple[int, int]]) -> Functional:
    """q(omega) = gamma^{#interacting pairs inside omega}.

    gamma = 1 is the Poisson case, gamma = 0 a hard-core model, and any
    gamma > 0 a pairwise interaction. Hereditary for every gamma >= 0.
    """
    if gamma < 0.0:
        raise ValueError("gamma must be nonnegative")
    pair_list = [(min(a, b), max(a, b)) for a, b in pairs]
    if any(a == b for a, b in pair_list):
        raise ValueError("interaction pairs must join distinct sites")
    log_gamma = -math.inf if gamma == 0.0 else math.log(gamma)

    def log_q(config: Configuration) -> float:
        count = 0
        for a, b in pair_list:
            if a in config and b in config:
                count += 1
        if count == 0:
            return 0.0
        return count * log_gamma

    return log_q


def model_from_description(description: dict) -> FiniteModel:
    """Build a model from the JSON description schema.

    {"sites": m, "weights": [...],
     "density": {"type": "poisson"} or
                {"type": "pairwise", "gamma": g, "pairs": [[i, j], ...]}}
    """
    try:
        m = int(description["sites"])
        weights = tuple(float(w) for w in description["weights"])
        density = description["density"]
        kind = density["type"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model description: {exc}") from exc
    if len(weights) != m:
        raise ValueError("weights length must equal the number of sites")
    space = GroundSpace(weights)
    if kind == "poisson":
        return FiniteModel(space, poisson_log_density())
    if kind == "pairwise":
        try:
            gamma = float(density["gamma"])
            pairs = [(int(a), int(b)) for a, b in density.get("pairs", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed pairwise density: {exc}") from exc
        if any(not (0 <= a < m and 0 <= b < m) for a, b in pairs):
            raise ValueError("pair indices outside the ground space")
        return FiniteModel(space, pairwise_log_density(gamma, pairs))
    raise ValueError(f"unknown density type {kind!r}")


def load_model(path) -> FiniteModel:
    """Load a model description file (JSON) from disk."""
    with open(path, "r", encoding="utf-8") as handle:
        return model_from_description(json.load(handle))


def _mask_to_config(mask: int) -> Configuration:
    sites = []
    index = 0
    while mask:
        if mask & 1:
            sites.append(index)
        mask >>= 1
        index += 1
    return frozenset(sites)
