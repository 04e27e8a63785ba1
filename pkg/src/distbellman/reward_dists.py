"""Parametric one-dimensional reward laws.

Every law is an immutable value exposing its CDF, both tails, an inverse-CDF
style map from uniforms (used for sampling), a finite quadrature
(``discretize``) and analytic metadata: moment profile, Pareto-like tail
descriptor and mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import special

from .errors import FormatError

# Smallest uniform handed to an inverse CDF; keeps heavy-tailed maps finite at u = 0.
_U_FLOOR = 2.0**-60


@dataclass(frozen=True)
class Supremum:
    """Supremum of an exponent set, with a flag telling whether it is attained."""

    value: float
    inclusive: bool

    def __lt__(self, other: Supremum) -> bool:
        return (self.value, self.inclusive) < (other.value, other.inclusive)


def sup_min(sups) -> Supremum:
    sups = list(sups)
    lowest = min(s.value for s in sups)
    inclusive = all(s.inclusive for s in sups if s.value == lowest)
    return Supremum(lowest, inclusive)


UNBOUNDED = Supremum(math.inf, True)


@dataclass(frozen=True)
class MomentProfile:
    log_moment_finite: bool
    p_moment_sup: Supremum
    exp_moment_beta_sup: Supremum


@dataclass(frozen=True)
class RegVarDescriptor:
    """Pareto-like tail: P[R > x] ~ q c x^-alpha and P[R < -x] ~ (1-q) c x^-alpha.

    ``alpha = inf`` with ``c = 0`` marks a tail that is o(x^-a) for every a.
    """

    alpha: float
    c: float
    q: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.c < 0:
            raise ValueError("c must be nonnegative")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("q must lie in [0, 1]")

    @property
    def light(self) -> bool:
        return self.c == 0.0


LIGHT_TAIL = RegVarDescriptor(alpha=math.inf, c=0.0, q=0.5)


def _same_index(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=0.0)


class RewardLaw:
    """Interface shared by all reward-law variants."""

    kind: str = ""
    is_discrete = False

    # -- distribution functions -------------------------------------------------
    def cdf(self, x):
        raise NotImplementedError

    def upper_tail(self, x):
        return 1.0 - self.cdf(x)

    def lower_tail(self, x):
        """P[R < -x]."""
        return self.cdf(-np.asarray(x, dtype=float))

    def from_uniform(self, u):
        """Map uniforms on [0, 1) to draws of this law (monotone for simple laws)."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        u = rng.random(size)
        out = self.from_uniform(u)
        if size is None:
            return float(out)
        return out

    def discretize(self, m: int = 64):
        """Finite atoms (values, weights) approximating the law.

        Discrete laws give their exact atoms; continuous laws give the ``m``
        quantile midpoints ``u = (k - 0.5) / m``.
        """
        u = (np.arange(1, m + 1) - 0.5) / m
        return np.asarray(self.from_uniform(u), dtype=float), np.full(m, 1.0 / m)

    # -- metadata ---------------------------------------------------------------
    def moment_profile(self) -> MomentProfile:
        raise NotImplementedError

    def _natural_reg_var(self) -> RegVarDescriptor | None:
        return LIGHT_TAIL

    def reg_var(self, alpha: float | None = None) -> RegVarDescriptor | None:
        """Pareto-like tail descriptor, optionally at a requested index.

        With ``alpha`` given, returns the descriptor at that index (c = 0 for
        strictly lighter tails) or None when the tail is heavier or not
        Pareto-like.
        """
        desc = self._natural_reg_var()
        if alpha is None or desc is None:
            return desc
        if desc.light or (desc.alpha > alpha and not _same_index(desc.alpha, alpha)):
            return RegVarDescriptor(alpha=alpha, c=0.0, q=0.5)
        if _same_index(desc.alpha, alpha):
            return RegVarDescriptor(alpha=alpha, c=desc.c, q=desc.q)
        return None

    def mean(self) -> float | None:
        raise NotImplementedError

    def bounds(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    @property
    def is_bounded(self) -> bool:
        lo, hi = self.bounds()
        return math.isfinite(lo) and math.isfinite(hi)

    def abs_bound(self) -> float:
        lo, hi = self.bounds()
        return max(abs(lo), abs(hi))

    def to_json(self) -> dict[str, Any]:
        raise NotImplementedError


def _clip_u(u):
    return np.clip(np.asarray(u, dtype=float), _U_FLOOR, 1.0 - 2.0**-53)


_BOUNDED_PROFILE = MomentProfile(True, UNBOUNDED, UNBOUNDED)


@dataclass(frozen=True)
class PointMass(RewardLaw):
    value: float

    kind = "pointmass"
    is_discrete = True

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.value, 1.0, 0.0)[()]

    def lower_tail(self, x):
        return np.where(self.value < -np.asarray(x, dtype=float), 1.0, 0.0)[()]

    def from_uniform(self, u):
        return np.full(np.shape(u), float(self.value))[()]

    def discretize(self, m=64):
        return np.array([float(self.value)]), np.array([1.0])

    def moment_profile(self):
        return _BOUNDED_PROFILE

    def mean(self):
        return float(self.value)

    def bounds(self):
        return (float(self.value), float(self.value))

    def to_json(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class DiscreteAtoms(RewardLaw):
    """Finitely many atoms, given as ``((value, prob), ...)`` with increasing values."""

    atoms: tuple

    kind = "discrete"
    is_discrete = True

    def __post_init__(self):
        atoms = tuple((float(v), float(p)) for v, p in self.atoms)
        if not atoms:
            raise ValueError("DiscreteAtoms needs at least one atom")
        values = [v for v, _ in atoms]
        probs = [p for _, p in atoms]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("atom values must be strictly increasing")
        if any(p < 0 for p in probs) or abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ValueError("atom probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "atoms", atoms)

    @property
    def values(self):
        return np.array([v for v, _ in self.atoms])

    @property
    def probs(self):
        return np.array([p for _, p in self.atoms])

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.values, x, side="right")
        cum = np.concatenate([[0.0], np.cumsum(self.probs)])
        return np.minimum(cum[idx], 1.0)[()]

    def upper_tail(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.values, x, side="right")
        tail = np.concatenate([np.cumsum(self.probs[::-1])[::-1], [0.0]])
        return np.where(idx == 0, 1.0, tail[idx])[()]

    def lower_tail(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.values, -x, side="left")
        cum = np.concatenate([[0.0], np.cumsum(self.probs)])
        return np.minimum(cum[idx], 1.0)[()]

    def from_uniform(self, u):
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, np.asarray(u, dtype=float), side="right")
        return self.values[np.minimum(idx, len(cum) - 1)][()]

    def discretize(self, m=64):
        return self.values, self.probs

    def moment_profile(self):
        return _BOUNDED_PROFILE

    def mean(self):
        return float(np.dot(self.values, self.probs))

    def bounds(self):
        nz = [v for v, p in self.atoms if p > 0]
        return (min(nz), max(nz))

    def to_json(self):
        return {"kind": self.kind, "atoms": [[v, p] for v, p in self.atoms]}


@dataclass(frozen=True)
class Uniform(RewardLaw):
    lo: float
    hi: float

    kind = "uniform"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("Uniform needs lo < hi")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)[()]

    def from_uniform(self, u):
        return (self.lo + np.asarray(u, dtype=float) * (self.hi - self.lo))[()]

    def moment_profile(self):
        return _BOUNDED_PROFILE

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def bounds(self):
        return (float(self.lo), float(self.hi))

    def to_json(self):
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Normal(RewardLaw):
    loc: float
    stddev: float

    kind = "normal"

    def __post_init__(self):
        if not self.stddev > 0:
            raise ValueError("Normal needs stddev > 0")

    def cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.loc) / self.stddev
        return special.ndtr(z)[()]

    def upper_tail(self, x):
        z = (np.asarray(x, dtype=float) - self.loc) / self.stddev
        return special.ndtr(-z)[()]

    def from_uniform(self, u):
        return (self.loc + self.stddev * special.ndtri(_clip_u(u)))[()]

    def moment_profile(self):
        return MomentProfile(True, UNBOUNDED, UNBOUNDED)

    def mean(self):
        return float(self.loc)

    def to_json(self):
        return {"kind": self.kind, "mean": self.loc, "stddev": self.stddev}


@dataclass(frozen=True)
class Exponential(RewardLaw):
    """``sign * E`` with E exponential of the given rate."""

    rate: float
    sign: int = 1

    kind = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("Exponential needs rate > 0")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.sign == 1:
            return np.where(x < 0, 0.0, -np.expm1(-self.rate * np.maximum(x, 0.0)))[()]
        return np.where(x >= 0, 1.0, np.exp(self.rate * np.minimum(x, 0.0)))[()]

    def upper_tail(self, x):
        x = np.asarray(x, dtype=float)
        if self.sign == 1:
            return np.where(x < 0, 1.0, np.exp(-self.rate * np.maximum(x, 0.0)))[()]
        return np.where(x >= 0, 0.0, -np.expm1(self.rate * np.minimum(x, 0.0)))[()]

    def from_uniform(self, u):
        u = _clip_u(u)
        if self.sign == 1:
            return (-np.log1p(-u) / self.rate)[()]
        return (np.log(u) / self.rate)[()]

    def moment_profile(self):
        return MomentProfile(True, UNBOUNDED, Supremum(float(self.rate), False))

    def mean(self):
        return self.sign / self.rate

    def bounds(self):
        return (0.0, math.inf) if self.sign == 1 else (-math.inf, 0.0)

    def to_json(self):
        return {"kind": self.kind, "rate": self.rate, "sign": self.sign}


@dataclass(frozen=True)
class TwoSidedPareto(RewardLaw):
    """P[R > x] = q (s/x)^alpha and P[R < -x] = (1-q)(s/x)^alpha for x >= s."""

    alpha: float
    scale: float
    q: float = 1.0

    kind = "pareto"

    def __post_init__(self):
        if not (self.alpha > 0 and self.scale > 0 and 0.0 <= self.q <= 1.0):
            raise ValueError("Pareto needs alpha > 0, scale > 0, q in [0, 1]")

    def _tail(self, x):
        # (s / max(x, s))^alpha, equal to 1 inside the gap
        return (self.scale / np.maximum(x, self.scale)) ** self.alpha

    def upper_tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 1.0 - (1.0 - self.q) * self._tail(np.abs(x)), self.q * self._tail(x))[()]

    def cdf(self, x):
        return 1.0 - self.upper_tail(x)

    def lower_tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(
            x < 0, 1.0 - self.q * self._tail(np.abs(x)), (1.0 - self.q) * self._tail(x)
        )[()]

    def from_uniform(self, u):
        u = _clip_u(u)
        a, s, q = self.alpha, self.scale, self.q
        with np.errstate(divide="ignore", invalid="ignore"):
            left = -s * ((1.0 - q) / u) ** (1.0 / a)
            right = s * (q / (1.0 - u)) ** (1.0 / a)
        return np.where(u < 1.0 - q, left, right)[()]

    def moment_profile(self):
        return MomentProfile(True, Supremum(float(self.alpha), False), Supremum(0.0, True))

    def _natural_reg_var(self):
        return RegVarDescriptor(alpha=self.alpha, c=self.scale**self.alpha, q=self.q)

    def mean(self):
        if self.alpha <= 1:
            return None
        m = self.alpha * self.scale / (self.alpha - 1.0)
        return (2.0 * self.q - 1.0) * m

    def bounds(self):
        lo = -math.inf if self.q < 1 else self.scale
        hi = math.inf if self.q > 0 else -self.scale
        return (lo, hi)

    def to_json(self):
        return {"kind": self.kind, "alpha": self.alpha, "scale": self.scale, "q": self.q}


@dataclass(frozen=True)
class Cauchy(RewardLaw):
    location: float
    scale: float

    kind = "cauchy"

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("Cauchy needs scale > 0")

    def upper_tail(self, x):
        z = (np.asarray(x, dtype=float) - self.location) / self.scale
        with np.errstate(divide="ignore"):
            # arctan(1/z)/pi avoids cancellation far in the right tail
            far = np.arctan(1.0 / np.where(z > 0, z, 1.0)) / np.pi
        return np.where(z > 0, far, 0.5 - np.arctan(z) / np.pi)[()]

    def cdf(self, x):
        return 1.0 - self.upper_tail(x)

    def lower_tail(self, x):
        z = (-np.asarray(x, dtype=float) - self.location) / self.scale
        far = np.arctan(-1.0 / np.where(z < 0, z, -1.0)) / np.pi
        return np.where(z < 0, far, 0.5 + np.arctan(z) / np.pi)[()]

    def from_uniform(self, u):
        return (self.location + self.scale * np.tan(np.pi * (_clip_u(u) - 0.5)))[()]

    def moment_profile(self):
        return MomentProfile(True, Supremum(1.0, False), Supremum(0.0, True))

    def _natural_reg_var(self):
        return RegVarDescriptor(alpha=1.0, c=2.0 * self.scale / math.pi, q=0.5)

    def mean(self):
        return None

    def to_json(self):
        return {"kind": self.kind, "location": self.location, "scale": self.scale}


@dataclass(frozen=True)
class SuperHeavy(RewardLaw):
    """Symmetric law with P[|R| > x] = log(threshold) / log(x) for x >= threshold.

    For the default threshold e this is exactly 1/log(x); E log+|R| is infinite.
    Draws beyond exp(709) overflow to +-inf.
    """

    threshold: float = math.e

    kind = "superheavy"

    def __post_init__(self):
        if not self.threshold >= math.e * (1 - 1e-15):
            raise ValueError("SuperHeavy needs threshold >= e")

    def _abs_tail(self, x):
        return math.log(self.threshold) / np.log(np.maximum(x, self.threshold))

    def upper_tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 1.0 - 0.5 * self._abs_tail(np.abs(x)), 0.5 * self._abs_tail(x))[()]

    def cdf(self, x):
        return 1.0 - self.upper_tail(x)

    def lower_tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 1.0 - 0.5 * self._abs_tail(np.abs(x)), 0.5 * self._abs_tail(x))[()]

    def from_uniform(self, u):
        u = _clip_u(u)
        log_t = math.log(self.threshold)
        with np.errstate(over="ignore", divide="ignore"):
            left = -np.exp(log_t / (2.0 * u))
            right = np.exp(log_t / (2.0 * (1.0 - u)))
        return np.where(u < 0.5, left, right)[()]

    def moment_profile(self):
        return MomentProfile(False, Supremum(0.0, True), Supremum(0.0, True))

    def _natural_reg_var(self):
        return None

    def mean(self):
        return None

    def to_json(self):
        return {"kind": self.kind, "threshold": self.threshold}


@dataclass(frozen=True)
class Mixture(RewardLaw):
    """Finite mixture ``((weight, law), ...)``; weights are normalised on construction."""

    components: tuple

    kind = "mixture"

    def __post_init__(self):
        comps = tuple((float(w), law) for w, law in self.components if w > 0)
        total = math.fsum(w for w, _ in comps)
        if not comps or abs(total - 1.0) > 1e-9:
            raise ValueError("mixture weights must be positive and sum to 1")
        object.__setattr__(self, "components", tuple((w / total, law) for w, law in comps))

    @property
    def is_discrete(self):
        return all(law.is_discrete for _, law in self.components)

    def _weighted(self, method, x):
        return sum(w * getattr(law, method)(x) for w, law in self.components)

    def cdf(self, x):
        return self._weighted("cdf", x)

    def upper_tail(self, x):
        return self._weighted("upper_tail", x)

    def lower_tail(self, x):
        return self._weighted("lower_tail", x)

    def from_uniform(self, u):
        u = np.asarray(u, dtype=float)
        weights = np.array([w for w, _ in self.components])
        cum = np.cumsum(weights)
        cum[-1] = 1.0
        k = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
        start = np.concatenate([[0.0], cum[:-1]])
        inner = np.clip((u - start[k]) / weights[k], 0.0, 1.0 - 2.0**-53)
        out = np.empty(np.shape(u))
        for idx, (_, law) in enumerate(self.components):
            sel = k == idx
            if np.any(sel):
                out[sel] = law.from_uniform(inner[sel])
        return out[()]

    def discretize(self, m=64):
        vals, wts = [], []
        for w, law in self.components:
            v, p = law.discretize(m)
            vals.append(v)
            wts.append(w * p)
        return np.concatenate(vals), np.concatenate(wts)

    def moment_profile(self):
        profiles = [law.moment_profile() for _, law in self.components]
        return MomentProfile(
            all(pr.log_moment_finite for pr in profiles),
            sup_min(pr.p_moment_sup for pr in profiles),
            sup_min(pr.exp_moment_beta_sup for pr in profiles),
        )

    def _natural_reg_var(self):
        descs = [(w, law.reg_var()) for w, law in self.components]
        if any(d is None for _, d in descs):
            return None
        alpha = min(d.alpha for _, d in descs)
        if math.isinf(alpha):
            return LIGHT_TAIL
        return _combine_at(descs, alpha)

    def reg_var(self, alpha=None):
        if alpha is None:
            return self._natural_reg_var()
        descs = [(w, law.reg_var(alpha)) for w, law in self.components]
        if any(d is None for _, d in descs):
            return None
        return _combine_at(descs, alpha)

    def mean(self):
        means = [law.mean() for _, law in self.components]
        if any(m is None for m in means):
            return None
        return math.fsum(w * m for (w, _), m in zip(self.components, means))

    def bounds(self):
        bs = [law.bounds() for _, law in self.components]
        return (min(b[0] for b in bs), max(b[1] for b in bs))

    def to_json(self):
        return {
            "kind": self.kind,
            "components": [{"weight": w, "law": law.to_json()} for w, law in self.components],
        }


def _combine_at(weighted_descs, alpha):
    # tail additivity of finite mixtures at a common index
    c = 0.0
    right = 0.0
    for w, d in weighted_descs:
        if not d.light and _same_index(d.alpha, alpha):
            c += w * d.c
            right += w * d.q * d.c
    if c == 0.0:
        return RegVarDescriptor(alpha=alpha, c=0.0, q=0.5)
    return RegVarDescriptor(alpha=alpha, c=c, q=min(max(right / c, 0.0), 1.0))


def mixture_of(parts) -> RewardLaw:
    """Simplest law representing the mixture ``[(weight, law), ...]``.

    A single component is returned as is; purely discrete mixtures collapse to
    ``DiscreteAtoms`` (or ``PointMass``); anything else becomes a ``Mixture``.
    """
    parts = [(float(w), law) for w, law in parts if w > 0]
    if not parts:
        raise ValueError("mixture needs a positive weight")
    total = math.fsum(w for w, _ in parts)
    parts = [(w / total, law) for w, law in parts]
    if len(parts) == 1:
        return parts[0][1]
    if all(law.is_discrete for _, law in parts):
        masses: dict[float, float] = {}
        for w, law in parts:
            vals, probs = law.discretize()
            for v, p in zip(vals, probs):
                masses[float(v)] = masses.get(float(v), 0.0) + w * float(p)
        if len(masses) == 1:
            return PointMass(next(iter(masses)))
        items = sorted(masses.items())
        s = math.fsum(p for _, p in items)
        return DiscreteAtoms(tuple((v, p / s) for v, p in items))
    return Mixture(tuple(parts))


def _need(obj, *names):
    missing = [n for n in names if n not in obj]
    if missing:
        raise FormatError(f"reward law of kind {obj.get('kind')!r} is missing {missing}")
    return [obj[n] for n in names]


def law_from_json(obj: dict[str, Any]) -> RewardLaw:
    """Decode a reward law from its JSON object form (see docs/formats.md)."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise FormatError(f"reward law must be an object with a 'kind': {obj!r}")
    kind = obj["kind"]
    try:
        if kind == "pointmass":
            return PointMass(float(*_need(obj, "value")))
        if kind == "discrete":
            (atoms,) = _need(obj, "atoms")
            return DiscreteAtoms(tuple((float(v), float(p)) for v, p in atoms))
        if kind == "uniform":
            return Uniform(*map(float, _need(obj, "lo", "hi")))
        if kind == "normal":
            return Normal(*map(float, _need(obj, "mean", "stddev")))
        if kind == "exponential":
            return Exponential(float(*_need(obj, "rate")), int(obj.get("sign", 1)))
        if kind == "pareto":
            alpha, scale = map(float, _need(obj, "alpha", "scale"))
            return TwoSidedPareto(alpha, scale, float(obj.get("q", 1.0)))
        if kind == "cauchy":
            return Cauchy(float(obj.get("location", 0.0)), float(*_need(obj, "scale")))
        if kind == "superheavy":
            return SuperHeavy(float(obj.get("threshold", math.e)))
        if kind == "mixture":
            (comps,) = _need(obj, "components")
            return Mixture(tuple((float(c["weight"]), law_from_json(c["law"])) for c in comps))
    except (TypeError, ValueError, KeyError) as exc:
        raise FormatError(f"invalid {kind!r} reward law: {exc}") from exc
    raise FormatError(f"unknown reward law kind {kind!r}")
