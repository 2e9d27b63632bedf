"""Finite-support offspring and immigration laws.

Every law is stored as a sorted list of ``(value, probability)`` pairs with no
mass at zero, so its probability generating function is a polynomial with a
vanishing constant term.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import BadPmf, DomainError, MassAtZero, NotSupercritical

NORMALIZATION_TOL = 1e-12
MIN_PROB = 1e-15

PmfLike = Union["DistSpec", Mapping[int, float], Iterable]


@dataclass(frozen=True)
class DistSpec:
    """A finite-support law on the positive integers."""

    pmf: tuple
    max_support: int = field(init=False)

    def __post_init__(self):
        pairs = []
        for entry in self.pmf:
            try:
                value, prob = entry
            except (TypeError, ValueError):
                raise BadPmf(f"pmf entry {entry!r} is not a (value, prob) pair") from None
            if isinstance(value, float) and not value.is_integer():
                raise BadPmf(f"support value {value!r} is not an integer")
            value = int(value)
            prob = float(prob)
            if not math.isfinite(prob) or prob < 0:
                raise BadPmf(f"probability {prob!r} at {value} is negative or not finite")
            if value < 0:
                raise BadPmf(f"support value {value} is negative")
            pairs.append((value, prob))
        if not pairs:
            raise BadPmf("empty pmf")
        pairs.sort()
        values = [v for v, _ in pairs]
        if len(set(values)) != len(values):
            raise BadPmf(f"repeated support values in {values}")
        for value, prob in pairs:
            if prob < MIN_PROB:
                raise BadPmf(f"probability {prob!r} at {value} is below {MIN_PROB}; drop the entry explicitly")
        if values[0] == 0:
            raise MassAtZero("law puts mass at 0; extinction must be impossible (f(0) = g(0) = 0)")
        total = math.fsum(p for _, p in pairs)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise BadPmf(f"probabilities sum to {total!r}, not 1")
        pairs = tuple((v, p / total) for v, p in pairs)
        object.__setattr__(self, "pmf", pairs)
        object.__setattr__(self, "max_support", values[-1])

    @classmethod
    def from_any(cls, pmf: PmfLike) -> "DistSpec":
        if isinstance(pmf, DistSpec):
            return pmf
        if isinstance(pmf, Mapping):
            return cls(tuple(pmf.items()))
        return cls(tuple(pmf))

    @classmethod
    def point_mass(cls, value: int) -> "DistSpec":
        return cls(((value, 1.0),))

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.pmf], dtype=np.int64)

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.pmf], dtype=float)

    @property
    def coefficients(self) -> np.ndarray:
        """Dense polynomial coefficients, index = power."""
        c = np.zeros(self.max_support + 1)
        for v, p in self.pmf:
            c[v] = p
        return c

    @property
    def is_deterministic(self) -> bool:
        return len(self.pmf) == 1

    @property
    def mean(self) -> float:
        return math.fsum(v * p for v, p in self.pmf)

    @property
    def variance(self) -> float:
        return moments(self)[1]

    def __call__(self, z):
        """Polynomial p.g.f. on scalars or arrays, without domain checks."""
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        for v, p in reversed(self.pmf):
            out = out + p * z**v
        return out if out.ndim else float(out)

    def derivative(self, z, order: int = 1):
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        for v, p in self.pmf:
            if v >= order:
                out = out + p * math.perm(v, order) * z ** (v - order)
        return out if out.ndim else float(out)

    def to_json(self) -> dict:
        return {"pmf": [[v, p] for v, p in self.pmf]}


@dataclass(frozen=True)
class ModelSpec:
    """Offspring law ``M`` (p.g.f. f) and immigration law ``I`` (p.g.f. g)."""

    offspring: DistSpec
    immigration: DistSpec

    def __post_init__(self):
        if self.mu <= 1.0:
            raise NotSupercritical(f"mean offspring {self.mu} must exceed 1")

    @property
    def mu(self) -> float:
        return self.offspring.mean

    @property
    def sigma2(self) -> float:
        return self.offspring.variance

    @property
    def lam(self) -> float:
        return self.immigration.mean

    @property
    def lnary(self):
        """``(l, k)`` when both laws are point masses, else ``None``."""
        if self.offspring.is_deterministic and self.immigration.is_deterministic:
            return self.offspring.pmf[0][0], self.immigration.pmf[0][0]
        return None

    def to_json(self) -> dict:
        return {"offspring": self.offspring.to_json(), "immigration": self.immigration.to_json()}

    def digest(self) -> str:
        canonical = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def validate(offspring: PmfLike, immigration: PmfLike) -> ModelSpec:
    """Build a validated model from raw pmfs (dicts, pair lists or DistSpecs)."""
    return ModelSpec(DistSpec.from_any(offspring), DistSpec.from_any(immigration))


def lnary_model(l: int, k: int) -> ModelSpec:
    """Every individual has exactly ``l`` children; ``k`` immigrants per generation."""
    return ModelSpec(DistSpec.point_mass(l), DistSpec.point_mass(k))


def pgf_eval(d: DistSpec, z):
    z_arr = np.asarray(z, dtype=float)
    if np.any(np.isnan(z_arr)) or np.any(z_arr < 0.0) or np.any(z_arr > 1.0):
        raise DomainError(f"p.g.f. argument must lie in [0, 1], got {z!r}")
    return d(z)


def moments(d: DistSpec) -> tuple[float, float]:
    """Mean f'(1) and variance f''(1) + f'(1) - f'(1)**2."""
    f1 = math.fsum(v * p for v, p in d.pmf)
    f2 = math.fsum(v * (v - 1) * p for v, p in d.pmf)
    return f1, max(f2 + f1 - f1 * f1, 0.0)


def model_from_json(data: Mapping) -> ModelSpec:
    try:
        off = data["offspring"]["pmf"]
        imm = data["immigration"]["pmf"]
    except (KeyError, TypeError):
        raise BadPmf('model must look like {"offspring": {"pmf": [[k, p], ...]}, "immigration": {"pmf": [...]}}') from None
    return validate(off, imm)


def load_model(path: Union[str, Path]) -> ModelSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BadPmf(f"{path}: not valid JSON ({exc})") from None
    return model_from_json(data)
