"""Search space definitions: parameters, constraints, encoding, initial sampling."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import qmc


class SpaceError(Exception):
    pass


class WrongKind(SpaceError):
    pass


class MissingValue(SpaceError):
    pass


class InfeasibleRegion(SpaceError):
    pass


@dataclass(frozen=True)
class Continuous:
    lower: float
    upper: float


@dataclass(frozen=True)
class Categorical:
    levels: tuple[str, ...]


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    kind: Continuous | Categorical


@dataclass(frozen=True)
class SumConstraint:
    params: tuple[str, ...]
    bound: float
    sense: str = "<="  # "<=" or ">="


@dataclass(frozen=True)
class OrderConstraint:
    lesser: str
    greater: str


@dataclass(frozen=True)
class LinearConstraint:
    coefficients: tuple[tuple[str, float], ...]
    bound: float
    sense: str = "<="


@dataclass(frozen=True)
class CompositionConstraint:
    params: tuple[str, ...]
    total: float
    tolerance: float = 1e-6


Constraint = SumConstraint | OrderConstraint | LinearConstraint | CompositionConstraint


@dataclass(frozen=True)
class ValidationError:
    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}({self.subject}): {self.message}"


@dataclass(frozen=True)
class SearchSpace:
    parameters: tuple[ParameterSpec, ...]
    constraints: tuple[Constraint, ...] = ()

    @property
    def continuous(self) -> list[ParameterSpec]:
        return [p for p in self.parameters if isinstance(p.kind, Continuous)]

    @property
    def categorical(self) -> list[ParameterSpec]:
        return [p for p in self.parameters if isinstance(p.kind, Categorical)]

    @property
    def encoded_dim(self) -> int:
        return len(self.continuous) + sum(len(p.kind.levels) for p in self.categorical)

    def parameter(self, name: str) -> ParameterSpec | None:
        for p in self.parameters:
            if p.name == name:
                return p
        return None


def validate_space(space: SearchSpace) -> list[ValidationError]:
    """Check all structural invariants; an empty list means the space is valid."""
    errors: list[ValidationError] = []
    seen: set[str] = set()
    if not space.parameters:
        errors.append(ValidationError("EmptySpace", "", "space has no parameters"))
    for p in space.parameters:
        if not p.name or any(c.isspace() for c in p.name):
            errors.append(ValidationError("BadName", p.name, "name empty or has whitespace"))
        if p.name in seen:
            errors.append(ValidationError("DuplicateName", p.name, "parameter declared twice"))
        seen.add(p.name)
        if isinstance(p.kind, Continuous):
            if not (np.isfinite(p.kind.lower) and np.isfinite(p.kind.upper)):
                errors.append(ValidationError("NonFiniteBounds", p.name, "bounds must be finite"))
            elif not p.kind.lower < p.kind.upper:
                errors.append(ValidationError("BoundsInverted", p.name, "lower must be < upper"))
        else:
            if len(p.kind.levels) < 2:
                errors.append(ValidationError("TooFewLevels", p.name, "need at least 2 levels"))
            if len(set(p.kind.levels)) != len(p.kind.levels):
                errors.append(ValidationError("DuplicateLevel", p.name, "level labels must be unique"))
            if any(not lv for lv in p.kind.levels):
                errors.append(ValidationError("EmptyLevel", p.name, "level labels must be nonempty"))

    def check_ref(name: str, where: str) -> bool:
        p = space.parameter(name)
        if p is None:
            errors.append(ValidationError("UnknownParameter", name, f"referenced by {where}"))
            return False
        if not isinstance(p.kind, Continuous):
            errors.append(ValidationError("NotContinuous", name, f"referenced by {where}"))
            return False
        return True

    for c in space.constraints:
        if isinstance(c, SumConstraint):
            for name in c.params:
                check_ref(name, "sum constraint")
        elif isinstance(c, OrderConstraint):
            check_ref(c.lesser, "order constraint")
            check_ref(c.greater, "order constraint")
        elif isinstance(c, LinearConstraint):
            for name, _ in c.coefficients:
                check_ref(name, "linear constraint")
        elif isinstance(c, CompositionConstraint):
            ok = all(check_ref(name, "composition constraint") for name in c.params)
            if c.total <= 0:
                errors.append(ValidationError("BadTotal", "composition", "total must be > 0"))
            if c.tolerance <= 0:
                errors.append(ValidationError("BadTolerance", "composition", "tolerance must be > 0"))
            if ok and c.total > 0:
                for name in c.params:
                    kind = space.parameter(name).kind
                    if kind.lower < 0 or kind.upper > c.total:
                        errors.append(
                            ValidationError(
                                "BoundsOutsideTotal", name,
                                f"bounds must lie within [0, {c.total}]",
                            )
                        )
    return errors


def _value(point: Mapping[str, object], p: ParameterSpec) -> object:
    if p.name not in point:
        raise MissingValue(p.name)
    v = point[p.name]
    if isinstance(p.kind, Continuous):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise WrongKind(f"{p.name}: expected real, got {v!r}")
    else:
        if not isinstance(v, str) or v not in p.kind.levels:
            raise WrongKind(f"{p.name}: expected one of {p.kind.levels}, got {v!r}")
    return v


def check_point(space: SearchSpace, point: Mapping[str, object]) -> None:
    """Raise MissingValue / WrongKind if the assignment is malformed."""
    for p in space.parameters:
        _value(point, p)


def is_feasible(
    space: SearchSpace, point: Mapping[str, object]
) -> tuple[bool, list[Constraint]]:
    """Evaluate every constraint; returns (ok, violated constraints).

    Checked in order: order, sum, linear, composition.
    """
    check_point(space, point)
    violations: list[Constraint] = []

    def ordered(constraints: Sequence[Constraint]):
        rank = {OrderConstraint: 0, SumConstraint: 1, LinearConstraint: 2, CompositionConstraint: 3}
        return sorted(constraints, key=lambda c: rank[type(c)])

    for c in ordered(space.constraints):
        if isinstance(c, OrderConstraint):
            if not point[c.lesser] <= point[c.greater]:
                violations.append(c)
        elif isinstance(c, SumConstraint):
            total = sum(point[n] for n in c.params)
            ok = total <= c.bound if c.sense == "<=" else total >= c.bound
            if not ok:
                violations.append(c)
        elif isinstance(c, LinearConstraint):
            total = sum(coef * point[n] for n, coef in c.coefficients)
            ok = total <= c.bound if c.sense == "<=" else total >= c.bound
            if not ok:
                violations.append(c)
        elif isinstance(c, CompositionConstraint):
            total = sum(point[n] for n in c.params)
            if abs(total - c.total) > c.tolerance:
                violations.append(c)
    return (not violations, violations)


def in_bounds(space: SearchSpace, point: Mapping[str, object]) -> bool:
    for p in space.continuous:
        v = point[p.name]
        if v < p.kind.lower or v > p.kind.upper:
            return False
    return True


def encode(space: SearchSpace, point: Mapping[str, object]) -> np.ndarray:
    """Continuous coords min-max scaled to [0,1], then categorical one-hots."""
    check_point(space, point)
    out: list[float] = []
    for p in space.continuous:
        k = p.kind
        out.append((point[p.name] - k.lower) / (k.upper - k.lower))
    for p in space.categorical:
        hot = [0.0] * len(p.kind.levels)
        hot[p.kind.levels.index(point[p.name])] = 1.0
        out.extend(hot)
    return np.asarray(out, dtype=float)


def decode(space: SearchSpace, vector: np.ndarray) -> dict[str, object]:
    """Inverse of encode; one-hot blocks decoded by argmax."""
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (space.encoded_dim,):
        raise WrongKind(f"expected vector of length {space.encoded_dim}")
    point: dict[str, object] = {}
    i = 0
    for p in space.continuous:
        k = p.kind
        point[p.name] = k.lower + vector[i] * (k.upper - k.lower)
        i += 1
    for p in space.categorical:
        block = vector[i : i + len(p.kind.levels)]
        point[p.name] = p.kind.levels[int(np.argmax(block))]
        i += len(p.kind.levels)
    return point


def project_simplex(values: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) = total}."""
    v = np.asarray(values, dtype=float)
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, n + 1) > (css - total))[0][-1]
    theta = (css[rho] - total) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def sobol_stream(dim: int, skip: int = 1):
    """Unscrambled base-2 low-discrepancy points, index 0 skipped by default."""
    eng = qmc.Sobol(d=max(dim, 1), scramble=False)
    if skip:
        eng.fast_forward(skip)
    while True:
        yield eng.random(1)[0][:dim]


def _apply_composition(
    space: SearchSpace, point: dict[str, object]
) -> dict[str, object]:
    for c in space.constraints:
        if isinstance(c, CompositionConstraint):
            vals = np.array([point[n] for n in c.params], dtype=float)
            proj = project_simplex(vals, c.total)
            for n, v in zip(c.params, proj):
                point[n] = float(v)
    return point


def sample_initial(
    space: SearchSpace, n: int, seed: int = 0
) -> list[dict[str, object]]:
    """Quasi-random feasible initial points.

    Continuous coords come from the unscrambled base-2 sequence over the box
    (index 0 skipped); categoricals are cycled round-robin over their levels
    by accepted-point index. Composition constraints are handled by projecting
    onto the simplex before the feasibility check; infeasible draws are
    rejected and the sequence advanced. The stream does not depend on seed,
    which keeps the prefix property across calls.
    """
    if n == 0:
        return []
    cont = space.continuous
    stream = sobol_stream(len(cont))
    points: list[dict[str, object]] = []
    rejected = 0
    budget = 1000 * n
    while len(points) < n:
        u = next(stream)
        point: dict[str, object] = {}
        for p, ui in zip(cont, u):
            k = p.kind
            point[p.name] = float(k.lower + ui * (k.upper - k.lower))
        point = _apply_composition(space, point)
        for p in space.categorical:
            levels = p.kind.levels
            point[p.name] = levels[len(points) % len(levels)]
        ok, _ = is_feasible(space, point)
        if ok and in_bounds(space, point):
            points.append(point)
            rejected = 0
        else:
            rejected += 1
            if rejected >= budget:
                raise InfeasibleRegion(
                    f"rejected {rejected} consecutive draws; feasible region looks empty"
                )
    return points
