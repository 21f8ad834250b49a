"""Candidate scoring and selection: expected improvement, Pareto utilities,
hypervolume, Monte Carlo EHVI, acquisition optimization, and greedy batch
selection with believer fantasies."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np
from scipy.special import ndtr

from .space import (
    SearchSpace,
    _apply_composition,
    encode,
    in_bounds,
    is_feasible,
    sobol_stream,
    InfeasibleRegion,
)


class AcquisitionError(Exception):
    pass


class DimensionMismatch(AcquisitionError):
    pass


class PointBelowReference(AcquisitionError):
    pass


class UnsupportedDimension(AcquisitionError):
    pass


@dataclass(frozen=True)
class ObjectiveDirection:
    name: str
    goal: str = "minimize"  # "minimize" | "maximize"
    threshold: float | None = None

    @property
    def sign(self) -> float:
        return 1.0 if self.goal == "maximize" else -1.0


@dataclass(frozen=True)
class ParetoFront:
    points: tuple[tuple[float, ...], ...]
    directions: tuple[ObjectiveDirection, ...]


def expected_improvement(mean: float, sd: float, best: float, goal: str = "minimize") -> float:
    """Closed-form EI; sd = 0 degenerates to max(improvement, 0)."""
    if sd < 0:
        raise AcquisitionError("sd must be nonnegative")
    gap = best - mean if goal == "minimize" else mean - best
    if sd == 0.0:
        return max(gap, 0.0)
    z = gap / sd
    # ndtr is the standard normal CDF; the second term is the standard
    # normal density (the scipy.stats wrappers are far slower per call).
    phi = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return float(sd * (z * ndtr(z) + phi))


def _oriented(points: Sequence[Sequence[float]], directions: Sequence[ObjectiveDirection]) -> np.ndarray:
    """Flip signs so every objective is maximized."""
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] != len(directions):
        raise DimensionMismatch(
            f"points have {P.shape[1] if P.ndim == 2 else '?'} objectives, expected {len(directions)}"
        )
    signs = np.array([d.sign for d in directions])
    return P * signs


def pareto_front(
    points: Sequence[Sequence[float]], directions: Sequence[ObjectiveDirection]
) -> ParetoFront:
    """Non-dominated subset in stable first-occurrence order, duplicates removed."""
    directions = tuple(directions)
    if len(points) == 0:
        return ParetoFront(points=(), directions=directions)
    P = _oriented(points, directions)
    # Sort lexicographically descending on all coordinates (stable), then scan
    # keeping an archive of non-dominated points: a later point in this order
    # can never dominate an earlier one, and exact ties deduplicate.
    order = np.lexsort([-P[:, j] for j in range(P.shape[1] - 1, -1, -1)])
    keep_idx: list[int] = []
    archive: list[np.ndarray] = []
    for i in order:
        p = P[i]
        dominated = any(np.all(a >= p) and np.any(a > p) for a in archive)
        duplicate = any(np.array_equal(a, p) for a in archive)
        if not dominated and not duplicate:
            keep_idx.append(int(i))
            archive.append(p)
    keep_idx.sort()
    return ParetoFront(
        points=tuple(tuple(float(v) for v in points[i]) for i in keep_idx),
        directions=directions,
    )


def _hv_2d(P: np.ndarray, ref: np.ndarray) -> float:
    # maximize orientation; P non-dominated
    order = np.argsort(-P[:, 0])
    P = P[order]
    hv = 0.0
    prev_y = ref[1]
    for x, y in P:
        hv += (x - ref[0]) * max(y - prev_y, 0.0)
        prev_y = max(prev_y, y)
    return hv


def _hv_3d(P: np.ndarray, ref: np.ndarray) -> float:
    # Sweep over z descending, accumulating 2D area times slab thickness.
    order = np.argsort(-P[:, 2])
    P = P[order]
    zs = list(P[:, 2]) + [ref[2]]
    hv = 0.0
    active: list[np.ndarray] = []
    for i in range(len(P)):
        active.append(P[i, :2])
        dz = zs[i] - zs[i + 1]
        if dz > 0:
            A = np.array(active)
            nd = [
                a
                for k, a in enumerate(A)
                if not any(
                    np.all(b >= a) and np.any(b > a) for j, b in enumerate(A) if j != k
                )
            ]
            hv += _hv_2d(np.array(nd), ref[:2]) * dz
    return hv


def hypervolume(front: ParetoFront, reference: Sequence[float]) -> float:
    """Exact dominated hypervolume in the maximize-all orientation."""
    k = len(front.directions)
    if k < 2 or k > 3:
        raise UnsupportedDimension(f"{k} objectives (supported: 2 or 3)")
    ref = _oriented([reference], front.directions)[0]
    if not front.points:
        return 0.0
    P = _oriented(front.points, front.directions)
    if np.any(P <= ref):
        raise PointBelowReference("every front point must dominate the reference")
    if k == 2:
        return float(_hv_2d(P, ref))
    return float(_hv_3d(P, ref))


def default_reference(
    front: ParetoFront, directions: Sequence[ObjectiveDirection]
) -> tuple[float, ...]:
    """Per-objective thresholds when provided, else front minimum minus 10% of
    the front range (in the maximize orientation), mapped back to raw values."""
    ref_oriented = []
    P = _oriented(front.points, directions) if front.points else None
    for j, d in enumerate(directions):
        if d.threshold is not None:
            ref_oriented.append(d.sign * d.threshold)
        else:
            if P is None or P.shape[0] == 0:
                ref_oriented.append(-1.0)
                continue
            lo, hi = float(P[:, j].min()), float(P[:, j].max())
            rng = hi - lo if hi > lo else 1.0
            ref_oriented.append(lo - 0.1 * rng)
    return tuple(d.sign * r for d, r in zip(directions, ref_oriented))


def _hv_increment_2d(front_or: np.ndarray, ref: np.ndarray, samples: np.ndarray) -> np.ndarray:
    """Vectorized HV(front + s) - HV(front) for 2-objective samples (maximize)."""
    sx = samples[:, 0]
    sy = samples[:, 1]
    if front_or.shape[0] == 0:
        return np.maximum(sx - ref[0], 0.0) * np.maximum(sy - ref[1], 0.0)
    order = np.argsort(-front_or[:, 0])
    F = front_or[order]
    xs = F[:, 0]
    ys = F[:, 1]
    # Interval i has upper x edge u_i, lower x edge l_i and envelope height H_i.
    uppers = np.concatenate([[np.inf], xs])
    lowers = np.concatenate([xs, [ref[0]]])
    heights = np.concatenate([[ref[1]], ys])
    width = np.clip(np.minimum(sx[:, None], uppers[None, :]) - np.maximum(lowers[None, :], ref[0]), 0.0, None)
    rise = np.clip(sy[:, None] - np.maximum(heights[None, :], ref[1]), 0.0, None)
    return np.sum(width * rise, axis=1)


def ehvi(
    means: Sequence[float],
    sds: Sequence[float],
    front: ParetoFront,
    reference: Sequence[float] | None = None,
    mc_samples: int = 256,
    seed: int = 0,
) -> float:
    """Monte Carlo expected hypervolume improvement with common random numbers."""
    if mc_samples < 1:
        raise AcquisitionError("mc_samples must be >= 1")
    directions = front.directions
    k = len(directions)
    if k < 2 or k > 3:
        raise UnsupportedDimension(f"{k} objectives (supported: 2 or 3)")
    if reference is None:
        reference = default_reference(front, directions)
    ref = _oriented([reference], directions)[0]
    F = _oriented(front.points, directions) if front.points else np.zeros((0, k))
    if F.shape[0] and np.any(F <= ref):
        raise PointBelowReference("every front point must dominate the reference")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((mc_samples, k))
    signs = np.array([d.sign for d in directions])
    samples = (np.asarray(means) + np.asarray(sds) * z) * signs
    if k == 2:
        return float(np.mean(_hv_increment_2d(F, ref, samples)))
    base = _hv_3d(F, ref) if F.shape[0] else 0.0
    incs = np.empty(mc_samples)
    for i, s in enumerate(samples):
        if np.any(s <= ref):
            incs[i] = 0.0
            continue
        allp = np.vstack([F, s[None, :]])
        nd = [
            a
            for j, a in enumerate(allp)
            if not any(np.all(b >= a) and np.any(b > a) for m, b in enumerate(allp) if m != j)
        ]
        incs[i] = max(_hv_3d(np.array(nd), ref) - base, 0.0)
    return float(np.mean(incs))


def _categorical_combos(space: SearchSpace, rng: np.random.Generator, count: int):
    cats = space.categorical
    if not cats:
        return [dict()]
    total = math.prod(len(p.kind.levels) for p in cats)
    if total <= 64:
        return [
            dict(zip((p.name for p in cats), combo))
            for combo in itertools.product(*(p.kind.levels for p in cats))
        ]
    return [
        {p.name: p.kind.levels[rng.integers(len(p.kind.levels))] for p in cats}
        for _ in range(count)
    ]


def _feasible_candidates(
    space: SearchSpace, n: int, seed: int
) -> list[dict[str, object]]:
    cont = space.continuous
    stream = sobol_stream(len(cont))
    rng = np.random.default_rng(seed)
    combos = _categorical_combos(space, rng, n)
    out: list[dict[str, object]] = []
    rejected = 0
    ci = 0
    while len(out) < n:
        u = next(stream)
        base: dict[str, object] = {
            p.name: float(p.kind.lower + ui * (p.kind.upper - p.kind.lower))
            for p, ui in zip(cont, u)
        }
        base = _apply_composition(space, base)
        point = dict(base)
        point.update(combos[ci % len(combos)])
        ci += 1
        ok, _ = is_feasible(space, point)
        if ok and in_bounds(space, point):
            out.append(point)
            rejected = 0
        else:
            rejected += 1
            if rejected >= 1000 * n:
                raise InfeasibleRegion("candidate sampling exhausted rejection budget")
    return out


def _refine(
    score: Callable[[Mapping[str, object]], float],
    space: SearchSpace,
    start: dict[str, object],
    start_score: float,
    sweeps: int = 20,
) -> tuple[dict[str, object], float]:
    """Coordinate descent with shrinking steps; categorical coords try all levels."""
    point = dict(start)
    best = start_score
    steps = {
        p.name: 0.25 * (p.kind.upper - p.kind.lower) for p in space.continuous
    }
    for _ in range(sweeps):
        for p in space.continuous:
            for delta in (steps[p.name], -steps[p.name]):
                cand = dict(point)
                cand[p.name] = float(
                    np.clip(cand[p.name] + delta, p.kind.lower, p.kind.upper)
                )
                cand = _apply_composition(space, cand)
                ok, _ = is_feasible(space, cand)
                if not (ok and in_bounds(space, cand)):
                    continue
                s = score(cand)
                if s > best:
                    best, point = s, cand
        for p in space.categorical:
            for level in p.kind.levels:
                if level == point[p.name]:
                    continue
                cand = dict(point)
                cand[p.name] = level
                ok, _ = is_feasible(space, cand)
                if ok:
                    s = score(cand)
                    if s > best:
                        best, point = s, cand
        for name in steps:
            steps[name] *= 0.5
    return point, best


def optimize_acquisition(
    score: Callable[[Mapping[str, object]], float],
    space: SearchSpace,
    restarts: int = 4,
    seed: int = 0,
    num_candidates: int = 256,
) -> dict[str, object]:
    """Best of quasi-random feasible candidates plus coordinate-descent
    refinement from the top `restarts`; ties broken by lowest candidate index."""
    ranked = _ranked_candidates(score, space, restarts, seed, num_candidates)
    return ranked[0][0]


def _ranked_candidates(
    score: Callable[[Mapping[str, object]], float],
    space: SearchSpace,
    restarts: int,
    seed: int,
    num_candidates: int,
) -> list[tuple[dict[str, object], float]]:
    cands = _feasible_candidates(space, num_candidates, seed)
    scores = [score(c) for c in cands]
    order = sorted(range(len(cands)), key=lambda i: (-scores[i], i))
    results: list[tuple[dict[str, object], float]] = []
    for i in order[: max(restarts, 1)]:
        results.append(_refine(score, space, cands[i], scores[i]))
    for i in order[max(restarts, 1) :]:
        results.append((cands[i], scores[i]))
    results.sort(key=lambda t: -t[1])
    return results


class BatchModel(Protocol):
    """Model state select_batch can score with and condition on fantasies."""

    def acquisition(self, point: Mapping[str, object]) -> float: ...

    def fantasize(self, point: Mapping[str, object]) -> "BatchModel": ...


def select_batch(
    model: BatchModel,
    space: SearchSpace,
    q: int,
    seed: int = 0,
) -> list[dict[str, object]]:
    """Sequential greedy selection with believer fantasies; after each pick the
    model is conditioned on its own predicted mean at the chosen point. Picks
    closer than 1e-6 in encoded coordinates to a prior pick are rejected."""
    if q < 1:
        raise AcquisitionError("q must be >= 1")
    picks: list[dict[str, object]] = []
    encoded: list[np.ndarray] = []
    current = model
    for step in range(q):
        ranked = _ranked_candidates(
            current.acquisition, space, restarts=4, seed=seed + step, num_candidates=256
        )
        chosen = None
        for cand, _ in ranked:
            e = encode(space, cand)
            if all(np.linalg.norm(e - prev) >= 1e-6 for prev in encoded):
                chosen = cand
                encoded.append(e)
                break
        if chosen is None:
            raise AcquisitionError("could not find a batch point distinct from prior picks")
        picks.append(chosen)
        if step + 1 < q:
            current = current.fantasize(chosen)
    return picks
