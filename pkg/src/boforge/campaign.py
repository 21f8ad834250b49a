"""Ask/tell campaign state machine: quasi-random initialization, model-based
suggestion via EI or EHVI, historical-data attachment, multitask pooling,
batching, and trace export."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from . import gp
from .acquisition import (
    ObjectiveDirection,
    ParetoFront,
    default_reference,
    ehvi,
    expected_improvement,
    hypervolume,
    optimize_acquisition,
    pareto_front,
    select_batch,
)
from .space import SearchSpace, check_point, encode, is_feasible, sample_initial, validate_space


class CampaignError(Exception):
    pass


class CampaignAbort(Exception):
    """Evaluator errors that are deterministic rather than transient; run_loop
    propagates these immediately instead of retrying."""


class TooManyObjectives(CampaignError):
    pass


class InvalidConfig(CampaignError):
    pass


class OutstandingBatch(CampaignError):
    pass


class UnknownTrial(CampaignError):
    pass


class AlreadyCompleted(CampaignError):
    pass


class NonFiniteOutcome(CampaignError):
    pass


class InfeasiblePoint(CampaignError):
    pass


class MissingOutcome(CampaignError):
    pass


class NoCompletedTrials(CampaignError):
    pass


class EvaluatorFailing(CampaignError):
    pass


@dataclass(frozen=True)
class TaskSpec:
    num_tasks: int = 2
    target_task: int = 0


@dataclass(frozen=True)
class CampaignConfig:
    space: SearchSpace
    objectives: tuple[ObjectiveDirection, ...]
    model: str = "standard"  # "standard" | "fully_bayesian"
    tasks: TaskSpec | None = None
    batch_size: int = 1
    num_initial: int | None = None
    seed: int = 0

    def resolved_num_initial(self) -> int:
        if self.num_initial is not None:
            return self.num_initial
        return max(4, 2 * len(self.space.parameters))


@dataclass
class Trial:
    id: int
    point: dict[str, object]
    task: int | None = None
    status: str = "suggested"  # suggested | completed | failed
    outcomes: dict[str, float] = field(default_factory=dict)
    phase: str = "init"  # init | model


class Campaign:
    """Synchronous service-style campaign; one outstanding batch at a time.

    All behavior downstream of the seed is deterministic, so replaying the
    suggest/complete event log reproduces the state exactly.
    """

    def __init__(self, config: CampaignConfig):
        errs = validate_space(config.space)
        if errs:
            raise InvalidConfig("; ".join(str(e) for e in errs))
        if not 1 <= len(config.objectives) <= 2:
            raise TooManyObjectives("campaigns support 1 or 2 objectives")
        if len({o.name for o in config.objectives}) != len(config.objectives):
            raise InvalidConfig("objective names must be unique")
        if config.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")
        if config.tasks is not None and not (
            0 <= config.tasks.target_task < config.tasks.num_tasks
        ):
            raise InvalidConfig("target_task out of range")
        self.config = config
        self.trials: list[Trial] = []
        self._init_cursor = 0  # how many init-stream points have been handed out

    # -- bookkeeping ------------------------------------------------------

    @property
    def completed(self) -> list[Trial]:
        return [t for t in self.trials if t.status == "completed"]

    @property
    def open_suggestions(self) -> list[Trial]:
        return [t for t in self.trials if t.status == "suggested"]

    def _next_id(self) -> int:
        return len(self.trials)

    # -- tell -------------------------------------------------------------

    def attach_data(
        self,
        rows: Sequence[tuple[Mapping[str, object], int | None, Mapping[str, float]]],
    ) -> None:
        """Append historical rows as completed trials; they count toward the
        initialization budget. Infeasible rows are rejected (strict mode)."""
        for i, (point, task, outcomes) in enumerate(rows):
            check_point(self.config.space, point)
            ok, violated = is_feasible(self.config.space, point)
            if not ok:
                raise InfeasiblePoint(f"row {i} violates {violated}")
            for obj in self.config.objectives:
                if obj.name not in outcomes:
                    raise MissingOutcome(f"row {i} missing outcome {obj.name!r}")
                if not np.isfinite(outcomes[obj.name]):
                    raise NonFiniteOutcome(f"row {i} outcome {obj.name!r} not finite")
            if self.config.tasks is not None and task is None:
                raise InvalidConfig(f"row {i}: multitask campaigns need a task index")
            self.trials.append(
                Trial(
                    id=self._next_id(),
                    point=dict(point),
                    task=task,
                    status="completed",
                    outcomes={o.name: float(outcomes[o.name]) for o in self.config.objectives},
                    phase="init",
                )
            )

    def complete(self, trial_id: int, outcomes: Mapping[str, float]) -> None:
        trial = next((t for t in self.trials if t.id == trial_id), None)
        if trial is None:
            raise UnknownTrial(f"no trial with id {trial_id}")
        if trial.status == "completed":
            raise AlreadyCompleted(f"trial {trial_id} already completed")
        for obj in self.config.objectives:
            if obj.name not in outcomes:
                raise MissingOutcome(f"trial {trial_id} missing outcome {obj.name!r}")
            if not np.isfinite(outcomes[obj.name]):
                raise NonFiniteOutcome(f"trial {trial_id} outcome {obj.name!r} not finite")
        trial.outcomes = {o.name: float(outcomes[o.name]) for o in self.config.objectives}
        trial.status = "completed"

    def fail(self, trial_id: int) -> None:
        trial = next((t for t in self.trials if t.id == trial_id), None)
        if trial is None:
            raise UnknownTrial(f"no trial with id {trial_id}")
        if trial.status == "completed":
            raise AlreadyCompleted(f"trial {trial_id} already completed")
        trial.status = "failed"

    # -- ask --------------------------------------------------------------

    def suggest(self, q: int | None = None) -> list[Trial]:
        q = self.config.batch_size if q is None else q
        if self.open_suggestions:
            raise OutstandingBatch(
                f"trials {[t.id for t in self.open_suggestions]} are still open"
            )
        if q < 1 or q > self.config.batch_size:
            raise InvalidConfig(f"q must be in 1..{self.config.batch_size}")
        num_initial = self.config.resolved_num_initial()
        new: list[Trial] = []
        if len(self.completed) < num_initial:
            points = sample_initial(
                self.config.space, self._init_cursor + q, self.config.seed
            )[self._init_cursor :]
            self._init_cursor += q
            phase = "init"
        else:
            points = self._suggest_model_based(q)
            phase = "model"
        target = self.config.tasks.target_task if self.config.tasks else None
        for p in points:
            t = Trial(id=self._next_id(), point=p, task=target, phase=phase)
            self.trials.append(t)
            new.append(t)
        return new

    def _surrogate(self) -> "_Surrogates":
        return _Surrogates.fit(self.config, self.completed)

    def _suggest_model_based(self, q: int) -> list[dict[str, object]]:
        surr = self._surrogate()
        seed = self.config.seed * 1000003 + len(self.trials)
        if q == 1:
            return [optimize_acquisition(surr.acquisition, self.config.space, seed=seed)]
        return select_batch(surr, self.config.space, q, seed=seed)

    # -- reporting --------------------------------------------------------

    def best(self) -> Trial | ParetoFront:
        done = self.completed
        if not done:
            raise NoCompletedTrials("no completed trials")
        objs = self.config.objectives
        if len(objs) == 1:
            obj = objs[0]
            key = (lambda t: (t.outcomes[obj.name], t.id)) if obj.goal == "minimize" else (
                lambda t: (-t.outcomes[obj.name], t.id)
            )
            return min(done, key=key)
        pts = [tuple(t.outcomes[o.name] for o in objs) for t in done]
        front = pareto_front(pts, objs)
        kept = []
        for p in front.points:
            ok = True
            for v, o in zip(p, objs):
                if o.threshold is not None:
                    ok = ok and (v <= o.threshold if o.goal == "minimize" else v >= o.threshold)
            if ok:
                kept.append(p)
        return ParetoFront(points=tuple(kept), directions=front.directions)

    def _progress_metric(self) -> float:
        """Best-so-far for single objective; dominated hypervolume for two."""
        objs = self.config.objectives
        done = self.completed
        if len(objs) == 1:
            vals = [t.outcomes[objs[0].name] for t in done]
            return min(vals) if objs[0].goal == "minimize" else max(vals)
        # Reference anchored at the cumulative worst observation per objective
        # (minus 10% of observed range) so the metric is monotone over the run.
        pts = [tuple(t.outcomes[o.name] for o in objs) for t in done]
        oriented = np.array(pts) * np.array([o.sign for o in objs])
        ref = []
        for j, o in enumerate(objs):
            lo, hi = float(oriented[:, j].min()), float(oriented[:, j].max())
            ref.append(o.sign * (lo - 0.1 * max(hi - lo, 1.0)))
        front = pareto_front(pts, objs)
        return hypervolume(front, tuple(ref))

    def run_loop(
        self,
        evaluator: Callable[[Mapping[str, object]], Mapping[str, float]],
        budget: int,
    ) -> list["TraceRow"]:
        if budget < 1:
            raise InvalidConfig("budget must be >= 1")
        trace: list[TraceRow] = []
        consecutive_failures = 0
        while len(self.completed) < budget:
            q = min(self.config.batch_size, budget - len(self.completed))
            for trial in self.suggest(q):
                try:
                    outcomes = evaluator(trial.point)
                except CampaignAbort:
                    raise
                except Exception as err:
                    self.fail(trial.id)
                    consecutive_failures += 1
                    if consecutive_failures >= 10:
                        raise EvaluatorFailing(
                            f"10 consecutive evaluator failures; last: {err}"
                        ) from err
                    continue
                consecutive_failures = 0
                self.complete(trial.id, outcomes)
                trace.append(
                    TraceRow(
                        trial_id=trial.id,
                        phase=trial.phase,
                        point=dict(trial.point),
                        outcomes=dict(self.trials[trial.id].outcomes),
                        progress=self._progress_metric(),
                    )
                )
        return trace


@dataclass(frozen=True)
class TraceRow:
    trial_id: int
    phase: str
    point: dict[str, object]
    outcomes: dict[str, float]
    progress: float  # best-so-far (single objective) or front hypervolume


def _fmt(v: object) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def format_trace(
    rows: Sequence[TraceRow],
    space: SearchSpace,
    objectives: Sequence[ObjectiveDirection],
) -> str:
    """Comma-separated trace: id, phase, parameters, objectives, best_or_hv."""
    header = (
        ["id", "phase"]
        + [p.name for p in space.parameters]
        + [o.name for o in objectives]
        + ["best_or_hv"]
    )
    lines = [",".join(header)]
    for r in rows:
        cells = [str(r.trial_id), r.phase]
        cells += [_fmt(r.point[p.name]) for p in space.parameters]
        cells += [_fmt(r.outcomes[o.name]) for o in objectives]
        cells.append(_fmt(r.progress))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


class _Surrogates:
    """Per-objective GP surrogates plus the acquisition they induce.

    Fantasy conditioning appends the predicted means at a point without
    refitting hyperparameters (believer batching).
    """

    def __init__(
        self,
        config: CampaignConfig,
        X: np.ndarray,
        tasks: np.ndarray | None,
        Y: dict[str, np.ndarray],
        kernels: dict[str, list[gp.KernelConfig]],
        observed: list[dict[str, float]],
    ):
        self.config = config
        self.X = X
        self.tasks = tasks
        self.Y = Y
        self.kernels = kernels
        self.observed = observed  # completed outcomes on the target task
        self.states = {
            name: [gp.GpState(X, Y[name], cfg, tasks) for cfg in configs]
            for name, configs in kernels.items()
        }
        self._query_tasks = (
            np.array([config.tasks.target_task]) if config.tasks is not None else None
        )

    @classmethod
    def fit(cls, config: CampaignConfig, completed: Sequence[Trial]) -> "_Surrogates":
        space = config.space
        if completed:
            X = np.array([encode(space, t.point) for t in completed])
        else:
            X = np.zeros((0, space.encoded_dim))
        tasks = None
        num_tasks = None
        if config.tasks is not None:
            tasks = np.array([t.task for t in completed], dtype=int)
            num_tasks = config.tasks.num_tasks
        kernels: dict[str, list[gp.KernelConfig]] = {}
        Y: dict[str, np.ndarray] = {}
        for obj in config.objectives:
            y = np.array([t.outcomes[obj.name] for t in completed], dtype=float)
            Y[obj.name] = y
            if config.model == "fully_bayesian":
                kernels[obj.name] = gp.sample_hyperposterior(X, y, seed=config.seed)
            else:
                try:
                    kernels[obj.name] = [gp.fit_mle(X, y, tasks=tasks, num_tasks=num_tasks)]
                except gp.DegenerateData:
                    kernels[obj.name] = [
                        gp.default_config(X.shape[1] if X.size else 1, num_tasks)
                    ]
        if config.tasks is not None:
            target = config.tasks.target_task
            observed = [
                {o.name: t.outcomes[o.name] for o in config.objectives}
                for t in completed
                if t.task == target
            ]
        else:
            observed = [
                {o.name: t.outcomes[o.name] for o in config.objectives} for t in completed
            ]
        if not observed:
            # nothing on the target task yet; improvement is measured against
            # the pooled auxiliary observations instead
            observed = [
                {o.name: t.outcomes[o.name] for o in config.objectives} for t in completed
            ]
        return cls(config, X, tasks, Y, kernels, observed)

    def _predict_all(self, obj_name: str, x: np.ndarray) -> list[tuple[float, float]]:
        """(mean, sd) per hyperparameter sample at one encoded point."""
        out = []
        for state in self.states[obj_name]:
            m, v = state.predict(x[None, :], self._query_tasks)
            out.append((float(m[0]), float(np.sqrt(max(v[0], 0.0)))))
        return out

    def _predict(self, obj_name: str, x: np.ndarray) -> tuple[float, float]:
        preds = self._predict_all(obj_name, x)
        if len(preds) == 1:
            return preds[0]
        means = np.array([p[0] for p in preds])
        variances = np.array([p[1] ** 2 for p in preds])
        mean = float(np.mean(means))
        var = float(np.mean(variances + means**2) - mean**2)
        return mean, float(np.sqrt(max(var, 0.0)))

    def acquisition(self, point: Mapping[str, object]) -> float:
        x = encode(self.config.space, point)
        objs = self.config.objectives
        if len(objs) == 1:
            obj = objs[0]
            vals = [o[obj.name] for o in self.observed]
            best = min(vals) if obj.goal == "minimize" else max(vals)
            # fully-Bayesian: average the acquisition over hyperposterior samples
            preds = self._predict_all(obj.name, x)
            return float(
                np.mean([expected_improvement(m, sd, best, obj.goal) for m, sd in preds])
            )
        # two objectives: EHVI over the observed front
        pts = [tuple(o[obj.name] for obj in objs) for o in self.observed]
        front = pareto_front(pts, objs)
        ref = default_reference(front, objs)
        # Threshold references can cut into the observed data; points at or
        # beyond the reference enclose no volume, so drop them to keep EHVI
        # defined rather than erroring on observations worse than acceptable.
        signs = np.array([o.sign for o in objs])
        ref_oriented = np.asarray(ref) * signs
        kept = tuple(
            p for p in front.points if np.all(np.asarray(p) * signs > ref_oriented)
        )
        front = ParetoFront(points=kept, directions=front.directions)
        per_obj = [self._predict_all(obj.name, x) for obj in objs]
        k = len(per_obj[0])
        total = 0.0
        for i in range(k):
            means = [per_obj[j][i][0] for j in range(len(objs))]
            sds = [per_obj[j][i][1] for j in range(len(objs))]
            total += ehvi(means, sds, front, ref, mc_samples=128, seed=self.config.seed)
        return total / k

    def fantasize(self, point: Mapping[str, object]) -> "_Surrogates":
        x = encode(self.config.space, point)
        Y = {}
        fantasy_out: dict[str, float] = {}
        for obj in self.config.objectives:
            m, _ = self._predict(obj.name, x)
            Y[obj.name] = np.concatenate([self.Y[obj.name], [m]])
            fantasy_out[obj.name] = m
        X = np.vstack([self.X, x[None, :]]) if self.X.size else x[None, :]
        tasks = self.tasks
        if tasks is not None:
            tasks = np.concatenate([tasks, [self.config.tasks.target_task]])
        return _Surrogates(
            self.config, X, tasks, Y, self.kernels, self.observed + [fantasy_out]
        )
