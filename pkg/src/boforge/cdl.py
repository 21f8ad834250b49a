"""Campaign description language (CDL): line-oriented parser, canonical
printer, and the binding that executes a parsed script as a campaign.

Grammar (one statement per line, `#` starts a comment, sections in fixed
order params, constraints, objectives, model, strategy, data, loop,
visualize):

    [params]      name : range(lower, upper) | choice("A","B",...)
    [constraints] sum(a,b) <= c | order(a <= b)
                  | linear(2*a + 1.5*b <= c) | composition(a,b = 1.0)
    [objectives]  name : minimize|maximize = <expression> { threshold = r }
    [model]       kind = standard|fully_bayesian
                  tasks = single|multi(n, target=t)
    [strategy]    batch_size = q
                  num_initial = n
    [data]        comma-separated values: params order, task (multi only),
                  then one value per objective
    [loop]        budget = B
                  seed = S
    [visualize]   on|off
"""
from __future__ import annotations

import re
import time
from dataclasses import dataclass, field

from . import expressions as ex
from .acquisition import ObjectiveDirection, ParetoFront
from .campaign import (
    Campaign,
    CampaignAbort,
    CampaignConfig,
    TaskSpec,
    TraceRow,
    format_trace,
)
from .space import (
    Categorical,
    CompositionConstraint,
    Constraint,
    Continuous,
    LinearConstraint,
    OrderConstraint,
    ParameterSpec,
    SearchSpace,
    SumConstraint,
    validate_space,
)
from .viz import convergence_svg

SECTION_ORDER = [
    "params",
    "constraints",
    "objectives",
    "model",
    "strategy",
    "data",
    "loop",
    "visualize",
]


@dataclass(frozen=True)
class ScriptError:
    line: int  # 1-based
    column: int  # 1-based
    code: str
    message: str

    def __str__(self) -> str:
        return f"line {self.line}, col {self.column}: {self.code}: {self.message}"


class ScriptParseError(Exception):
    def __init__(self, errors: list[ScriptError]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


class ScriptRuntimeError(CampaignAbort):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class ScriptObjective:
    name: str
    goal: str
    expression: ex.Node
    threshold: float | None = None
    line: int = field(default=0, compare=False)

    def direction(self) -> ObjectiveDirection:
        return ObjectiveDirection(name=self.name, goal=self.goal, threshold=self.threshold)


@dataclass(frozen=True)
class DataRow:
    point: dict[str, object]
    task: int | None
    outcomes: dict[str, float]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class CampaignScript:
    params: tuple[ParameterSpec, ...]
    constraints: tuple[Constraint, ...]
    objectives: tuple[ScriptObjective, ...]
    model_kind: str = "standard"
    tasks: TaskSpec | None = None
    batch_size: int = 1
    num_initial: int | None = None
    data_rows: tuple[DataRow, ...] = ()
    budget: int = 15
    seed: int = 0
    visualize: bool = False

    @property
    def space(self) -> SearchSpace:
        return SearchSpace(parameters=self.params, constraints=self.constraints)


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"


def _strip_comment(line: str) -> str:
    out = []
    in_str = False
    for c in line:
        if c == '"':
            in_str = not in_str
        if c == "#" and not in_str:
            break
        out.append(c)
    return "".join(out)


class _Parser:
    def __init__(self, text: str):
        self.errors: list[ScriptError] = []
        self.text = text

    def err(self, line: int, code: str, message: str, column: int = 1) -> None:
        self.errors.append(ScriptError(line=line, column=column, code=code, message=message))

    def parse(self) -> CampaignScript | None:
        sections: dict[str, list[tuple[int, str]]] = {}
        order_seen: list[str] = []
        current: str | None = None
        for lineno, raw in enumerate(self.text.splitlines(), start=1):
            line = _strip_comment(raw).strip()
            if not line:
                continue
            m = re.fullmatch(r"\[(\w+)\]", line)
            if m:
                name = m.group(1)
                if name not in SECTION_ORDER:
                    self.err(lineno, "UnknownSection", f"unknown section [{name}]")
                    current = None
                    continue
                if name in sections:
                    self.err(lineno, "DuplicateSection", f"section [{name}] repeated")
                sections.setdefault(name, [])
                order_seen.append(name)
                current = name
                continue
            if current is None:
                self.err(lineno, "StrayStatement", f"statement outside any section: {line!r}")
                continue
            for stmt in line.split(";"):
                stmt = stmt.strip()
                if stmt:
                    sections[current].append((lineno, stmt))

        ranks = [SECTION_ORDER.index(s) for s in order_seen]
        if ranks != sorted(ranks):
            self.err(1, "SectionOrder",
                     f"sections must appear in order {', '.join(SECTION_ORDER)}")
        for required in ("params", "objectives", "loop"):
            if required not in sections:
                self.err(1, "MissingSection", f"section [{required}] is required")
        if self.errors and not all(s in sections for s in ("params", "objectives", "loop")):
            return None

        params = self._parse_params(sections.get("params", []))
        constraints = self._parse_constraints(sections.get("constraints", []), params)
        objectives = self._parse_objectives(sections.get("objectives", []), params)
        model_kind, tasks = self._parse_model(sections.get("model", []))
        batch_size, num_initial = self._parse_strategy(sections.get("strategy", []))
        data_rows = self._parse_data(sections.get("data", []), params, tasks, objectives)
        budget, seed = self._parse_loop(sections.get("loop", []))
        visualize = self._parse_visualize(sections.get("visualize", []))

        if self.errors:
            return None
        script = CampaignScript(
            params=tuple(params),
            constraints=tuple(constraints),
            objectives=tuple(objectives),
            model_kind=model_kind,
            tasks=tasks,
            batch_size=batch_size,
            num_initial=num_initial,
            data_rows=tuple(data_rows),
            budget=budget,
            seed=seed,
            visualize=visualize,
        )
        for verr in validate_space(script.space):
            self.err(1, verr.code, verr.message)
        if self.errors:
            return None
        return script

    def _parse_params(self, stmts) -> list[ParameterSpec]:
        params: list[ParameterSpec] = []
        for lineno, stmt in stmts:
            m = re.fullmatch(rf"({_IDENT})\s*:\s*range\(\s*({_NUM})\s*,\s*({_NUM})\s*\)", stmt)
            if m:
                params.append(
                    ParameterSpec(m.group(1), Continuous(float(m.group(2)), float(m.group(3))))
                )
                continue
            m = re.fullmatch(rf"({_IDENT})\s*:\s*choice\(\s*(.*)\s*\)", stmt)
            if m:
                levels = re.findall(r'"([^"]*)"', m.group(2))
                rest = re.sub(r'"[^"]*"', "", m.group(2)).replace(",", "").strip()
                if not levels or rest:
                    self.err(lineno, "BadParameter", f"malformed choice(...): {stmt!r}")
                    continue
                params.append(ParameterSpec(m.group(1), Categorical(tuple(levels))))
                continue
            self.err(lineno, "BadParameter", f"cannot parse parameter: {stmt!r}")
        return params

    def _check_names(self, names, params, lineno, where) -> bool:
        declared = {p.name for p in params}
        ok = True
        for n in names:
            if n not in declared:
                self.err(lineno, "UnknownParameter", f"{n!r} referenced by {where}")
                ok = False
        return ok

    def _parse_constraints(self, stmts, params) -> list[Constraint]:
        out: list[Constraint] = []
        for lineno, stmt in stmts:
            m = re.fullmatch(rf"sum\(\s*({_IDENT}(?:\s*,\s*{_IDENT})*)\s*\)\s*(<=|>=)\s*({_NUM})", stmt)
            if m:
                names = tuple(n.strip() for n in m.group(1).split(","))
                if self._check_names(names, params, lineno, "sum constraint"):
                    out.append(SumConstraint(names, float(m.group(3)), m.group(2)))
                continue
            m = re.fullmatch(rf"order\(\s*({_IDENT})\s*<=\s*({_IDENT})\s*\)", stmt)
            if m:
                if self._check_names([m.group(1), m.group(2)], params, lineno, "order constraint"):
                    out.append(OrderConstraint(m.group(1), m.group(2)))
                continue
            m = re.fullmatch(r"linear\(\s*(.*?)\s*(<=|>=)\s*(" + _NUM + r")\s*\)", stmt)
            if m:
                terms = re.findall(
                    rf"([+-]?)\s*(?:({_NUM})\s*\*\s*)?({_IDENT})", m.group(1)
                )
                rebuilt = re.sub(r"\s+", "", m.group(1))
                joined = "".join(
                    f"{s or '+'}{(c + '*') if c else ''}{n}" for s, c, n in terms
                ).lstrip("+")
                if not terms or rebuilt.lstrip("+") != joined:
                    self.err(lineno, "BadConstraint", f"cannot parse linear terms: {stmt!r}")
                    continue
                coeffs = tuple(
                    (n, (-1.0 if s == "-" else 1.0) * (float(c) if c else 1.0))
                    for s, c, n in terms
                )
                if self._check_names([n for n, _ in coeffs], params, lineno, "linear constraint"):
                    out.append(LinearConstraint(coeffs, float(m.group(3)), m.group(2)))
                continue
            m = re.fullmatch(
                rf"composition\(\s*({_IDENT}(?:\s*,\s*{_IDENT})*)\s*=\s*({_NUM})\s*\)", stmt
            )
            if m:
                names = tuple(n.strip() for n in m.group(1).split(","))
                if self._check_names(names, params, lineno, "composition constraint"):
                    out.append(CompositionConstraint(names, float(m.group(2))))
                continue
            self.err(lineno, "BadConstraint", f"cannot parse constraint: {stmt!r}")
        return out

    def _parse_objectives(self, stmts, params) -> list[ScriptObjective]:
        out: list[ScriptObjective] = []
        declared = {p.name for p in params}
        for lineno, stmt in stmts:
            m = re.fullmatch(
                rf"({_IDENT})\s*:\s*(minimize|maximize)\s*=\s*(.*?)"
                rf"(?:\{{\s*threshold\s*=\s*({_NUM})\s*\}})?\s*",
                stmt,
            )
            if not m:
                self.err(lineno, "BadObjective", f"cannot parse objective: {stmt!r}")
                continue
            name, goal, expr_text, thresh = m.groups()
            try:
                node = ex.parse_expression(expr_text)
            except ex.ParseError as err:
                self.err(lineno, "BadExpression", str(err), column=err.pos + 1)
                continue
            for ref in sorted(ex.referenced_parameters(node)):
                if ref not in declared:
                    self.err(lineno, "UnknownParameter", f"{ref!r} used in objective {name!r}")
            if any(o.name == name for o in out):
                self.err(lineno, "DuplicateObjective", f"objective {name!r} declared twice")
            out.append(
                ScriptObjective(
                    name=name,
                    goal=goal,
                    expression=node,
                    threshold=float(thresh) if thresh else None,
                    line=lineno,
                )
            )
        if len(out) > 2:
            self.err(out[2].line, "TooManyObjectives", "scripts support 1 or 2 objectives")
        if not out:
            self.err(1, "NoObjectives", "at least one objective is required")
        return out

    def _parse_model(self, stmts) -> tuple[str, TaskSpec | None]:
        kind = "standard"
        tasks: TaskSpec | None = None
        for lineno, stmt in stmts:
            m = re.fullmatch(r"kind\s*=\s*(standard|fully_bayesian)", stmt)
            if m:
                kind = m.group(1)
                continue
            m = re.fullmatch(r"tasks\s*=\s*single", stmt)
            if m:
                tasks = None
                continue
            m = re.fullmatch(r"tasks\s*=\s*multi\(\s*(\d+)\s*,\s*target\s*=\s*(\d+)\s*\)", stmt)
            if m:
                n, t = int(m.group(1)), int(m.group(2))
                if n < 2 or t >= n:
                    self.err(lineno, "BadModel", f"bad task spec: {stmt!r}")
                else:
                    tasks = TaskSpec(num_tasks=n, target_task=t)
                continue
            self.err(lineno, "BadModel", f"cannot parse model statement: {stmt!r}")
        return kind, tasks

    def _parse_strategy(self, stmts) -> tuple[int, int | None]:
        batch_size = 1
        num_initial: int | None = None
        for lineno, stmt in stmts:
            m = re.fullmatch(r"batch_size\s*=\s*(\d+)", stmt)
            if m:
                batch_size = int(m.group(1))
                if batch_size < 1:
                    self.err(lineno, "BadStrategy", "batch_size must be >= 1")
                continue
            m = re.fullmatch(r"num_initial\s*=\s*(\d+)", stmt)
            if m:
                num_initial = int(m.group(1))
                continue
            self.err(lineno, "BadStrategy", f"cannot parse strategy statement: {stmt!r}")
        return batch_size, num_initial

    def _parse_data(self, stmts, params, tasks, objectives) -> list[DataRow]:
        rows: list[DataRow] = []
        want = len(params) + (1 if tasks else 0) + len(objectives)
        for lineno, stmt in stmts:
            cells = [c.strip() for c in stmt.split(",")]
            if len(cells) != want:
                self.err(lineno, "BadDataRow", f"expected {want} values, got {len(cells)}")
                continue
            point: dict[str, object] = {}
            bad = False
            for p, cell in zip(params, cells):
                if isinstance(p.kind, Continuous):
                    try:
                        point[p.name] = float(cell)
                    except ValueError:
                        self.err(lineno, "BadDataRow", f"{p.name}: expected number, got {cell!r}")
                        bad = True
                else:
                    level = cell.strip('"')
                    if level not in p.kind.levels:
                        self.err(lineno, "BadDataRow", f"{p.name}: unknown level {cell!r}")
                        bad = True
                    point[p.name] = level
            i = len(params)
            task = None
            if tasks:
                try:
                    task = int(cells[i])
                except ValueError:
                    self.err(lineno, "BadDataRow", f"expected task index, got {cells[i]!r}")
                    bad = True
                i += 1
            outcomes: dict[str, float] = {}
            for obj, cell in zip(objectives, cells[i:]):
                try:
                    outcomes[obj.name] = float(cell)
                except ValueError:
                    self.err(lineno, "BadDataRow", f"{obj.name}: expected number, got {cell!r}")
                    bad = True
            if not bad:
                rows.append(DataRow(point=point, task=task, outcomes=outcomes, line=lineno))
        return rows

    def _parse_loop(self, stmts) -> tuple[int, int]:
        budget: int | None = None
        seed = 0
        for lineno, stmt in stmts:
            m = re.fullmatch(r"budget\s*=\s*(\d+)", stmt)
            if m:
                budget = int(m.group(1))
                if budget < 1:
                    self.err(lineno, "BadLoop", "budget must be >= 1")
                continue
            m = re.fullmatch(r"seed\s*=\s*(\d+)", stmt)
            if m:
                seed = int(m.group(1))
                continue
            self.err(lineno, "BadLoop", f"cannot parse loop statement: {stmt!r}")
        if budget is None:
            self.err(1, "BadLoop", "loop section must set budget")
            budget = 1
        return budget, seed

    def _parse_visualize(self, stmts) -> bool:
        value = False
        for lineno, stmt in stmts:
            if stmt in ("on", "off"):
                value = stmt == "on"
            else:
                self.err(lineno, "BadVisualize", f"expected on|off, got {stmt!r}")
        return value


def parse_script(text: str) -> CampaignScript:
    """Parse CDL text; raises ScriptParseError carrying every collected error."""
    parser = _Parser(text)
    script = parser.parse()
    if parser.errors or script is None:
        raise ScriptParseError(parser.errors)
    return script


def print_script(script: CampaignScript) -> str:
    """Canonical printer; parse(print(s)) is structurally identical to s."""
    lines: list[str] = ["[params]"]
    for p in script.params:
        if isinstance(p.kind, Continuous):
            lines.append(f"{p.name} : range({p.kind.lower:g}, {p.kind.upper:g})")
        else:
            levels = ",".join(f'"{lv}"' for lv in p.kind.levels)
            lines.append(f"{p.name} : choice({levels})")
    if script.constraints:
        lines.append("[constraints]")
        for c in script.constraints:
            if isinstance(c, SumConstraint):
                lines.append(f"sum({','.join(c.params)}) {c.sense} {c.bound:g}")
            elif isinstance(c, OrderConstraint):
                lines.append(f"order({c.lesser} <= {c.greater})")
            elif isinstance(c, LinearConstraint):
                terms = " + ".join(
                    (f"{coef:g}*{n}" if coef != 1.0 else n) for n, coef in c.coefficients
                )
                lines.append(f"linear({terms} {c.sense} {c.bound:g})")
            else:
                lines.append(f"composition({','.join(c.params)} = {c.total:g})")
    lines.append("[objectives]")
    for o in script.objectives:
        stmt = f"{o.name} : {o.goal} = {ex.print_expression(o.expression)}"
        if o.threshold is not None:
            stmt += f" {{ threshold = {o.threshold:g} }}"
        lines.append(stmt)
    lines.append("[model]")
    lines.append(f"kind = {script.model_kind}")
    if script.tasks is None:
        lines.append("tasks = single")
    else:
        lines.append(f"tasks = multi({script.tasks.num_tasks}, target={script.tasks.target_task})")
    lines.append("[strategy]")
    lines.append(f"batch_size = {script.batch_size}")
    if script.num_initial is not None:
        lines.append(f"num_initial = {script.num_initial}")
    if script.data_rows:
        lines.append("[data]")
        for row in script.data_rows:
            cells: list[str] = []
            for p in script.params:
                v = row.point[p.name]
                cells.append(f"{v:.9g}" if isinstance(v, float) else str(v))
            if script.tasks is not None:
                cells.append(str(row.task))
            cells += [f"{row.outcomes[o.name]:.9g}" for o in script.objectives]
            lines.append(",".join(cells))
    lines.append("[loop]")
    lines.append(f"budget = {script.budget}")
    lines.append(f"seed = {script.seed}")
    lines.append("[visualize]")
    lines.append("on" if script.visualize else "off")
    return "\n".join(lines) + "\n"


def eval_expression(node: ex.Node, assignment) -> float:
    return ex.eval_expression(node, assignment)


def execute_script(
    script: CampaignScript,
    budget: int | None = None,
    seed: int | None = None,
) -> tuple[list[TraceRow], dict]:
    """Run the script's campaign; returns (trace rows, summary).

    Summary keys: trials, best, wall_time, trace_text, svg (None unless the
    script turns visualization on).
    """
    directions = tuple(o.direction() for o in script.objectives)
    config = CampaignConfig(
        space=script.space,
        objectives=directions,
        model=script.model_kind,
        tasks=script.tasks,
        batch_size=script.batch_size,
        num_initial=script.num_initial,
        seed=script.seed if seed is None else seed,
    )
    campaign = Campaign(config)
    if script.data_rows:
        campaign.attach_data([(r.point, r.task, r.outcomes) for r in script.data_rows])

    def evaluator(point):
        out = {}
        for o in script.objectives:
            try:
                out[o.name] = ex.eval_expression(o.expression, point)
            except ex.ExpressionError as err:
                raise ScriptRuntimeError(str(err), line=o.line) from err
        return out

    start = time.perf_counter()
    trace = campaign.run_loop(evaluator, budget if budget is not None else script.budget)
    wall = time.perf_counter() - start
    best = campaign.best()
    if isinstance(best, ParetoFront):
        best_payload = {
            "front": [list(p) for p in best.points],
            "objectives": [o.name for o in script.objectives],
        }
    else:
        best_payload = {
            "trial_id": best.id,
            "point": best.point,
            "outcomes": best.outcomes,
        }
    summary = {
        "trials": len(campaign.completed),
        "best": best_payload,
        "wall_time": wall,
        "trace_text": format_trace(trace, script.space, directions),
        "svg": convergence_svg(trace, directions) if script.visualize else None,
    }
    return trace, summary
