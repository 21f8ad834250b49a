"""Binds a grid selection to a template context, renders the master campaign
template, and self-checks that the output parses as a valid script."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping

from . import cdl
from .expressions import eval_expression, parse_expression
from .grid import is_compatible, normalize_selection
from .template import TemplateDocument, parse_template, render


class GeneratorError(Exception):
    pass


class IncompatibleSelection(GeneratorError):
    def __init__(self, failed_rules):
        reasons = "; ".join(f"{r.id}: {r.reason}" for r in failed_rules)
        super().__init__(f"selection is incompatible: {reasons}")
        self.failed_rules = failed_rules


class InternalTemplateDefect(GeneratorError):
    pass


@dataclass(frozen=True)
class GenerationResult:
    script: str
    selection: dict[str, str]
    digest: str  # first 8 bytes of SHA-256 of the script text, hex


DEFAULT_BUDGET = 15
DEFAULT_SEED = 0
DEFAULT_NUM_INITIAL = 4
BATCH_Q = 3

BASE_EXPR_Y = "0.5*x1 + 0.2*x2"
BASE_EXPR_Y2 = "0.2*x1 + 0.5*x2"
CATEGORICAL_TERM = ' + 0.1*(cat == "B")'

_DATA_X = [(0.2, 0.8), (0.3, 0.7), (0.4, 0.6), (0.5, 0.5)]
_DATA_LEVELS = ["A", "B", "A", "B"]
# historical rows are tagged with the auxiliary task and offset slightly, as
# if measured on a related system
_AUX_TASK_OFFSET = 0.05


@lru_cache(maxsize=1)
def master_template() -> TemplateDocument:
    text = resources.files("boforge.data").joinpath("campaign.cdl.tmpl").read_text()
    return parse_template(text)


def _objective_exprs(selection: Mapping[str, str]) -> tuple[str, str]:
    suffix = CATEGORICAL_TERM if selection["categorical"] == "on" else ""
    return BASE_EXPR_Y + suffix, BASE_EXPR_Y2 + suffix


def _data_rows(selection: Mapping[str, str]) -> str:
    expr_y, expr_y2 = (parse_expression(e) for e in _objective_exprs(selection))
    lines = []
    for i, (x1, x2) in enumerate(_DATA_X):
        point: dict[str, object] = {"x1": x1, "x2": x2}
        cells = [f"{x1:g}", f"{x2:g}"]
        if selection["categorical"] == "on":
            point["cat"] = _DATA_LEVELS[i]
            cells.append(_DATA_LEVELS[i])
        offset = 0.0
        if selection["task"] == "multi":
            cells.append("0")
            offset = _AUX_TASK_OFFSET
        cells.append(f"{eval_expression(expr_y, point) + offset:.9g}")
        if selection["objective"] == "multi":
            cells.append(f"{eval_expression(expr_y2, point) + offset:.9g}")
        lines.append(",".join(cells))
    return "\n".join(lines)


def build_context(selection: Mapping[str, str]) -> dict[str, str]:
    """Row values copied through, plus the derived script ingredients."""
    sel = normalize_selection(selection)
    failed = is_compatible(sel)
    if failed:
        raise IncompatibleSelection(failed)
    expr_y, expr_y2 = _objective_exprs(sel)
    context = dict(sel)
    context.update(
        expr_y=expr_y,
        expr_y2=expr_y2,
        budget=str(DEFAULT_BUDGET),
        seed=str(DEFAULT_SEED),
        num_initial=str(DEFAULT_NUM_INITIAL),
        q=str(BATCH_Q if sel["batch"] == "batch" else 1),
        data_rows=_data_rows(sel) if sel["existing_data"] == "on" else "",
    )
    return context


def script_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def generate(selection: Mapping[str, str]) -> GenerationResult:
    """Render the master template for a compatible selection; the output is
    re-parsed as a self-check before it is returned."""
    context = build_context(selection)
    script = render(master_template(), context)
    try:
        cdl.parse_script(script)
    except cdl.ScriptParseError as err:
        raise InternalTemplateDefect(
            f"shipped template rendered an invalid script: {err}"
        ) from err
    return GenerationResult(
        script=script,
        selection=normalize_selection(selection),
        digest=script_digest(script),
    )


def template_domains() -> dict[str, list[str]]:
    """Finite domains for exhaustive template checking: the 12 row values plus
    every derived key's possible values."""
    from .grid import list_rows

    domains: dict[str, list[str]] = {r.key: list(r.values) for r in list_rows()}
    exprs = {BASE_EXPR_Y, BASE_EXPR_Y + CATEGORICAL_TERM}
    exprs2 = {BASE_EXPR_Y2, BASE_EXPR_Y2 + CATEGORICAL_TERM}
    domains.update(
        expr_y=sorted(exprs),
        expr_y2=sorted(exprs2),
        budget=[str(DEFAULT_BUDGET)],
        seed=[str(DEFAULT_SEED)],
        num_initial=[str(DEFAULT_NUM_INITIAL)],
        q=["1", str(BATCH_Q)],
        data_rows=["0.2,0.8,0.26\n0.3,0.7,0.29\n0.4,0.6,0.32\n0.5,0.5,0.35", ""],
    )
    return domains
