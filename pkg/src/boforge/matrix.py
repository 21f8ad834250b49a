"""Exhaustive combination matrix: classify, generate, and execute every grid
selection, in parallel, with a deterministic machine-readable report."""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from . import cdl
from .generator import IncompatibleSelection, generate
from .grid import enumerate_selections, is_compatible
from .space import is_feasible


@dataclass
class MatrixRecord:
    index: int
    selection: dict[str, str]
    digest: str | None
    compatible: bool
    generated: bool
    executed: bool
    trials: int
    feasible_ok: bool
    wall_time: float
    error: str | None


def run_selection(args: tuple[int, dict[str, str], int, int]) -> MatrixRecord:
    index, selection, budget, seed = args
    start = time.perf_counter()
    failed = is_compatible(selection)
    if failed:
        return MatrixRecord(
            index=index,
            selection=selection,
            digest=None,
            compatible=False,
            generated=False,
            executed=False,
            trials=0,
            feasible_ok=True,
            wall_time=time.perf_counter() - start,
            error="; ".join(r.id for r in failed),
        )
    try:
        result = generate(selection)
    except Exception as err:  # template defects must surface in the report
        return MatrixRecord(
            index=index,
            selection=selection,
            digest=None,
            compatible=True,
            generated=False,
            executed=False,
            trials=0,
            feasible_ok=True,
            wall_time=time.perf_counter() - start,
            error=f"generate: {err}",
        )
    try:
        script = cdl.parse_script(result.script)
        trace, summary = cdl.execute_script(script, budget=budget, seed=seed)
        space = script.space
        feasible_ok = all(is_feasible(space, row.point)[0] for row in trace)
        return MatrixRecord(
            index=index,
            selection=selection,
            digest=result.digest,
            compatible=True,
            generated=True,
            executed=True,
            trials=summary["trials"],
            feasible_ok=feasible_ok,
            wall_time=time.perf_counter() - start,
            error=None if feasible_ok else "infeasible suggestion in trace",
        )
    except Exception as err:
        return MatrixRecord(
            index=index,
            selection=selection,
            digest=result.digest,
            compatible=True,
            generated=True,
            executed=False,
            trials=0,
            feasible_ok=True,
            wall_time=time.perf_counter() - start,
            error=f"execute: {err}",
        )


def run_matrix(
    budget: int = 6, jobs: int = 1, seed: int = 0
) -> tuple[list[MatrixRecord], dict]:
    selections = enumerate_selections(valid_only=False)
    tasks = [(i, sel, budget, seed) for i, sel in enumerate(selections)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run_selection, tasks, chunksize=16))
    else:
        records = [run_selection(t) for t in tasks]
    records.sort(key=lambda r: r.index)
    executed = sum(r.executed for r in records)
    incompatible = sum(not r.compatible for r in records)
    failures = [
        r for r in records if r.compatible and (not r.executed or not r.feasible_ok)
    ]
    summary = {
        "total": len(records),
        "incompatible": incompatible,
        "executed": executed,
        "failures": len(failures),
        "failing_digests": [r.digest for r in failures],
        "ok": not failures,
    }
    return records, summary


def format_report(records: list[MatrixRecord], summary: dict) -> str:
    """Newline-delimited JSON records followed by one summary object."""
    lines = [json.dumps(asdict(r), sort_keys=True) for r in records]
    lines.append(json.dumps({"summary": summary}, sort_keys=True))
    return "\n".join(lines) + "\n"
