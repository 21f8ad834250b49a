"""Selection grid model: the 12 binary option rows, compatibility rules,
exhaustive enumeration, and the cross-out map that powers the UI."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from importlib import resources
from typing import Mapping

import yaml


class GridError(Exception):
    pass


class IncompleteSelection(GridError):
    pass


@dataclass(frozen=True)
class OptionRow:
    key: str
    display: str
    values: tuple[str, str]
    tooltip: str

    @property
    def default(self) -> str:
        return self.values[0]


@dataclass(frozen=True)
class CompatRule:
    id: str
    classification: str  # not_implemented | logically_inconsistent
    when: tuple[tuple[str, str], ...]  # conjunction of row=value literals
    reason: str

    def matches(self, selection: Mapping[str, str]) -> bool:
        return all(selection.get(k) == v for k, v in self.when)


def _load() -> tuple[tuple[OptionRow, ...], tuple[CompatRule, ...]]:
    data = yaml.safe_load(raw_options_text())
    rows = tuple(
        OptionRow(
            key=r["key"],
            display=r["display"],
            values=tuple(r["values"]),
            tooltip=r["tooltip"].strip(),
        )
        for r in data["rows"]
    )
    rules = tuple(
        CompatRule(
            id=r["id"],
            classification=r["classification"],
            when=tuple(sorted(r["when"].items())),
            reason=r["reason"].strip(),
        )
        for r in data["rules"]
    )
    return rows, rules


def raw_options_text() -> str:
    return resources.files("boforge.data").joinpath("options.yaml").read_text()


_ROWS, _RULES = None, None


def list_rows() -> tuple[OptionRow, ...]:
    global _ROWS, _RULES
    if _ROWS is None:
        _ROWS, _RULES = _load()
    return _ROWS


def list_rules() -> tuple[CompatRule, ...]:
    list_rows()
    return _RULES


def default_selection() -> dict[str, str]:
    return {row.key: row.default for row in list_rows()}


def normalize_selection(selection: Mapping[str, str]) -> dict[str, str]:
    """Validate completeness and values; returns a plain dict in row order."""
    rows = list_rows()
    out: dict[str, str] = {}
    unknown = set(selection) - {r.key for r in rows}
    if unknown:
        raise GridError(f"unknown selection keys: {sorted(unknown)}")
    for row in rows:
        if row.key not in selection:
            raise IncompleteSelection(f"selection missing row {row.key!r}")
        value = selection[row.key]
        if value not in row.values:
            raise GridError(f"{row.key!r} has no value {value!r} (choices: {row.values})")
        out[row.key] = value
    return out


def is_compatible(selection: Mapping[str, str]) -> list[CompatRule]:
    """Failed rules for a complete selection; empty list means compatible."""
    sel = normalize_selection(selection)
    return [rule for rule in list_rules() if rule.matches(sel)]


def enumerate_selections(valid_only: bool = False) -> list[dict[str, str]]:
    """All selection states in lexicographic row order (defaults first)."""
    rows = list_rows()
    out = []
    for combo in itertools.product(*(r.values for r in rows)):
        sel = dict(zip((r.key for r in rows), combo))
        if valid_only and is_compatible(sel):
            continue
        out.append(sel)
    return out


def cross_out_map(selection: Mapping[str, str]) -> dict[str, dict[str, list[str]]]:
    """For each row value, the rule ids that would fire if the selection were
    flipped to that value with the other rows held fixed."""
    sel = normalize_selection(selection)
    out: dict[str, dict[str, list[str]]] = {}
    for row in list_rows():
        row_map: dict[str, list[str]] = {}
        for value in row.values:
            flipped = dict(sel)
            flipped[row.key] = value
            failed = is_compatible(flipped)
            if failed:
                row_map[value] = [r.id for r in failed]
        out[row.key] = row_map
    return out
