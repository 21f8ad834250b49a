"""Minimal conditional templating: literal text, {{ name }} substitution, and
nestable {% if %}/{% elif %}/{% else %}/{% endif %} blocks.

Conditions support name == "literal", name != "literal", bare names (true iff
the value is the string "true"), and/or/not, and parentheses. A tag that
occupies an entire line consumes the line, so elided branches leave no blank
lines behind. Rendering is strict: a missing context key is an error."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class TemplateError(Exception):
    pass


class MissingContextKey(TemplateError):
    def __init__(self, name: str):
        super().__init__(f"context has no key {name!r}")
        self.name = name


@dataclass(frozen=True)
class TemplateParseIssue:
    line: int
    code: str  # UnclosedBlock | DanglingElse | BadExpression | BadTag
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.code}: {self.message}"


class TemplateParseError(TemplateError):
    def __init__(self, errors: list[TemplateParseIssue]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


# -- condition expressions --------------------------------------------------


@dataclass(frozen=True)
class Cmp:
    name: str
    op: str  # "==" | "!="
    value: str


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Not:
    operand: "CondExpr"


@dataclass(frozen=True)
class BoolOp:
    op: str  # "and" | "or"
    left: "CondExpr"
    right: "CondExpr"


CondExpr = Cmp | Name | Not | BoolOp


def _tokenize_cond(text: str) -> list[str]:
    return re.findall(r'"[^"]*"|==|!=|\(|\)|[A-Za-z_][A-Za-z0-9_]*', text)


def parse_condition(text: str) -> CondExpr:
    tokens = _tokenize_cond(text)
    if "".join(tokens).replace('"', "") != re.sub(r'[\s"]', "", text):
        raise TemplateError(f"cannot tokenize condition: {text!r}")
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take() -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise TemplateError(f"condition ended early: {text!r}")
        pos += 1
        return tokens[pos - 1]

    def atom() -> CondExpr:
        tok = take()
        if tok == "(":
            node = or_expr()
            if take() != ")":
                raise TemplateError(f"missing ) in condition: {text!r}")
            return node
        if tok == "not":
            return Not(atom())
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok) or tok in ("and", "or"):
            raise TemplateError(f"expected name, got {tok!r}")
        if peek() in ("==", "!="):
            op = take()
            val = take()
            if not val.startswith('"'):
                raise TemplateError(f"{op} expects a quoted literal")
            return Cmp(tok, op, val.strip('"'))
        return Name(tok)

    def and_expr() -> CondExpr:
        node = atom()
        while peek() == "and":
            take()
            node = BoolOp("and", node, atom())
        return node

    def or_expr() -> CondExpr:
        node = and_expr()
        while peek() == "or":
            take()
            node = BoolOp("or", node, and_expr())
        return node

    node = or_expr()
    if pos != len(tokens):
        raise TemplateError(f"trailing tokens in condition: {text!r}")
    return node


def eval_condition(expr: CondExpr, context: Mapping[str, str]) -> bool:
    if isinstance(expr, Cmp):
        if expr.name not in context:
            raise MissingContextKey(expr.name)
        eq = context[expr.name] == expr.value
        return eq if expr.op == "==" else not eq
    if isinstance(expr, Name):
        if expr.name not in context:
            raise MissingContextKey(expr.name)
        return context[expr.name] == "true"
    if isinstance(expr, Not):
        return not eval_condition(expr.operand, context)
    if expr.op == "and":
        return eval_condition(expr.left, context) and eval_condition(expr.right, context)
    return eval_condition(expr.left, context) or eval_condition(expr.right, context)


def condition_names(expr: CondExpr) -> set[str]:
    if isinstance(expr, (Cmp, Name)):
        return {expr.name}
    if isinstance(expr, Not):
        return condition_names(expr.operand)
    return condition_names(expr.left) | condition_names(expr.right)


# -- document nodes ----------------------------------------------------------


@dataclass(frozen=True)
class LiteralNode:
    text: str


@dataclass(frozen=True)
class SubstNode:
    name: str
    line: int


@dataclass(frozen=True)
class Branch:
    condition: CondExpr | None  # None = else
    body: tuple["TemplateNode", ...]
    line: int


@dataclass(frozen=True)
class CondNode:
    branches: tuple[Branch, ...]
    line: int


TemplateNode = LiteralNode | SubstNode | CondNode


@dataclass(frozen=True)
class TemplateDocument:
    nodes: tuple[TemplateNode, ...]


_TAG_RE = re.compile(r"\{%\s*(.*?)\s*%\}|\{\{\s*(.*?)\s*\}\}")


def parse_template(text: str) -> TemplateDocument:
    """Parse template text; raises TemplateParseError with every issue found."""
    errors: list[TemplateParseIssue] = []
    tokens: list[tuple[str, str, int]] = []  # (kind, payload, line)
    pos = 0
    for m in _TAG_RE.finditer(text):
        start, end = m.span()
        # whole-line block tags swallow the line's indent and newline
        if m.group(1) is not None:
            ls = text.rfind("\n", 0, start) + 1
            le = text.find("\n", end)
            le = len(text) if le < 0 else le + 1
            if text[ls:start].strip() == "" and text[end:le].strip() == "":
                start, end = ls, le
        if start > pos:
            tokens.append(("text", text[pos:start], text.count("\n", 0, pos) + 1))
        line = text.count("\n", 0, m.start()) + 1
        if m.group(1) is not None:
            tokens.append(("block", m.group(1), line))
        else:
            tokens.append(("subst", m.group(2), line))
        pos = end
    if pos < len(text):
        tokens.append(("text", text[pos:], text.count("\n", 0, pos) + 1))

    # stack of open conditionals: list of (line, branches, current_condition,
    # current_line, current_body)
    root: list[TemplateNode] = []
    stack: list[dict] = []

    def sink() -> list[TemplateNode]:
        return stack[-1]["body"] if stack else root

    for kind, payload, line in tokens:
        if kind == "text":
            sink().append(LiteralNode(payload))
        elif kind == "subst":
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", payload):
                errors.append(
                    TemplateParseIssue(line, "BadTag", f"bad substitution name {payload!r}")
                )
            else:
                sink().append(SubstNode(payload, line))
        else:
            m = re.fullmatch(r"(if|elif)\s+(.*)", payload, flags=re.S)
            if m:
                word, cond_text = m.groups()
                try:
                    cond = parse_condition(cond_text)
                except TemplateError as err:
                    errors.append(TemplateParseIssue(line, "BadExpression", str(err)))
                    cond = Name("false")
                if word == "if":
                    stack.append(
                        {"line": line, "branches": [], "cond": cond,
                         "cond_line": line, "body": [], "saw_else": False}
                    )
                else:
                    if not stack:
                        errors.append(
                            TemplateParseIssue(line, "DanglingElse", "elif outside if block")
                        )
                        continue
                    frame = stack[-1]
                    if frame["saw_else"]:
                        errors.append(
                            TemplateParseIssue(line, "DanglingElse", "elif after else")
                        )
                    frame["branches"].append(
                        Branch(frame["cond"], tuple(frame["body"]), frame["cond_line"])
                    )
                    frame["cond"], frame["cond_line"], frame["body"] = cond, line, []
            elif payload == "else":
                if not stack:
                    errors.append(
                        TemplateParseIssue(line, "DanglingElse", "else outside if block")
                    )
                    continue
                frame = stack[-1]
                if frame["saw_else"]:
                    errors.append(TemplateParseIssue(line, "DanglingElse", "second else"))
                frame["branches"].append(
                    Branch(frame["cond"], tuple(frame["body"]), frame["cond_line"])
                )
                frame["cond"], frame["cond_line"], frame["body"] = None, line, []
                frame["saw_else"] = True
            elif payload == "endif":
                if not stack:
                    errors.append(
                        TemplateParseIssue(line, "DanglingElse", "endif outside if block")
                    )
                    continue
                frame = stack.pop()
                frame["branches"].append(
                    Branch(frame["cond"], tuple(frame["body"]), frame["cond_line"])
                )
                sink().append(CondNode(tuple(frame["branches"]), frame["line"]))
            else:
                errors.append(TemplateParseIssue(line, "BadTag", f"unknown tag {payload!r}"))
    for frame in stack:
        errors.append(
            TemplateParseIssue(frame["line"], "UnclosedBlock", "if block never closed")
        )
    if errors:
        raise TemplateParseError(errors)
    return TemplateDocument(nodes=tuple(root))


def render(doc: TemplateDocument, context: Mapping[str, str]) -> str:
    """Strict render; the first true branch of each conditional is taken."""
    return "".join(_render_nodes(doc.nodes, context, None))


def _render_nodes(
    nodes: Iterable[TemplateNode],
    context: Mapping[str, str],
    hits: set[int] | None,
) -> list[str]:
    out: list[str] = []
    for node in nodes:
        if isinstance(node, LiteralNode):
            out.append(node.text)
        elif isinstance(node, SubstNode):
            if node.name not in context:
                raise MissingContextKey(node.name)
            out.append(context[node.name])
        else:
            for branch in node.branches:
                if branch.condition is None or eval_condition(branch.condition, context):
                    if hits is not None:
                        hits.add(id(branch))
                    out.extend(_render_nodes(branch.body, context, hits))
                    break
    return out


@dataclass(frozen=True)
class TemplateDefect:
    code: str  # MissingKey | UnreachableBranch | RenderFailure
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.code}: {self.message}"


def _all_branches(nodes: Iterable[TemplateNode]) -> list[Branch]:
    out: list[Branch] = []
    for node in nodes:
        if isinstance(node, CondNode):
            for b in node.branches:
                out.append(b)
                out.extend(_all_branches(b.body))
    return out


def _referenced_names(nodes: Iterable[TemplateNode]) -> set[str]:
    names: set[str] = set()
    for node in nodes:
        if isinstance(node, SubstNode):
            names.add(node.name)
        elif isinstance(node, CondNode):
            for b in node.branches:
                if b.condition is not None:
                    names |= condition_names(b.condition)
                names |= _referenced_names(b.body)
    return names


def check_template(
    doc: TemplateDocument, domains: Mapping[str, Sequence[str]]
) -> list[TemplateDefect]:
    """Exhaustively render over every context combination of the domains;
    reports keys missing from the domains, failed renders, and branches no
    combination reaches. An empty list means the template is matrix-safe."""
    defects: list[TemplateDefect] = []
    for name in sorted(_referenced_names(doc.nodes)):
        if name not in domains:
            defects.append(TemplateDefect("MissingKey", 0, f"{name!r} not in domains"))
    if defects:
        return defects
    keys = sorted(domains)
    hits: set[int] = set()
    for combo in itertools.product(*(domains[k] for k in keys)):
        context = dict(zip(keys, combo))
        try:
            _render_nodes(doc.nodes, context, hits)
        except MissingContextKey as err:
            defects.append(
                TemplateDefect("RenderFailure", 0, f"{err} for context {context}")
            )
            return defects
    for branch in _all_branches(doc.nodes):
        if id(branch) not in hits:
            defects.append(
                TemplateDefect(
                    "UnreachableBranch", branch.line,
                    "no domain combination reaches this branch",
                )
            )
    return defects
