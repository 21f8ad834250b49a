import pytest

from boforge.template import (
    BoolOp,
    Cmp,
    MissingContextKey,
    Name,
    Not,
    TemplateError,
    TemplateParseError,
    check_template,
    eval_condition,
    parse_condition,
    parse_template,
    render,
)


def rt(text, **context):
    return render(parse_template(text), context)


class TestConditions:
    def test_cmp_ast(self):
        assert parse_condition('mode == "fast"') == Cmp("mode", "==", "fast")
        assert parse_condition('mode != "fast"') == Cmp("mode", "!=", "fast")

    def test_bare_name_truthiness(self):
        cond = parse_condition("enabled")
        assert cond == Name("enabled")
        assert eval_condition(cond, {"enabled": "true"})
        assert not eval_condition(cond, {"enabled": "on"})

    def test_precedence_and_over_or(self):
        cond = parse_condition("a or b and c")
        assert cond == BoolOp("or", Name("a"), BoolOp("and", Name("b"), Name("c")))

    def test_parens_and_not(self):
        cond = parse_condition('not (a == "1" or b)')
        assert cond == Not(BoolOp("or", Cmp("a", "==", "1"), Name("b")))
        assert eval_condition(cond, {"a": "2", "b": "false"})

    def test_missing_key_raises(self):
        with pytest.raises(MissingContextKey):
            eval_condition(parse_condition("ghost"), {})

    @pytest.mark.parametrize("bad", ["a ==", "a == b", "(a", "a or", "== \"x\"", "a b"])
    def test_condition_errors(self, bad):
        with pytest.raises(TemplateError):
            parse_condition(bad)


class TestRender:
    def test_substitution(self):
        assert rt("hello {{ name }}!", name="world") == "hello world!"

    def test_if_else(self):
        t = "{% if mode == \"a\" %}A{% else %}B{% endif %}"
        assert rt(t, mode="a") == "A"
        assert rt(t, mode="z") == "B"

    def test_elif_chain_first_true_wins(self):
        t = (
            '{% if k == "1" %}one'
            '{% elif k == "2" %}two'
            '{% elif k != "9" %}other'
            "{% else %}nine{% endif %}"
        )
        assert rt(t, k="1") == "one"
        assert rt(t, k="2") == "two"
        assert rt(t, k="3") == "other"
        assert rt(t, k="9") == "nine"

    def test_nested_blocks(self):
        t = (
            '{% if outer == "y" %}<{% if inner == "y" %}deep{% else %}shallow{% endif %}>'
            "{% endif %}"
        )
        assert rt(t, outer="y", inner="y") == "<deep>"
        assert rt(t, outer="y", inner="n") == "<shallow>"
        assert rt(t, outer="n", inner="y") == ""

    def test_whole_line_tags_swallow_newline(self):
        t = "a\n{% if flag %}\nb\n{% endif %}\nc\n"
        assert rt(t, flag="true") == "a\nb\nc\n"
        assert rt(t, flag="false") == "a\nc\n"

    def test_indented_tag_line_swallowed(self):
        t = "x\n    {% if flag %}\n    y\n    {% endif %}\nz\n"
        assert rt(t, flag="true") == "x\n    y\nz\n"

    def test_inline_tags_do_not_swallow(self):
        t = "pre {% if flag %}mid{% endif %} post"
        assert rt(t, flag="true") == "pre mid post"
        assert rt(t, flag="false") == "pre  post"

    def test_substitution_does_not_swallow_line(self):
        assert rt("{{ v }}\n", v="x") == "x\n"

    def test_strict_missing_key(self):
        with pytest.raises(MissingContextKey) as e:
            rt("{{ ghost }}")
        assert e.value.name == "ghost"

    def test_missing_key_in_condition(self):
        with pytest.raises(MissingContextKey):
            rt("{% if ghost %}x{% endif %}")

    def test_untaken_branch_not_evaluated(self):
        t = '{% if flag == "on" %}{{ only_when_on }}{% endif %}ok'
        assert rt(t, flag="off") == "ok"


class TestParseErrors:
    def issues(self, text):
        with pytest.raises(TemplateParseError) as e:
            parse_template(text)
        return [(i.code, i.line) for i in e.value.errors]

    def test_unclosed_block(self):
        assert ("UnclosedBlock", 2) in self.issues("x\n{% if flag %}\ny\n")

    def test_dangling_else(self):
        got = self.issues("{% else %}")
        assert got == [("DanglingElse", 1)]

    def test_elif_after_else(self):
        t = '{% if a %}1{% else %}2{% elif b %}3{% endif %}'
        assert ("DanglingElse", 1) in self.issues(t)

    def test_stray_endif(self):
        assert ("DanglingElse", 1) in self.issues("{% endif %}")

    def test_bad_condition(self):
        assert any(c == "BadExpression" for c, _ in self.issues("{% if a == %}x{% endif %}"))

    def test_bad_tag(self):
        assert any(c == "BadTag" for c, _ in self.issues("{% frobnicate %}"))

    def test_bad_substitution_name(self):
        assert any(c == "BadTag" for c, _ in self.issues("{{ two words }}"))

    def test_all_errors_collected(self):
        text = "{% else %}\n{{ bad name }}\n{% if x %}\n"
        got = self.issues(text)
        assert len(got) == 3


class TestCheck:
    def test_clean_template(self):
        doc = parse_template('{% if m == "a" %}A{% else %}B{% endif %}{{ m }}')
        assert check_template(doc, {"m": ["a", "b"]}) == []

    def test_missing_domain_key(self):
        doc = parse_template("{{ ghost }}")
        defects = check_template(doc, {})
        assert [d.code for d in defects] == ["MissingKey"]

    def test_unreachable_branch(self):
        doc = parse_template('{% if m == "zzz" %}never{% endif %}')
        defects = check_template(doc, {"m": ["a", "b"]})
        assert [d.code for d in defects] == ["UnreachableBranch"]

    def test_unreachable_nested_branch(self):
        doc = parse_template(
            '{% if m == "a" %}{% if m == "b" %}never{% endif %}{% endif %}'
        )
        defects = check_template(doc, {"m": ["a", "b"]})
        assert [d.code for d in defects] == ["UnreachableBranch"]

    def test_exhaustive_over_product(self):
        doc = parse_template(
            '{% if a == "1" and b == "1" %}both{% else %}not{% endif %}'
        )
        assert check_template(doc, {"a": ["0", "1"], "b": ["0", "1"]}) == []
