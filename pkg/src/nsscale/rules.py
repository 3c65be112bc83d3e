"""Parser and evaluator for the auto-scaling rule DSL.

Grammar (keywords case-insensitive, whitespace-insensitive)::

    rule  := WHEN expr THEN action [COOLDOWN n]
    expr  := term (OR term)*
    term  := factor (AND factor)*
    factor:= NOT factor | '(' expr ')' | comparison
    comparison := agg '(' metric ',' window ')' cmp number
    agg   := avg | max | min
    cmp   := '<' | '<=' | '>' | '>=' | '='
    action:= scale_out | scale_in
"""

from __future__ import annotations

from dataclasses import dataclass, field


class RuleSyntaxError(ValueError):
    """Raised on malformed rule text; carries the column of the offending token."""

    def __init__(self, message: str, column: int):
        super().__init__("%s (column %d)" % (message, column))
        self.column = column


AGGREGATES = ("avg", "max", "min")
COMPARATORS = ("<=", ">=", "<", ">", "=")
ACTIONS = ("scale_out", "scale_in")
_KEYWORDS = ("when", "then", "cooldown", "and", "or", "not")


@dataclass(frozen=True)
class Aggregate:
    func: str
    metric: str
    window: int


@dataclass(frozen=True)
class Comparison:
    left: Aggregate
    op: str
    value: float


@dataclass(frozen=True)
class And:
    operands: tuple


@dataclass(frozen=True)
class Or:
    operands: tuple


@dataclass(frozen=True)
class Not:
    operand: object


@dataclass(frozen=True)
class RuleAst:
    expr: object
    action: str
    cooldown: int = 0
    metric_refs: tuple = field(default=())


@dataclass(frozen=True)
class _Token:
    kind: str  # ident, number, punct
    text: str
    column: int


def _tokenize(text: str) -> list:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "(),":
            tokens.append(_Token("punct", c, i))
            i += 1
            continue
        if c in "<>=":
            two = text[i : i + 2]
            if two in ("<=", ">="):
                tokens.append(_Token("punct", two, i))
                i += 2
            else:
                tokens.append(_Token("punct", c, i))
                i += 1
            continue
        if c.isdigit() or c == "." or (c == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and (text[j].isdigit() or text[j] in ".eE" or
                             (text[j] in "+-" and text[j - 1] in "eE")):
                j += 1
            tokens.append(_Token("number", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in "._-"):
                j += 1
            tokens.append(_Token("ident", text[i:j], i))
            i = j
            continue
        raise RuleSyntaxError("unexpected character %r" % c, i)
    tokens.append(_Token("punct", "<end>", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str):
        raise RuleSyntaxError(message, self.peek().column)

    def expect_keyword(self, word: str):
        tok = self.next()
        if tok.kind != "ident" or tok.text.lower() != word:
            raise RuleSyntaxError("expected %r, got %r" % (word.upper(), tok.text), tok.column)

    def expect_punct(self, text: str):
        tok = self.next()
        if tok.kind != "punct" or tok.text != text:
            raise RuleSyntaxError("expected %r, got %r" % (text, tok.text), tok.column)

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.text.lower() == word

    def parse_rule(self) -> RuleAst:
        self.expect_keyword("when")
        expr = self.parse_expr()
        self.expect_keyword("then")
        tok = self.next()
        action = tok.text.lower()
        if tok.kind != "ident" or action not in ACTIONS:
            raise RuleSyntaxError("expected scale_out or scale_in, got %r" % tok.text, tok.column)
        cooldown = 0
        if self.at_keyword("cooldown"):
            self.next()
            tok = self.next()
            if tok.kind != "number":
                raise RuleSyntaxError("expected cooldown tick count, got %r" % tok.text, tok.column)
            cooldown = int(float(tok.text))
            if cooldown < 0:
                raise RuleSyntaxError("cooldown must be >= 0", tok.column)
        end = self.next()
        if end.text != "<end>":
            raise RuleSyntaxError("trailing input %r" % end.text, end.column)
        return RuleAst(expr, action, cooldown, tuple(sorted(_collect_metrics(expr))))

    def parse_expr(self):
        operands = [self.parse_term()]
        while self.at_keyword("or"):
            self.next()
            operands.append(self.parse_term())
        if len(operands) == 1:
            return operands[0]
        return Or(tuple(operands))

    def parse_term(self):
        operands = [self.parse_factor()]
        while self.at_keyword("and"):
            self.next()
            operands.append(self.parse_factor())
        if len(operands) == 1:
            return operands[0]
        return And(tuple(operands))

    def parse_factor(self):
        if self.at_keyword("not"):
            self.next()
            return Not(self.parse_factor())
        if self.peek().text == "(":
            self.next()
            expr = self.parse_expr()
            self.expect_punct(")")
            return expr
        return self.parse_comparison()

    def parse_comparison(self) -> Comparison:
        tok = self.next()
        func = tok.text.lower()
        if tok.kind != "ident":
            raise RuleSyntaxError("expected aggregate, got %r" % tok.text, tok.column)
        if func not in AGGREGATES:
            raise RuleSyntaxError("unknown aggregate %r" % tok.text, tok.column)
        self.expect_punct("(")
        metric = self.next()
        if metric.kind != "ident":
            raise RuleSyntaxError("expected metric name, got %r" % metric.text, metric.column)
        self.expect_punct(",")
        window = self.next()
        if window.kind != "number":
            raise RuleSyntaxError("expected window length, got %r" % window.text, window.column)
        window_len = int(float(window.text))
        if window_len < 1:
            raise RuleSyntaxError("window length must be >= 1", window.column)
        self.expect_punct(")")
        op = self.next()
        if op.text not in COMPARATORS:
            raise RuleSyntaxError("expected comparator, got %r" % op.text, op.column)
        value = self.next()
        if value.kind != "number":
            raise RuleSyntaxError("expected number, got %r" % value.text, value.column)
        return Comparison(Aggregate(func, metric.text, window_len), op.text, float(value.text))


def _collect_metrics(node) -> set:
    if isinstance(node, Comparison):
        return {node.left.metric}
    if isinstance(node, (And, Or)):
        refs = set()
        for op in node.operands:
            refs |= _collect_metrics(op)
        return refs
    if isinstance(node, Not):
        return _collect_metrics(node.operand)
    raise TypeError(node)


def parse_rule(text: str) -> RuleAst:
    return _Parser(text).parse_rule()


def evaluate_expr(node, lookup) -> bool:
    """Evaluate an expression tree. `lookup(func, metric, window)` returns the
    aggregate value; it must not be called with an unknown metric."""
    if isinstance(node, Comparison):
        value = lookup(node.left.func, node.left.metric, node.left.window)
        return _compare(value, node.op, node.value)
    if isinstance(node, And):
        return all(evaluate_expr(op, lookup) for op in node.operands)
    if isinstance(node, Or):
        return any(evaluate_expr(op, lookup) for op in node.operands)
    if isinstance(node, Not):
        return not evaluate_expr(node.operand, lookup)
    raise TypeError(node)


def _compare(value: float, op: str, bound: float) -> bool:
    if op == "<":
        return value < bound
    if op == "<=":
        return value <= bound
    if op == ">":
        return value > bound
    if op == ">=":
        return value >= bound
    return value == bound
