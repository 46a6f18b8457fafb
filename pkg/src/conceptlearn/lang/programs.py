"""Program representation for scene questions.

A program is an immutable tree. Set-valued ops produce soft object sets,
terminal ops produce an answer distribution. The canonical text form is an
s-expression with the child subtrees first and the symbol argument last,
e.g. ``(Query (Filter (Scene) red) shape)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ProgramError(ValueError):
    pass


# op -> (n_children, arg_kind); arg_kind is None, "concept", "relation",
# or "category".
OP_TABLE = {
    "Scene": (0, None),
    "Filter": (1, "concept"),
    "Relate": (1, "relation"),
    "AERelate": (1, "category"),
    "Intersection": (2, None),
    "Union": (2, None),
    "Exist": (1, None),
    "Count": (1, None),
    "Query": (1, "category"),
    "AEQuery": (2, "category"),
    "CountLessThan": (2, None),
    "CountGreaterThan": (2, None),
    "CountEqual": (2, None),
}

SET_OPS = ("Scene", "Filter", "Relate", "AERelate", "Intersection", "Union")
TERMINAL_OPS = ("Exist", "Count", "Query", "AEQuery",
                "CountLessThan", "CountGreaterThan", "CountEqual")


@dataclass(frozen=True)
class Prog:
    op: str
    children: tuple = field(default_factory=tuple)
    arg: str | None = None

    def __post_init__(self):
        if self.op not in OP_TABLE:
            raise ProgramError(f"unknown op {self.op!r}")
        n_children, arg_kind = OP_TABLE[self.op]
        if len(self.children) != n_children:
            raise ProgramError(
                f"{self.op} takes {n_children} children, got {len(self.children)}")
        if (self.arg is None) != (arg_kind is None):
            raise ProgramError(f"{self.op} arg mismatch: {self.arg!r}")
        for ch in self.children:
            if not isinstance(ch, Prog):
                raise ProgramError(f"child of {self.op} is not a program: {ch!r}")

    def walk(self):
        yield self
        for ch in self.children:
            yield from ch.walk()


def scene() -> Prog:
    return Prog("Scene")


def filt(child: Prog, concept: str) -> Prog:
    return Prog("Filter", (child,), concept)


def relate(child: Prog, relation: str) -> Prog:
    return Prog("Relate", (child,), relation)


def aerelate(child: Prog, category: str) -> Prog:
    return Prog("AERelate", (child,), category)


def inter(a: Prog, b: Prog) -> Prog:
    return Prog("Intersection", (a, b))


def union_(a: Prog, b: Prog) -> Prog:
    return Prog("Union", (a, b))


def exist(child: Prog) -> Prog:
    return Prog("Exist", (child,))


def count(child: Prog) -> Prog:
    return Prog("Count", (child,))


def query(child: Prog, category: str) -> Prog:
    return Prog("Query", (child,), category)


def aequery(a: Prog, b: Prog, category: str) -> Prog:
    return Prog("AEQuery", (a, b), category)


def count_lt(a: Prog, b: Prog) -> Prog:
    return Prog("CountLessThan", (a, b))


def count_gt(a: Prog, b: Prog) -> Prog:
    return Prog("CountGreaterThan", (a, b))


def count_eq(a: Prog, b: Prog) -> Prog:
    return Prog("CountEqual", (a, b))


def to_sexpr(prog: Prog) -> str:
    parts = [prog.op]
    parts.extend(to_sexpr(ch) for ch in prog.children)
    if prog.arg is not None:
        parts.append(prog.arg)
    return "(" + " ".join(parts) + ")"


def _tokenize_sexpr(text: str) -> list[str]:
    out = []
    cur = []
    for ch in text:
        if ch in "()":
            if cur:
                out.append("".join(cur))
                cur = []
            out.append(ch)
        elif ch.isspace():
            if cur:
                out.append("".join(cur))
                cur = []
        else:
            cur.append(ch)
    if cur:
        out.append("".join(cur))
    return out


def parse_sexpr(text: str) -> Prog:
    tokens = _tokenize_sexpr(text)
    pos = 0

    def parse_one() -> Prog:
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] != "(":
            raise ProgramError(f"expected '(' at token {pos} in {text!r}")
        pos += 1
        if pos >= len(tokens):
            raise ProgramError(f"truncated s-expression: {text!r}")
        op = tokens[pos]
        pos += 1
        if op not in OP_TABLE:
            raise ProgramError(f"unknown op {op!r} in {text!r}")
        n_children, arg_kind = OP_TABLE[op]
        children = tuple(parse_one() for _ in range(n_children))
        arg = None
        if arg_kind is not None:
            if pos >= len(tokens) or tokens[pos] in "()":
                raise ProgramError(f"{op} missing argument in {text!r}")
            arg = tokens[pos]
            pos += 1
        if pos >= len(tokens) or tokens[pos] != ")":
            raise ProgramError(f"expected ')' after {op} in {text!r}")
        pos += 1
        return Prog(op, children, arg)

    prog = parse_one()
    if pos != len(tokens):
        raise ProgramError(f"trailing tokens in {text!r}")
    return prog


def validate_program(prog: Prog, schema, novel=()) -> str:
    """Check names against a schema and return the result kind.

    Returns "objects" for set-valued programs, "bool", "count", or
    "concept" for terminals. ``novel`` lists extra concept names that are
    legal Filter arguments (words introduced inside an episode).
    """
    concepts = set(schema.object_concepts) | set(novel)
    relations = set(schema.spatial_relations) | set(schema.same_relations)
    categories = set(schema.categories)

    def check(p: Prog) -> str:
        kinds = [check(ch) for ch in p.children]
        if p.op in SET_OPS:
            for k in kinds:
                if k != "objects":
                    raise ProgramError(f"{p.op} child is {k}, not objects")
        if p.op == "Filter" and p.arg not in concepts:
            raise ProgramError(f"unknown concept {p.arg!r}")
        if p.op == "Relate" and p.arg not in relations:
            raise ProgramError(f"unknown relation {p.arg!r}")
        if p.op in ("AERelate", "Query", "AEQuery") and p.arg not in categories:
            raise ProgramError(f"unknown category {p.arg!r}")
        if p.op in SET_OPS:
            return "objects"
        if p.op in ("Exist", "AEQuery", "CountLessThan", "CountGreaterThan",
                    "CountEqual"):
            for k in kinds:
                if k != "objects":
                    raise ProgramError(f"{p.op} child is {k}, not objects")
            return "bool"
        if p.op == "Count":
            if kinds[0] != "objects":
                raise ProgramError("Count child is not objects")
            return "count"
        if p.op == "Query":
            if kinds[0] != "objects":
                raise ProgramError("Query child is not objects")
            return "concept"
        raise ProgramError(f"unhandled op {p.op}")  # pragma: no cover

    return check(prog)


def occurrences(prog: Prog, name: str) -> int:
    """Number of nodes whose symbol argument equals ``name``."""
    return sum(1 for node in prog.walk() if node.arg == name)
