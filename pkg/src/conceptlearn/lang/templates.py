"""Text renderers for programs, descriptions, and supplemental facts.

Three template families:

- "attribute": scene-question style over attribute vocabularies. Noun
  phrases use a fixed head noun ("object"/"objects") so that modifier
  slots are purely positional and novel words parse opaquely.
- "taxonomy": single-concept existence style plus kind-of supplemental
  sentences ("a, b and c are a kind of Xs.").
- "modifier": definite-description style ("The red rubber object is a
  cyan object.") plus same-property supplemental sentences.

Rendering is the inverse of parsing: for every sentence produced here,
``parser`` recovers exactly the source program (or fact set).
"""

from __future__ import annotations

from .programs import Prog, ProgramError, occurrences

TEMPLATE_FAMILIES = ("attribute", "taxonomy", "modifier")

VOWELS = "aeiou"


class RenderError(ValueError):
    pass


def indef(phrase: str) -> str:
    article = "an" if phrase[0] in VOWELS else "a"
    return f"{article} {phrase}"


def join_list(names, final="and") -> str:
    if not names:
        raise RenderError("empty list")
    if len(names) == 1:
        return names[0]
    if final is None:
        return ", ".join(names)
    return ", ".join(names[:-1]) + f" {final} {names[-1]}"


def _rel_clause(relation: str, anchor: str) -> str:
    if relation == "left":
        return f"to the left of the {anchor}"
    if relation == "right":
        return f"to the right of the {anchor}"
    if relation == "front":
        return f"in front of the {anchor}"
    if relation == "behind":
        return f"behind the {anchor}"
    raise RenderError(f"no surface form for relation {relation!r}")


def _split_filters(prog: Prog):
    mods = []
    while prog.op == "Filter":
        mods.append(prog.arg)
        prog = prog.children[0]
    mods.reverse()  # innermost filter is the first surface modifier
    return mods, prog


def render_np(prog: Prog, plural: bool = False, level: str = "full") -> str:
    """Noun phrase without article, e.g. "red object behind the cube object".

    ``level`` limits which clause forms may appear: "full" allows
    everything, "chain" only spatial-relation clauses, "base" none.
    Raises RenderError when the program does not fit the grammar.
    """
    mods, core = _split_filters(prog)
    head = "objects" if plural else "object"
    lead = " ".join(mods + [head])
    if core.op == "Scene":
        return lead
    if level == "base":
        raise RenderError(f"{core.op} not renderable in a base noun phrase")
    if core.op == "Relate":
        anchor = render_np(core.children[0], level="chain")
        return f"{lead} {_rel_clause(core.arg, anchor)}"
    if level == "chain":
        raise RenderError(f"{core.op} not renderable in a chained noun phrase")
    if core.op in ("Intersection", "Union"):
        branches = []
        for br in core.children:
            if br.op != "Relate":
                raise RenderError("coordination branches must be relations")
            anchor = render_np(br.children[0], level="base")
            branches.append(_rel_clause(br.arg, anchor))
        verb = "are" if plural else "is"
        joiner = ("both", "and") if core.op == "Intersection" else ("either", "or")
        return f"{lead} that {verb} {joiner[0]} {branches[0]} {joiner[1]} {branches[1]}"
    if core.op == "AERelate":
        anchor = render_np(core.children[0], level="chain")
        return f"{lead} with the same {core.arg} as the {anchor}"
    raise RenderError(f"cannot render {core.op} as a noun phrase")


def render_question(prog: Prog) -> str:
    op = prog.op
    if op == "Exist":
        return f"Is there {indef(render_np(prog.children[0]))}?"
    if op == "Count":
        return f"How many {render_np(prog.children[0], plural=True)} are there?"
    if op == "Query":
        np = render_np(prog.children[0])
        return f"There is {indef(np)}; what is its {prog.arg}?"
    if op == "AEQuery":
        a = render_np(prog.children[0])
        b = render_np(prog.children[1])
        return f"Does the {a} have the same {prog.arg} as the {b}?"
    if op in ("CountGreaterThan", "CountLessThan"):
        a = render_np(prog.children[0], plural=True)
        b = render_np(prog.children[1], plural=True)
        word = "more" if op == "CountGreaterThan" else "fewer"
        return f"Are there {word} {a} than {b}?"
    if op == "CountEqual":
        a = render_np(prog.children[0], plural=True)
        b = render_np(prog.children[1], plural=True)
        return f"Are there an equal number of {a} and {b}?"
    raise RenderError(f"{op} is not a question root")


def render_taxonomy_question(concept: str) -> str:
    return f"Is there {indef(concept)}?"


def render_modifier_question(referent: Prog, concept: str) -> str:
    np = render_np(referent, level="base")
    return f"Is the {np} {indef(concept)} object?"


def render_description(referent: Prog, concept: str, family: str) -> str:
    """One example sentence: a referent phrase plus the new concept word."""
    if occurrences(referent, concept) > 0:
        raise RenderError(f"referent phrase mentions {concept!r}")
    if family == "attribute":
        np = render_np(referent)
        return f"There is {indef(np)}; it is {indef(concept)} object."
    if family == "taxonomy":
        if referent.op != "Scene":
            raise RenderError("taxonomy descriptions take the whole scene")
        return f"There is {indef(concept)}."
    if family == "modifier":
        np = render_np(referent, level="base")
        return f"The {np} is {indef(concept)} object."
    raise RenderError(f"unknown template family {family!r}")


def render_supplemental(family: str, concepts, anchor: str | None = None) -> str:
    """One supplemental sentence relating ``concepts``.

    ``anchor`` is the shared parent (taxonomy family) or the attribute
    category (attribute family); the modifier family takes none.
    """
    names = list(concepts)
    if family == "taxonomy":
        if anchor is None:
            raise RenderError("taxonomy supplementals need a parent concept")
        verb = "is" if len(names) == 1 else "are"
        return f"{join_list(names)} {verb} a kind of {anchor}s."
    if family == "attribute":
        if anchor is None:
            raise RenderError("attribute supplementals need a category")
        if len(names) == 1:
            return f"{names[0]} is {indef(anchor)}."
        return f"{join_list(names)} are {anchor}s."
    if family == "modifier":
        if len(names) < 2:
            raise RenderError("modifier supplementals relate at least two words")
        return f"{join_list(names, final=None)} describes the same property of an object."
    raise RenderError(f"unknown template family {family!r}")
