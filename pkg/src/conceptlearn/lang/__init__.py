from .programs import (
    Prog, ProgramError, parse_sexpr, to_sexpr, validate_program,
    scene, filt, relate, aerelate, inter, union_, exist, count, query,
    aequery, count_lt, count_gt, count_eq,
)
from .templates import (
    TEMPLATE_FAMILIES, RenderError, render_description, render_question,
    render_supplemental,
)
from .parser import ParseError, parse_description, parse_question, parse_supplemental

__all__ = [
    "Prog", "ProgramError", "parse_sexpr", "to_sexpr", "validate_program",
    "scene", "filt", "relate", "aerelate", "inter", "union_", "exist", "count",
    "query", "aequery", "count_lt", "count_gt", "count_eq",
    "TEMPLATE_FAMILIES", "RenderError", "render_description", "render_question",
    "render_supplemental",
    "ParseError", "parse_description", "parse_question", "parse_supplemental",
]
