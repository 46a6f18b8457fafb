"""Exact symbolic evaluation of programs against scene specifications.

The ground truth the differentiable executor is measured against: set
ops evaluated exhaustively over true object attributes and positions.
"""

from __future__ import annotations

from ..lang.programs import Prog
from .scenes import SceneSpec, rel_true

def denotation(prog: Prog, scene: SceneSpec, schema) -> frozenset:
    """Exact object set of a set-valued program."""
    n = len(scene)
    p = prog
    if p.op == "Scene":
        return frozenset(range(n))
    if p.op == "Filter":
        base = denotation(p.children[0], scene, schema)
        return frozenset(j for j in base
                         if p.arg in scene.objects[j].concepts(schema))
    if p.op in ("Relate", "AERelate"):
        base = denotation(p.children[0], scene, schema)
        rel = p.arg if p.op == "Relate" else f"has_same_{p.arg}"
        return frozenset(
            j for j in range(n)
            if any(i != j and rel_true(scene, rel, j, i, schema) for i in base))
    if p.op == "Intersection":
        return denotation(p.children[0], scene, schema) & \
            denotation(p.children[1], scene, schema)
    if p.op == "Union":
        return denotation(p.children[0], scene, schema) | \
            denotation(p.children[1], scene, schema)
    raise ValueError(f"{p.op} is not a set op")


def symbolic_oracle(prog: Prog, scene: SceneSpec, schema) -> str | None:
    """Ground-truth answer by exhaustive set evaluation.

    Returns None when the answer is undefined (a Query or AEQuery referent
    that is not unique).
    """

    def sset(p: Prog) -> frozenset:
        return denotation(p, scene, schema)

    op = prog.op
    if op == "Exist":
        return "yes" if sset(prog.children[0]) else "no"
    if op == "Count":
        return str(len(sset(prog.children[0])))
    if op == "CountGreaterThan":
        return "yes" if len(sset(prog.children[0])) > len(sset(prog.children[1])) else "no"
    if op == "CountLessThan":
        return "yes" if len(sset(prog.children[0])) < len(sset(prog.children[1])) else "no"
    if op == "CountEqual":
        return "yes" if len(sset(prog.children[0])) == len(sset(prog.children[1])) else "no"
    if op == "Query":
        ref = sset(prog.children[0])
        if len(ref) != 1:
            return None
        (j,) = ref
        return scene.objects[j].attrs[prog.arg]
    if op == "AEQuery":
        ra = sset(prog.children[0])
        rb = sset(prog.children[1])
        if len(ra) != 1 or len(rb) != 1:
            return None
        (j,) = ra
        (k,) = rb
        a = scene.objects[j].attrs[prog.arg]
        b = scene.objects[k].attrs[prog.arg]
        return "yes" if a == b else "no"
    raise ValueError(f"{op} is not a question root")
