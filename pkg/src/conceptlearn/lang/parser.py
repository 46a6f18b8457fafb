"""Deterministic recursive-descent parser for the template grammar.

The grammar is LL(2) by construction: every clause form is introduced by
a distinct function-word sequence, coordination branches only take
clause-free anchors, and the head noun "object(s)" terminates the
modifier list. Unknown alphanumeric words in modifier position parse as
opaque concept symbols; anything that breaks the sentence structure
raises ParseError.
"""

from __future__ import annotations

from .programs import (
    Prog, scene, filt, relate, aerelate, inter, union_, exist, count, query,
    aequery, count_lt, count_gt, count_eq,
)


class ParseError(ValueError):
    pass


# Words that may never be consumed as a concept modifier.
FUNCTION_WORDS = {
    "object", "objects", "the", "a", "an", "is", "are", "there", "that",
    "both", "either", "and", "or", "to", "of", "in", "front", "behind",
    "with", "same", "as", "how", "many", "what", "its", "does", "have",
    "more", "fewer", "than", "equal", "number", "it", "kind", "describes",
    "property", ";", ".", "?", ",",
}

_PUNCT = ";.?,"


def tokenize(text: str) -> list[str]:
    out = []
    for chunk in text.lower().split():
        word = chunk
        trail = []
        while word and word[-1] in _PUNCT:
            trail.append(word[-1])
            word = word[:-1]
        if word:
            out.append(word)
        out.extend(reversed(trail))
    return out


class _Cursor:
    def __init__(self, tokens, text):
        self.tokens = tokens
        self.text = text
        self.i = 0

    def peek(self, k=0):
        j = self.i + k
        return self.tokens[j] if j < len(self.tokens) else None

    def eat(self, expected=None):
        tok = self.peek()
        if tok is None:
            raise ParseError(f"unexpected end of sentence: {self.text!r}")
        if expected is not None and tok != expected:
            raise ParseError(
                f"expected {expected!r}, got {tok!r} in {self.text!r}")
        self.i += 1
        return tok

    def eat_seq(self, *words):
        for w in words:
            self.eat(w)

    def eat_article(self):
        tok = self.eat()
        if tok not in ("a", "an"):
            raise ParseError(f"expected article, got {tok!r} in {self.text!r}")

    def eat_word(self):
        tok = self.eat()
        if tok in FUNCTION_WORDS or not tok.isalnum():
            raise ParseError(f"expected a concept word, got {tok!r} in {self.text!r}")
        return tok

    def expect_end(self, *closing):
        self.eat_seq(*closing)
        if self.i != len(self.tokens):
            raise ParseError(f"trailing words in {self.text!r}")


def _parse_rel_clause(cur: _Cursor, anchor_level: str) -> Prog:
    t = cur.peek()
    if t == "to":
        cur.eat_seq("to", "the")
        side = cur.eat()
        if side not in ("left", "right"):
            raise ParseError(f"expected left/right, got {side!r} in {cur.text!r}")
        cur.eat_seq("of", "the")
        return relate(_parse_np(cur, anchor_level), side)
    if t == "in":
        cur.eat_seq("in", "front", "of", "the")
        return relate(_parse_np(cur, anchor_level), "front")
    if t == "behind":
        cur.eat_seq("behind", "the")
        return relate(_parse_np(cur, anchor_level), "behind")
    raise ParseError(f"expected a spatial clause at {t!r} in {cur.text!r}")


def _parse_np(cur: _Cursor, level: str = "full") -> Prog:
    mods = []
    while True:
        t = cur.peek()
        if t in ("object", "objects"):
            cur.eat()
            break
        if t is None or t in FUNCTION_WORDS or not t.isalnum():
            raise ParseError(f"expected head noun near {t!r} in {cur.text!r}")
        mods.append(cur.eat())
    core = None
    t = cur.peek()
    if level != "base":
        if t in ("to", "in", "behind"):
            core = _parse_rel_clause(cur, "chain")
        elif t == "that" and level == "full":
            cur.eat()
            if cur.peek() not in ("is", "are"):
                raise ParseError(f"expected is/are after 'that' in {cur.text!r}")
            cur.eat()
            which = cur.eat()
            if which == "both":
                a = _parse_rel_clause(cur, "base")
                cur.eat("and")
                b = _parse_rel_clause(cur, "base")
                core = inter(a, b)
            elif which == "either":
                a = _parse_rel_clause(cur, "base")
                cur.eat("or")
                b = _parse_rel_clause(cur, "base")
                core = union_(a, b)
            else:
                raise ParseError(f"expected both/either, got {which!r} in {cur.text!r}")
        elif t == "with" and level == "full":
            cur.eat_seq("with", "the", "same")
            cat = cur.eat_word()
            cur.eat_seq("as", "the")
            core = aerelate(_parse_np(cur, "chain"), cat)
    prog = core if core is not None else scene()
    for m in mods:
        prog = filt(prog, m)
    return prog


def parse_question(text: str) -> Prog:
    cur = _Cursor(tokenize(text), text)
    t0, t1 = cur.peek(0), cur.peek(1)
    if t0 == "is" and t1 == "there":
        cur.eat_seq("is", "there")
        cur.eat_article()
        mark = cur.i
        try:
            np = _parse_np(cur)
            cur.expect_end("?")
            return exist(np)
        except ParseError:
            cur.i = mark
        concept = cur.eat_word()
        cur.expect_end("?")
        return exist(filt(scene(), concept))
    if t0 == "is" and t1 == "the":
        cur.eat_seq("is", "the")
        np = _parse_np(cur, "base")
        cur.eat_article()
        concept = cur.eat_word()
        cur.expect_end("object", "?")
        return exist(filt(np, concept))
    if t0 == "how":
        cur.eat_seq("how", "many")
        np = _parse_np(cur)
        cur.expect_end("are", "there", "?")
        return count(np)
    if t0 == "there" and t1 == "is":
        cur.eat_seq("there", "is")
        cur.eat_article()
        np = _parse_np(cur)
        cur.eat_seq(";", "what", "is", "its")
        cat = cur.eat_word()
        cur.expect_end("?")
        return query(np, cat)
    if t0 == "does":
        cur.eat_seq("does", "the")
        a = _parse_np(cur)
        cur.eat_seq("have", "the", "same")
        cat = cur.eat_word()
        cur.eat_seq("as", "the")
        b = _parse_np(cur)
        cur.expect_end("?")
        return aequery(a, b, cat)
    if t0 == "are" and t1 == "there":
        cur.eat_seq("are", "there")
        t = cur.peek()
        if t in ("more", "fewer"):
            cur.eat()
            a = _parse_np(cur)
            cur.eat("than")
            b = _parse_np(cur)
            cur.expect_end("?")
            return count_gt(a, b) if t == "more" else count_lt(a, b)
        if t == "an":
            cur.eat_seq("an", "equal", "number", "of")
            a = _parse_np(cur)
            cur.eat("and")
            b = _parse_np(cur)
            cur.expect_end("?")
            return count_eq(a, b)
        raise ParseError(f"unrecognized comparison in {text!r}")
    raise ParseError(f"unrecognized question form: {text!r}")


def parse_description(text: str):
    """Parse an example sentence into (referent_program, concept, family)."""
    cur = _Cursor(tokenize(text), text)
    t0 = cur.peek(0)
    if t0 == "the":
        cur.eat("the")
        np = _parse_np(cur, "base")
        cur.eat("is")
        cur.eat_article()
        concept = cur.eat_word()
        cur.expect_end("object", ".")
        return np, concept, "modifier"
    if t0 == "there":
        cur.eat_seq("there", "is")
        cur.eat_article()
        if ";" in cur.tokens:
            np = _parse_np(cur)
            cur.eat_seq(";", "it", "is")
            cur.eat_article()
            concept = cur.eat_word()
            cur.expect_end("object", ".")
            return np, concept, "attribute"
        concept = cur.eat_word()
        cur.expect_end(".")
        return scene(), concept, "taxonomy"
    raise ParseError(f"unrecognized description form: {text!r}")


def _parse_name_list(cur: _Cursor) -> list[str]:
    names = [cur.eat_word()]
    while True:
        t = cur.peek()
        if t == ",":
            cur.eat()
            names.append(cur.eat_word())
        elif t == "and":
            cur.eat()
            names.append(cur.eat_word())
        else:
            return names


def parse_supplemental(text: str):
    """Parse a supplemental sentence into (facts, family).

    Facts are (a, b, kind) tuples with kind in "hypernym", "cohypernym",
    or "samekind". List sentences expand to all pairwise facts, so the
    extraction does not depend on which name is the episode's subject.
    """
    cur = _Cursor(tokenize(text), text)
    names = _parse_name_list(cur)
    verb = cur.eat()
    facts = []
    if verb == "describes":
        cur.expect_end("the", "same", "property", "of", "an", "object", ".")
        if len(names) < 2:
            raise ParseError(f"same-property sentence needs two names: {text!r}")
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                facts.append((names[i], names[j], "samekind"))
        return facts, "modifier"
    if verb not in ("is", "are"):
        raise ParseError(f"expected is/are/describes, got {verb!r} in {text!r}")
    if cur.peek() in ("a", "an") and cur.peek(1) == "kind":
        cur.eat_article()
        cur.eat_seq("kind", "of")
        parent_pl = cur.eat_word()
        cur.expect_end(".")
        if not parent_pl.endswith("s") or len(parent_pl) < 2:
            raise ParseError(f"expected a plural kind word in {text!r}")
        parent = parent_pl[:-1]
        for n in names:
            facts.append((n, parent, "hypernym"))
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                facts.append((names[i], names[j], "cohypernym"))
        return facts, "taxonomy"
    if verb == "is":
        cur.eat_article()
        category = cur.eat_word()
        cur.expect_end(".")
        return [], "attribute"
    category_pl = cur.eat_word()
    cur.expect_end(".")
    if not category_pl.endswith("s") or len(category_pl) < 2:
        raise ParseError(f"expected a plural category word in {text!r}")
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            facts.append((names[i], names[j], "samekind"))
    return facts, "attribute"
