"""Templated rendering and the round-trip parser."""

import pytest

from conceptlearn.lang.parser import (
    FUNCTION_WORDS,
    ParseError,
    parse_description,
    parse_question,
    parse_supplemental,
    tokenize,
)
from conceptlearn.lang.programs import (
    Prog,
    ProgramError,
    aequery,
    count,
    count_eq,
    exist,
    filt,
    parse_sexpr,
    query,
    relate,
    scene,
    to_sexpr,
)
from conceptlearn.lang.templates import (
    TEMPLATE_FAMILIES,
    RenderError,
    render_description,
    render_np,
    render_question,
    render_supplemental,
)
from conceptlearn.seeding import rng_for
from conceptlearn.worldgen import make_schema, sample_question
from conceptlearn.worldgen.episodes import base_pools
from conceptlearn.worldgen.questions import sample_np


# ---------------------------------------------------------------------------
# program structure

def test_program_arity_is_enforced():
    with pytest.raises(ProgramError):
        Prog("Filter", (), "red")  # missing child
    with pytest.raises(ProgramError):
        Prog("Scene", (), "red")  # unexpected arg
    with pytest.raises(ProgramError):
        Prog("Exist", (scene(),), "red")
    with pytest.raises(ProgramError):
        Prog("Teleport", ())


def test_sexpr_roundtrip_fixed():
    prog = count_eq(filt(scene(), "red"), relate(filt(scene(), "cube"), "left"))
    s = to_sexpr(prog)
    assert s == ("(CountEqual (Filter (Scene) red)"
                 " (Relate (Filter (Scene) cube) left))")
    assert parse_sexpr(s) == prog


def test_sexpr_roundtrip_random():
    schema = make_schema("clevr_like", 0)
    pools = base_pools(schema)
    rng = rng_for(0, "sexpr")
    kinds = ("exist", "count", "query", "aequery",
             "count_gt", "count_lt", "count_eq")
    for i in range(500):
        prog = sample_question(rng, schema, pools, kinds[i % len(kinds)])
        assert parse_sexpr(to_sexpr(prog)) == prog


def test_parse_sexpr_rejects_malformed():
    for bad in ("", "(Filter (Scene)", "(Scene) extra", "(Exist)"):
        with pytest.raises((ProgramError, ValueError)):
            parse_sexpr(bad)


# ---------------------------------------------------------------------------
# question rendering

def test_render_question_fixed_strings():
    assert render_question(exist(filt(scene(), "red"))) == \
        "Is there a red object?"
    assert render_question(count(filt(filt(scene(), "metal"), "cube"))) == \
        "How many metal cube objects are there?"
    assert render_question(query(filt(scene(), "small"), "color")) == \
        "There is a small object; what is its color?"
    assert render_question(
        aequery(filt(scene(), "red"), filt(scene(), "cube"), "size")) == \
        "Does the red object have the same size as the cube object?"


def test_question_roundtrip_random():
    schema = make_schema("clevr_like", 0)
    pools = base_pools(schema)
    rng = rng_for(1, "qr")
    kinds = ("exist", "count", "query", "aequery",
             "count_gt", "count_lt", "count_eq")
    for i in range(2000):
        prog = sample_question(rng, schema, pools, kinds[i % len(kinds)])
        text = render_question(prog)
        assert parse_question(text) == prog, text


def test_question_roundtrip_novel_words():
    # unseen concept words must survive as opaque modifiers
    for word in ("zvx", "blicket", "dax"):
        prog = exist(filt(filt(scene(), word), "cube"))
        assert parse_question(render_question(prog)) == prog


def test_parse_question_rejects_garbage():
    for bad in ("", "Is there?", "red cube", "Is there a red object",
                "How many are there?"):
        with pytest.raises(ParseError):
            parse_question(bad)


def test_function_words_are_reserved():
    assert {"object", "objects", "there", "same", "and", "both"} <= FUNCTION_WORDS
    prog = exist(filt(filt(scene(), "same"), "cube"))
    with pytest.raises((RenderError, ParseError)):
        parse_question(render_question(prog))


def test_tokenize_splits_punctuation():
    assert tokenize("Is there a red object?") == \
        ["is", "there", "a", "red", "object", "?"]
    assert tokenize("foo, bar; baz.") == ["foo", ",", "bar", ";", "baz", "."]


# ---------------------------------------------------------------------------
# descriptions

def test_description_roundtrip_all_families():
    cases = [
        (filt(scene(), "cube"), "zorp", "attribute"),
        (scene(), "grebe", "taxonomy"),
        (filt(scene(), "red"), "blicket", "modifier"),
    ]
    for ref, concept, family in cases:
        text = render_description(ref, concept, family)
        np, got_c, got_f = parse_description(text)
        assert (np, got_c, got_f) == (ref, concept, family), text


def test_description_roundtrip_random_referents():
    schema = make_schema("clevr_like", 0)
    pools = base_pools(schema)
    rng = rng_for(2, "desc")
    for i in range(500):
        ref = sample_np(rng, schema, pools, 2)
        text = render_description(ref, "zorp", "attribute")
        np, concept, family = parse_description(text)
        assert np == ref and concept == "zorp" and family == "attribute"


def test_description_rejects_self_reference():
    with pytest.raises(RenderError):
        render_description(filt(scene(), "zorp"), "zorp", "attribute")


# ---------------------------------------------------------------------------
# supplemental sentences

def test_supplemental_taxonomy_facts():
    text = render_supplemental("taxonomy", ["wren", "finch"], "bird")
    assert text == "wren and finch are a kind of birds."
    facts, family = parse_supplemental(text)
    assert family == "taxonomy"
    assert ("wren", "bird", "hypernym") in facts
    assert ("finch", "bird", "hypernym") in facts


def test_supplemental_single_name():
    facts, family = parse_supplemental(
        render_supplemental("taxonomy", ["wren"], "bird"))
    assert facts == [("wren", "bird", "hypernym")]
    assert family == "taxonomy"


def test_supplemental_attribute_facts():
    text = render_supplemental("attribute", ["zorp", "red", "blue"], "color")
    assert text == "zorp, red and blue are colors."
    facts, family = parse_supplemental(text)
    assert family == "attribute"
    # category words are not embedded concepts, so the useful content is
    # the pairwise co-membership, expanded independent of subject order
    assert set(facts) == {("zorp", "red", "samekind"),
                          ("zorp", "blue", "samekind"),
                          ("red", "blue", "samekind")}


def test_supplemental_modifier_facts():
    text = render_supplemental("modifier", ["zorp", "shiny"])
    facts, family = parse_supplemental(text)
    assert family == "modifier"
    assert facts == [("zorp", "shiny", "samekind")]


def test_supplemental_roundtrip_random_names():
    rng = rng_for(3, "supp")
    alphabet = "bcdfghjklmnpqrstvwxz"
    for i in range(300):
        k = int(rng.integers(1, 4))
        names = []
        while len(names) < k:
            w = "".join(alphabet[int(rng.integers(20))] for _ in range(5))
            if w not in FUNCTION_WORDS and w not in names:
                names.append(w)
        family = TEMPLATE_FAMILIES[i % 3]
        if family != "taxonomy" and len(names) < 2:
            names.append(names[0] + "x")  # pairwise families need two names
        anchor = {"taxonomy": "bird", "attribute": "color",
                  "modifier": None}[family]
        text = render_supplemental(family, names, anchor)
        facts, got = parse_supplemental(text)
        assert got == family
        assert facts, text


def test_parse_supplemental_rejects_garbage():
    for bad in ("", "wren bird.", "wren is kind of birds.",
                "wren and are a kind of birds."):
        with pytest.raises(ParseError):
            parse_supplemental(bad)


# ---------------------------------------------------------------------------
# noun-phrase rendering details

def test_render_np_mirrors_filter_nesting():
    # the innermost filter is the first surface modifier, and parsing
    # reconstructs exactly that nesting, so order survives a round trip
    a = filt(filt(scene(), "red"), "small")
    assert render_np(a) == "red small object"
    b = filt(filt(scene(), "small"), "red")
    assert render_np(b) == "small red object"
    assert parse_question(render_question(exist(a))) == exist(a)
    assert parse_question(render_question(exist(b))) == exist(b)


def test_indefinite_article_agreement():
    text = render_question(exist(filt(scene(), "apatosaur")))
    assert text.startswith("Is there an ")
