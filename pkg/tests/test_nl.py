import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqlloc.errors import FrozenContentViolated, MalformedTranslatorReply, UnbalancedBackticks
from sqlloc.mapping import mapping_from_dict
from sqlloc.nl import (
    backtick_spans, extract_dates, extract_literals, extract_numbers, localize_text_pair,
    parse_text_reply, standardize_evidence, verify_frozen_content,
)

M = mapping_from_dict(
    "shop", {"Users": "kullanicilar"},
    {"Users": {"age": "yas", "home city": "sehir", "name": "ad"}},
)


def test_backtick_spans():
    spans = backtick_spans("a `x` b `y z`")
    assert [s.content for s in spans] == ["x", "y z"]
    assert spans[0].start == 2 and spans[0].end == 5
    with pytest.raises(UnbalancedBackticks):
        backtick_spans("`x` and `y")


def test_standardize_exact_folded_and_qualified():
    std = standardize_evidence("adult: `age` >= 18; `HOME CITY` is `Users`.`name`? `Users.name`", M)
    assert std.text == "adult: `yas` >= 18; `sehir` is `kullanicilar`.`ad`? `kullanicilar.ad`"
    assert std.unmatched == []


def test_standardize_reports_unknown_and_is_idempotent():
    std = standardize_evidence("`salary` > 5 and `age` < 3", M)
    assert std.unmatched == ["salary"]
    again = standardize_evidence(std.text, M)
    assert again.text == std.text
    assert again.unmatched == ["salary"]


def test_standardize_leaves_prose_alone():
    text = "age refers to `age`; name = 'age'"
    assert standardize_evidence(text, M).text == "age refers to `yas`; name = 'age'"


def test_extractors_ignore_backticks_and_suffixes():
    text = "`col2` over 20'den and 3.5, on 2024-01-05 for 'Ankara' and school's"
    assert extract_numbers(text) == {"20": 1, "3.5": 1, "2024": 1, "01": 1, "05": 1}
    assert extract_dates(text)["2024-01-05"] == 1
    assert extract_literals(text) == {"Ankara": 1}


def test_frozen_content_passes_on_faithful_translation():
    v = verify_frozen_content("How many over 20 in 'Ankara'?", "`yas` > 20",
                              "'Ankara' şehrinde 20 üzeri kaç kişi var?", "`yas` > 20")
    assert v.passed, v.violations


@pytest.mark.parametrize("tq,te,kind", [
    ("20 üzeri 'Ankara'", "`yaş` > 20", "backtick-span"),
    ("21 üzeri 'Ankara'", "`yas` > 20", "number"),
    ("20 üzeri 'ankara'", "`yas` > 20", "literal"),
    ("20 üzeri 'Ankara'", "`yas` > 20 `ad`", "backtick-span"),
    ("20 üzeri 'Ankara'", "`yas > 20", "backtick-span"),
])
def test_frozen_content_violations(tq, te, kind):
    v = verify_frozen_content("over 20 in 'Ankara'", "`yas` > 20", tq, te)
    assert not v.passed
    assert kind in {x.kind for x in v.violations}


def test_literal_may_carry_a_suffix():
    v = verify_frozen_content("from 'Ankara'", "", "'Ankara'dan", "")
    assert v.passed, v.violations


def test_sql_words_are_soft_warnings():
    v = verify_frozen_content("x", "use COUNT of `ad`", "x", "`ad` say")
    assert v.passed and v.warnings == ["COUNT"]


@given(st.text(alphabet=st.sampled_from(list("ab 12.,'`x")), max_size=40))
def test_identity_translation_is_always_frozen_safe(text):
    if text.count("`") % 2:
        return
    assert verify_frozen_content(text, text, text, text).passed


# -- translation loop -----------------------------------------------------------


class Scripted:
    def __init__(self, replies):
        self.replies = list(replies)
        self.requests = []

    def translate_text(self, request):
        self.requests.append(request)
        return self.replies.pop(0)


def test_retry_until_frozen_content_holds():
    t = Scripted([
        {"question_tr": "21 kişi", "evidence_tr": "`yas`"},
        '{"question_tr": "20 kişi", "evidence_tr": "`yas`"}',
    ])
    out = localize_text_pair("20 people", "`yas`", t, retries=3, sql="SELECT 1")
    assert (out.question, out.evidence, out.attempts) == ("20 kişi", "`yas`", 2)
    assert t.requests[0] == {"question_en": "20 people", "evidence_std": "`yas`", "sql_en": "SELECT 1"}


def test_retries_exhausted_raise_last_problem():
    t = Scripted([{"question_tr": "21", "evidence_tr": ""}] * 3)
    with pytest.raises(FrozenContentViolated):
        localize_text_pair("20", "", t, retries=2)
    t = Scripted(["nope", "nope"])
    with pytest.raises(MalformedTranslatorReply):
        localize_text_pair("20", "", t, retries=1)


@pytest.mark.parametrize("raw", [
    "{", [], {"question_tr": "x"}, {"question_tr": "x", "evidence_tr": "y", "z": 1},
    {"question_tr": 1, "evidence_tr": "y"},
])
def test_parse_text_reply_rejects(raw):
    with pytest.raises(MalformedTranslatorReply):
        parse_text_reply(raw)
