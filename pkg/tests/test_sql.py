import random
import sqlite3

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqlgen import QueryGen, fuzz_case, random_mapping, random_schema
from sqlloc.errors import SQLSyntaxError, UnmappedIdentifier, UnsupportedConstruct
from sqlloc.fixtures import ITEMS
from sqlloc.mapping import invert_mapping, mapping_from_dict
from sqlloc.sql import (
    canonically_equal, classify_identifiers, collect_identifiers, count_tokens, localize_sql,
    parse_sql, render_sql, rewrite_identifiers, tokenize,
)
from sqlloc.sql.canonical import normalize_number
from sqlloc.sql.nodes import Literal, walk

M = mapping_from_dict(
    "shop",
    {"Users": "kullanicilar", "Orders": "siparisler"},
    {"Users": {"id": "id", "name": "ad", "age": "yas", "home city": "sehir"},
     "Orders": {"order_id": "siparis_id", "user_id": "kullanici_id", "amount": "tutar", "status": "durum"}},
    "dukkan",
)


def literals(ast):
    return sorted(n.value for n in walk(ast) if isinstance(n, Literal))


# -- lexer -------------------------------------------------------------------


def test_tokenize_kinds_and_comments():
    toks = tokenize("SELECT `a b`, 'it''s' -- note\n FROM [t] /* x */ WHERE x >= 1.5e3")
    kinds = [(t.kind, t.value) for t in toks]
    assert ("ident", "a b") in kinds
    assert ("string", "it's") in kinds
    assert ("ident", "t") in kinds
    assert ("number", "1.5e3") in kinds
    assert ("op", ">=") in kinds
    assert kinds[-1][0] == "eof"


def test_count_tokens_excludes_eof():
    assert count_tokens("SELECT 1") == 2
    assert count_tokens("") == 0


def test_non_ascii_word_is_never_a_keyword():
    # "ſelect" upper-cases to SELECT but SQLite treats it as an identifier
    tok = tokenize("ſelect")[0]
    assert tok.kind == "ident"


def test_lexer_errors_carry_position():
    with pytest.raises(SQLSyntaxError) as exc:
        tokenize("SELECT 'open")
    assert exc.value.position == 7


# -- parser / renderer ---------------------------------------------------------


@pytest.mark.parametrize("item", ITEMS, ids=lambda it: it.sql[:40])
def test_fixture_queries_render_parse_fixpoint(item):
    ast = parse_sql(item.sql)
    text = render_sql(ast)
    assert parse_sql(text) == ast
    assert render_sql(parse_sql(text)) == text


def test_syntax_error_position_and_expectation():
    with pytest.raises(SQLSyntaxError) as exc:
        parse_sql("SELECT a FROM t WHERE")
    assert exc.value.position == len("SELECT a FROM t WHERE")
    assert exc.value.expected == "expression"


@pytest.mark.parametrize("sql", [
    "DELETE FROM t", "SELECT * FROM t WINDOW w AS (ORDER BY a)", "SELECT ?",
    "SELECT row_number() OVER (ORDER BY a) FROM t", "VALUES (1)",
])
def test_unsupported_constructs_are_named(sql):
    with pytest.raises((UnsupportedConstruct, SQLSyntaxError)):
        parse_sql(sql)


def test_quote_style_is_not_part_of_equality():
    assert parse_sql('SELECT "a" FROM `t`') == parse_sql("SELECT a FROM [t]")


def test_render_quotes_only_when_needed():
    out = render_sql(parse_sql('SELECT "home city", "order", plain FROM "Users"'))
    assert out == 'SELECT `home city`, `order`, plain FROM Users'


# -- resolver ----------------------------------------------------------------


def test_rewrite_simple_and_aliases():
    sql = ("SELECT u.name, COUNT(o.order_id) AS n FROM Users AS u LEFT JOIN Orders o "
           "ON u.id = o.user_id GROUP BY u.name HAVING n > 1 ORDER BY n DESC")
    assert localize_sql(sql, M) == (
        "SELECT u.ad, COUNT(o.siparis_id) AS n FROM kullanicilar AS u LEFT JOIN siparisler AS o "
        "ON u.id = o.kullanici_id GROUP BY u.ad HAVING n > 1 ORDER BY n DESC")


def test_rewrite_is_case_insensitive_and_quotes_spaces():
    assert localize_sql('select NAME, "HOME CITY" from users', M) == "SELECT ad, sehir FROM kullanicilar"


def test_literals_equal_to_identifiers_are_untouched():
    sql = "SELECT name, 'age' AS age FROM Users WHERE name IN ('age', 'Users', 'home city')"
    out = parse_sql(localize_sql(sql, M))
    assert literals(out) == literals(parse_sql(sql))


def test_cte_and_subquery_scopes():
    sql = ("WITH big AS (SELECT user_id, SUM(amount) AS total FROM Orders GROUP BY user_id) "
           "SELECT name FROM Users WHERE id IN (SELECT user_id FROM big WHERE total > 10) "
           "AND EXISTS (SELECT 1 FROM Orders AS x WHERE x.user_id = Users.id)")
    assert localize_sql(sql, M) == (
        "WITH big AS (SELECT kullanici_id, SUM(tutar) AS total FROM siparisler GROUP BY kullanici_id) "
        "SELECT ad FROM kullanicilar WHERE id IN (SELECT kullanici_id FROM big WHERE total > 10) "
        "AND EXISTS (SELECT 1 FROM siparisler AS x WHERE x.kullanici_id = kullanicilar.id)")


def test_derived_table_columns_follow_their_source():
    sql = "SELECT d.name FROM (SELECT name FROM Users) AS d"
    assert localize_sql(sql, M) == "SELECT d.ad FROM (SELECT ad FROM kullanicilar) AS d"


def test_unmapped_table_and_column_raise():
    with pytest.raises(UnmappedIdentifier) as exc:
        localize_sql("SELECT * FROM Payments", M)
    assert exc.value.kind == "table"
    with pytest.raises(UnmappedIdentifier):
        localize_sql("SELECT salary FROM Users", M)


def test_rowid_passes_through():
    assert localize_sql("SELECT rowid, name FROM Users", M) == "SELECT rowid, ad FROM kullanicilar"


def test_unresolvable_double_quoted_name_is_a_string():
    # SQLite's legacy rule: "x" that names nothing is the string 'x'
    out = localize_sql('SELECT name FROM Users WHERE name = "paid"', M)
    assert out == "SELECT ad FROM kullanicilar WHERE ad = 'paid'"


def test_functions_are_not_renamed_even_when_they_collide():
    m = mapping_from_dict("d", {"t": "t2"}, {"t": {"count": "sayi", "max": "en_cok"}})
    assert localize_sql("SELECT COUNT(count), max(max) FROM t", m) == "SELECT COUNT(sayi), max(en_cok) FROM t2"


def test_classify_identifiers_kinds():
    ast = parse_sql("WITH c AS (SELECT id FROM Users) SELECT u.name AS nm, lower(u.name) "
                    "FROM Users u JOIN c ON c.id = u.id")
    kinds = {(k, i.text) for k, i in classify_identifiers(ast, M)}
    assert ("cte", "c") in kinds
    assert ("table", "Users") in kinds
    assert ("alias-definition", "u") in kinds
    assert ("alias-reference", "u") in kinds
    assert ("alias-definition", "nm") in kinds
    assert ("function", "lower") in kinds
    assert ("column", "name") in kinds


def test_collect_identifiers_reports_base_columns_once():
    ast = parse_sql("SELECT d.n FROM (SELECT name AS n FROM Users) d")
    occ = {(o.kind, o.text) for o in collect_identifiers(ast, M)}
    assert occ == {("table", "Users"), ("column", "name")}


# -- canonical form ------------------------------------------------------------


def test_canonical_case_numbers_operators():
    assert canonically_equal(parse_sql("select A from T where x == 07"),
                             parse_sql("SELECT a FROM t WHERE x = 7"))
    assert canonically_equal(parse_sql("SELECT a FROM t WHERE b <> 1 ORDER BY a ASC"),
                             parse_sql("SELECT a FROM t WHERE b != +01 ORDER BY a"))
    # integer and real literals stay distinct
    assert not canonically_equal(parse_sql("SELECT 1"), parse_sql("SELECT 1.0"))
    assert canonically_equal(parse_sql("SELECT a FROM t INNER JOIN u ON 1"),
                             parse_sql("SELECT a FROM t JOIN u ON 1"))


def test_canonical_does_not_reorder():
    assert not canonically_equal(parse_sql("SELECT a FROM t WHERE x = 1 AND y = 2"),
                                 parse_sql("SELECT a FROM t WHERE y = 2 AND x = 1"))
    assert not canonically_equal(parse_sql("SELECT a, b FROM t"), parse_sql("SELECT b, a FROM t"))


def test_canonical_keeps_string_case():
    assert not canonically_equal(parse_sql("SELECT 'A'"), parse_sql("SELECT 'a'"))


@pytest.mark.parametrize("raw,expected", [
    ("007", "7"), ("1.50", "1.5"), ("0x1F", "31"), ("1e3", "1000.0"), (".5", "0.5"), ("1e999", "1e999"),
])
def test_normalize_number(raw, expected):
    assert normalize_number(raw) == expected


# -- grammar fuzzing ---------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_fuzzed_queries_compile_and_round_trip(seed):
    schema, sql, mapping = fuzz_case(seed)
    conn = sqlite3.connect(":memory:")
    for ddl in schema.ddl():
        conn.execute(ddl)
    conn.execute("EXPLAIN " + sql)  # the generator itself must be sound
    ast = parse_sql(sql)
    assert parse_sql(render_sql(ast)) == ast
    target = render_sql(rewrite_identifiers(ast, mapping))
    assert rewrite_identifiers(parse_sql(target), invert_mapping(mapping)) == ast
    assert literals(parse_sql(target)) == literals(ast)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_fuzzed_rewrite_compiles_against_renamed_schema(seed):
    rng = random.Random(seed)
    schema = random_schema(rng)
    sql = QueryGen(schema, rng).query()
    mapping = random_mapping(schema, rng)
    conn = sqlite3.connect(":memory:")
    for t, cols in schema.tables.items():
        body = ", ".join(f'"{mapping.columns[t][c]}"' for c in cols)
        conn.execute(f'CREATE TABLE "{mapping.tables[t]}" ({body})')
    conn.execute("EXPLAIN " + localize_sql(sql, mapping))


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_identity_rewrite_is_identity(seed):
    schema, sql, _ = fuzz_case(seed)
    identity = mapping_from_dict("db", {t: t for t in schema.tables},
                                 {t: {c: c for c in cols} for t, cols in schema.tables.items()})
    ast = parse_sql(sql)
    assert rewrite_identifiers(ast, identity) == ast
