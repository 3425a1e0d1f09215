"""Tokenizer for the SQLite SELECT dialect used by text-to-SQL benchmarks."""

from __future__ import annotations

import re
from dataclasses import dataclass

from sqlloc.errors import SQLSyntaxError

# Words the grammar needs as reserved. Everything else (function names, DATE,
# REPLACE, MATCH, ...) lexes as an identifier so it stays usable as a column name.
KEYWORDS = frozenset(
    """
    ALL AND AS ASC BETWEEN BY CASE CAST COLLATE CROSS DESC DISTINCT ELSE END
    ESCAPE EXCEPT EXISTS FROM FULL GLOB GROUP HAVING IN INNER INTERSECT IS
    ISNULL JOIN LEFT LIKE LIMIT NATURAL NOT NOTNULL NULL OFFSET ON OR ORDER
    OUTER RIGHT SELECT THEN UNION USING VALUES WHEN WHERE WITH
    """.split()
)

# Bare words the parser reads as literals rather than identifiers.
LITERAL_WORDS = frozenset({"TRUE", "FALSE", "CURRENT_DATE", "CURRENT_TIME", "CURRENT_TIMESTAMP"})

OPERATORS = (
    "<<", ">>", "<=", ">=", "==", "!=", "<>", "||",
    "<", ">", "=", "+", "-", "*", "/", "%", "&", "|", "~",
)
PUNCT = "(),.;"

KEYWORD = "keyword"
IDENT = "ident"
STRING = "string"
NUMBER = "number"
BLOB = "blob"
OP = "op"
PUNCT_KIND = "punct"
PARAM = "param"
EOF = "eof"

_WS = re.compile(r"\s+")
_NUMBER = re.compile(
    r"0[xX][0-9a-fA-F]+|(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
)
_BARE = re.compile(r"[A-Za-z_\x80-\U0010FFFF][A-Za-z0-9_$\x80-\U0010FFFF]*")
_PARAM = re.compile(r"\?\d*|[:@$][A-Za-z0-9_]+")
_CLOSERS = {"`": "`", '"': '"', "[": "]"}


@dataclass(frozen=True)
class Token:
    kind: str
    value: str  # keyword: upper-case word; ident: unquoted text; string: decoded text
    pos: int
    raw: str
    quote: str | None = None

    def is_keyword(self, *words: str) -> bool:
        return self.kind == KEYWORD and self.value in words

    def is_op(self, *ops: str) -> bool:
        return self.kind in (OP, PUNCT_KIND) and self.value in ops


def _quoted(text: str, start: int, close: str) -> tuple[str, int]:
    """Scan a quoted run starting after the opening quote; doubled closers escape."""
    out = []
    i = start
    while True:
        j = text.find(close, i)
        if j < 0:
            raise SQLSyntaxError("unterminated quoted token", start - 1, close)
        out.append(text[i:j])
        if close != "]" and text.startswith(close * 2, j):
            out.append(close)
            i = j + 2
            continue
        return "".join(out), j + 1


def tokenize(text: str) -> list[Token]:
    """Split SQL text into tokens, dropping whitespace and comments.

    The returned list always ends with an ``eof`` token.
    """
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        m = _WS.match(text, i)
        if m:
            i = m.end()
            continue
        if text.startswith("--", i):
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            i = n if j < 0 else j + 2
            continue
        if ch == "'":
            value, end = _quoted(text, i + 1, "'")
            tokens.append(Token(STRING, value, i, text[i:end], "'"))
            i = end
            continue
        if ch in "xX" and i + 1 < n and text[i + 1] == "'":
            value, end = _quoted(text, i + 2, "'")
            if not re.fullmatch(r"(?:[0-9a-fA-F]{2})*", value):
                raise SQLSyntaxError("malformed blob literal", i)
            tokens.append(Token(BLOB, value, i, text[i:end]))
            i = end
            continue
        if ch in _CLOSERS:
            value, end = _quoted(text, i + 1, _CLOSERS[ch])
            tokens.append(Token(IDENT, value, i, text[i:end], ch))
            i = end
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            m = _NUMBER.match(text, i)
            raw = m.group(0)
            tokens.append(Token(NUMBER, raw, i, raw))
            i = m.end()
            continue
        m = _BARE.match(text, i)
        if m:
            word = m.group(0)
            upper = word.upper()
            if word.isascii() and upper in KEYWORDS:
                tokens.append(Token(KEYWORD, upper, i, word))
            else:
                tokens.append(Token(IDENT, word, i, word))
            i = m.end()
            continue
        m = _PARAM.match(text, i)
        if m:
            tokens.append(Token(PARAM, m.group(0), i, m.group(0)))
            i = m.end()
            continue
        for op in OPERATORS:
            if text.startswith(op, i):
                tokens.append(Token(OP, op, i, op))
                i += len(op)
                break
        else:
            if ch in PUNCT:
                tokens.append(Token(PUNCT_KIND, ch, i, ch))
                i += 1
            else:
                raise SQLSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(Token(EOF, "", n, ""))
    return tokens


def count_tokens(text: str) -> int:
    """Number of lexical tokens in ``text`` (the trailing EOF marker excluded)."""
    return len(tokenize(text)) - 1
