"""Canonical textual form for points and multisets.

Atoms print as bare names, the unit point as ``*``, pairs as ``(p,q)``, sum
tags as ``inl p`` / ``inr p``, multisets as ``[p, q:3, r:w]`` (``:n`` is a
finite multiplicity, ``:w`` is omega) and coloured points as ``<c>p``.
The parser accepts repeated entries inside multisets and sums them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import (
    OMEGA,
    Atom,
    Bag,
    Coloured,
    In1,
    In2,
    Mult,
    Multiset,
    Pair,
    Point,
    Star,
    madd,
)


class ParseError(ValueError):
    """Syntax error with position information."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# Formatting
# ---------------------------------------------------------------------------


def format_mult(m: Mult) -> str:
    return "w" if m is OMEGA else str(m)


def format_point(p: Point) -> str:
    if isinstance(p, Atom):
        return p.name
    if isinstance(p, Star):
        return "*"
    if isinstance(p, Pair):
        return f"({format_point(p.left)},{format_point(p.right)})"
    if isinstance(p, In1):
        return f"inl {format_point(p.value)}"
    if isinstance(p, In2):
        return f"inr {format_point(p.value)}"
    if isinstance(p, Bag):
        return format_multiset(p.multiset)
    if isinstance(p, Coloured):
        return f"<{p.colour}>{format_point(p.value)}"
    raise TypeError(f"not a point: {p!r}")


def format_multiset(m: Multiset) -> str:
    parts = []
    for p, k in m:
        if k == 1:
            parts.append(format_point(p))
        else:
            parts.append(f"{format_point(p)}:{format_mult(k)}")
    return "[" + ", ".join(parts) + "]"


def format_pair(pair: tuple[Point, Point]) -> str:
    return f"({format_point(pair[0])},{format_point(pair[1])})"


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_PUNCT = ("(", ")", "[", "]", "<", ">", ",", ":", "*", ";", "{", "}", "=", "->", "-o", "!", "&", "\\", ".")


@dataclass
class Token:
    kind: str  # 'ident' | 'nat' | punctuation literal | 'eof'
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        two = text[i : i + 2]
        if two in ("->", "-o"):
            tokens.append(Token(two, two, line, col))
            i += 2
            col += 2
            continue
        if ch in "()[]<>,:;{}=*!&\\.":
            tokens.append(Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("nat", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            tokens.append(Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.text!r}", tok.line, tok.column)
        return self.next()

    def at(self, kind: str) -> bool:
        return self.peek().kind == kind

    def error(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(f"{message} (found {tok.text!r})", tok.line, tok.column)


# ---------------------------------------------------------------------------
# Point parsing
# ---------------------------------------------------------------------------


def parse_point(text: str) -> Point:
    ts = TokenStream(tokenize(text))
    p = read_point(ts)
    ts.expect("eof")
    return p


def parse_multiset(text: str) -> Multiset:
    p = parse_point(text)
    if not isinstance(p, Bag):
        raise ValueError("expected a multiset in [...] form")
    return p.multiset


def parse_point_pair(text: str) -> tuple[Point, Point]:
    """Parse ``(p,q)`` as a pair of points, e.g. a membership query."""
    p = parse_point(text)
    if not isinstance(p, Pair):
        raise ValueError("expected a pair (p,q)")
    return (p.left, p.right)


def read_point(ts: TokenStream) -> Point:
    tok = ts.peek()
    if tok.kind == "*":
        ts.next()
        return Star()
    if tok.kind == "<":
        ts.next()
        colour = int(ts.expect("nat").text)
        ts.expect(">")
        return Coloured(colour, read_point(ts))
    if tok.kind == "(":
        ts.next()
        left = read_point(ts)
        ts.expect(",")
        right = read_point(ts)
        ts.expect(")")
        return Pair(left, right)
    if tok.kind == "[":
        return Bag(read_multiset(ts))
    if tok.kind == "ident":
        if tok.text == "inl":
            ts.next()
            return In1(read_point(ts))
        if tok.text == "inr":
            ts.next()
            return In2(read_point(ts))
        ts.next()
        return Atom(tok.text)
    raise ts.error("expected a point")


def read_multiset(ts: TokenStream) -> Multiset:
    ts.expect("[")
    counts: dict[Point, Mult] = {}
    if not ts.at("]"):
        while True:
            p = read_point(ts)
            k: Mult = 1
            if ts.at(":"):
                ts.next()
                tok = ts.peek()
                if tok.kind == "nat":
                    ts.next()
                    k = int(tok.text)
                    if k <= 0:
                        raise ParseError("multiplicity must be positive", tok.line, tok.column)
                elif tok.kind == "ident" and tok.text == "w":
                    ts.next()
                    k = OMEGA
                else:
                    raise ts.error("expected a multiplicity (number or w)")
            counts[p] = madd(counts.get(p, 0), k)
            if ts.at(","):
                ts.next()
                continue
            break
    ts.expect("]")
    return Multiset.from_counts(counts)
