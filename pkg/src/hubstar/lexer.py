"""Tokenizer for the model language.

The language is line-oriented: a directive is one physical line of tokens,
blocks open with a trailing "{" and close with a lone "}". "#" starts a
comment running to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError

SYMBOLS = "{}(),=."

IDENT = "ident"
INT = "int"
STRING = "string"
SYMBOL = "symbol"
NEWLINE = "newline"
EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int

    @property
    def value(self):
        if self.kind == INT:
            return int(self.text)
        return self.text


def tokenize(source: str) -> list[Token]:
    """Produce the token list, collapsing blank lines to single newlines."""
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(source)

    def emit(kind: str, text: str, ln: int, cl: int):
        if kind == NEWLINE and (not tokens or tokens[-1].kind == NEWLINE):
            return
        tokens.append(Token(kind, text, ln, cl))

    while i < n:
        ch = source[i]
        if ch == "\n":
            emit(NEWLINE, "\n", line, col)
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
                col += 1
            continue
        if ch in SYMBOLS:
            emit(SYMBOL, ch, line, col)
            i += 1
            col += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            buf = []
            while True:
                if i >= n or source[i] == "\n":
                    raise ParseError("unterminated string literal", start_line, start_col)
                c = source[i]
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n:
                        raise ParseError("dangling escape", line, col)
                    esc = source[i + 1]
                    if esc == '"':
                        buf.append('"')
                    elif esc == "\\":
                        buf.append("\\")
                    elif esc == "n":
                        buf.append("\n")
                    else:
                        raise ParseError(f"unknown escape \\{esc}", line, col)
                    i += 2
                    col += 2
                    continue
                buf.append(c)
                i += 1
                col += 1
            emit(STRING, "".join(buf), start_line, start_col)
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and source[i + 1].isdigit()):
            start_col = col
            j = i + 1
            while j < n and source[j].isdigit():
                j += 1
            emit(INT, source[i:j], line, start_col)
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            start_col = col
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            if word != word.lower():
                raise ParseError(f"identifiers are lowercase: {word!r}", line, start_col)
            emit(IDENT, word, line, start_col)
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)

    emit(NEWLINE, "\n", line, col)
    tokens.append(Token(EOF, "", line, col))
    return tokens


class TokenStream:
    """Cursor over a token list with one-token lookahead helpers."""

    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    def peek(self) -> Token:
        return self._tokens[self._pos]

    def next(self) -> Token:
        tok = self._tokens[self._pos]
        if tok.kind != EOF:
            self._pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(kind, text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.text!r}", tok.line, tok.column)
        return self.next()

    def skip_newlines(self):
        while self.at(NEWLINE):
            self.next()

    def end_line(self):
        tok = self.peek()
        if tok.kind == EOF:
            return
        if tok.kind != NEWLINE:
            raise ParseError(f"unexpected trailing {tok.text!r}", tok.line, tok.column)
        self.next()
