"""Tokenizer for the .pmod model language.

Whitespace-insensitive; `#` starts a comment running to end of line.
Comments are attached to the most recent token on the same line so the
parser can turn them into node notes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import Diagnostic
from .ir import UNITS

KEYWORDS = frozenset({
    "model", "topology", "costs", "params", "role", "on", "rank", "ranks",
    "action", "subactivity", "send", "recv", "wait", "collective", "loop",
    "taskpool", "workerloop", "to", "from", "size", "cost", "root", "count",
    "policy", "payload", "result", "blocking", "nonblocking", "as", "me",
    "true", "false", "static", "dynamic",
})

PUNCT = {
    "{": "LBRACE", "}": "RBRACE", "(": "LPAREN", ")": "RPAREN",
    "[": "LBRACKET", "]": "RBRACKET",
    "=": "EQUALS", ",": "COMMA", "+": "PLUS", "-": "MINUS",
    "*": "STAR", "/": "SLASH", ".": "DOT",
}


@dataclass
class Token:
    type: str          # KEYWORD | IDENT | NUMBER | STRING | punct name | EOF
    text: str
    line: int
    column: int
    value: float | None = None   # normalized numeric value (unit applied)
    comment: str | None = field(default=None, compare=False)


class LexError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


def tokenize(source: str) -> list[Token]:
    """Tokenize source text; raises LexError with a positioned diagnostic."""
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(source)

    def fail(message: str, at_line: int, at_col: int) -> None:
        raise LexError(Diagnostic("error", message, at_line, at_col))

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            start = i
            while i < n and source[i] != "\n":
                i += 1
            text = source[start + 1:i].strip()
            # attach to the last token on this line, if any
            if text and tokens and tokens[-1].line == line:
                prev = tokens[-1]
                prev.comment = text if prev.comment is None else f"{prev.comment} {text}"
            col += i - start
            continue

        start_line, start_col = line, col

        if ch == "." and i + 1 < n and source[i + 1] == ".":
            tokens.append(Token("DOTDOT", "..", start_line, start_col))
            i += 2
            col += 2
            continue

        if ch in PUNCT:
            tokens.append(Token(PUNCT[ch], ch, start_line, start_col))
            i += 1
            col += 1
            continue

        if ch == '"':
            i += 1
            col += 1
            chars: list[str] = []
            while True:
                if i >= n or source[i] == "\n":
                    fail("unterminated string literal", start_line, start_col)
                c = source[i]
                if c == "\\":
                    if i + 1 >= n or source[i + 1] not in '"\\':
                        fail("bad escape in string literal", line, col)
                    chars.append(source[i + 1])
                    i += 2
                    col += 2
                    continue
                if c == '"':
                    i += 1
                    col += 1
                    break
                chars.append(c)
                i += 1
                col += 1
            tokens.append(Token("STRING", "".join(chars), start_line, start_col))
            continue

        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            # fractional part, but not the start of a `..` range
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            # exponent
            if (j < n and source[j] in "eE" and j + 1 < n
                    and (source[j + 1].isdigit()
                         or (source[j + 1] in "+-" and j + 2 < n and source[j + 2].isdigit()))):
                j += 1
                if source[j] in "+-":
                    j += 1
                while j < n and source[j].isdigit():
                    j += 1
            number_text = source[i:j]
            value = float(number_text)
            # attached unit suffix
            k = j
            while k < n and source[k].isalpha():
                k += 1
            unit = source[j:k]
            if unit:
                if unit not in UNITS:
                    fail(f"unknown unit '{unit}' (expected one of {', '.join(UNITS)})",
                         start_line, start_col + (j - i))
                value *= UNITS[unit]
            tokens.append(Token("NUMBER", source[i:k], start_line, start_col, value=value))
            col += k - i
            i = k
            continue

        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = "KEYWORD" if word in KEYWORDS else "IDENT"
            tokens.append(Token(kind, word, start_line, start_col))
            col += j - i
            i = j
            continue

        fail(f"unexpected character {ch!r}", start_line, start_col)

    tokens.append(Token("EOF", "", line, col))
    return tokens
