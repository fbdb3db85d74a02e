"""Token counting, compression rate, and compressor-based density.

Token classes are lexical, deliberately independent of any model
tokenizer: one token per punctuation mark; identifiers, integers,
combinators, and primitives count one each; whitespace and comments
never count.

The information-content proxy is raw DEFLATE (RFC 1951) at maximum
effort with no container framing, measured in output bytes.  The
pinned pseudo-random fixture generator is SplitMix64: each output is
the low 8 bits of successive draws.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

DEFAULT_BOUND_CONSTANT = 16.0


class LexError(Exception):
    def __init__(self, message: str, offset: int):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset


class TokenClass(Enum):
    IDENTIFIER = "identifier"
    INTEGER = "integer"
    COMBINATOR = "combinator"
    PRIMITIVE = "primitive"
    PUNCT = "punct"
    KEYWORD = "keyword"


@dataclass(frozen=True)
class Token:
    cls: TokenClass
    lexeme: str


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[Token, ...]

    @property
    def length(self) -> int:
        return len(self.tokens)

    def lexemes(self) -> list[str]:
        return [t.lexeme for t in self.tokens]

    def rejoin(self) -> str:
        return " ".join(self.lexemes())


_KEYWORDS = ("true", "false")


def tokenize(source: str, dialect: str = "source") -> TokenSeq:
    """Lex `source` under the named dialect ("source" or "gael")."""
    if dialect not in ("source", "gael"):
        raise ValueError(f"unknown dialect {dialect!r}")
    gael = dialect == "gael"
    toks: list[Token] = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c in " \t\r\n":
            i += 1
            continue
        if source.startswith("--", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source.startswith(":=", i):
            toks.append(Token(TokenClass.PUNCT, ":="))
            i += 2
            continue
        if (not gael and c in "\\.();") or (gael and c in "();"):
            toks.append(Token(TokenClass.PUNCT, c))
            i += 1
            continue
        if gael and c in "SKI":
            toks.append(Token(TokenClass.COMBINATOR, c))
            i += 1
            continue
        if c.isdigit() or (c == "-" and i + 1 < n and source[i + 1].isdigit()):
            j = i + 1
            while j < n and source[j].isdigit():
                j += 1
            toks.append(Token(TokenClass.INTEGER, source[i:j]))
            i = j
            continue
        if c == "#":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            if j == i + 1:
                raise LexError("expected primitive name after '#'", i)
            toks.append(Token(TokenClass.PRIMITIVE, source[i:j]))
            i = j
            continue
        if c.islower():
            j = i + 1
            while j < n and (source[j].islower() or source[j].isdigit() or source[j] == "_"):
                j += 1
            word = source[i:j]
            cls = TokenClass.KEYWORD if word in _KEYWORDS else TokenClass.IDENTIFIER
            toks.append(Token(cls, word))
            i = j
            continue
        raise LexError(f"unexpected character {c!r}", i)
    return TokenSeq(tokens=tuple(toks))


def token_count(source: str, dialect: str = "source") -> int:
    return tokenize(source, dialect).length


def compression_rate(s_tokens: int, p_tokens: int) -> Fraction:
    """1 - s/p as an exact rational; negative when the encoding expands."""
    if p_tokens == 0:
        raise ZeroDivisionError("original token count is zero")
    if s_tokens < 0 or p_tokens < 0:
        raise ValueError("token counts must be nonnegative")
    return 1 - Fraction(s_tokens, p_tokens)


def approx_kolmogorov(data: bytes) -> int:
    """Output length of raw DEFLATE at maximum effort, in bytes."""
    if not data:
        raise ValueError("empty input")
    compressor = zlib.compressobj(level=9, method=zlib.DEFLATED, wbits=-15)
    return len(compressor.compress(data) + compressor.flush())


@dataclass(frozen=True)
class DensityReport:
    byte_length: int
    k_approx: int
    rho: Fraction
    bound_slack: float
    c_constant: float

    def as_dict(self) -> dict:
        return {
            "byte_length": self.byte_length,
            "k_approx_bytes": self.k_approx,
            "rho": float(self.rho),
            "bound_slack_bytes": self.bound_slack,
            "c_constant": self.c_constant,
        }


def symbolic_density(data: bytes, c: float = DEFAULT_BOUND_CONSTANT) -> DensityReport:
    """Density rho = compressed bytes / raw bytes, with bound diagnostic.

    bound_slack = k - (|data| - c*log2|data|).  Nonnegative slack means
    the compressor respected the counting bound on this input; the
    check is meaningful only for near-incompressible data.  rho may
    exceed 1 on incompressible inputs (stream overhead); it is reported
    as-is, never clamped.
    """
    if not data:
        raise ValueError("empty input")
    if c < 0:
        raise ValueError("bound constant must be nonnegative")
    n = len(data)
    k = approx_kolmogorov(data)
    slack = k - (n - c * math.log2(n))
    return DensityReport(
        byte_length=n,
        k_approx=k,
        rho=Fraction(k, n),
        bound_slack=slack,
        c_constant=c,
    )


# --- pinned fixtures -----------------------------------------------------

_MASK64 = (1 << 64) - 1


def splitmix64_stream(seed: int):
    """SplitMix64: the pinned fixture PRNG. Yields 64-bit outputs."""
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4B7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def prng_bytes(seed: int, count: int) -> bytes:
    """`count` bytes: the low 8 bits of successive SplitMix64 outputs."""
    gen = splitmix64_stream(seed)
    return bytes(next(gen) & 0xFF for _ in range(count))


def repeated_bytes(byte: int = 0x61, count: int = 4096) -> bytes:
    return bytes([byte]) * count
