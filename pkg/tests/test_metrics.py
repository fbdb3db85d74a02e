from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from skic import metrics as M
from skic.metrics import TokenClass

# Golden values from the pinned reference compressor (raw DEFLATE,
# level 9) and the pinned SplitMix64 fixture stream.
GOLDEN_REPEATED_4096 = 22
GOLDEN_PRNG_4096 = 4101
GOLDEN_ONE_BYTE = 3
GOLDEN_PRNG_FIRST_8 = [174, 201, 153, 177, 95, 56, 41, 120]
GOLDEN_SPLITMIX_FIRST = 6750856300299513006


# --- tokenizer -----------------------------------------------------------------


def test_tokenize_source_example():
    seq = M.tokenize(r"\x. #add x 1")
    assert seq.lexemes() == ["\\", "x", ".", "#add", "x", "1"]
    assert seq.length == 6


def test_tokenize_gael_example():
    assert M.tokenize("S (K I)", "gael").length == 5


def test_tokenize_empty():
    assert M.tokenize("").length == 0


def test_tokenize_classes():
    seq = M.tokenize("f := #add 1 true; -- note\nf 2", "source")
    classes = [t.cls for t in seq.tokens]
    assert classes == [
        TokenClass.IDENTIFIER,
        TokenClass.PUNCT,
        TokenClass.PRIMITIVE,
        TokenClass.INTEGER,
        TokenClass.KEYWORD,
        TokenClass.PUNCT,
        TokenClass.IDENTIFIER,
        TokenClass.INTEGER,
    ]


def test_tokenize_combinators_only_in_gael():
    assert M.tokenize("S K I", "gael").tokens[0].cls == TokenClass.COMBINATOR
    with pytest.raises(M.LexError):
        M.tokenize("S K I", "source")


def test_tokenize_negative_integer_one_token():
    seq = M.tokenize("#sub 5 -2")
    assert seq.lexemes() == ["#sub", "5", "-2"]


def test_lex_error_offset():
    with pytest.raises(M.LexError) as exc:
        M.tokenize("ab ?")
    assert exc.value.offset == 3


def test_tokenizer_idempotent_on_rejoin():
    for dialect, text in [
        ("source", "f := \\x. #add x -2;\nf true"),
        ("gael", "q0 := S (K #addZ) I;\nq0 3 false"),
    ]:
        seq = M.tokenize(text, dialect)
        again = M.tokenize(seq.rejoin(), dialect)
        assert [t.cls for t in again.tokens] == [t.cls for t in seq.tokens]
        assert again.lexemes() == seq.lexemes()


def test_tokenizer_deterministic():
    text = r"\x. #mul x 3"
    assert M.tokenize(text) == M.tokenize(text)


# --- compression rate -------------------------------------------------------------


def test_cr_paper_value_exact():
    cr = M.compression_rate(217, 1000)
    assert cr == Fraction(783, 1000)
    assert float(cr) == 0.783


def test_cr_identity_and_expansion():
    assert M.compression_rate(7, 7) == 0
    assert M.compression_rate(14, 7) == -1


def test_cr_zero_division():
    with pytest.raises(ZeroDivisionError):
        M.compression_rate(1, 0)


@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=1, max_value=10**6))
def test_cr_algebra_exact(a, b):
    assert M.compression_rate(a, b) == 1 - Fraction(a, b)


# --- Kolmogorov proxy --------------------------------------------------------------


def test_repeated_fixture_golden():
    k = M.approx_kolmogorov(M.repeated_bytes())
    assert k == GOLDEN_REPEATED_4096
    assert k <= 64


def test_prng_fixture_golden():
    k = M.approx_kolmogorov(M.prng_bytes(42, 4096))
    assert k == GOLDEN_PRNG_4096
    assert k >= 3700


def test_one_byte_golden():
    assert M.approx_kolmogorov(b"a") == GOLDEN_ONE_BYTE


def test_empty_input_error():
    with pytest.raises(ValueError):
        M.approx_kolmogorov(b"")
    with pytest.raises(ValueError):
        M.symbolic_density(b"")


def test_splitmix_stream_pinned():
    gen = M.splitmix64_stream(42)
    assert next(gen) == GOLDEN_SPLITMIX_FIRST
    assert list(M.prng_bytes(42, 8)) == GOLDEN_PRNG_FIRST_8


# --- density -------------------------------------------------------------------------


def test_density_repeated():
    rep = M.symbolic_density(M.repeated_bytes())
    assert rep.rho <= Fraction(5, 100)
    assert rep.byte_length == 4096
    assert rep.rho * rep.byte_length == rep.k_approx  # exact identity


def test_density_prng_bound():
    rep = M.symbolic_density(M.prng_bytes(42, 4096))
    assert rep.rho >= Fraction(9, 10)
    assert rep.bound_slack >= 0.0
    assert rep.c_constant == 16.0


def test_density_slack_formula():
    import math

    data = M.prng_bytes(7, 1024)
    rep = M.symbolic_density(data, c=4.0)
    expected = rep.k_approx - (1024 - 4.0 * math.log2(1024))
    assert rep.bound_slack == expected


def test_density_monotone_under_self_concat():
    for pattern in [M.repeated_bytes(count=2048), b"abcabc" * 300, bytes(range(64)) * 16]:
        one = M.symbolic_density(pattern)
        two = M.symbolic_density(pattern + pattern)
        assert float(two.rho) <= float(one.rho) + 0.02


def test_density_allows_rho_above_one():
    rep = M.symbolic_density(M.prng_bytes(42, 4096))
    assert rep.rho > 1  # header overhead on incompressible input; not clamped
