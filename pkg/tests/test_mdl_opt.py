import itertools
import random

import pytest

from skic import lambda_ir as L
from skic import mdl_opt as MD
from skic import metrics as M
from skic import ski_core as SK
from skic.mdl_opt import MdlConfig
from skic.ski_core import ProbeConfig, RuleSet

from conftest import corpus_sources, gen_normalizing_term

THREE_DEF_FIXTURES = [
    "double := \\x. #mul 2 x;\n"
    "shift := \\x. #add (double x) 1;\n"
    "wrap := \\x. shift (double x);\n"
    "wrap 3",
    "inc := \\x. #add x 1;\n"
    "sq := \\x. #mul x x;\n"
    "poly := \\x. #add (sq x) (inc x);\n"
    "poly 2",
    "first := \\x.\\y. x;\n"
    "second := \\x.\\y. y;\n"
    "pick := \\x.\\y. first x (second x y);\n"
    "pick 4 9",
]


# --- semantic distance ------------------------------------------------------------


def test_distance_zero_for_encodings():
    rng = random.Random(71)
    for _ in range(10):
        t = gen_normalizing_term(rng, max_depth=4)
        for rules in MD.ALL_RULE_SETS:
            s = SK.bracket_abstract(t, rules)
            assert MD.semantic_distance(t, s, SK.probe_config_for(t), fuel=50000) == 0.0


def test_distance_positive_identity_vs_const():
    t = L.parse_term(r"\x. x")
    dist = MD.semantic_distance(t, SK._K, ProbeConfig(arity=1))
    assert dist > 0.0


def test_distance_zero_probes_vacuous():
    t = L.parse_term(r"\x. x")
    assert MD.semantic_distance(t, SK._K, ProbeConfig(arity=1, max_tuples=0)) == 0.0


# --- objective ----------------------------------------------------------------------


def test_objective_lambda_one_is_token_count():
    t = L.parse_term(r"\x.\y. #add x y")
    s = SK.bracket_abstract(t, RuleSet.NAIVE)
    cfg = MdlConfig(lambda_weight=1.0)
    assert MD.mdl_objective(s, t, cfg) == M.token_count(SK.gael_print(s), "gael")


def test_objective_lambda_zero_is_distance():
    t = L.parse_term(r"\x. x")
    cfg = MdlConfig(lambda_weight=0.0)
    assert MD.mdl_objective(SK._I, t, cfg) == 0.0
    assert MD.mdl_objective(SK._K, t, cfg) == MD.semantic_distance(
        t, SK._K, cfg.probes_for_arity(1), cfg.fuel
    )


def test_config_validation():
    with pytest.raises(ValueError):
        MdlConfig(lambda_weight=1.5)
    with pytest.raises(ValueError):
        MdlConfig(beam_width=0)
    with pytest.raises(ValueError):
        MdlConfig(rule_sets=())
    with pytest.raises(ValueError):
        MdlConfig(length_unit="furlongs")


def test_objective_byte_unit():
    t = L.parse_term(r"\x.\y. #add x y")
    s = SK.bracket_abstract(t, RuleSet.ETA_OPTIMIZED)  # "#add": 4 bytes, 1 token
    assert MD.mdl_objective(s, t, MdlConfig(lambda_weight=1.0)) == 1
    assert MD.mdl_objective(s, t, MdlConfig(lambda_weight=1.0, length_unit="bytes")) == 4


def test_compress_byte_unit_plan_consistent():
    prog = L.parse_program("add2 := \\x. #add x 2;\nadd2 5")
    cfg = MdlConfig(length_unit="bytes")
    plan = MD.compress_program(prog, cfg)
    text = SK.gael_print_program(plan.encoded_program())
    assert plan.token_length == len(text.encode("utf-8"))
    recomputed = cfg.lambda_weight * plan.token_length + (1 - cfg.lambda_weight) * plan.distance
    assert abs(plan.objective - recomputed) < 1e-12


# --- compress_term -------------------------------------------------------------------


def test_compress_identity():
    plan = MD.compress_term(L.parse_term(r"\x. x"))
    assert plan.encoded == SK._I
    assert plan.token_length == 1
    assert plan.distance == 0.0


def test_compress_add2_fixture():
    prog = L.parse_program("add2 := \\x. #add x 2;\nadd2 5")
    plan = MD.compress_program(prog)
    main = SK.inline_ski_main(plan.encoded_program())
    assert SK.ski_reduce(main) == SK.SInt(7)
    assert plan.distance == 0.0


def test_objective_recomputable_from_fields():
    cfg = MdlConfig()
    for _, source in corpus_sources()[:8]:
        plan = MD.compress_program(L.parse_program(source), cfg)
        recomputed = cfg.lambda_weight * plan.token_length + (1 - cfg.lambda_weight) * plan.distance
        assert abs(plan.objective - recomputed) < 1e-12


def test_trace_objectives_non_increasing():
    for _, source in corpus_sources():
        plan = MD.compress_program(L.parse_program(source))
        objectives = [obj for _, obj in plan.trace]
        assert all(a >= b - 1e-12 for a, b in zip(objectives, objectives[1:]))


def test_dominance_over_single_shot_eta():
    cfg = MdlConfig()
    for _, source in corpus_sources():
        prog = L.parse_program(source)
        plan = MD.compress_program(prog, cfg)
        eta_cfg = MdlConfig(rule_sets=(RuleSet.ETA_OPTIMIZED,), extraction_enabled=False)
        eta_plan = MD.compress_program(prog, eta_cfg)
        assert plan.objective <= eta_plan.objective + 1e-12


# --- beam vs exhaustive oracle ---------------------------------------------------------


def exhaustive_best_objective(prog: L.Program, cfg: MdlConfig) -> float:
    """Independent search: every rule assignment, extraction applied after."""
    items = MD._items_of(prog)
    best = None
    for combo in itertools.product(cfg.rule_sets, repeat=len(items)):
        encoded = MD._encode_program(items, combo)
        if cfg.extraction_enabled:
            encoded = MD.extract_common_subterms(encoded, cfg)
        tokens = M.token_count(SK.gael_print_program(encoded), "gael")
        dist = MD.program_distance(prog, encoded, cfg)
        objective = cfg.lambda_weight * tokens + (1 - cfg.lambda_weight) * dist
        if best is None or objective < best:
            best = objective
    return best


@pytest.mark.parametrize("source", THREE_DEF_FIXTURES)
def test_beam_matches_exhaustive_on_three_def_fixtures(source):
    prog = L.parse_program(source)
    cfg = MdlConfig(beam_width=8)
    plan = MD.compress_program(prog, cfg)
    assert plan.objective == exhaustive_best_objective(prog, cfg)


def test_beam_width_one_matches_exhaustive_on_three_def_fixtures():
    # per-definition token additivity makes greedy optimal as well
    for source in THREE_DEF_FIXTURES:
        prog = L.parse_program(source)
        cfg = MdlConfig(beam_width=1)
        plan = MD.compress_program(prog, cfg)
        assert plan.objective == exhaustive_best_objective(prog, cfg)


def test_lambda_sweep_token_length_non_increasing():
    for _, source in corpus_sources():
        prog = L.parse_program(source)
        lengths = [
            MD.compress_program(prog, MdlConfig(lambda_weight=w)).token_length
            for w in (0.5, 0.9, 0.99)
        ]
        assert lengths[0] >= lengths[1] >= lengths[2]


# --- extraction ---------------------------------------------------------------------


def _ski(src: str) -> SK.SkiTerm:
    return SK.parse_gael_term(src)


def test_extraction_three_occurrences_arithmetic():
    # X = S (K #add) I has 5 gael tokens counting parens; appears 3 times.
    x = _ski("S (K #add) I")
    prog = SK.SkiProgram(
        defs=(("a", SK.SApp(x, SK.SInt(1))), ("b", SK.SApp(x, SK.SInt(2)))),
        main=SK.SApp(x, SK.SInt(3)),
    )
    before = M.token_count(SK.gael_print_program(prog), "gael")
    out = MD.extract_common_subterms(prog, MdlConfig())
    after = M.token_count(SK.gael_print_program(out), "gael")
    assert len(out.defs) == len(prog.defs) + 1
    assert after < before
    # replacement preserved every item's behavior
    before_defs = dict(SK.inline_ski_defs(prog))
    after_defs = dict(SK.inline_ski_defs(out))
    for name in ("a", "b"):
        assert SK.ski_reduce(after_defs[name]) == SK.ski_reduce(before_defs[name])
    assert SK.ski_reduce(SK.inline_ski_main(out)) == SK.ski_reduce(SK.inline_ski_main(prog))


def test_extraction_no_repeats_unchanged():
    prog = SK.SkiProgram(defs=(), main=_ski("S (K #add) I"))
    assert MD.extract_common_subterms(prog, MdlConfig()) == prog


def test_extraction_identity_program_unchanged():
    prog = SK.SkiProgram(defs=(("idf", SK._I),), main=None)
    assert MD.extract_common_subterms(prog, MdlConfig()) == prog


def test_extraction_never_increases_tokens():
    rng = random.Random(83)
    for _ in range(20):
        t = gen_normalizing_term(rng, max_depth=5)
        encoded = SK.bracket_abstract(t, RuleSet.NAIVE)
        prog = SK.SkiProgram(defs=(), main=encoded)
        out = MD.extract_common_subterms(prog, MdlConfig())
        assert M.token_count(SK.gael_print_program(out), "gael") <= M.token_count(
            SK.gael_print_program(prog), "gael"
        )


def test_extraction_respects_flag():
    x = _ski("S (K #add) I")
    prog = SK.SkiProgram(defs=(), main=SK.SApp(SK.SApp(x, x), x))
    cfg = MdlConfig(extraction_enabled=False)
    assert MD.extract_common_subterms(prog, cfg) == prog
