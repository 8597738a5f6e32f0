import random
from fractions import Fraction

import pytest

from helpers import CELL, component, contract, expr, grid, parallel_op, scaled_op, series_op
from sccheck.algebra import (
    ArityMismatch,
    GridTooLarge,
    SubjectTypeMismatch,
    TypeMismatch,
    check_compatibility,
    check_consistency,
    check_refinement,
    compose_contracts,
    interpret_composed_finite,
    verify_min_characterization,
)
from sccheck.engine import Status, check_implication
from sccheck.model import (
    And,
    BoolLit,
    FALSE,
    eval_assertion,
    interpret_finite,
    refines_finite,
)

C1 = contract("C1", CELL, "true", "r = 1")
C2 = contract("C2", CELL, "true", "r = 2")
SYS3 = contract("Sys", CELL, "true", "r = 3")


def compose(op, *parts, names=("c1", "c2", "c3")):
    return compose_contracts(op, list(zip(names, parts)))


# ---------------------------------------------------------------------------
# compose_contracts

def test_series_composition_entails_sum():
    composed = compose(series_op(), C1, C2)
    assert composed.projection == "exact"
    v = check_implication(composed.contract.guarantee, expr("r = 3"))
    assert v.status is Status.PROVED


def test_scaled_composition_reproduces_ambiguity():
    # same type signature as series, different term signature, same r = 3
    composed = compose(scaled_op(), C1, C2)
    assert composed.projection == "exact"
    v = check_implication(composed.contract.guarantee, expr("r = 3"))
    assert v.status is Status.PROVED


def test_parallel_composition_keeps_residue_and_entails_two_thirds():
    composed = compose(parallel_op(), C1, C2)
    assert composed.projection == "quantified-residue"
    interp = interpret_composed_finite(composed, grid(r=[0, Fraction(2, 3), 1, 2, 3]))
    impls = {dict(v)["r"] for v in interp.implementations}
    assert impls == {Fraction(2, 3)}


def test_compose_arity_and_type_errors():
    with pytest.raises(ArityMismatch):
        compose_contracts(series_op(), [("c1", C1)])
    other = contract("K", component("Other", "r:resistance"), "true", "true")
    with pytest.raises(TypeMismatch):
        compose_contracts(series_op(), [("c1", C1), ("c2", other)])


def test_nontrivial_child_assumptions_projected_into_parent_assumption():
    # child c1 assumes r <= 2; glue forces c1.r = r, so the composed
    # assumption must reject parents with r > 2
    ident = series_op()
    bounded = contract("B", CELL, "r <= 2", "r = r")
    ident_op = type(ident)("wrap", (("a", CELL),), CELL, (expr("r = a.r"),))
    composed = compose_contracts(ident_op, [("a", bounded)])
    assert composed.projection == "exact"
    env = check_implication(expr("r <= 2"), composed.contract.assumption)
    assert env.status is Status.PROVED
    too_wide = check_implication(expr("true"), composed.contract.assumption)
    assert too_wide.status is Status.FALSIFIED


# ---------------------------------------------------------------------------
# compatibility / consistency

def test_compatibility_true_assumption():
    assert check_compatibility(contract("K", CELL, "true", "r = 1")).status is Status.PROVED


def test_compatibility_unsatisfiable_band():
    k = contract("K", component("T", "i:current"), "i >= 1 and i <= 0", "true")
    assert check_compatibility(k).status is Status.FALSIFIED


def test_compatibility_band_with_sample():
    k = contract("K", component("T", "i:current"), "i >= 0 and i <= 10", "true")
    v = check_compatibility(k)
    assert v.status is Status.PROVED
    assert v.witness is not None and Fraction(0) <= v.witness["i"] <= Fraction(10)


def test_consistency_true_guarantee():
    assert check_consistency(contract("K", CELL, "true", "true")).status is Status.PROVED


def test_consistency_contradictory_guarantee():
    k = contract("K", CELL, "true", "r = 1 and r = 2")
    assert check_consistency(k).status is Status.FALSIFIED


def test_consistency_vacuous_when_assumption_false():
    k = contract("K", CELL, "false", "false")
    assert check_consistency(k).status is Status.PROVED


# ---------------------------------------------------------------------------
# refinement

def test_series_refines_sum_spec():
    assert check_refinement(compose(series_op(), C1, C2), SYS3).status is Status.PROVED


def test_parallel_falsifies_sum_spec_with_witness():
    composed = compose(parallel_op(), C1, C2)
    v = check_refinement(composed, SYS3)
    assert v.status is Status.FALSIFIED
    assert v.side == "implementation"
    # the witness satisfies the concrete guarantee body and violates the
    # abstract guarantee, with r pinned to the exact parallel value
    assert v.witness["r"] == Fraction(2, 3)
    assert eval_assertion(composed.guarantee_body, v.witness)
    assert not eval_assertion(SYS3.guarantee, v.witness)


def test_every_contract_refines_itself():
    for k in (C1, C2, SYS3, contract("K", CELL, "r >= 0", "r <= 5")):
        assert check_refinement(k, k).status is Status.PROVED


def test_refinement_subject_mismatch():
    other = contract("K", component("Other", "r:resistance"), "true", "true")
    with pytest.raises(SubjectTypeMismatch):
        check_refinement(C1, other)


def test_refinement_environment_side_falsified():
    narrow = contract("N", CELL, "r >= 1", "r = 1")
    wide = contract("W", CELL, "true", "r = 1")
    v = check_refinement(narrow, wide)
    assert v.status is Status.FALSIFIED and v.side == "environment"
    assert check_refinement(wide, narrow).status is Status.PROVED


def test_refinement_transitive_at_proved_level():
    rng = random.Random(5)
    proved = 0
    for _ in range(200):
        bounds = sorted(rng.randint(-4, 4) for _ in range(3))
        contracts = [
            contract(f"K{i}", CELL, "true", f"r >= {-b} implies r <= {b}")
            for i, b in enumerate(bounds)
        ]
        ab = check_refinement(contracts[0], contracts[1])
        bc = check_refinement(contracts[1], contracts[2])
        ac = check_refinement(contracts[0], contracts[2])
        assert ab.status is not Status.UNKNOWN
        if ab.status is Status.PROVED and bc.status is Status.PROVED:
            assert ac.status is Status.PROVED
            proved += 1
    assert proved > 20


# ---------------------------------------------------------------------------
# finite-semantics equivalence on the corpus

def test_corpus_refinements_agree_with_finite_semantics(corpus_universe):
    for ob in corpus_universe.obligations:
        composed = compose_contracts(ob.operator, ob.bindings)
        verdict = check_refinement(composed, ob.abstract)
        assert verdict.status is not Status.UNKNOWN
        hint = dict(ob.grid_hint)
        values = {}
        for f in composed.contract.subject.field_names():
            values[f] = hint[f]
        for bname, child in composed.bindings:
            for f in child.subject.field_names():
                values[f"{bname}.{f}"] = hint[f]
        g = grid(**values)
        finite = refines_finite(
            interpret_composed_finite(composed, g), interpret_finite(ob.abstract, g)
        )
        assert finite == (verdict.status is Status.PROVED), ob.name


# ---------------------------------------------------------------------------
# term-signature discrimination (the core claim)

def test_same_type_signature_different_term_signature_distinguishable():
    one = contract("One", CELL, "true", "r = 1")
    g = grid(r=[0, 1, 2, 3])
    series_interp = interpret_composed_finite(compose(series_op(), one, one), g)
    scaled_interp = interpret_composed_finite(compose(scaled_op(), one, one), g)
    series_r = {dict(v)["r"] for v in series_interp.implementations}
    scaled_r = {dict(v)["r"] for v in scaled_interp.implementations}
    assert series_r == {Fraction(2)}
    assert scaled_r == {Fraction(3)}
    assert series_interp != scaled_interp
    # and yet both compose (true, r=1), (true, r=2) into refinements of r=3
    assert check_refinement(compose(series_op(), C1, C2), SYS3).status is Status.PROVED
    assert check_refinement(compose(scaled_op(), C1, C2), SYS3).status is Status.PROVED


def test_identity_operator_preserves_interpretation():
    ident = type(series_op())("ident", (("a", CELL),), CELL, (expr("r = a.r"),))
    child = contract("K", CELL, "r >= 0", "r <= 2")
    for g in (grid(r=[0, 1, 2, 3]), grid(r=[-1, Fraction(1, 2), 2]), grid(r=[5])):
        composed = compose_contracts(ident, [("a", child)])
        assert interpret_composed_finite(composed, g) == interpret_finite(child, g)


def test_binding_order_sensitivity_matches_glue_symmetry():
    g = grid(r=[0, 1, 2, 3, 6])
    # scaled glue is not symmetric: swapping bindings changes the meaning
    forward = interpret_composed_finite(compose(scaled_op(), C1, C2), g)
    swapped = interpret_composed_finite(compose(scaled_op(), C2, C1), g)
    assert forward != swapped
    # series glue is symmetric: swapping does not
    s_forward = interpret_composed_finite(compose(series_op(), C1, C2), g)
    s_swapped = interpret_composed_finite(compose(series_op(), C2, C1), g)
    assert s_forward == s_swapped


# ---------------------------------------------------------------------------
# the composition characterization

def test_min_characterization_holds_for_series():
    composed = compose(series_op(), C1, C2)
    g = grid(r=[0, 1, 2, 3])
    assert verify_min_characterization(composed, [C1, C2], series_op(), g)


def test_min_characterization_rejects_weakened_guarantee():
    from dataclasses import replace

    composed = compose(series_op(), C1, C2)
    weakened = replace(
        composed, contract=replace(composed.contract, guarantee=BoolLit(True))
    )
    g = grid(r=[0, 1, 2, 3])
    assert not verify_min_characterization(weakened, [C1, C2], series_op(), g)


def test_min_characterization_rejects_strengthened_assumption():
    from dataclasses import replace

    composed = compose(series_op(), C1, C2)
    strengthened = replace(
        composed,
        contract=replace(
            composed.contract, assumption=And(composed.contract.assumption, FALSE)
        ),
    )
    g = grid(r=[0, 1, 2, 3])
    assert not verify_min_characterization(strengthened, [C1, C2], series_op(), g)


def test_min_characterization_grid_guard():
    composed = compose(series_op(), C1, C2)
    big = grid(r=list(range(50)))
    with pytest.raises(GridTooLarge):
        verify_min_characterization(composed, [C1, C2], series_op(), big)


# ---------------------------------------------------------------------------
# projection scope and honest unknowns

def test_exact_projection_mentions_only_parent_fields(corpus_universe):
    from sccheck.model import free_vars

    ob = [o for o in corpus_universe.obligations if o.name == "SysBySeries"][0]
    composed = compose_contracts(ob.operator, ob.bindings)
    assert composed.projection == "exact"
    parent = set(composed.contract.subject.field_names())
    # child voltage/current relations collapse onto parent fields
    assert free_vars(composed.contract.guarantee) <= parent
    assert free_vars(composed.contract.assumption) <= parent


def test_universal_residue_yields_honest_unknown():
    # nonlinear glue plus a nontrivial child assumption puts a universal
    # quantifier in the composed assumption; deciding it is out of scope
    bounded = contract("B", CELL, "r >= 1", "r <= 2")
    composed = compose(parallel_op(), bounded, bounded)
    assert composed.projection == "quantified-residue"
    v = check_compatibility(composed)
    assert v.status is Status.UNKNOWN
    assert "universal" in v.reason
