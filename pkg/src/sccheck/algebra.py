"""The contract calculus: composition through a resolved operator's glue,
compatibility, consistency, refinement, and the desk-scale oracle for the
composition characterization.

Composition builds, over parent fields and binding-qualified child fields,

    guarantee body  =  glue  and  (A_k -> G_k for every child k)
    assumption body =  guarantee body  and  not (A_k for every child k)

and then projects the children out: the composed guarantee is the
existential projection of the guarantee body, the composed assumption the
negated existential projection of the assumption body. Projections are
exact (Fourier-Motzkin) when the bodies are linear; otherwise the
quantified residue is retained and downstream checks run the
interval/sampling ladder on it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping, Sequence, Union

from .engine import (
    DnfCapExceeded,
    EngineOptions,
    NonlinearDisjunct,
    Status,
    Verdict,
    check_implication,
    decide_satisfiability,
    fm_project,
    normalize,
    system_to_assertion,
)
from .formatter import format_expr
from .model import (
    Assertion,
    BoolLit,
    CompositionOperator,
    Contract,
    Exists,
    FiniteGrid,
    GridIncomplete,
    Implies,
    Interpretation,
    Not,
    UndefinedTerm,
    conj,
    disj,
    eval_assertion,
    freeze_valuation,
    qualify,
    rename_vars,
    simplify_bools,
    FALSE,
    TRUE,
)


class AlgebraError(Exception):
    pass


class ArityMismatch(AlgebraError):
    pass


class TypeMismatch(AlgebraError):
    pass


class SubjectTypeMismatch(AlgebraError):
    pass


class GridTooLarge(AlgebraError):
    pass


@dataclass(frozen=True)
class ComposedContract:
    """A composed contract plus the provenance needed to re-run the
    composition deterministically and to interpret it on finite grids."""

    contract: Contract
    operator: CompositionOperator
    bindings: tuple[tuple[str, Contract], ...]
    glue: Assertion
    child_vars: tuple[str, ...]
    projection: str  # "exact" | "quantified-residue"
    guarantee_body: Assertion
    assumption_body: Assertion | None  # None when all child assumptions are true


def _as_contract(c: Union[Contract, ComposedContract]) -> Contract:
    return c.contract if isinstance(c, ComposedContract) else c


def _try_project_exists(
    body: Assertion, elim_vars: Sequence[str], cap: int
) -> Assertion | None:
    """Exact existential projection when the body is linear, else None."""
    try:
        dnf = normalize(body, cap)
    except DnfCapExceeded:
        return None
    parts: list[Assertion] = []
    for d in dnf.disjuncts:
        if isinstance(d, NonlinearDisjunct):
            return None
        projected = fm_project(d, list(elim_vars))
        if projected.trivially_unsat():
            continue
        parts.append(system_to_assertion(projected))
    return disj(parts) if parts else FALSE


def compose_contracts(
    op: CompositionOperator,
    bindings: Sequence[tuple[str, Contract]],
    opts: EngineOptions = EngineOptions(),
) -> ComposedContract:
    """Compose child contracts through an operator's glue equations.

    Child contracts are saturated internally; binding names qualify their
    fields, and the operator's parameter namespaces are renamed to the
    binding names positionally.
    """
    if len(bindings) != len(op.parameters):
        raise ArityMismatch(
            f"operator {op.name} takes {len(op.parameters)} contracts, got {len(bindings)}"
        )
    names = [b for b, _ in bindings]
    if len(set(names)) != len(names):
        raise ArityMismatch(f"duplicate binding names in {op.name} composition")
    for (bname, contract), (pname, ptype) in zip(bindings, op.parameters):
        if not contract.subject.is_subtype_of(ptype):
            raise TypeMismatch(
                f"binding {bname}: contract {contract.name} has subject "
                f"{contract.subject.name}, operator {op.name} expects {ptype.name}"
            )

    rename: dict[str, str] = {}
    for (bname, _), (pname, ptype) in zip(bindings, op.parameters):
        if bname != pname:
            for f in ptype.fields:
                rename[f"{pname}.{f.name}"] = f"{bname}.{f.name}"
    glue_eqs = [rename_vars(eq, rename) if rename else eq for eq in op.glue]
    phi = conj(glue_eqs)

    children_sat: list[Assertion] = []
    child_assumes: list[Assertion] = []
    child_vars: list[str] = []
    for bname, contract in bindings:
        children_sat.append(qualify(Implies(contract.assumption, contract.guarantee), bname))
        child_assumes.append(qualify(contract.assumption, bname))
        child_vars.extend(f"{bname}.{f}" for f in contract.subject.field_names())

    guarantee_body = simplify_bools(conj([phi] + children_sat))
    g_proj = _try_project_exists(guarantee_body, child_vars, opts.dnf_cap)
    if g_proj is not None:
        guarantee = g_proj
        g_exact = True
    else:
        guarantee = Exists(tuple(child_vars), guarantee_body)
        g_exact = False

    conj_a = simplify_bools(conj(child_assumes))
    assumption_body: Assertion | None
    if isinstance(conj_a, BoolLit) and conj_a.value:
        assumption = TRUE
        assumption_body = None
        a_exact = True
    else:
        assumption_body = simplify_bools(conj([phi] + children_sat + [Not(conj_a)]))
        a_proj = _try_project_exists(assumption_body, child_vars, opts.dnf_cap)
        if a_proj is not None:
            assumption = simplify_bools(Not(a_proj))
            a_exact = True
        else:
            assumption = Not(Exists(tuple(child_vars), assumption_body))
            a_exact = False

    name = f"{op.name}({', '.join(f'{c.name} as {b}' for b, c in bindings)})"
    composed = Contract(name, op.result, assumption, guarantee)
    return ComposedContract(
        contract=composed,
        operator=op,
        bindings=tuple(bindings),
        glue=phi,
        child_vars=tuple(child_vars),
        projection="exact" if g_exact and a_exact else "quantified-residue",
        guarantee_body=guarantee_body,
        assumption_body=assumption_body,
    )


# ---------------------------------------------------------------------------
# the three verification checks

def check_compatibility(
    c: Union[Contract, ComposedContract], opts: EngineOptions = EngineOptions()
) -> Verdict:
    """Proved iff the assumption is satisfiable (some environment exists)."""
    contract = _as_contract(c)
    result = decide_satisfiability(contract.assumption, opts)
    if result.status == "sat":
        return Verdict(Status.PROVED, witness=result.witness)
    if result.status == "unsat":
        return Verdict(
            Status.FALSIFIED,
            reason=f"incompatible: assumption unsatisfiable: {format_expr(contract.assumption)}",
        )
    return Verdict(Status.UNKNOWN, reason=result.reason)


def check_consistency(
    c: Union[Contract, ComposedContract], opts: EngineOptions = EngineOptions()
) -> Verdict:
    """Proved iff some implementation satisfies assumption -> guarantee."""
    contract = _as_contract(c)
    formula = Implies(contract.assumption, contract.guarantee)
    result = decide_satisfiability(formula, opts)
    if result.status == "sat":
        return Verdict(Status.PROVED, witness=result.witness)
    if result.status == "unsat":
        return Verdict(
            Status.FALSIFIED,
            reason=f"inconsistent: no implementation: {format_expr(contract.guarantee)}",
        )
    return Verdict(Status.UNKNOWN, reason=result.reason)


def check_refinement(
    concrete: Union[Contract, ComposedContract],
    abstract: Contract,
    opts: EngineOptions = EngineOptions(),
) -> Verdict:
    """Refinement as two implications: the abstract assumption must imply
    the concrete one (environments), and the concrete saturated guarantee
    must imply the abstract one (implementations)."""
    cc = _as_contract(concrete)
    if cc.subject.name != abstract.subject.name:
        raise SubjectTypeMismatch(
            f"{cc.subject.name} vs {abstract.subject.name}"
        )
    env = check_implication(abstract.assumption, cc.assumption, opts)
    if env.is_falsified():
        return replace(env, side="environment")
    impl = check_implication(
        Implies(cc.assumption, cc.guarantee),
        Implies(abstract.assumption, abstract.guarantee),
        opts,
    )
    if impl.is_falsified():
        return replace(impl, side="implementation")
    if env.is_proved() and impl.is_proved():
        return Verdict(Status.PROVED)
    reasons = [v.reason for v in (env, impl) if v.reason]
    return Verdict(Status.UNKNOWN, reason="; ".join(reasons) or "undecided")


# ---------------------------------------------------------------------------
# finite semantics of composed contracts

def _grid_values(grid: FiniteGrid, name: str) -> tuple[Fraction, ...]:
    vals = grid.values_for(name)
    if vals is None and "." in name:
        vals = grid.values_for(name.split(".", 1)[1])
    if vals is None:
        raise GridIncomplete([name])
    return vals


def interpret_composed_finite(
    composed: ComposedContract, grid: FiniteGrid
) -> Interpretation:
    """Finite interpretation of a composed contract; quantifiers in the
    residue range over the grid, looking qualified child variables up by
    their bare field name when no qualified entry exists."""
    fields = composed.contract.subject.field_names()
    pgrid = grid.restrict(fields)

    def lookup(name: str) -> tuple[Fraction, ...]:
        return _grid_values(grid, name)

    envs = set()
    impls = set()
    assumption = composed.contract.assumption
    implements = Implies(assumption, composed.contract.guarantee)
    for env in pgrid.valuations():
        frozen = freeze_valuation(env)
        try:
            if eval_assertion(assumption, env, lookup):
                envs.add(frozen)
        except UndefinedTerm:
            pass
        try:
            if eval_assertion(implements, env, lookup):
                impls.add(frozen)
        except UndefinedTerm:
            pass
    return Interpretation(pgrid, frozenset(envs), frozenset(impls))


# ---------------------------------------------------------------------------
# the composition characterization, checked by enumeration

def verify_min_characterization(
    composed: ComposedContract,
    parts: Sequence[Contract],
    op: CompositionOperator,
    grid: FiniteGrid,
) -> bool:
    """Validate the composed contract against the defining property of
    composition on a finite grid.

    (a) For every parent environment of the composed contract and every
        tuple of child implementations: each child valuation consistent
        with the assembly under the glue lies in that child's
        environments, and every parent valuation consistent with the full
        child tuple lies in the composed implementations.
    (b) Minimality: when the parent valuation space has at most 8 points,
        no strictly refinement-smaller (environments, implementations)
        pair also satisfies (a); larger spaces check only (a).
    """
    if len(parts) != len(op.parameters) or len(parts) != len(composed.bindings):
        raise ArityMismatch("parts must match the operator's parameters")

    parent_fields = op.result.field_names()
    pgrid = grid.restrict(parent_fields)
    parent_vals = list(pgrid.valuations())
    binding_names = [b for b, _ in composed.bindings]

    child_grids: list[list[dict[str, Fraction]]] = []
    total = pgrid.point_count()
    for bname, part in zip(binding_names, parts):
        fields = part.subject.field_names()
        values = {f: _grid_values(grid, f"{bname}.{f}") for f in fields}
        space = list(FiniteGrid.of(values).valuations())
        child_grids.append(space)
        total *= len(space)
    if total > 2**16:
        raise GridTooLarge(f"{total} assemblies exceed the 2^16 guard")

    # child environments and implementations, by exact evaluation
    child_envs: list[set[tuple]] = []
    child_impls: list[list[dict[str, Fraction]]] = []
    for part, space in zip(parts, child_grids):
        sat = Implies(part.assumption, part.guarantee)
        envs = set()
        impls = []
        for v in space:
            try:
                if eval_assertion(part.assumption, v):
                    envs.add(freeze_valuation(v))
            except UndefinedTerm:
                pass
            try:
                if eval_assertion(sat, v):
                    impls.append(v)
            except UndefinedTerm:
                pass
        child_envs.append(envs)
        child_impls.append(impls)

    glue = composed.glue

    def phi_holds(parent_env: Mapping[str, Fraction], children: Sequence[Mapping[str, Fraction]]) -> bool:
        merged = dict(parent_env)
        for bname, val in zip(binding_names, children):
            for f, x in val.items():
                merged[f"{bname}.{f}"] = x
        try:
            return eval_assertion(glue, merged)
        except UndefinedTerm:
            return False

    tuples = list(itertools.product(*child_impls))

    # ok_env[i]: with parent valuation i as environment, every child
    # valuation consistent with each assembly lies in that child's envs
    ok_mask = 0
    for i, pv in enumerate(parent_vals):
        ok = True
        for t in tuples:
            for k, space in enumerate(child_grids):
                for v_k in space:
                    assembled = list(t)
                    assembled[k] = v_k
                    if phi_holds(pv, assembled) and freeze_valuation(v_k) not in child_envs[k]:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            ok_mask |= 1 << i

    # union of parent projections of all child implementation tuples
    u_mask = 0
    for t in tuples:
        for i, pv in enumerate(parent_vals):
            if phi_holds(pv, t):
                u_mask |= 1 << i

    interp = interpret_composed_finite(composed, grid)
    index = {freeze_valuation(pv): i for i, pv in enumerate(parent_vals)}
    e_mask = 0
    for v in interp.environments:
        e_mask |= 1 << index[v]
    m_mask = 0
    for v in interp.implementations:
        m_mask |= 1 << index[v]

    def clause_a(e: int, m: int) -> bool:
        if e & ~ok_mask:
            return False
        if e != 0 and (u_mask & ~m):
            return False
        return True

    if not clause_a(e_mask, m_mask):
        return False

    n = len(parent_vals)
    if n <= 8:
        for e in range(1 << n):
            for m in range(1 << n):
                if (e, m) == (e_mask, m_mask):
                    continue
                # strictly refinement-smaller: at least as many environments,
                # at most as many implementations
                if (e & e_mask) != e_mask or (m & m_mask) != m:
                    continue
                if clause_a(e, m):
                    return False
    return True
