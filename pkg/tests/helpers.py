"""Shared test construction helpers."""

from __future__ import annotations

from fractions import Fraction

from sccheck.model import ComponentType, Contract, CompositionOperator, FieldDecl, FiniteGrid
from sccheck.parser import parse_expression

expr = parse_expression


def component(name: str, *fields: str, supertype: ComponentType | None = None) -> ComponentType:
    """component("Cell", "r:resistance", ...)"""
    parsed = []
    for f in fields:
        fname, quantity = f.split(":")
        parsed.append(FieldDecl(fname.strip(), quantity.strip()))
    return ComponentType(name, tuple(parsed), supertype)


def contract(name: str, subject: ComponentType, assume: str, guarantee: str) -> Contract:
    return Contract(name, subject, expr(assume), expr(guarantee))


def operator(
    name: str,
    params: list[tuple[str, ComponentType]],
    result: ComponentType,
    glue: list[str],
) -> CompositionOperator:
    return CompositionOperator(
        name, tuple(params), result, tuple(expr(g) for g in glue)
    )


def grid(**values) -> FiniteGrid:
    return FiniteGrid.of({k: tuple(Fraction(x) for x in v) for k, v in values.items()})


# a one-field component and the three operators used throughout
CELL = component("Cell", "r:resistance")


def series_op() -> CompositionOperator:
    return operator("series", [("a", CELL), ("b", CELL)], CELL, ["r = a.r + b.r"])


def scaled_op() -> CompositionOperator:
    return operator("scaled", [("a", CELL), ("b", CELL)], CELL, ["r = 3 * a.r + 0 * b.r"])


def parallel_op() -> CompositionOperator:
    return operator("parallel", [("a", CELL), ("b", CELL)], CELL, ["r = 1 / (1 / a.r + 1 / b.r)"])
