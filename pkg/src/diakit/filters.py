"""Discovery filter expressions: a conjunction of per-attribute predicates.

Cross-attribute combination is conjunction only; logical operators may only
nest *within* one attribute's predicate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class Eq:
    value: Any


@dataclass(frozen=True)
class Ne:
    value: Any


@dataclass(frozen=True)
class Lt:
    value: Any


@dataclass(frozen=True)
class Le:
    value: Any


@dataclass(frozen=True)
class Gt:
    value: Any


@dataclass(frozen=True)
class Ge:
    value: Any


@dataclass(frozen=True)
class Or:
    left: "Predicate"
    right: "Predicate"


@dataclass(frozen=True)
class And:
    left: "Predicate"
    right: "Predicate"


@dataclass(frozen=True)
class Not:
    inner: "Predicate"


Predicate = Eq | Ne | Lt | Le | Gt | Ge | Or | And | Not

ORDERING_OPS = (Lt, Le, Gt, Ge)


class FilterError(ValueError):
    pass


@dataclass(frozen=True)
class FilterExpr:
    """Conjunction of (attribute, predicate) clauses; each attribute at most once."""

    clauses: tuple[tuple[str, Predicate], ...] = ()

    def __post_init__(self) -> None:
        names = [a for a, _ in self.clauses]
        if len(names) != len(set(names)):
            raise FilterError("an attribute may appear in at most one clause")

    @staticmethod
    def empty() -> FilterExpr:
        return FilterExpr(())


EMPTY_FILTER = FilterExpr.empty()


def leaf_values(pred: Predicate):
    """Yield (leaf predicate, operand) pairs of a predicate tree."""
    if isinstance(pred, (Or, And)):
        yield from leaf_values(pred.left)
        yield from leaf_values(pred.right)
    elif isinstance(pred, Not):
        yield from leaf_values(pred.inner)
    else:
        yield pred, pred.value


def uses_ordering(pred: Predicate) -> bool:
    return any(isinstance(leaf, ORDERING_OPS) for leaf, _ in leaf_values(pred))


def evaluate(pred: Predicate, actual: Any) -> bool:
    """Evaluate a predicate against an attribute value; operands must already be typed."""
    if isinstance(pred, Eq):
        return actual == pred.value
    if isinstance(pred, Ne):
        return actual != pred.value
    if isinstance(pred, Lt):
        return actual < pred.value
    if isinstance(pred, Le):
        return actual <= pred.value
    if isinstance(pred, Gt):
        return actual > pred.value
    if isinstance(pred, Ge):
        return actual >= pred.value
    if isinstance(pred, Or):
        return evaluate(pred.left, actual) or evaluate(pred.right, actual)
    if isinstance(pred, And):
        return evaluate(pred.left, actual) and evaluate(pred.right, actual)
    if isinstance(pred, Not):
        return not evaluate(pred.inner, actual)
    raise FilterError(f"not a predicate: {pred!r}")


def map_operands(pred: Predicate, fn) -> Predicate:
    """Rebuild a predicate with every leaf operand passed through `fn`."""
    if isinstance(pred, Or):
        return Or(map_operands(pred.left, fn), map_operands(pred.right, fn))
    if isinstance(pred, And):
        return And(map_operands(pred.left, fn), map_operands(pred.right, fn))
    if isinstance(pred, Not):
        return Not(map_operands(pred.inner, fn))
    return type(pred)(fn(pred.value))
