"""Runtime values and their validation against declared types.

Builtins map onto Python natives (str/int/float/bool); enumeration and
structure values are small tagged wrappers so that two structures with the
same shape but different declared types never compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

from .model import CheckedSpec, EnumDecl, StructDecl, TypeRef


class ValueTypeError(TypeError):
    """A value does not conform to its declared type."""


@dataclass(frozen=True)
class EnumValue:
    type_name: str
    value: str

    def __str__(self) -> str:
        return f"{self.type_name}.{self.value}"


class StructValue:
    """An instance of a declared structure; equality is by type and fields."""

    __slots__ = ("type_name", "fields")

    def __init__(self, type_name: str, fields: Mapping[str, Any]):
        self.type_name = type_name
        self.fields = dict(fields)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, StructValue)
            and self.type_name == other.type_name
            and self.fields == other.fields
        )

    def __hash__(self) -> int:
        return hash((self.type_name, tuple(sorted(self.fields.items(), key=lambda kv: kv[0]))))

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self.fields.items())
        return f"{self.type_name}({inner})"


def validate_value(value: Any, tref: TypeRef, spec: CheckedSpec, where: str = "value") -> None:
    """Raise ValueTypeError unless `value` conforms to `tref`."""
    if tref.kind == "builtin":
        expected = {
            "String": str,
            "Integer": int,
            "Float": (int, float),
            "Boolean": bool,
        }[tref.name]
        # bool is an int subclass; keep Integer and Boolean disjoint.
        if isinstance(value, bool) and tref.name != "Boolean":
            raise ValueTypeError(f"{where}: expected {tref.name}, got Boolean")
        if not isinstance(value, expected):
            raise ValueTypeError(f"{where}: expected {tref.name}, got {type(value).__name__}")
        return
    if tref.kind == "array":
        if not isinstance(value, (list, tuple)):
            raise ValueTypeError(f"{where}: expected {tref}, got {type(value).__name__}")
        for i, item in enumerate(value):
            validate_value(item, tref.element, spec, f"{where}[{i}]")
        return
    decl = spec.datatypes.get(tref.name)
    if decl is None:
        raise ValueTypeError(f"{where}: unknown type {tref.name!r}")
    if isinstance(decl, EnumDecl):
        if not isinstance(value, EnumValue) or value.type_name != decl.name:
            raise ValueTypeError(f"{where}: expected {decl.name} enumeration value")
        if value.value not in decl.values:
            raise ValueTypeError(f"{where}: {value.value!r} is not a {decl.name} value")
        return
    assert isinstance(decl, StructDecl)
    if not isinstance(value, StructValue) or value.type_name != decl.name:
        raise ValueTypeError(f"{where}: expected {decl.name} structure value")
    declared = {f.name for f in decl.fields}
    got = set(value.fields)
    if declared != got:
        missing = sorted(declared - got)
        extra = sorted(got - declared)
        parts = []
        if missing:
            parts.append(f"missing fields {missing}")
        if extra:
            parts.append(f"unknown fields {extra}")
        raise ValueTypeError(f"{where}: {decl.name} {', '.join(parts)}")
    for f in decl.fields:
        validate_value(value.fields[f.name], f.type, spec, f"{where}.{f.name}")


def decode_value(raw: Any, tref: TypeRef, spec: CheckedSpec, where: str = "value") -> Any:
    """Build a typed value from plain JSON data (dicts for structs, strings for enums)."""
    if tref.kind == "builtin":
        if tref.name == "Float" and isinstance(raw, int) and not isinstance(raw, bool):
            raw = float(raw)
        validate_value(raw, tref, spec, where)
        return raw
    if tref.kind == "array":
        if not isinstance(raw, (list, tuple)):
            raise ValueTypeError(f"{where}: expected array, got {type(raw).__name__}")
        return [decode_value(item, tref.element, spec, f"{where}[{i}]") for i, item in enumerate(raw)]
    decl = spec.datatypes.get(tref.name)
    if decl is None:
        raise ValueTypeError(f"{where}: unknown type {tref.name!r}")
    if isinstance(decl, EnumDecl):
        if not isinstance(raw, str):
            raise ValueTypeError(f"{where}: expected {decl.name} value name")
        value = EnumValue(decl.name, raw)
        validate_value(value, tref, spec, where)
        return value
    if not isinstance(raw, Mapping):
        raise ValueTypeError(f"{where}: expected object for structure {decl.name}")
    fields = {}
    by_name = {f.name: f for f in decl.fields}
    for key in raw:
        if key not in by_name:
            raise ValueTypeError(f"{where}: unknown field {key!r} for {decl.name}")
    for f in decl.fields:
        if f.name not in raw:
            raise ValueTypeError(f"{where}: missing field {f.name!r} for {decl.name}")
        fields[f.name] = decode_value(raw[f.name], f.type, spec, f"{where}.{f.name}")
    return StructValue(decl.name, fields)


def encode_value(value: Any) -> Any:
    """Canonical JSON-able form, shared by the manifest and the trace."""
    if isinstance(value, EnumValue):
        return {"enum": value.type_name, "value": value.value}
    if isinstance(value, StructValue):
        return {
            "struct": value.type_name,
            "fields": {k: encode_value(v) for k, v in sorted(value.fields.items())},
        }
    if isinstance(value, (list, tuple)):
        return [encode_value(v) for v in value]
    return value


def coerce_literal(raw: Any, tref: TypeRef, spec: CheckedSpec) -> Any:
    """Interpret a bare query literal (usually a string) at an attribute's type.

    Single-field structures accept a literal for their one field, which is what
    makes textual queries like `area(room1)` work against structure-typed
    attributes.
    """
    if not isinstance(raw, str):
        validate_value(raw, tref, spec, "literal")
        return raw
    if tref.kind == "builtin":
        try:
            if tref.name == "String":
                return raw
            if tref.name == "Integer":
                return int(raw)
            if tref.name == "Float":
                return float(raw)
            if tref.name == "Boolean":
                if raw in ("true", "false"):
                    return raw == "true"
                raise ValueError(raw)
        except ValueError:
            raise ValueTypeError(f"literal {raw!r} is not a {tref.name}") from None
    if tref.kind == "named":
        decl = spec.datatypes.get(tref.name)
        if isinstance(decl, EnumDecl):
            value = EnumValue(decl.name, raw)
            validate_value(value, tref, spec, "literal")
            return value
        if isinstance(decl, StructDecl) and len(decl.fields) == 1:
            inner = coerce_literal(raw, decl.fields[0].type, spec)
            return StructValue(decl.name, {decl.fields[0].name: inner})
    raise ValueTypeError(f"literal {raw!r} cannot be read as {tref}")
