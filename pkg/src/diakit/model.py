"""Abstract syntax and the resolved (checked) model shared by all compiler stages.

Declarations are immutable dataclasses.  Source locations ride along for
diagnostics but are excluded from equality so that structurally identical
models compare equal regardless of where they were parsed from.
"""

from __future__ import annotations

from dataclasses import dataclass, field

BUILTIN_TYPES = ("String", "Integer", "Float", "Boolean")

DECL_KEYWORDS = ("device", "action", "structure", "enumeration", "context", "controller")


@dataclass(frozen=True)
class Loc:
    file: str = "<unknown>"
    line: int = 1
    col: int = 1

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


_NOLOC = Loc()


@dataclass(frozen=True)
class TypeRef:
    """A type use: one of the four builtins, a declared datatype, or a single-level array."""

    kind: str  # "builtin" | "named" | "array"
    name: str | None = None
    element: TypeRef | None = None

    @staticmethod
    def of(name: str) -> TypeRef:
        if name in BUILTIN_TYPES:
            return TypeRef("builtin", name)
        return TypeRef("named", name)

    @staticmethod
    def array(element: TypeRef) -> TypeRef:
        if element.kind == "array":
            raise ValueError("arrays nest only one level")
        return TypeRef("array", None, element)

    def __str__(self) -> str:
        if self.kind == "array":
            return f"{self.element}[]"
        return self.name or "?"


@dataclass(frozen=True)
class TypedName:
    """A (name, type) pair: attribute, index, struct field, or method parameter."""

    name: str
    type: TypeRef


@dataclass(frozen=True)
class SourceDecl:
    name: str
    value_type: TypeRef
    indices: tuple[TypedName, ...] = ()


@dataclass(frozen=True)
class DeviceDecl:
    name: str
    parent: str | None = None
    attributes: tuple[TypedName, ...] = ()
    sources: tuple[SourceDecl, ...] = ()
    action_refs: tuple[str, ...] = ()
    loc: Loc = field(default=_NOLOC, compare=False)


@dataclass(frozen=True)
class MethodDecl:
    name: str
    params: tuple[TypedName, ...] = ()


@dataclass(frozen=True)
class ActionDecl:
    name: str
    methods: tuple[MethodDecl, ...] = ()
    loc: Loc = field(default=_NOLOC, compare=False)


@dataclass(frozen=True)
class StructDecl:
    name: str
    fields: tuple[TypedName, ...] = ()
    loc: Loc = field(default=_NOLOC, compare=False)


@dataclass(frozen=True)
class EnumDecl:
    name: str
    values: tuple[str, ...] = ()
    loc: Loc = field(default=_NOLOC, compare=False)


@dataclass(frozen=True)
class SourceBinding:
    """`source a, b from Device` input of a context (illegal inside a controller)."""

    source_names: tuple[str, ...]
    device_class: str


@dataclass(frozen=True)
class ContextBinding:
    """`context Name;` input of a context or controller."""

    context_name: str


InputBinding = SourceBinding | ContextBinding


@dataclass(frozen=True)
class ActionUse:
    """`action Name on Device` of a controller (illegal inside a context)."""

    action: str
    device_class: str


@dataclass(frozen=True)
class ContextDecl:
    name: str
    output_type: TypeRef
    output_indices: tuple[TypedName, ...] = ()
    inputs: tuple[InputBinding, ...] = ()
    # Action uses parse but are rejected by the checker (pattern violation).
    action_uses: tuple[ActionUse, ...] = ()
    loc: Loc = field(default=_NOLOC, compare=False)


@dataclass(frozen=True)
class ControllerDecl:
    name: str
    context_inputs: tuple[str, ...] = ()
    action_uses: tuple[ActionUse, ...] = ()
    # Source bindings parse but are rejected by the checker (pattern violation).
    source_bindings: tuple[SourceBinding, ...] = ()
    loc: Loc = field(default=_NOLOC, compare=False)


Decl = DeviceDecl | ActionDecl | StructDecl | EnumDecl | ContextDecl | ControllerDecl

DatatypeDecl = StructDecl | EnumDecl


@dataclass(frozen=True)
class SourceUnit:
    path: str
    text: str = field(compare=False)
    declarations: tuple[Decl, ...] = ()


@dataclass(frozen=True)
class SpecModel:
    """The parsed but unresolved model: all declarations across all input files, in order."""

    units: tuple[SourceUnit, ...] = ()

    @property
    def declarations(self) -> tuple[Decl, ...]:
        return tuple(d for u in self.units for d in u.declarations)


class LookupError_(KeyError):
    """Raised for lookups of names absent from a checked spec."""


@dataclass(frozen=True)
class EffectiveMembers:
    """Inheritance-closed member sets of a device, ancestor-first."""

    attributes: tuple[TypedName, ...] = ()
    sources: tuple[SourceDecl, ...] = ()
    action_refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class CheckedSpec:
    """A resolved model: five namespaces, inheritance closures, and the data-flow graph.

    Immutable after construction; safe to share across threads.
    """

    devices: dict[str, DeviceDecl]
    actions: dict[str, ActionDecl]
    datatypes: dict[str, DatatypeDecl]
    contexts: dict[str, ContextDecl]
    controllers: dict[str, ControllerDecl]
    effective: dict[str, EffectiveMembers]
    # context and controller names in source declaration order (may interleave)
    component_order: tuple[str, ...] = ()

    def device(self, name: str) -> DeviceDecl:
        try:
            return self.devices[name]
        except KeyError:
            raise LookupError_(f"unknown device {name!r}") from None

    def effective_members(self, device: str) -> EffectiveMembers:
        if device not in self.effective:
            raise LookupError_(f"unknown device {device!r}")
        return self.effective[device]

    def ancestors(self, device: str) -> list[str]:
        """Ancestor chain of a device, root first, excluding the device itself."""
        chain: list[str] = []
        cur = self.device(device).parent
        while cur is not None:
            chain.append(cur)
            cur = self.devices[cur].parent
        chain.reverse()
        return chain

    def is_subclass(self, device: str, ancestor: str) -> bool:
        """True when `device` is `ancestor` or descends from it."""
        cur: str | None = device
        while cur is not None:
            if cur == ancestor:
                return True
            cur = self.devices[cur].parent
        return False

    def subclasses(self, device: str) -> list[str]:
        return [d for d in self.devices if self.is_subclass(d, device)]

    def concrete_devices(self) -> list[str]:
        """Devices never extended by another device, in declaration order."""
        extended = {d.parent for d in self.devices.values() if d.parent}
        return [name for name in self.devices if name not in extended]

    def components(self) -> list[str]:
        """Context and controller names, in source declaration order."""
        if self.component_order:
            return list(self.component_order)
        return list(self.contexts) + list(self.controllers)

    def consumers_of(self, context: str) -> list[str]:
        """Components that declare `context` as an input, in declaration order."""
        out = []
        for name in self.components():
            ctx = self.contexts.get(name)
            if ctx is not None:
                if any(
                    isinstance(b, ContextBinding) and b.context_name == context
                    for b in ctx.inputs
                ):
                    out.append(name)
            elif context in self.controllers[name].context_inputs:
                out.append(name)
        return out

    def flow_edges(self) -> list[tuple[str, str]]:
        """All data-flow edges, one per bound source / context reference / action use.

        Entity-source nodes are `Device.source`, action nodes `Device.Action`;
        context and controller nodes are bare names.  Deterministic: follows
        declaration order.
        """
        edges: list[tuple[str, str]] = []
        for name, ctx in self.contexts.items():
            for b in ctx.inputs:
                if isinstance(b, SourceBinding):
                    for s in b.source_names:
                        edges.append((f"{b.device_class}.{s}", name))
                else:
                    edges.append((b.context_name, name))
        for name, ctl in self.controllers.items():
            for c in ctl.context_inputs:
                edges.append((c, name))
            for use in ctl.action_uses:
                edges.append((name, f"{use.device_class}.{use.action}"))
        return edges


def effective_members(spec: CheckedSpec, device: str) -> EffectiveMembers:
    return spec.effective_members(device)


def flow_edges(spec: CheckedSpec) -> list[tuple[str, str]]:
    return spec.flow_edges()


def capitalized(name: str) -> str:
    """`badgeDetected` -> `BadgeDetected`; used for generated handler/publisher names."""
    return name[:1].upper() + name[1:]
