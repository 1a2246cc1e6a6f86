"""Name resolution, inheritance closure, and architectural-pattern enforcement.

`check` collects *all* errors in one pass over the model instead of stopping
at the first, so a single run reports every dangling name and every pattern
violation.  Error codes are stable and each code has exactly one trigger:

  E001 duplicate name (namespace, or colliding member names in a component)
  E002 unknown type name               E003 unknown device
  E004 source absent from device      E005 unknown context reference
  E006 unknown/unavailable action     E007 device inheritance cycle
  E008 controller binds a source      E009 context uses an action
  E010 member collides with ancestor  E011 unknown index type
  E012 duplicate struct field / enum value
  E013 cyclic context dependency
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    ActionDecl,
    CheckedSpec,
    ContextBinding,
    ContextDecl,
    ControllerDecl,
    Decl,
    DeviceDecl,
    EffectiveMembers,
    EnumDecl,
    Loc,
    LookupError_,
    SourceBinding,
    SpecModel,
    StructDecl,
    TypedName,
    TypeRef,
    capitalized,
)


@dataclass(frozen=True)
class CheckError:
    code: str
    subject: str
    detail: str
    location: Loc

    def __str__(self) -> str:
        loc = self.location
        return f"{loc.file}:{loc.line}:{loc.col}: error[{self.code}]: {self.subject}: {self.detail}"


class CheckFailure(Exception):
    """Raised by `check` when the model is invalid; carries every error found."""

    def __init__(self, errors: list[CheckError]):
        super().__init__(f"{len(errors)} check error(s)")
        self.errors = errors

    @property
    def codes(self) -> list[str]:
        return [e.code for e in self.errors]


class _Checker:
    def __init__(self, model: SpecModel):
        self.model = model
        self.errors: list[CheckError] = []
        self.devices: dict[str, DeviceDecl] = {}
        self.actions: dict[str, ActionDecl] = {}
        self.datatypes: dict[str, StructDecl | EnumDecl] = {}
        self.contexts: dict[str, ContextDecl] = {}
        self.controllers: dict[str, ControllerDecl] = {}
        self.effective: dict[str, EffectiveMembers] = {}
        self.cyclic: set[str] = set()

    def err(self, code: str, subject: str, detail: str, loc: Loc) -> None:
        self.errors.append(CheckError(code, subject, detail, loc))

    # -- namespaces ---------------------------------------------------------

    def collect(self) -> None:
        spaces: dict[type, tuple[str, dict]] = {
            DeviceDecl: ("device", self.devices),
            ActionDecl: ("action", self.actions),
            StructDecl: ("datatype", self.datatypes),
            EnumDecl: ("datatype", self.datatypes),
            ContextDecl: ("context", self.contexts),
            ControllerDecl: ("controller", self.controllers),
        }
        for d in self.model.declarations:
            space_name, table = spaces[type(d)]
            if d.name in table:
                self.err("E001", d.name, f"duplicate {space_name} name", d.loc)
            else:
                table[d.name] = d

    # -- inheritance ---------------------------------------------------------

    def resolve_inheritance(self) -> None:
        for d in self.devices.values():
            if d.parent is not None and d.parent not in self.devices:
                self.err("E003", d.name, f"unknown device {d.parent!r} in extends", d.loc)

        color: dict[str, int] = {}  # 0 in progress, 1 done

        def visit(name: str, trail: list[str]) -> None:
            if color.get(name) == 1:
                return
            if color.get(name) == 0:
                cycle = trail[trail.index(name):]
                for member in cycle:
                    if member not in self.cyclic:
                        self.cyclic.add(member)
                        self.err(
                            "E007",
                            member,
                            "inheritance cycle: " + " -> ".join(cycle + [name]),
                            self.devices[member].loc,
                        )
                return
            color[name] = 0
            parent = self.devices[name].parent
            if parent in self.devices:
                visit(parent, trail + [name])
                if parent in self.cyclic:
                    self.cyclic.add(name)
            color[name] = 1

        for name in self.devices:
            visit(name, [])

        for name, d in self.devices.items():
            if name in self.cyclic:
                self.effective[name] = EffectiveMembers(d.attributes, d.sources, d.action_refs)
                continue
            self.effective[name] = self.close_members(d)

    def close_members(self, d: DeviceDecl) -> EffectiveMembers:
        if d.name in self.effective:
            return self.effective[d.name]
        if d.parent in self.devices and d.parent not in self.cyclic:
            base = self.close_members(self.devices[d.parent])
        else:
            base = EffectiveMembers()
        inherited = (
            {a.name for a in base.attributes}
            | {s.name for s in base.sources}
            | set(base.action_refs)
        )
        own_seen: set[str] = set()
        attrs, sources, refs = list(base.attributes), list(base.sources), list(base.action_refs)
        for kind, name in (
            [("attribute", a.name) for a in d.attributes]
            + [("source", s.name) for s in d.sources]
            + [("action", r) for r in d.action_refs]
        ):
            if name in inherited:
                self.err("E010", d.name, f"{kind} {name!r} collides with an inherited member", d.loc)
            elif name in own_seen:
                self.err("E001", d.name, f"duplicate member name {name!r}", d.loc)
            own_seen.add(name)
        attrs += [a for a in d.attributes if a.name not in inherited]
        sources += [s for s in d.sources if s.name not in inherited]
        refs += [r for r in d.action_refs if r not in inherited]
        eff = EffectiveMembers(tuple(attrs), tuple(sources), tuple(refs))
        self.effective[d.name] = eff
        return eff

    # -- generated-name collisions (folded into E001) ------------------------

    def check_generated_names(self) -> None:
        for name, d in self.devices.items():
            eff = self.effective[name]
            seen: dict[str, str] = {}
            for member in [a.name for a in eff.attributes] + [s.name for s in eff.sources]:
                cap = capitalized(member)
                if cap in seen and seen[cap] != member:
                    self.err(
                        "E001", name,
                        f"members {seen[cap]!r} and {member!r} collide in generated names", d.loc,
                    )
                seen.setdefault(cap, member)
            methods: dict[str, str] = {}
            for ref in eff.action_refs:
                action = self.actions.get(ref)
                if action is None:
                    continue
                for m in action.methods:
                    if m.name in methods and methods[m.name] != ref:
                        self.err(
                            "E001", name,
                            f"method {m.name!r} provided by both {methods[m.name]!r} and {ref!r}", d.loc,
                        )
                    methods.setdefault(m.name, ref)
        for action in self.actions.values():
            seen_m: set[str] = set()
            for m in action.methods:
                if m.name in seen_m:
                    self.err("E001", action.name, f"duplicate method {m.name!r}", action.loc)
                seen_m.add(m.name)
        for ctx in self.contexts.values():
            self._check_handler_names(ctx.name, self._context_input_names(ctx), ctx.loc)
        for ctl in self.controllers.values():
            self._check_handler_names(ctl.name, list(ctl.context_inputs), ctl.loc)
            uses = set()
            for u in ctl.action_uses:
                if (u.action, u.device_class) in uses:
                    self.err(
                        "E001", ctl.name,
                        f"duplicate action use {u.action!r} on {u.device_class!r}", ctl.loc,
                    )
                uses.add((u.action, u.device_class))

    @staticmethod
    def _context_input_names(ctx: ContextDecl) -> list[str]:
        names = []
        for b in ctx.inputs:
            if isinstance(b, SourceBinding):
                names.extend(b.source_names)
            else:
                names.append(b.context_name)
        return names

    def _check_handler_names(self, component: str, inputs: list[str], loc: Loc) -> None:
        seen: dict[str, str] = {}
        for name in inputs:
            cap = capitalized(name)
            if cap in seen:
                self.err(
                    "E001", component,
                    f"inputs {seen[cap]!r} and {name!r} collide in generated handler names", loc,
                )
            seen.setdefault(cap, name)

    # -- types ----------------------------------------------------------------

    def resolve_type(self, t: TypeRef, subject: str, loc: Loc, index: bool = False) -> None:
        if t.kind == "array":
            self.resolve_type(t.element, subject, loc, index)
            return
        if t.kind == "builtin":
            return
        if t.name not in self.datatypes:
            code = "E011" if index else "E002"
            what = "index type" if index else "type"
            self.err(code, subject, f"unknown {what} {t.name!r}", loc)

    def check_types(self) -> None:
        for d in self.devices.values():
            for a in d.attributes:
                self.resolve_type(a.type, d.name, d.loc)
            for s in d.sources:
                self.resolve_type(s.value_type, d.name, d.loc)
                for ix in s.indices:
                    self.resolve_type(ix.type, d.name, d.loc, index=True)
        for action in self.actions.values():
            for m in action.methods:
                for p in m.params:
                    self.resolve_type(p.type, action.name, action.loc)
        for dt in self.datatypes.values():
            if isinstance(dt, StructDecl):
                seen: set[str] = set()
                for f in dt.fields:
                    if f.name in seen:
                        self.err("E012", dt.name, f"duplicate field {f.name!r}", dt.loc)
                    seen.add(f.name)
                    self.resolve_type(f.type, dt.name, dt.loc)
            else:
                seen = set()
                for v in dt.values:
                    if v in seen:
                        self.err("E012", dt.name, f"duplicate value {v!r}", dt.loc)
                    seen.add(v)
        for ctx in self.contexts.values():
            self.resolve_type(ctx.output_type, ctx.name, ctx.loc)
            for ix in ctx.output_indices:
                self.resolve_type(ix.type, ctx.name, ctx.loc, index=True)

    # -- architecture -----------------------------------------------------------

    def check_device_actions(self) -> None:
        for d in self.devices.values():
            for ref in d.action_refs:
                if ref not in self.actions:
                    self.err("E006", d.name, f"action {ref!r} is not declared", d.loc)

    def check_contexts(self) -> None:
        for ctx in self.contexts.values():
            for b in ctx.inputs:
                if isinstance(b, SourceBinding):
                    device = self.devices.get(b.device_class)
                    if device is None:
                        self.err("E003", ctx.name, f"unknown device {b.device_class!r} in from", ctx.loc)
                        continue
                    available = {s.name for s in self.effective[device.name].sources}
                    for s_name in b.source_names:
                        if s_name not in available:
                            self.err(
                                "E004", ctx.name,
                                f"device {b.device_class!r} has no source {s_name!r}", ctx.loc,
                            )
                else:
                    if b.context_name not in self.contexts:
                        self.err("E005", ctx.name, f"unknown context {b.context_name!r}", ctx.loc)
            for u in ctx.action_uses:
                self.err(
                    "E009", ctx.name,
                    f"contexts cannot use actions ({u.action!r} on {u.device_class!r})", ctx.loc,
                )

    def check_controllers(self) -> None:
        for ctl in self.controllers.values():
            for b in ctl.source_bindings:
                self.err(
                    "E008", ctl.name,
                    f"controllers cannot bind entity sources ({', '.join(b.source_names)} from {b.device_class!r})",
                    ctl.loc,
                )
            for c in ctl.context_inputs:
                if c not in self.contexts:
                    self.err("E005", ctl.name, f"unknown context {c!r}", ctl.loc)
            for u in ctl.action_uses:
                device = self.devices.get(u.device_class)
                if device is None:
                    self.err("E003", ctl.name, f"unknown device {u.device_class!r} in on", ctl.loc)
                    continue
                if u.action not in self.actions:
                    self.err("E006", ctl.name, f"action {u.action!r} is not declared", ctl.loc)
                elif u.action not in self.effective[device.name].action_refs:
                    self.err(
                        "E006", ctl.name,
                        f"device {u.device_class!r} does not provide action {u.action!r}", ctl.loc,
                    )

    def check_context_cycles(self) -> None:
        deps = {
            name: [
                b.context_name
                for b in ctx.inputs
                if isinstance(b, ContextBinding) and b.context_name in self.contexts
            ]
            for name, ctx in self.contexts.items()
        }
        color: dict[str, int] = {}
        in_cycle: set[str] = set()

        def visit(name: str, trail: list[str]) -> None:
            if color.get(name) == 1:
                return
            if color.get(name) == 0:
                for member in trail[trail.index(name):]:
                    in_cycle.add(member)
                return
            color[name] = 0
            for dep in deps[name]:
                visit(dep, trail + [name])
            color[name] = 1

        for name in deps:
            visit(name, [])
        for name in self.contexts:
            if name in in_cycle:
                self.err("E013", name, "cyclic context dependency", self.contexts[name].loc)

    # -- entry point -----------------------------------------------------------

    def run(self) -> CheckedSpec:
        self.collect()
        self.resolve_inheritance()
        self.check_generated_names()
        self.check_types()
        self.check_device_actions()
        self.check_contexts()
        self.check_controllers()
        self.check_context_cycles()
        if self.errors:
            ordered = sorted(
                self.errors,
                key=lambda e: (e.location.file, e.location.line, e.location.col, e.code, e.detail),
            )
            raise CheckFailure(ordered)
        order = tuple(
            d.name
            for d in self.model.declarations
            if isinstance(d, (ContextDecl, ControllerDecl))
        )
        return CheckedSpec(
            devices=self.devices,
            actions=self.actions,
            datatypes=self.datatypes,
            contexts=self.contexts,
            controllers=self.controllers,
            effective=self.effective,
            component_order=order,
        )


def check(model: SpecModel) -> CheckedSpec:
    """Resolve and validate a parsed model; raises CheckFailure listing every error."""
    return _Checker(model).run()


# ---------------------------------------------------------------------------
# Conformance signatures: the handlers a component implementation must provide.

@dataclass(frozen=True)
class HandlerDescriptor:
    name: str
    kind: str  # "source" | "context" | "init"
    value_type: TypeRef | None = None
    indices: tuple[TypedName, ...] = ()
    producer: str | None = None  # device class (source) or context name
    source: str | None = None  # source name, for source inputs


INIT_HOOK = "init"


def conformance_signature(spec: CheckedSpec, component: str) -> list[HandlerDescriptor]:
    """Required handlers for a context or controller: one per declared input
    (per source name when a binding lists several), plus the init hook."""
    out: list[HandlerDescriptor] = []
    if component in spec.contexts:
        ctx = spec.contexts[component]
        for b in ctx.inputs:
            if isinstance(b, SourceBinding):
                sources = {s.name: s for s in spec.effective_members(b.device_class).sources}
                for s_name in b.source_names:
                    s = sources[s_name]
                    out.append(
                        HandlerDescriptor(
                            name=f"onNew{capitalized(s_name)}",
                            kind="source",
                            value_type=s.value_type,
                            indices=s.indices,
                            producer=b.device_class,
                            source=s_name,
                        )
                    )
            else:
                producer = spec.contexts[b.context_name]
                out.append(
                    HandlerDescriptor(
                        name=f"onNew{capitalized(b.context_name)}",
                        kind="context",
                        value_type=producer.output_type,
                        indices=producer.output_indices,
                        producer=b.context_name,
                    )
                )
    elif component in spec.controllers:
        ctl = spec.controllers[component]
        for c in ctl.context_inputs:
            producer = spec.contexts[c]
            out.append(
                HandlerDescriptor(
                    name=f"onNew{capitalized(c)}",
                    kind="context",
                    value_type=producer.output_type,
                    indices=producer.output_indices,
                    producer=c,
                )
            )
    else:
        raise LookupError_(f"unknown component {component!r}")
    out.append(HandlerDescriptor(name=INIT_HOOK, kind="init"))
    return out
