"""In-process execution fabric: entity registry, discovery, and the push /
pull / command interaction modes.

All mutation happens on one logical execution context (the caller's thread,
normally the simulation loop).  Publications enqueue deliveries on a single
FIFO queue; `drain` runs them to completion, so every cascade settles before
the scheduler advances.  Every observable step lands in the trace as an
EventRecord whose `cause` points at the event that triggered it.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from . import filters
from .checker import HandlerDescriptor, conformance_signature
from .parser import parse_query
from .model import CheckedSpec, SourceBinding, SourceDecl, TypedName, capitalized
from .values import ValueTypeError, encode_value, coerce_literal, decode_value, validate_value


class RuntimeFault(Exception):
    """A runtime-contract violation, tagged with a stable code."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass
class EntityInstance:
    id: str
    device_class: str
    attributes: dict[str, Any]
    online: bool = True


@dataclass(frozen=True)
class Composite:
    """Ordered collection of entity ids of one queried class (ascending id)."""

    device_class: str
    ids: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)


@dataclass
class EventRecord:
    seq: int
    cause: int | None
    tick: int
    kind: str  # stimulus | sourcePublish | contextPublish | controllerHandle | command | pull
    producer: str
    name: str
    value: Any
    indices: dict[str, Any] = field(default_factory=dict)
    steered: bool = False

    def to_json_obj(self) -> dict:
        obj = {
            "seq": self.seq,
            "cause": self.cause,
            "tick": self.tick,
            "kind": self.kind,
            "producer": self.producer,
            "name": self.name,
            "value": encode_value(self.value),
            "indices": {k: encode_value(v) for k, v in self.indices.items()},
        }
        if self.steered:
            obj["steered"] = True
        return obj


def trace_lines(events: list[EventRecord]) -> str:
    """JSON Lines rendering of a trace; one canonical object per line."""
    return "".join(
        json.dumps(e.to_json_obj(), sort_keys=True, separators=(",", ":")) + "\n"
        for e in events
    )


class EntityProxy:
    """Read-only handle on a registered entity, handed to component handlers."""

    __slots__ = ("_engine", "id", "device_class")

    def __init__(self, engine: Engine, entity_id: str, device_class: str):
        self._engine = engine
        self.id = entity_id
        self.device_class = device_class

    def attribute(self, name: str) -> Any:
        return self._engine.entity(self.id).attributes[name]

    @property
    def attributes(self) -> dict[str, Any]:
        return dict(self._engine.entity(self.id).attributes)

    def pull(self, source: str, **indices: Any) -> Any:
        return self._engine.pull_source(self.id, source, indices)

    def __repr__(self) -> str:
        return f"EntityProxy({self.id!r})"


class ComponentApi:
    """The capability surface a context/controller implementation acts through."""

    def __init__(self, engine: Engine, component: str):
        self._engine = engine
        self.component = component

    def discover(self, device_class: str, filter: filters.FilterExpr | str | None = None) -> Composite:
        return self._engine.discover(device_class, filter)

    def any_one(self, composite: Composite) -> EntityProxy:
        return self._engine.proxy(self._engine.any_one(composite))

    def entity(self, entity_id: str) -> EntityProxy:
        return self._engine.proxy(entity_id)

    def subscribe(self, composite: Composite, source: str) -> None:
        self._engine.subscribe_source(self.component, composite, source)

    def publish(self, value: Any, **indices: Any) -> None:
        self._engine.publish_context(self.component, value, indices)

    def pull(self, entity_id: str, source: str, **indices: Any) -> Any:
        return self._engine.pull_source(entity_id, source, indices)

    def command(self, composite: Composite, method: str, *args: Any) -> None:
        """Invoke an action method on every member; the action is resolved from
        the controller's declared uses for the composite's class."""
        self._engine.command_by_method(self.component, composite, method, list(args))

    def command_action(self, composite: Composite, action: str, method: str, args: list[Any]) -> None:
        self._engine.command(self.component, composite, action, method, args)


# Queued work items -----------------------------------------------------------

@dataclass
class _SourceDelivery:
    component: str
    handler: str
    producer_id: str
    producer_class: str
    value: Any
    indices: dict[str, Any]
    cause: int | None


@dataclass
class _ContextDelivery:
    consumer: str
    handler: str
    producer_context: str
    value: Any
    indices: dict[str, Any]
    cause: int | None


@dataclass
class _CommandExec:
    target_id: str
    action: str
    method: str
    args: list[Any]
    cause: int | None


class Engine:
    """The runtime fabric for one checked spec."""

    def __init__(self, spec: CheckedSpec):
        self.spec = spec
        self.entities: dict[str, EntityInstance] = {}
        self.behaviors: dict[str, Any] = {}
        # (entity id, source) -> subscriber components in registration order
        self.subscriptions: dict[tuple[str, str], list[str]] = {}
        self.logic: dict[str, dict[str, Callable]] = {}
        self.signatures: dict[str, list[HandlerDescriptor]] = {}
        self.events: list[EventRecord] = []
        self.queue: deque[_SourceDelivery | _ContextDelivery | _CommandExec] = deque()
        self.current_tick = 0
        self._current_cause: int | None = None
        self._apis: dict[str, ComponentApi] = {}

    # -- trace -----------------------------------------------------------------

    def _record(
        self,
        kind: str,
        producer: str,
        name: str,
        value: Any,
        indices: Mapping[str, Any] | None = None,
        cause: int | None = None,
        steered: bool = False,
    ) -> EventRecord:
        rec = EventRecord(
            seq=len(self.events),
            cause=cause,
            tick=self.current_tick,
            kind=kind,
            producer=producer,
            name=name,
            value=value,
            indices=dict(indices or {}),
            steered=steered,
        )
        self.events.append(rec)
        return rec

    def record_stimulus(
        self, device_id: str, source: str, value: Any, steered: bool = False
    ) -> EventRecord:
        """Trace an environment stimulus (a causality root); used by the simulator."""
        return self._record("stimulus", device_id, source, value, {}, None, steered)

    # -- registry ----------------------------------------------------------------

    def _device_or_fault(self, device_class: str):
        if device_class not in self.spec.devices:
            raise RuntimeFault("R-UNKNOWN-CLASS", f"unknown device class {device_class!r}")
        return self.spec.devices[device_class]

    def register_entity(
        self,
        device_class: str,
        entity_id: str,
        attributes: Mapping[str, Any],
        behavior: Any = None,
        decode: bool = False,
    ) -> EntityInstance:
        self._device_or_fault(device_class)
        extended = {d.parent for d in self.spec.devices.values() if d.parent}
        if device_class in extended:
            raise RuntimeFault("R-ABSTRACT-CLASS", f"{device_class!r} is abstract (it is extended)")
        if entity_id in self.entities:
            raise RuntimeFault("R-DUPLICATE-ID", f"entity id {entity_id!r} already registered")
        declared = self.spec.effective_members(device_class).attributes
        missing = [a.name for a in declared if a.name not in attributes]
        if missing:
            raise RuntimeFault(
                "R-BAD-ATTRIBUTES", f"missing attribute(s) {missing} for {device_class}"
            )
        extra = [k for k in attributes if k not in {a.name for a in declared}]
        if extra:
            raise RuntimeFault("R-BAD-ATTRIBUTES", f"unknown attribute(s) {extra} for {device_class}")
        typed: dict[str, Any] = {}
        for a in declared:
            raw = attributes[a.name]
            try:
                if decode:
                    typed[a.name] = decode_value(raw, a.type, self.spec, f"attribute {a.name}")
                else:
                    validate_value(raw, a.type, self.spec, f"attribute {a.name}")
                    typed[a.name] = raw
            except ValueTypeError as e:
                raise RuntimeFault("R-TYPE-MISMATCH", str(e)) from None
        inst = EntityInstance(entity_id, device_class, typed)
        self.entities[entity_id] = inst
        if behavior is not None:
            self.behaviors[entity_id] = behavior
        return inst

    def unregister_entity(self, entity_id: str) -> None:
        if entity_id not in self.entities:
            raise RuntimeFault("R-UNKNOWN-ENTITY", f"unknown entity {entity_id!r}")
        inst = self.entities.pop(entity_id)
        inst.online = False
        self.behaviors.pop(entity_id, None)
        # Drop subscriptions bound to this entity; already-queued deliveries stand.
        for key in [k for k in self.subscriptions if k[0] == entity_id]:
            del self.subscriptions[key]

    def entity(self, entity_id: str) -> EntityInstance:
        if entity_id not in self.entities:
            raise RuntimeFault("R-UNKNOWN-ENTITY", f"unknown entity {entity_id!r}")
        return self.entities[entity_id]

    def proxy(self, entity_id: str) -> EntityProxy:
        inst = self.entity(entity_id)
        return EntityProxy(self, inst.id, inst.device_class)

    # -- discovery ------------------------------------------------------------------

    def _attr_decl(self, device_class: str, attr: str) -> TypedName:
        for a in self.spec.effective_members(device_class).attributes:
            if a.name == attr:
                return a
        raise RuntimeFault(
            "R-UNKNOWN-ATTR", f"device class {device_class!r} has no attribute {attr!r}"
        )

    def _prepare_clause(self, device_class: str, attr: str, pred: filters.Predicate):
        decl = self._attr_decl(device_class, attr)
        numeric = decl.type.kind == "builtin" and decl.type.name in ("Integer", "Float")
        if filters.uses_ordering(pred) and not numeric:
            raise RuntimeFault(
                "R-BAD-FILTER",
                f"ordering predicate on non-numeric attribute {attr!r} ({decl.type})",
            )

        def prepare(operand: Any) -> Any:
            try:
                return coerce_literal(operand, decl.type, self.spec)
            except ValueTypeError as e:
                raise RuntimeFault("R-TYPE-MISMATCH", str(e)) from None

        return filters.map_operands(pred, prepare)

    def discover(self, device_class: str, filt: filters.FilterExpr | str | None = None) -> Composite:
        self._device_or_fault(device_class)
        if filt is None:
            filt = filters.EMPTY_FILTER
        elif isinstance(filt, str):
            filt = parse_query(filt)
        prepared = [
            (attr, self._prepare_clause(device_class, attr, pred)) for attr, pred in filt.clauses
        ]
        hits = []
        for entity_id in sorted(self.entities):
            inst = self.entities[entity_id]
            if not inst.online:
                continue
            if not self.spec.is_subclass(inst.device_class, device_class):
                continue
            if all(filters.evaluate(pred, inst.attributes[attr]) for attr, pred in prepared):
                hits.append(entity_id)
        return Composite(device_class, tuple(hits))

    def any_one(self, composite: Composite) -> str:
        if not composite.ids:
            raise RuntimeFault("R-EMPTY-COMPOSITE", f"no {composite.device_class} available")
        return composite.ids[0]

    # -- push -----------------------------------------------------------------------

    def _source_decl(self, device_class: str, source: str) -> SourceDecl:
        for s in self.spec.effective_members(device_class).sources:
            if s.name == source:
                return s
        raise RuntimeFault(
            "R-UNKNOWN-SOURCE", f"device class {device_class!r} has no source {source!r}"
        )

    def _check_indices(
        self, declared: tuple[TypedName, ...], given: Mapping[str, Any], where: str
    ) -> dict[str, Any]:
        """Validate index arguments and return them in declaration order."""
        if set(given) != {ix.name for ix in declared}:
            raise RuntimeFault(
                "R-ARITY-MISMATCH",
                f"{where}: expected indices {[ix.name for ix in declared]}, got {sorted(given)}",
            )
        ordered: dict[str, Any] = {}
        for ix in declared:
            try:
                validate_value(given[ix.name], ix.type, self.spec, f"{where} index {ix.name}")
            except ValueTypeError as e:
                raise RuntimeFault("R-TYPE-MISMATCH", str(e)) from None
            ordered[ix.name] = given[ix.name]
        return ordered

    def publish_source(
        self,
        entity_id: str,
        source: str,
        value: Any,
        indices: Mapping[str, Any] | None = None,
        cause: int | None = None,
    ) -> EventRecord:
        inst = self.entity(entity_id)
        decl = self._source_decl(inst.device_class, source)
        try:
            validate_value(value, decl.value_type, self.spec, f"{entity_id}.{source}")
        except ValueTypeError as e:
            raise RuntimeFault("R-TYPE-MISMATCH", str(e)) from None
        indices = self._check_indices(decl.indices, dict(indices or {}), f"{entity_id}.{source}")
        if cause is None:
            cause = self._current_cause
        rec = self._record("sourcePublish", entity_id, source, value, indices, cause)
        handler = f"onNew{capitalized(source)}"
        for component in self.subscriptions.get((entity_id, source), []):
            self.queue.append(
                _SourceDelivery(
                    component, handler, entity_id, inst.device_class, value, indices, rec.seq
                )
            )
        return rec

    def subscribe_source(self, component: str, composite: Composite, source: str) -> None:
        if component not in self.spec.contexts:
            raise RuntimeFault(
                "R-UNDECLARED-INPUT", f"{component!r} is not a context; it cannot subscribe"
            )
        ctx = self.spec.contexts[component]
        licensed = any(
            isinstance(b, SourceBinding)
            and source in b.source_names
            and self.spec.is_subclass(composite.device_class, b.device_class)
            for b in ctx.inputs
        )
        if not licensed:
            raise RuntimeFault(
                "R-UNDECLARED-INPUT",
                f"{component} does not declare source {source!r} from {composite.device_class}",
            )
        self._source_decl(composite.device_class, source)
        for entity_id in composite.ids:
            subs = self.subscriptions.setdefault((entity_id, source), [])
            if component not in subs:  # double subscription is idempotent
                subs.append(component)

    def publish_context(
        self,
        component: str,
        value: Any,
        indices: Mapping[str, Any] | None = None,
        cause: int | None = None,
    ) -> EventRecord:
        if component not in self.spec.contexts:
            raise RuntimeFault("R-UNKNOWN-COMPONENT", f"{component!r} is not a context")
        ctx = self.spec.contexts[component]
        try:
            validate_value(value, ctx.output_type, self.spec, f"{component} output")
        except ValueTypeError as e:
            raise RuntimeFault("R-TYPE-MISMATCH", str(e)) from None
        indices = self._check_indices(
            ctx.output_indices, dict(indices or {}), f"{component} output"
        )
        if cause is None:
            cause = self._current_cause
        rec = self._record("contextPublish", component, component, value, indices, cause)
        handler = f"onNew{capitalized(component)}"
        # Subscription to context output is automatic, from the architecture.
        for consumer in self.spec.consumers_of(component):
            self.queue.append(
                _ContextDelivery(consumer, handler, component, value, indices, rec.seq)
            )
        return rec

    # -- pull ------------------------------------------------------------------------

    def pull_source(self, entity_id: str, source: str, indices: Mapping[str, Any]) -> Any:
        inst = self.entity(entity_id)
        if not inst.online:
            raise RuntimeFault("R-OFFLINE-ENTITY", f"{entity_id!r} is offline")
        decl = self._source_decl(inst.device_class, source)
        indices = self._check_indices(decl.indices, dict(indices), f"{entity_id}.{source}")
        behavior = self.behaviors.get(entity_id)
        pull = getattr(behavior, "pull", None) if behavior is not None else None
        if pull is None:
            raise RuntimeFault(
                "R-NO-PULL-HANDLER", f"{entity_id!r} has no pull handler for {source!r}"
            )
        value = pull(source, dict(indices))
        try:
            validate_value(value, decl.value_type, self.spec, f"{entity_id}.{source} pull result")
        except ValueTypeError as e:
            raise RuntimeFault("R-TYPE-MISMATCH", str(e)) from None
        self._record("pull", entity_id, source, value, indices, self._current_cause)
        return value

    # -- command ---------------------------------------------------------------------

    def _method_decl(self, action: str, method: str):
        decl = self.spec.actions.get(action)
        if decl is None:
            raise RuntimeFault("R-UNDECLARED-ACTION", f"unknown action {action!r}")
        for m in decl.methods:
            if m.name == method:
                return m
        raise RuntimeFault("R-UNDECLARED-ACTION", f"action {action!r} has no method {method!r}")

    def command(
        self,
        controller: str,
        composite: Composite,
        action: str,
        method: str,
        args: list[Any],
        cause: int | None = None,
    ) -> list[EventRecord]:
        if controller not in self.spec.controllers:
            raise RuntimeFault(
                "R-UNDECLARED-ACTION", f"{controller!r} is not a controller; it cannot command"
            )
        ctl = self.spec.controllers[controller]
        licensed = any(
            u.action == action and self.spec.is_subclass(composite.device_class, u.device_class)
            for u in ctl.action_uses
        )
        if not licensed:
            raise RuntimeFault(
                "R-UNDECLARED-ACTION",
                f"{controller} does not declare action {action!r} on {composite.device_class}",
            )
        m = self._method_decl(action, method)
        if len(args) != len(m.params):
            raise RuntimeFault(
                "R-ARITY-MISMATCH",
                f"{action}.{method} takes {len(m.params)} argument(s), got {len(args)}",
            )
        for p, a in zip(m.params, args):
            try:
                validate_value(a, p.type, self.spec, f"{action}.{method} argument {p.name}")
            except ValueTypeError as e:
                raise RuntimeFault("R-TYPE-MISMATCH", str(e)) from None
        if cause is None:
            cause = self._current_cause
        records = []
        for entity_id in composite.ids:  # ascending id order by construction
            rec = self._record(
                "command", entity_id, f"{action}.{method}", list(args), {}, cause
            )
            records.append(rec)
            self.queue.append(_CommandExec(entity_id, action, method, list(args), cause))
        return records

    def command_by_method(
        self, controller: str, composite: Composite, method: str, args: list[Any]
    ) -> None:
        if controller not in self.spec.controllers:
            raise RuntimeFault(
                "R-UNDECLARED-ACTION", f"{controller!r} is not a controller; it cannot command"
            )
        ctl = self.spec.controllers[controller]
        candidates = [
            u.action
            for u in ctl.action_uses
            if self.spec.is_subclass(composite.device_class, u.device_class)
            and any(m.name == method for m in self.spec.actions[u.action].methods)
        ]
        if not candidates:
            raise RuntimeFault(
                "R-UNDECLARED-ACTION",
                f"{controller} declares no action with method {method!r} on {composite.device_class}",
            )
        self.command(controller, composite, candidates[0], method, args)

    # -- component logic ----------------------------------------------------------------

    def register_component_logic(self, component: str, handlers: Any) -> None:
        """Validate and install handlers; all-or-nothing.

        `handlers` is either a mapping of handler name to callable or an object
        whose methods carry the handler names.
        """
        sig = conformance_signature(self.spec, component)
        required = [h.name for h in sig]
        if isinstance(handlers, Mapping):
            provided = dict(handlers)
        else:
            provided = {
                name: getattr(handlers, name)
                for name in dir(handlers)
                if (name.startswith("onNew") or name == "init") and callable(getattr(handlers, name))
            }
        missing = [n for n in required if n not in provided]
        if missing:
            raise RuntimeFault(
                "R-MISSING-HANDLER", f"{component} is missing handler(s): {', '.join(missing)}"
            )
        extra = [n for n in provided if n not in required]
        if extra:
            raise RuntimeFault(
                "R-EXTRA-HANDLER",
                f"{component} provides undeclared handler(s): {', '.join(sorted(extra))}",
            )
        self.signatures[component] = sig
        self.logic[component] = provided
        self._apis[component] = ComponentApi(self, component)

    def init_components(self) -> None:
        """Run init hooks in declaration order; components must be registered first."""
        for component in self.spec.components():
            if component not in self.logic:
                raise RuntimeFault("R-MISSING-HANDLER", f"no logic registered for {component!r}")
        for component in self.spec.components():
            self._invoke(component, "init", (), cause=None)

    def _invoke(self, component: str, handler: str, args: tuple, cause: int | None) -> None:
        fn = self.logic[component][handler]
        previous = self._current_cause
        self._current_cause = cause
        try:
            fn(self._apis[component], *args)
        finally:
            self._current_cause = previous

    # -- delivery -----------------------------------------------------------------------

    def drain(self) -> None:
        """Run queued deliveries to completion, including any they enqueue."""
        while self.queue:
            item = self.queue.popleft()
            if isinstance(item, _SourceDelivery):
                if item.component not in self.logic:
                    continue
                proxy = EntityProxy(self, item.producer_id, item.producer_class)
                args = (proxy, item.value) + tuple(item.indices.values())
                self._invoke(item.component, item.handler, args, item.cause)
            elif isinstance(item, _ContextDelivery):
                if item.consumer not in self.logic:
                    continue
                args = (item.value,) + tuple(item.indices.values())
                if item.consumer in self.spec.controllers:
                    rec = self._record(
                        "controllerHandle",
                        item.consumer,
                        item.handler,
                        item.value,
                        item.indices,
                        item.cause,
                    )
                    self._invoke(item.consumer, item.handler, args, rec.seq)
                else:
                    self._invoke(item.consumer, item.handler, args, item.cause)
            else:
                behavior = self.behaviors.get(item.target_id)
                act = getattr(behavior, "act", None) if behavior is not None else None
                if act is not None and item.target_id in self.entities:
                    act(item.action, item.method, list(item.args))
