"""Manifest and stub generation: the third compiler phase.

The manifest is the normative generated artifact: canonical JSON, byte-stable
for a given checked spec.  Stubs are a convenience skeleton per component;
regeneration refuses to touch any file that does not carry the generated-file
marker.
"""

from __future__ import annotations

import json
from pathlib import Path

from .checker import INIT_HOOK, conformance_signature
from .model import CheckedSpec, capitalized

FORMAT_VERSION = 1
MANIFEST_FILENAME = "framework.manifest.json"
STUB_MARKER = "// GENERATED BY diakit — DO NOT EDIT (regenerated)"


class StubWriteError(OSError):
    """A target stub path exists but is not a generated file."""

    def __init__(self, paths: list[str]):
        super().__init__(
            "refusing to overwrite non-generated file(s): " + ", ".join(paths)
        )
        self.paths = paths


def _typed_list(items) -> list[dict]:
    return [{"name": t.name, "type": str(t.type)} for t in items]


def generate_manifest(spec: CheckedSpec) -> dict:
    """Describe every generated callback, publisher, accessor, filter, and proxy."""
    extended = {d.parent for d in spec.devices.values() if d.parent}
    devices = []
    for name, d in spec.devices.items():
        eff = spec.effective_members(name)
        devices.append(
            {
                "name": name,
                "parent": d.parent,
                "abstract": name in extended,
                "constructor": {
                    "attributes": [
                        {"name": a.name, "type": str(a.type), "required": True}
                        for a in eff.attributes
                    ]
                },
                "attributes": _typed_list(eff.attributes),
                "sources": [
                    {
                        "name": s.name,
                        "valueType": str(s.value_type),
                        "indices": _typed_list(s.indices),
                        "publisher": f"set{capitalized(s.name)}",
                        "pullAccessor": f"get{capitalized(s.name)}",
                    }
                    for s in eff.sources
                ],
                "actions": [
                    {
                        "action": ref,
                        "methods": [
                            {"name": m.name, "params": _typed_list(m.params)}
                            for m in spec.actions[ref].methods
                        ],
                    }
                    for ref in eff.action_refs
                ],
            }
        )

    def handlers_of(component: str) -> list[dict]:
        out = []
        for h in conformance_signature(spec, component):
            if h.kind == "init":
                continue
            entry = {
                "name": h.name,
                "kind": h.kind,
                "producer": h.producer,
                "valueType": str(h.value_type),
                "indices": _typed_list(h.indices),
            }
            if h.source is not None:
                entry["source"] = h.source
            out.append(entry)
        return out

    contexts = [
        {
            "name": name,
            "outputType": str(ctx.output_type),
            "outputIndices": _typed_list(ctx.output_indices),
            "publisher": f"set{capitalized(name)}",
            "handlers": handlers_of(name),
            "init": INIT_HOOK,
        }
        for name, ctx in spec.contexts.items()
    ]

    controllers = []
    for name, ctl in spec.controllers.items():
        action_uses = []
        for u in ctl.action_uses:
            eff = spec.effective_members(u.device_class)
            action_uses.append(
                {
                    "action": u.action,
                    "deviceClass": u.device_class,
                    "proxy": {
                        "methods": [
                            {"name": m.name, "params": _typed_list(m.params)}
                            for m in spec.actions[u.action].methods
                        ]
                    },
                    "filter": {
                        "name": f"{u.device_class[:1].lower()}{u.device_class[1:]}Where",
                        "clauses": [
                            {"attribute": a.name, "type": str(a.type)}
                            for a in eff.attributes
                        ],
                    },
                }
            )
        controllers.append(
            {
                "name": name,
                "handlers": handlers_of(name),
                "actionUses": action_uses,
                "init": INIT_HOOK,
            }
        )

    return {
        "formatVersion": FORMAT_VERSION,
        "devices": devices,
        "contexts": contexts,
        "controllers": controllers,
    }


def manifest_json(manifest: dict) -> str:
    """Canonical serialization: sorted keys, two-space indent, LF, trailing newline."""
    return json.dumps(manifest, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_manifest(spec: CheckedSpec, out_dir: str | Path) -> Path:
    path = Path(out_dir) / MANIFEST_FILENAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(manifest_json(generate_manifest(spec)).encode("utf-8"))
    return path


# ---------------------------------------------------------------------------
# Stubs

def _device_stub(dev: dict) -> str:
    name = dev["name"]
    lines = [
        STUB_MARKER,
        f"# Implementation skeleton for the {name} entity.",
        "# Copy this file into your project (drop the marker line) and fill in the TODOs.",
        "",
        f"class {name}Impl:",
        '    """Entity-side logic: serve pulls and carry out actions."""',
        "",
    ]
    body = False
    if dev["sources"]:
        accessors = "; ".join(
            "{}({}) -> {}".format(
                s["pullAccessor"],
                ", ".join(f"{ix['name']}: {ix['type']}" for ix in s["indices"]),
                s["valueType"],
            )
            for s in dev["sources"]
        )
        lines += [
            "    def pull(self, source, indices):",
            f"        # TODO: answer pulls: {accessors}",
            "        raise NotImplementedError",
            "",
        ]
        body = True
    for a in dev["actions"]:
        for m in a["methods"]:
            params = "".join(f", {p['name']}" for p in m["params"])
            lines += [
                f"    def {m['name']}(self{params}):",
                f"        # TODO: implement {a['action']}.{m['name']}",
                "        raise NotImplementedError",
                "",
            ]
            body = True
    if not body:
        lines += ["    pass", ""]
    return "\n".join(lines)


def _component_stub(entry: dict, kind: str) -> str:
    name = entry["name"]
    lines = [
        STUB_MARKER,
        f"# Implementation skeleton for the {name} {kind}.",
        "# Copy this file into your project (drop the marker line) and fill in the TODOs.",
        "",
        f"class {name}Logic:",
    ]
    if kind == "context":
        init_todo = "        # TODO: discover entities and subscribe to sources"
    else:
        init_todo = "        # TODO: one-time initialization"
    lines += [
        f"    def {entry['init']}(self, api):",
        init_todo,
        "        raise NotImplementedError",
        "",
    ]
    for h in entry["handlers"]:
        extra = "".join(f", {ix['name']}" for ix in h["indices"])
        if h["kind"] == "source":
            sig = f"    def {h['name']}(self, api, producer, value{extra}):"
            origin = f"{h['producer']}.{h['source']}"
        else:
            sig = f"    def {h['name']}(self, api, value{extra}):"
            origin = f"context {h['producer']}"
        lines += [
            sig,
            f"        # TODO: handle {origin} ({h['valueType']})",
            "        raise NotImplementedError",
            "",
        ]
    return "\n".join(lines)


def generate_stubs(manifest: dict, out_dir: str | Path) -> list[Path]:
    """Write one stub per concrete device, context, and controller.

    Abstract devices (extended by another device) get no stub.  All-or-nothing:
    if any target path holds a file without the marker, nothing is written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    planned: list[tuple[Path, str]] = []
    for dev in manifest["devices"]:
        if dev["abstract"]:
            continue
        planned.append((out / f"{dev['name']}.py", _device_stub(dev)))
    for ctx in manifest["contexts"]:
        planned.append((out / f"{ctx['name']}.py", _component_stub(ctx, "context")))
    for ctl in manifest["controllers"]:
        planned.append((out / f"{ctl['name']}.py", _component_stub(ctl, "controller")))

    conflicts = []
    for path, _ in planned:
        if path.exists():
            first = path.read_text(encoding="utf-8").split("\n", 1)[0]
            if first != STUB_MARKER:
                conflicts.append(str(path))
    if conflicts:
        raise StubWriteError(conflicts)

    written = []
    for path, content in planned:
        path.write_bytes(content.encode("utf-8"))
        written.append(path)
    return written
