"""Shared helpers for the test suite."""

from __future__ import annotations

from diakit.checker import CheckFailure, check
from diakit.parser import parse_text


def parse_ok(text: str):
    model, diags = parse_text(text)
    errors = [d for d in diags if d.severity == "error"]
    assert not errors, [str(d) for d in errors]
    return model


def check_text(text: str):
    return check(parse_ok(text))


def check_codes(text: str) -> list[str]:
    """Error codes produced by checking `text` (which must parse cleanly), sorted."""
    try:
        check(parse_ok(text))
        return []
    except CheckFailure as e:
        return sorted(e.codes)


# A compact spec exercising inheritance, filters, all three interaction modes.
SYNTH = """
device Base { attribute area as String; }
device Panel extends Base {
  attribute size as Integer;
  attribute bright as Float;
  attribute active as Boolean;
  action Display;
}
device Reader extends Base { source badge as String; }
device DB { source rec as String indexed by key as String; }

action Display { show(msg as String); }

context Seen as String indexed by where as String {
  source badge from Reader;
}
context Mirror as String indexed by where as String {
  source badge from Reader;
}
context Chain as String {
  context Seen;
}
controller Show {
  context Chain;
  action Display on Panel;
}
"""


class Recorder:
    """Component logic that records every handler call and does nothing else."""

    def __init__(self, names):
        self.calls = []
        for n in names:
            if n != "init":
                setattr(self, n, self._make(n))

    def _make(self, name):
        def handler(api, *args):
            self.calls.append((name, args))

        return handler

    def init(self, api):
        self.calls.append(("init", ()))


def recorder_logic(spec, component):
    from diakit.checker import conformance_signature

    return Recorder([h.name for h in conformance_signature(spec, component)])
