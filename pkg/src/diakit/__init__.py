"""diakit: a two-layer design language for pervasive-computing applications —
compiler (parse, check, generate), in-process runtime, and environment simulator.
"""

from .checker import CheckError, CheckFailure, check, conformance_signature
from .codegen import generate_manifest, generate_stubs, manifest_json
from .filters import FilterExpr
from .model import CheckedSpec, SpecModel, effective_members, flow_edges
from .parser import Diagnostic, parse, parse_query, pretty_print
from .runtime import Composite, Engine, EventRecord, RuntimeFault, trace_lines
from .values import EnumValue, StructValue

__version__ = "0.1.0"

__all__ = [
    "CheckError",
    "CheckFailure",
    "CheckedSpec",
    "Composite",
    "Diagnostic",
    "Engine",
    "EnumValue",
    "EventRecord",
    "FilterExpr",
    "RuntimeFault",
    "SpecModel",
    "StructValue",
    "check",
    "conformance_signature",
    "effective_members",
    "flow_edges",
    "generate_manifest",
    "generate_stubs",
    "manifest_json",
    "parse",
    "parse_query",
    "pretty_print",
    "trace_lines",
]
