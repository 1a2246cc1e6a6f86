"""Command line entry point: `diakit check | generate | simulate`.

Exit codes: 0 success, 1 parse/check errors, 2 scenario or runtime
validation errors, 3 I/O errors.  Diagnostics go to stderr; stdout stays
machine-stable.
"""

from __future__ import annotations

import argparse
import signal
import socket
import sys
import threading
from pathlib import Path

from .checker import CheckFailure, check
from .codegen import StubWriteError, generate_manifest, generate_stubs, manifest_json, MANIFEST_FILENAME
from .newscast import builtin_logic
from .parser import parse
from .runtime import RuntimeFault, trace_lines
from .simulator import ScenarioError, Simulation, load_scenario_file

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_SCENARIO = 2
EXIT_IO = 3


def _read_files(paths: list[str]) -> list[tuple[str, str]]:
    return [(p, Path(p).read_text(encoding="utf-8")) for p in paths]


def _load_spec(paths: list[str]):
    """Returns (spec, exit_code); on failure spec is None and diagnostics are printed."""
    try:
        files = _read_files(paths)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return None, EXIT_IO
    model, diags = parse(files)
    for d in diags:
        print(d, file=sys.stderr)
    if any(d.severity == "error" for d in diags):
        return None, EXIT_CHECK
    try:
        spec = check(model)
    except CheckFailure as e:
        for err in e.errors:
            print(err, file=sys.stderr)
        return None, EXIT_CHECK
    return spec, EXIT_OK


def cmd_check(args) -> int:
    spec, code = _load_spec(args.files)
    if spec is None:
        return code
    print(
        f"OK: {len(spec.devices)} devices, {len(spec.contexts)} contexts, "
        f"{len(spec.controllers)} controllers"
    )
    return EXIT_OK


def cmd_generate(args) -> int:
    spec, code = _load_spec(args.files)
    if spec is None:
        return code
    out = Path(args.out)
    manifest = generate_manifest(spec)
    try:
        out.mkdir(parents=True, exist_ok=True)
        manifest_path = out / MANIFEST_FILENAME
        manifest_path.write_bytes(manifest_json(manifest).encode("utf-8"))
        written = [manifest_path]
        if not args.manifest_only:
            written += generate_stubs(manifest, out)
    except StubWriteError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        print(path.name)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec, code = _load_spec(args.files)
    if spec is None:
        return code
    try:
        scenario = load_scenario_file(args.scenario, spec)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCENARIO

    logic = {name: impl for name, impl in builtin_logic().items() if name in spec.components()}
    try:
        sim = Simulation(spec, logic, scenario)
    except (ScenarioError, RuntimeFault) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCENARIO

    if args.serve is None:
        events = sim.run()
    else:
        rc = _serve(sim, args.serve, args.ui)
        if rc != EXIT_OK:
            return rc
        events = sim.engine.events

    try:
        Path(args.trace).write_bytes(trace_lines(events).encode("utf-8"))
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    print(f"OK: {sim.tick} ticks, {len(events)} events")
    return EXIT_OK


def _serve(sim: Simulation, port: int, ui_dir: str | None) -> int:
    import uvicorn

    from .gateway import create_app

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind(("127.0.0.1", port))
        sock.listen(128)
    except OSError as e:
        print(f"error: cannot bind port {port}: {e}", file=sys.stderr)
        return EXIT_IO
    print(f"LISTENING {sock.getsockname()[1]}", flush=True)

    sim.paused = True  # serve mode starts paused; resume via UI or SIGUSR1
    app = create_app(sim, ui_dir)
    config = uvicorn.Config(app, log_level="warning", access_log=False)
    server = uvicorn.Server(config)

    def loop() -> None:
        try:
            sim.run_interactive(pace_seconds=0.05)
        finally:
            server.should_exit = True

    runner = threading.Thread(target=loop, daemon=True)

    def on_resume(signum, frame):
        from .simulator import Resume

        sim.steer(Resume())

    def on_stop(signum, frame):
        sim.stop()
        server.should_exit = True

    try:
        signal.signal(signal.SIGUSR1, on_resume)
        signal.signal(signal.SIGTERM, on_stop)
        signal.signal(signal.SIGINT, on_stop)
    except ValueError:
        pass  # not on the main thread (embedded use)

    runner.start()
    server.run(sockets=[sock])
    sim.stop()
    runner.join(timeout=5)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="diakit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="parse and type-check spec files")
    p_check.add_argument("files", nargs="+")
    p_check.set_defaults(fn=cmd_check)

    p_gen = sub.add_parser("generate", help="emit the framework manifest and stubs")
    p_gen.add_argument("files", nargs="+")
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--manifest-only", action="store_true")
    p_gen.set_defaults(fn=cmd_generate)

    p_sim = sub.add_parser("simulate", help="run a scenario against the built-in logic")
    p_sim.add_argument("files", nargs="+")
    p_sim.add_argument("--scenario", required=True)
    p_sim.add_argument("--trace", required=True)
    p_sim.add_argument("--serve", type=int, default=None, metavar="PORT")
    p_sim.add_argument("--ui", default=None, metavar="DIR")
    p_sim.set_defaults(fn=cmd_simulate)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
