"""Command-line entry points: serve, repl, check, validate-manifests."""

from __future__ import annotations

import argparse
import sys

from .config import load_config


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a JSON config file")
    parser.add_argument("--manifest", dest="manifest_path", help="device manifest path")
    parser.add_argument("--grammar", dest="grammar_path", help="grammar file path")
    parser.add_argument("--knowledge", dest="knowledge_path", help="knowledge file path")
    parser.add_argument("--templates", dest="templates_path", help="templates file path")
    parser.add_argument("--chunk-size", dest="chunk_size", type=int, help="options per list chunk")
    parser.add_argument("--resource-threshold", dest="resource_threshold", type=int,
                        help="quantity needing an extra confirmation")
    parser.add_argument("--seed", type=int, help="RNG seed for phrasing variation")
    parser.add_argument("--profile-dir", dest="profile_dir", help="directory for saved defaults")


def _config_from(args: argparse.Namespace):
    overrides = {k: v for k, v in vars(args).items() if v is not None}
    return load_config(args.config, overrides)


def cmd_serve(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    if args.ws:
        import uvicorn

        from .server import create_ws_app
        uvicorn.run(create_ws_app(cfg), host=cfg.host, port=cfg.port, log_level="warning")
        return 0
    from .server import SessionServer
    server = SessionServer(cfg)
    print(f"listening on {cfg.host}:{cfg.port} (newline-delimited JSON envelopes)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_repl(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    from .session import Session, build_bundle
    session = Session(bundle=build_bundle(cfg), profile=args.profile,
                      transcript_path=args.transcript)

    def show(envelopes) -> None:
        for env in envelopes:
            if env.type == "agent.response":
                for seg in env.payload["segments"]:
                    cue = f"[{seg['cue']}] " if seg.get("cue") else ""
                    print(f"  agent> {cue}{seg['text']}")
            elif env.type == "device.event" and "kind" in env.payload:
                print(f"  device: {env.payload['detail']}")

    show(session.start())
    print("(type /device <op> [args], /quit to leave)")
    while session.open:
        try:
            line = input("you> ").strip()
        except (EOFError, KeyboardInterrupt):
            print()
            break
        if not line:
            continue
        if line in ("/quit", "/exit"):
            break
        if line.startswith("/device"):
            parts = line.split()
            if len(parts) < 2:
                print("  usage: /device inject_fault|clear_fault|advance|load_paper|load_feeder|snapshot ...")
                continue
            op, rest = parts[1], parts[2:]
            kwargs = {}
            if op in ("inject_fault", "clear_fault") and rest:
                kwargs["code"] = rest[0]
            elif op == "advance" and rest:
                kwargs["steps"] = rest[0]
            elif op == "load_paper" and rest:
                kwargs["tray"] = rest[0]
                if len(rest) > 1:
                    kwargs["sheets"] = rest[1]
            elif op == "load_feeder" and rest:
                kwargs["pages"] = rest[0]
            envs = session.handle_device_command(op, **kwargs)
            if op == "snapshot":
                import json as _json
                print(_json.dumps(envs[0].payload["snapshot"], indent=2))
            else:
                show(envs)
            continue
        show(session.handle_utterance(line))
    session.close()
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    from .script import bundled_scenarios, run_script
    from .session import build_bundle
    bundle = build_bundle(cfg)
    paths = args.scripts or bundled_scenarios()
    failures = 0
    for path in paths:
        result = run_script(path, bundle=bundle)
        status = "PASS" if result.ok else "FAIL"
        print(f"{status} {result.name}")
        for problem in result.failures:
            failures += 1
            print(f"  - {problem}")
        if args.show_log:
            for line in result.log:
                print(f"    {line}")
    return 1 if failures else 0


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    problems: list[str] = []
    try:
        from .catalog import load_catalog
        catalog = load_catalog(cfg.manifest_path)
        print(f"manifest ok: {len(catalog.options)} options, "
              f"{catalog.total_value_count()} selectable values "
              f"({catalog.conversational_value_count()} conversational)")
    except Exception as err:  # surface every manifest defect, then stop
        print(f"manifest: {err}")
        return 1
    try:
        from .nlu import load_grammar
        grammar = load_grammar(cfg.grammar_path)
        print(f"grammar ok: {len(grammar.rules)} compiled rules")
    except Exception as err:
        problems.append(f"grammar: {err}")
    try:
        from .assist import load_knowledge, validate_knowledge
        kb = load_knowledge(cfg.knowledge_path, catalog)
        problems.extend(validate_knowledge(kb, catalog))
        if not problems:
            print(f"knowledge ok: {len(kb.topics)} topics, "
                  f"{len(kb.procedures)} procedures, {len(kb.diagnostics)} diagnostic cases")
    except Exception as err:
        problems.append(f"knowledge: {err}")
    try:
        from .nlg import load_templates
        templates = load_templates(cfg.templates_path)
        print(f"templates ok: {len(templates.by_id)} templates")
    except Exception as err:
        problems.append(f"templates: {err}")
    for problem in problems:
        print(f"problem: {problem}")
    return 1 if problems else 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mfp-agent",
        description="Conversational agent for a simulated multifunction printer.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the session server")
    _add_common(p_serve)
    p_serve.add_argument("--host")
    p_serve.add_argument("--port", type=int)
    p_serve.add_argument("--ws", action="store_true", help="serve WebSocket instead of TCP")
    p_serve.set_defaults(func=cmd_serve)

    p_repl = sub.add_parser("repl", help="talk to the agent interactively")
    _add_common(p_repl)
    p_repl.add_argument("--profile", default="default")
    p_repl.add_argument("--transcript", help="append the conversation to this file")
    p_repl.set_defaults(func=cmd_repl)

    p_check = sub.add_parser("check", help="run scripted scenario regressions")
    _add_common(p_check)
    p_check.add_argument("scripts", nargs="*", help="scenario files (default: bundled)")
    p_check.add_argument("--show-log", action="store_true")
    p_check.set_defaults(func=cmd_check)

    p_val = sub.add_parser("validate-manifests", help="check all data files for defects")
    _add_common(p_val)
    p_val.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
