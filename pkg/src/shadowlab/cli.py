"""Command-line front end.

    shadowlab density  --closed-form linear-blocks --horizon 100000
    shadowlab chain    --system rotation:1/3 --delta 0.05 --net 0.01
    shadowlab verify   --system rotation:golden --construct rotation-adversary \\
                       --property M_upper:0.6 --epsilon 0.0625 --net 0.0025 --horizon 100000
    shadowlab suite    --seed 0 --out runs/suite

Every subcommand takes ``--config FILE`` or inline flags; inline flags
override the file. Exit status: 0 done, 1 error, 2 inconclusive with --strict.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .errors import ConfigInvalid, ShadowlabError
from .experiment import (
    ExperimentConfig,
    RunResult,
    build_construction,
    build_system,
    dumps,
    execute,
    execute_suite,
    suite_verdicts,
    write_artifacts,
)


class _Parser(argparse.ArgumentParser):
    # usage errors are errors (1); 2 is reserved for strict-mode inconclusive
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="JSON experiment config; inline flags override it")
    p.add_argument("--system", help="system shorthand (rotation:1/3, shift:2:16, identity2, ...) or JSON entry")
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--delta", type=float, nargs="+")
    p.add_argument("--epsilon", type=float, nargs="+")
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--strict", action="store_true", help="exit 2 on any inconclusive verdict")
    p.add_argument("--density-tol", type=float, help="override the density tolerance")


def _construct_flags(p):
    p.add_argument("--construct", help="construction name")
    p.add_argument("--params", help="construction params as JSON", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="shadowlab", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("density", help="density statistics of a closed-form index set")
    _common(p)
    p.add_argument("--closed-form", choices=["linear-blocks", "exponential-blocks", "squares", "full"])
    p.add_argument("--family", help="also test membership, e.g. M_upper:0.4")

    p = sub.add_parser("classify", help="classify a constructed pseudo-orbit")
    _common(p)
    _construct_flags(p)
    p.add_argument("--type", dest="type_")

    p = sub.add_parser("construct", help="build a pseudo-orbit and write it as JSON")
    _common(p)
    _construct_flags(p)

    p = sub.add_parser("verify", help="run a shadowing verifier on a constructed pseudo-orbit")
    _common(p)
    _construct_flags(p)
    p.add_argument("--property", help="average-shadowing | weak-aasp | M_alpha[:a] | M_upper[:a] | M_lower[:a] | M_hat_1")
    p.add_argument("--net", type=float, help="use the eps-net of this resolution as the candidate set")
    p.add_argument("--candidates", choices=["auto", "epsilon-net", "orbit-samples"])

    p = sub.add_parser("chain", help="chain-transitivity / chain-mixing verdict")
    _common(p)
    p.add_argument("--net", type=float)

    p = sub.add_parser("suite", help="run the bundled presets")
    _common(p)
    p.add_argument("--preset", nargs="+", help="subset of presets (default: all)")
    p.add_argument("--check", help="golden report; exit 1 if any verdict differs")
    p.add_argument("--list", action="store_true", help="list presets and exit")
    return ap


# ---------------------------------------------------------------------------
# flags -> config


def _load(args) -> dict:
    if not args.config:
        return {}
    try:
        return json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {args.config}: {exc}") from None


def _scalar_or_grid(v):
    return v[0] if v is not None and len(v) == 1 else v


def _request(args, cfg) -> dict:
    """The single verify request described by inline flags, merged onto the config's first one."""
    base = dict(cfg.get("verify", [{}])[0]) if cfg.get("verify") else {}
    cmd = args.cmd
    if cmd == "density":
        base["property"] = "density"
        if args.closed_form:
            base["closed_form"] = args.closed_form
        if args.family:
            base["family"] = args.family
    elif cmd == "chain":
        base["property"] = "chain"
        if args.net is not None:
            base["net"] = args.net
    elif cmd == "classify":
        base["property"] = "classify"
        if args.type_:
            base["type"] = args.type_
    elif cmd == "verify":
        if args.property:
            base["property"] = args.property
        prop = base.get("property", "")
        if args.alpha is not None:
            if ":" in prop:
                raise ConfigInvalid(f"--alpha conflicts with the parameter already in --property {prop}")
            base["alpha"] = args.alpha
        if args.net is not None and args.candidates:
            raise ConfigInvalid("--net and --candidates are mutually exclusive")
        if args.net is not None:
            base["candidates"] = {"net": args.net}
        elif args.candidates:
            base["candidates"] = args.candidates
    if args.delta is not None:
        base["delta"] = _scalar_or_grid(args.delta)
    if args.epsilon is not None:
        base["epsilon"] = _scalar_or_grid(args.epsilon)
    return base


def config_from_args(args) -> dict:
    cfg = _load(args)
    if args.system:
        cfg["system"] = args.system
    if args.horizon is not None:
        cfg["horizon"] = args.horizon
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.density_tol is not None:
        cfg.setdefault("tolerances", {})["density"] = args.density_tol
    if getattr(args, "construct", None):
        params = json.loads(args.params) if args.params else {}
        cfg["construction"] = {"name": args.construct, "params": params}
    elif getattr(args, "params", None):
        if not cfg.get("construction"):
            raise ConfigInvalid("--params needs --construct")
        cfg["construction"]["params"] = json.loads(args.params)
    if args.cmd != "construct":
        cfg["verify"] = [_request(args, cfg)]
    cfg.setdefault("horizon", 10_000)
    cfg.setdefault("seed", 0)
    if args.out:
        cfg["output"] = args.out
    return cfg


# ---------------------------------------------------------------------------
# output


def _summary(r: dict) -> str:
    prop = r["property"]
    if prop == "density":
        s = r["stats"]
        line = f"{s['upper']:.6f} upper={s['upper']:.6f} lower={s['lower']:.6f} converged={s['converged']}"
        if "family" in r:
            line += f" {r['family']['family']}={r['family']['verdict']}"
        return line
    if prop == "chain":
        g = r["graph"]
        return f"{r['verdict']} nodes={g['nodes']} sccs={g['scc_count']}"
    if prop.startswith("classify"):
        c = r["result"]
        return f"{prop} {c['verdict']} statistic={c['statistic']} threshold={c['threshold']}"
    if prop == "sensitivity":
        return f"sensitivity syndetic={r['syndetic']['verdict']}"
    return f"{prop} eps={r['thresholds'].get('epsilon')} {r['verdict']} best={r['best_score']:.6g}"


def _emit(res: RunResult, cfg_json: dict, out, strict: bool, t0: float) -> int:
    for r in res.report.get("results", []):
        print(_summary(r))
    for e in res.report.get("errors", []):
        print(f"error[{e.get('stage')}] {e.get('tag')}: {e.get('message')}", file=sys.stderr)
    if out:
        try:
            write_artifacts(out, cfg_json, res, time.perf_counter() - t0, strict)
        except OSError as exc:
            print(f"io-error: {exc}", file=sys.stderr)
            return 1
    if res.exit_code == 2 and not strict:
        return 0
    return res.exit_code


def _construct(args, cfg_json: dict) -> int:
    cfg = ExperimentConfig.from_json(cfg_json)
    system = build_system(cfg)
    xi, extra = build_construction(system, cfg.construction, cfg.horizon, cfg.seed)
    if xi is None:
        raise ConfigInvalid("construct needs --construct or a config with a construction")
    payload = dict(xi.to_json(), seed=cfg.seed, extra=extra)
    text = dumps(payload)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "pseudo_orbit.json").write_text(text, encoding="utf-8")
    print(f"{xi.system.name} N={len(xi)} construction={xi.provenance.get('construction')}")
    return 0


def _suite(args, t0) -> int:
    from .presets import PRESETS

    if args.list:
        for name, p in PRESETS.items():
            print(name, "-", ", ".join(r["property"] for r in p["verify"]))
        return 0
    seed = args.seed if args.seed is not None else 0
    res = execute_suite(seed, args.preset)
    verdicts = suite_verdicts(res.report)
    for name, vs in verdicts.items():
        print(name, " ".join(f"{p}={v}" for p, v in vs))
    code = res.exit_code
    if args.out:
        try:
            write_artifacts(args.out, {"suite": list(verdicts), "seed": seed}, res, time.perf_counter() - t0, args.strict)
        except OSError as exc:
            print(f"io-error: {exc}", file=sys.stderr)
            return 1
    if args.check:
        golden = json.loads(Path(args.check).read_text(encoding="utf-8"))
        want = suite_verdicts(golden)
        bad = sorted(k for k in verdicts if want.get(k) != verdicts[k])
        for k in bad:
            print(f"golden mismatch in {k}: expected {want.get(k)}, got {verdicts[k]}", file=sys.stderr)
        if bad:
            return 1
    if code == 2 and not args.strict:
        return 0
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        if args.cmd == "suite":
            return _suite(args, t0)
        cfg_json = config_from_args(args)
        if args.cmd == "construct":
            return _construct(args, cfg_json)
        cfg = ExperimentConfig.from_json(cfg_json)
        return _emit(execute(cfg), cfg.to_json(), cfg.output, args.strict, t0)
    except ShadowlabError as exc:
        print(f"{exc.tag}: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"config-invalid: --params is not JSON ({exc})", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
