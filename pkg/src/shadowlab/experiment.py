"""Config-driven experiments: build a system and a pseudo-orbit, run verifiers, write artifacts.

Artifacts in the output directory:

- ``report.json``  every verifier/classifier result, deterministic for a given config
- ``curves/*.csv`` running statistics behind each result
- ``manifest.json`` config echo, tool version, wall time (the only non-deterministic file)
"""

from __future__ import annotations

import copy
import csv
import json
import re
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .constructions import (
    TwoPointFamily,
    _state,
    concatenate_average_family,
    ergodic_to_average,
    full_orbit,
    interleave_backward,
    interleave_minimal,
    orbit_family,
    rotation_adversary,
    shift_splice,
    sparse_indices,
    splice_family,
    spliced_orbit,
    theorem_5_1_schedule,
)
from .density import density, family_membership, from_closed_form
from .errors import ConfigInvalid, InvalidParameters, ShadowlabError
from .pseudo_orbits import BOUNDARY_TOL, DENSITY_TOL, PseudoOrbit, classify
from .schema import CONFIG_SCHEMA
from .systems import SystemCatalogEntry, make_system, parse_system_spec
from .verifiers import (
    chain_graph,
    chain_verdict,
    sensitivity_profile,
    verify_average_shadowing,
    verify_M_shadowing,
    verify_weak_aasp,
)

CONSTRUCTIONS = (
    "orbit",
    "example-4.4",
    "rotation-adversary",
    "interleave-minimal",
    "interleave-backward",
    "ergodic-to-average",
    "concatenate-average-family",
    "shift-splice",
    "spliced-orbit",
)


@dataclass
class ExperimentConfig:
    system: dict | None
    construction: dict | None
    verify: list
    horizon: int
    seed: int = 0
    output: str | None = None
    tolerances: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        data = copy.deepcopy(data)
        if isinstance(data.get("system"), str):
            data["system"] = parse_system_spec(data["system"]).to_json()
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigInvalid(f"{path}: {exc.message}", path=path) from None
        return cls(
            system=data.get("system"),
            construction=data.get("construction"),
            verify=data.get("verify", []),
            horizon=int(data["horizon"]),
            seed=int(data.get("seed", 0)),
            output=data.get("output"),
            tolerances=data.get("tolerances", {}),
        )

    def to_json(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# constructions


def build_system(cfg: ExperimentConfig):
    if cfg.system is None:
        return None
    return make_system(SystemCatalogEntry.from_json(cfg.system))


def build_construction(system, spec: dict | None, horizon: int, seed: int):
    """Return (pseudo-orbit, extra JSON) for a named construction."""
    if spec is None:
        return None, {}
    name = spec["name"]
    p = dict(spec.get("params", {}))
    seed = int(p.pop("seed", seed))
    if name == "example-4.4":
        fam = TwoPointFamily()
        kind = p.get("kind", "random")
        if kind == "random":
            return fam.random(horizon, seed, float(p.get("p", 0.5))), {}
        if kind == "alternating":
            return fam.alternating(horizon), {}
        if kind == "constant":
            return fam.constant(horizon, int(p.get("state", 0))), {}
        if kind == "blocks":
            return fam.blocks(horizon, p.get("lengths", [1, 2])), {}
        raise InvalidParameters("kind", f"unknown two-point sequence kind {kind!r}")
    if system is None:
        raise ConfigInvalid(f"construction {name!r} needs a system")
    if name == "orbit":
        x = system.point(p.get("x", 0)) if "x" in p else system.sample(np.random.default_rng(seed), 1)[0]
        pts = _state(system, full_orbit(system, x, horizon))
        return PseudoOrbit(system, pts, {"construction": "orbit", "x": system.to_json(x)}), {}
    if name == "rotation-adversary":
        ra = rotation_adversary(system, p.get("y", 0.0), p.get("y_prime", 0.5), horizon, p.get("scan_bound"))
        return ra.orbit, {"adversary": ra.to_json()}
    if name == "interleave-minimal":
        u, v = system.point(p["u"]), system.point(p["v"])
        return interleave_minimal(u, v, system, p.get("variant", "linear"), horizon), {}
    if name == "interleave-backward":
        u, v = system.point(p["u"]), system.point(p["v"])
        return interleave_backward(u, v, system, horizon, p.get("selector"), p.get("variant", "linear")), {}
    if name == "shift-splice":
        return shift_splice(system, horizon, seed, tuple(p.get("gap", (20, 60))), tuple(p.get("agree", (4, 8))),
                            int(p.get("big_every", 0))), {}
    if name == "spliced-orbit":
        rng = np.random.default_rng(seed)
        idx = sparse_indices(rng, horizon, float(p.get("power", 3.0)), tuple(p.get("scale", (2.0, 4.0))))
        return spliced_orbit(system, horizon, idx, seed), {}
    if name == "ergodic-to-average":
        inner = p.get("source", {"name": "spliced-orbit", "params": {}})
        xi, _ = build_construction(system, inner, horizon, seed)
        conv = ergodic_to_average(xi, float(p["delta"]))
        return conv.orbit, {"conversion": conv.to_json()}
    if name == "concatenate-average-family":
        fam = p.get("family", "orbits")
        if fam == "orbits":
            betas = orbit_family(system, seed)
        elif fam == "splices":
            betas = splice_family(system, seed)
        else:
            raise InvalidParameters("family", f"unknown beta family {fam!r}")
        return concatenate_average_family(betas, theorem_5_1_schedule(horizon), horizon), {}
    raise InvalidParameters("construction", f"unknown construction {name!r}; expected one of {', '.join(CONSTRUCTIONS)}")


# ---------------------------------------------------------------------------
# verification requests


def _grid(v):
    if v is None:
        return [None]
    return list(v) if isinstance(v, list) else [v]


def _candidates(system, req):
    c = req.get("candidates", "auto")
    if isinstance(c, dict) and "net" in c:
        return list(system.net(float(c["net"]))), "user-list"
    if isinstance(c, list):
        return [system.point(x) for x in c], "user-list"
    return None, c


def _family(req):
    prop = req["property"]
    if ":" in prop or prop == "M_hat_1":
        return prop
    if "alpha" in req:
        return f"{prop}:{req['alpha']}"
    return prop


def run_request(system, xi, req: dict, horizon: int, tol: dict) -> list[dict]:
    """One verify entry -> one result per point of its epsilon/delta grid."""
    prop = req["property"]
    dtol = float(tol.get("density", DENSITY_TOL))
    btol = float(tol.get("boundary", BOUNDARY_TOL))
    out = []
    if prop == "chain":
        for d in _grid(req.get("delta")):
            g = chain_graph(system, float(d), float(req.get("net", d / 4)))
            out.append({"property": "chain", "system": system.name, "verdict": chain_verdict(g), "graph": g.to_json()})
        return out
    if prop == "density":
        a = from_closed_form({"kind": req["closed_form"]}, horizon)
        st = density(a)
        res = {"property": "density", "closed_form": req["closed_form"], "stats": st.to_json(), "_curve": st.csv_rows()}
        if "family" in req:
            res["family"] = family_membership(a, req["family"], stats=st).to_json()
        return [res]
    if xi is None:
        raise ConfigInvalid(f"property {prop!r} needs a construction")
    if prop == "classify":
        for d in _grid(req.get("delta")):
            rep = classify(xi, req["type"], d, tol=dtol, boundary=btol)
            out.append({"property": f"classify:{req['type']}", "result": rep.to_json(), "_curve": rep.csv_rows()})
        return out
    if prop == "sensitivity":
        center = req["center"]
        a = sensitivity_profile(system, (center, float(req["radius"])), float(req["delta"]), horizon)
        res = {"property": "sensitivity", "count": len(a),
               "syndetic": family_membership(a, f"syndetic:{int(req.get('k', 8))}").to_json()}
        return [res]
    cands, src = _candidates(xi.system, req)
    for eps in _grid(req.get("epsilon")):
        if eps is None:
            raise ConfigInvalid(f"property {prop!r} needs an epsilon")
        eps = float(eps)
        if prop == "average-shadowing":
            rep = verify_average_shadowing(xi, eps, cands, src, delta=req.get("delta"))
        elif prop == "weak-aasp":
            rep = verify_weak_aasp(xi, eps, cands, src)
        elif prop.startswith("M_"):
            rep = verify_M_shadowing(xi, eps, _family(req), cands, src, delta=req.get("delta"))
        else:
            raise ConfigInvalid(f"unknown property {prop!r}")
        d = rep.to_json()
        d["_curve"] = rep.csv_rows()
        out.append(d)
    return out


# ---------------------------------------------------------------------------
# running


@dataclass
class RunResult:
    report: dict
    exit_code: int
    curves: dict  # file name -> rows


def execute(cfg: ExperimentConfig) -> RunResult:
    """Compute everything for ``cfg`` without touching the file system."""
    results, errors = [], []
    system = xi = None
    extra = {}
    try:
        system = build_system(cfg)
        xi, extra = build_construction(system, cfg.construction, cfg.horizon, cfg.seed)
        if xi is not None and system is None:
            system = xi.system
    except ShadowlabError as exc:
        errors.append({"stage": "construction", **exc.to_dict()})
    if not errors:
        for k, req in enumerate(cfg.verify):
            try:
                results.extend(run_request(system, xi, req, cfg.horizon, cfg.tolerances))
            except ShadowlabError as exc:
                errors.append({"stage": f"verify[{k}]", "property": req.get("property"), **exc.to_dict()})
    curves = {}
    for i, r in enumerate(results):
        rows = r.pop("_curve", None)
        if rows is not None:
            curves[f"{i:02d}_{_slug(r['property'])}.csv"] = list(rows)
    report = {
        "seed": cfg.seed,
        "horizon": cfg.horizon,
        "system": system.name if system is not None else None,
        "construction": xi.provenance if xi is not None else None,
        "construction_extra": extra,
        "results": results,
        "errors": errors,
    }
    verdicts = [_verdict_of(r) for r in results]
    if errors:
        code = 1
    elif "inconclusive" in verdicts:
        code = 2
    else:
        code = 0
    return RunResult(_clean(report), code, curves)


def _verdict_of(r):
    if "verdict" in r:
        return r["verdict"]
    if "result" in r:
        return r["result"]["verdict"]
    if "family" in r:
        return r["family"]["verdict"]
    return None


def _slug(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", s).strip("-")


def _clean(obj):
    """Plain JSON types only (numpy scalars, tuples)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_artifacts(out_dir: str | Path, cfg_json: dict, result: RunResult, wall: float, strict: bool) -> None:
    out = Path(out_dir)
    (out / "curves").mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps(result.report), encoding="utf-8")
    for name, rows in result.curves.items():
        with open(out / "curves" / name, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(rows)
    manifest = {"config": cfg_json, "version": __version__, "seed": cfg_json.get("seed", 0),
                "wall_time_s": wall, "strict": strict}
    (out / "manifest.json").write_text(dumps(manifest), encoding="utf-8")


def run(config: dict | ExperimentConfig, out_dir: str | Path | None = None, strict: bool = False) -> int:
    """Validate, compute, write. Exit status: 0 done, 1 error, 2 inconclusive under ``strict``."""
    t0 = time.perf_counter()
    try:
        cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_json(config)
    except ShadowlabError as exc:
        if out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / "report.json").write_text(dumps({"errors": [exc.to_dict()]}), encoding="utf-8")
        return 1
    res = execute(cfg)
    target = out_dir or cfg.output
    if target is not None:
        try:
            write_artifacts(target, cfg.to_json(), res, time.perf_counter() - t0, strict)
        except OSError:
            return 1
    if res.exit_code == 2 and not strict:
        return 0
    return res.exit_code


# ---------------------------------------------------------------------------
# bundled suite


def execute_suite(seed: int = 0, names=None) -> RunResult:
    """Run bundled presets with a shared seed; one combined report."""
    from .presets import PRESETS

    names = list(PRESETS) if not names else list(names)
    unknown = [n for n in names if n not in PRESETS]
    if unknown:
        raise ConfigInvalid(f"unknown preset(s): {', '.join(unknown)}")
    reports, curves, codes = {}, {}, []
    for name in names:
        res = execute(ExperimentConfig.from_json(dict(PRESETS[name], seed=seed)))
        reports[name] = res.report
        codes.append(res.exit_code)
        curves.update({f"{name}__{k}": v for k, v in res.curves.items()})
    code = 1 if 1 in codes else (2 if 2 in codes else 0)
    return RunResult({"seed": seed, "presets": reports}, code, curves)


def suite_verdicts(report: dict) -> dict:
    """{preset: [[property, verdict], ...]} -- the part compared against the golden file."""
    out = {}
    for name, rep in report["presets"].items():
        out[name] = [[r["property"], _verdict_of(r)] for r in rep["results"]]
        out[name] += [["error", e.get("tag")] for e in rep["errors"]]
    return out
