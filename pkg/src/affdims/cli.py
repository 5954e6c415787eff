"""Batch front door: config-driven runs of the solver and verification chain.

Commands
--------
solve        theoretical q-dimensions, affinity dimension, phase scan
sample       generate a point cloud of the random construction
estimate     empirical q-dimensions from a cloud file
verify       solve + sample + estimate, with per-q discrepancies
multienergy  multienergy estimates, product-bound survey, decay check

Configs are plain INI-style text with [section] headers, or a JSON file
with the same nesting.  Every run writes the fully resolved config (all
defaults filled in) next to its outputs, plus a machine-readable result
record; reruns from those two files reproduce the run.

Exit codes: 0 success, 2 config or input error, 3 resource limit,
4 insufficient data, 5 no root found, 1 anything unexpected.
"""

import argparse
import configparser
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dimsolver import affinity_dimension, d_q_minus, phase_transition_scan
from .errors import (
    ConfigError,
    InsufficientDataError,
    InvalidInputError,
    NoRootError,
    ResourceLimitError,
)
from .estimator import build_ladder, estimate_dimension
from .linalg import AffineIFS, contraction_bounds
from .measures import BernoulliModel, MarkovGibbsModel
from .multienergy import (
    check_decay_criterion,
    exact_truncated_multienergy,
    mc_multienergy,
    prop71_survey,
)
from .sampler import (
    DisplacementField,
    attractor_radius,
    default_depth,
    read_cloud,
    sample_cloud,
    truncation_tail,
    write_cloud,
)

_EXIT_CODES = (
    ((ConfigError, InvalidInputError), 2),
    ((ResourceLimitError,), 3),
    ((InsufficientDataError,), 4),
    ((NoRootError,), 5),
)


# ---------------------------------------------------------------------------
# Config loading and resolution.


def _load_raw(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if str(path).endswith(".json") or text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return {str(k): dict(v) for k, v in raw.items()}
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return {s: dict(parser.items(s)) for s in parser.sections()}


def _floats(value, where):
    if isinstance(value, (list, tuple)):
        return [float(x) for x in value]
    try:
        return [float(x) for x in str(value).split()]
    except ValueError as exc:
        raise ConfigError(f"{where}: expected numbers, got {value!r}") from exc


def _matrix(value, where):
    if isinstance(value, (list, tuple)):
        return [[float(x) for x in row] for row in value]
    rows = [r.strip() for r in str(value).split("/")]
    return [_floats(r, where) for r in rows]


def _scalar(raw, section, key, default, kind):
    block = raw.get(section, {})
    if key not in block:
        return default
    value = block[key]
    try:
        if kind is bool and isinstance(value, str):
            if value.lower() in ("true", "yes", "1", "on"):
                return True
            if value.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError(value)
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(
            f"[{section}] {key}: expected {kind.__name__}, got {value!r}"
        ) from exc


def resolve_config(path, seed=None, out=None):
    """Parse a config file and fill in every default.

    The returned dict is the complete run description; it is what gets
    archived next to the outputs and hashed into result records.
    """
    raw = _load_raw(path)
    for section in raw:
        if section not in (
            "run", "ifs", "measure", "solve", "sample", "estimate",
            "multienergy",
        ):
            raise ConfigError(f"unknown config section [{section}]")
    if "ifs" not in raw:
        raise ConfigError("missing required section [ifs]")
    if "measure" not in raw:
        raise ConfigError("missing required section [measure]")

    ifs_block = raw["ifs"]
    dim = _scalar(raw, "ifs", "dim", None, int)
    if dim is None:
        raise ConfigError("[ifs] dim: required")
    maps = []
    if "maps" in ifs_block:
        # JSON configs may give the whole list at once
        for j, entry in enumerate(ifs_block["maps"], start=1):
            maps.append(_matrix(entry, f"[ifs] maps[{j}]"))
    else:
        i = 1
        while f"map{i}" in ifs_block:
            maps.append(_matrix(ifs_block[f"map{i}"], f"[ifs] map{i}"))
            i += 1
    if len(maps) < 2:
        raise ConfigError(
            f"[ifs] map1, map2, ...: need at least 2 maps, found {len(maps)}"
        )
    for j, rows in enumerate(maps, start=1):
        if len(rows) != dim or any(len(r) != dim for r in rows):
            raise ConfigError(f"[ifs] map{j}: expected a {dim} x {dim} matrix")

    measure_type = str(
        raw["measure"].get("type", "bernoulli")
    ).strip().lower()
    if measure_type == "bernoulli":
        if "probs" not in raw["measure"]:
            raise ConfigError("[measure] probs: required for type=bernoulli")
        probs = _floats(raw["measure"]["probs"], "[measure] probs")
        if len(probs) != len(maps):
            raise ConfigError(
                f"[measure] probs: {len(probs)} entries for {len(maps)} maps"
            )
        measure = {"type": "bernoulli", "probs": probs}
    elif measure_type == "markov":
        if "potential" not in raw["measure"]:
            raise ConfigError("[measure] potential: required for type=markov")
        pot = _matrix(raw["measure"]["potential"], "[measure] potential")
        if len(pot) != len(maps) or any(len(r) != len(maps) for r in pot):
            raise ConfigError(
                f"[measure] potential: expected {len(maps)} x {len(maps)}"
            )
        measure = {"type": "markov", "potential": pot}
    else:
        raise ConfigError(
            f"[measure] type: expected bernoulli or markov, got {measure_type!r}"
        )

    resolved = {
        "run": {
            "seed": _scalar(raw, "run", "seed", 0, int),
            "out": str(raw.get("run", {}).get("out", "affdims-out")),
        },
        "ifs": {
            "dim": dim,
            "maps": maps,
            "region_radius": _scalar(raw, "ifs", "region_radius", 1.0, float),
        },
        "measure": measure,
        "solve": {
            "q": _floats(raw.get("solve", {}).get("q", "2"), "[solve] q"),
            "tol": _scalar(raw, "solve", "tol", 1e-4, float),
            "k_max": _scalar(raw, "solve", "k_max", 0, int),
            "scan": _scalar(raw, "solve", "scan", False, bool),
            "q_grid_start": _scalar(raw, "solve", "q_grid_start", 1.5, float),
            "q_grid_stop": _scalar(raw, "solve", "q_grid_stop", 4.0, float),
            "q_grid_step": _scalar(raw, "solve", "q_grid_step", 0.05, float),
        },
        "sample": {
            "n": _scalar(raw, "sample", "n", 100_000, int),
            "depth": _scalar(raw, "sample", "depth", 0, int),
        },
        "estimate": {
            "q": _floats(raw.get("estimate", {}).get("q", "2"),
                         "[estimate] q"),
            "rho": _scalar(raw, "estimate", "rho", 0.5, float),
            "rungs": _scalar(raw, "estimate", "rungs", 12, int),
            "form": str(raw.get("estimate", {}).get("form", "mesh")),
            "r0": _scalar(raw, "estimate", "r0", 0.0, float),
            "min_occupied": _scalar(raw, "estimate", "min_occupied", 5, int),
            "min_per_cube": _scalar(
                raw, "estimate", "min_per_cube", 10.0, float
            ),
            "cloud": str(raw.get("estimate", {}).get("cloud", "")),
        },
        "multienergy": {
            "s": _scalar(raw, "multienergy", "s", 0.55, float),
            "n": _scalar(raw, "multienergy", "n", 2, int),
            "q": _scalar(raw, "multienergy", "q", 2.5, float),
            "samples": _scalar(raw, "multienergy", "samples", 320, int),
            "inner": _scalar(raw, "multienergy", "inner", 64, int),
            "depth": _scalar(raw, "multienergy", "depth", 6, int),
            "mode": str(raw.get("multienergy", {}).get("mode", "collapse")),
            "survey_depth": _scalar(raw, "multienergy", "survey_depth", 4, int),
            "decay_k_max": _scalar(raw, "multienergy", "decay_k_max", 10, int),
        },
    }
    if seed is not None:
        resolved["run"]["seed"] = int(seed)
    if out is not None:
        resolved["run"]["out"] = str(out)
    return resolved


def build_system(cfg):
    """Instantiate the contraction system and measure from a resolved config."""
    try:
        ifs = AffineIFS(maps=tuple(
            np.array(rows, dtype=np.float64) for rows in cfg["ifs"]["maps"]
        ))
    except InvalidInputError as exc:
        # Re-validate map by map so the error names the offender.
        from .linalg import LinearContraction

        for j, rows in enumerate(cfg["ifs"]["maps"], start=1):
            try:
                LinearContraction(np.array(rows, dtype=np.float64))
            except InvalidInputError as inner:
                raise ConfigError(f"[ifs] map{j}: {inner}") from inner
        raise ConfigError(f"[ifs] maps: {exc}") from exc
    if ifs.dim != cfg["ifs"]["dim"]:
        raise ConfigError(
            f"[ifs] dim: declared {cfg['ifs']['dim']} but maps are "
            f"{ifs.dim} x {ifs.dim}"
        )
    measure = cfg["measure"]
    try:
        if measure["type"] == "bernoulli":
            model = BernoulliModel(probs=tuple(measure["probs"]))
        else:
            model = MarkovGibbsModel(
                potential=np.array(measure["potential"], dtype=np.float64)
            )
    except InvalidInputError as exc:
        raise ConfigError(f"[measure]: {exc}") from exc
    return ifs, model


# ---------------------------------------------------------------------------
# Result records and file emission.


def _to_jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, default=_to_jsonable)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def make_record(command, cfg, payload, elapsed):
    return {
        "command": command,
        "config_hash": config_hash(cfg),
        "seed": cfg["run"]["seed"],
        "timing_seconds": round(elapsed, 6),
        "version": __version__,
        "payload": payload,
    }


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_to_jsonable)
        fh.write("\n")


def _emit_run_files(out_dir, command, cfg, payload, elapsed):
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "resolved_config.json", cfg)
    record = make_record(command, cfg, payload, elapsed)
    _write_json(out_dir / f"{command}_result.json", record)
    return record


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Render log M_r(q) against log r from the ladder CSVs in this directory.\"\"\"
import csv
import glob
import math

import matplotlib.pyplot as plt

for path in sorted(glob.glob("ladder_*.csv")):
    rs, ms, used = [], [], []
    with open(path) as fh:
        for row in csv.DictReader(fh):
            rs.append(math.log(float(row["r"])))
            ms.append(math.log(float(row["moment_sum"])))
            used.append(row["usable"] == "1")
    label = path[len("ladder_"):-len(".csv")]
    plt.plot(rs, ms, "o-", label=label, alpha=0.6)
    plt.plot([x for x, u in zip(rs, used) if u],
             [y for y, u in zip(ms, used) if u], "o", color="black",
             markersize=3)
plt.xlabel("log r")
plt.ylabel("log M_r(q)")
plt.legend()
plt.tight_layout()
plt.savefig("ladder.png", dpi=150)
print("wrote ladder.png")
"""


def _write_ladder_csv(path, ladder):
    with open(path, "w") as fh:
        fh.write("r,moment_sum,occupied,usable\n")
        for r, msum, occ, use in zip(
            ladder.radii, ladder.sums, ladder.occupied, ladder.usable
        ):
            fh.write(f"{r!r},{msum!r},{occ},{1 if use else 0}\n")


def _qtag(q):
    return f"{q:g}".replace(".", "p")


# ---------------------------------------------------------------------------
# Commands.


def cmd_solve(cfg, out_dir):
    ifs, model = build_system(cfg)
    sol = cfg["solve"]
    k_max = sol["k_max"] or None
    rows = []
    for q in sol["q"]:
        res = d_q_minus(ifs, model, q, tol=sol["tol"], k_max=k_max)
        rows.append({
            "q": q,
            "d_q": res.value,
            "min_d_q_N": min(res.value, float(ifs.dim)),
            "bracket": list(res.bracket),
            "depth": res.depth,
            "iterations": res.iterations,
            "growth_lo": res.growth_lo,
            "growth_hi": res.growth_hi,
        })
    aff = affinity_dimension(ifs, tol=sol["tol"], k_max=k_max)
    payload = {
        "dimensions": rows,
        "affinity_dimension": aff.value,
    }
    if sol["scan"]:
        grid = np.arange(
            sol["q_grid_start"],
            sol["q_grid_stop"] + 0.5 * sol["q_grid_step"],
            sol["q_grid_step"],
        )
        scan = phase_transition_scan(
            ifs, model, grid, tol=sol["tol"], k_max=k_max
        )
        payload["scan"] = {
            "q": list(scan.qs),
            "d_q": list(scan.values),
            "kink_qs": list(scan.kink_qs),
            "threshold": scan.threshold,
        }
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "scan.csv", "w") as fh:
            fh.write("q,d_q\n")
            for qv, dv in zip(scan.qs, scan.values):
                fh.write(f"{qv!r},{dv!r}\n")
    return payload


def _ladder_r_min(cfg, ifs):
    est = cfg["estimate"]
    r0 = est["r0"]
    if r0 <= 0:
        r0 = 2.0 * attractor_radius(ifs, cfg["ifs"]["region_radius"])
    return r0 * est["rho"] ** est["rungs"]


def cmd_sample(cfg, out_dir, threads=1):
    ifs, model = build_system(cfg)
    fld = DisplacementField(
        seed=cfg["run"]["seed"],
        region_radius=cfg["ifs"]["region_radius"],
    )
    n = cfg["sample"]["n"]
    K = cfg["sample"]["depth"]
    r_min = _ladder_r_min(cfg, ifs)
    warnings = []
    if K <= 0:
        K = default_depth(ifs, fld.region_radius, r_min)
    else:
        _, a_plus = contraction_bounds(ifs)
        if truncation_tail(a_plus, fld.region_radius, ifs.dim, K) \
                >= r_min / 10.0:
            warnings.append(
                f"depth {K} leaves truncation error above a tenth of the "
                f"finest ladder radius {r_min!r}; suggest depth >= "
                f"{default_depth(ifs, fld.region_radius, r_min)}"
            )
    cloud = sample_cloud(ifs, model, fld, n, K, threads=threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    cloud_path = out_dir / "cloud.txt"
    write_cloud(cloud_path, cloud)
    digest = hashlib.sha256(cloud_path.read_bytes()).hexdigest()
    return {
        "n": n,
        "depth": K,
        "truncation_bound": cloud.truncation_bound,
        "cloud_path": str(cloud_path),
        "cloud_sha256": digest,
        "warnings": warnings,
    }


def _estimate_payload(cfg, cloud, out_dir):
    est = cfg["estimate"]
    dim = cloud.positions.shape[1]
    r0 = est["r0"] if est["r0"] > 0 else None
    forms = [est["form"]] if est["form"] != "both" \
        else ["mesh", "correlation"]
    out_dir.mkdir(parents=True, exist_ok=True)
    estimates = []
    for q in est["q"]:
        per_form = {}
        for form in forms:
            if form == "correlation" and q != int(q):
                continue
            ladder = build_ladder(
                cloud, q, r0=r0, rho=est["rho"], rungs=est["rungs"],
                form=form, min_occupied=est["min_occupied"],
                min_per_cube=est["min_per_cube"],
            )
            _write_ladder_csv(
                out_dir / f"ladder_{form}_q{_qtag(q)}.csv", ladder
            )
            res = estimate_dimension(ladder)
            per_form[form] = {
                "value": res.value,
                "stderr": res.stderr,
                "window": list(res.window),
                "clamped": res.clamped,
                "usable_rungs": ladder.usable_count(),
            }
        row = {"q": q, "forms": per_form}
        if len(per_form) == 2:
            a = per_form["mesh"]
            b = per_form["correlation"]
            gap = abs(a["value"] - b["value"])
            tol = 2.0 * (a["stderr"] + b["stderr"])
            row["forms_agree"] = bool(gap <= max(tol, 1e-12))
        estimates.append(row)
    with open(out_dir / "plot_ladder.py", "w") as fh:
        fh.write(_PLOT_SCRIPT)
    return {"dim": dim, "n": len(cloud), "estimates": estimates}


def cmd_estimate(cfg, out_dir, cloud_path=None):
    path = cloud_path or cfg["estimate"]["cloud"]
    if not path:
        raise ConfigError(
            "[estimate] cloud: no cloud file; set it or pass --reuse-cloud"
        )
    if not Path(path).exists():
        raise ConfigError(f"cloud file not found: {path}")
    cloud = read_cloud(path)
    return _estimate_payload(cfg, cloud, out_dir)


def cmd_verify(cfg, out_dir, threads=1, cloud_path=None):
    ifs, model = build_system(cfg)
    sol = cfg["solve"]
    k_max = sol["k_max"] or None
    if cloud_path:
        if not Path(cloud_path).exists():
            raise ConfigError(f"cloud file not found: {cloud_path}")
        cloud = read_cloud(cloud_path)
        sample_payload = {"reused": str(cloud_path), "n": len(cloud)}
    else:
        sample_payload = cmd_sample(cfg, out_dir, threads=threads)
        cloud = read_cloud(sample_payload["cloud_path"])
    est_payload = _estimate_payload(cfg, cloud, out_dir)
    rows = []
    for entry in est_payload["estimates"]:
        q = entry["q"]
        theory = d_q_minus(ifs, model, q, tol=sol["tol"], k_max=k_max)
        target = min(theory.value, float(ifs.dim))
        for form, got in entry["forms"].items():
            rows.append({
                "q": q,
                "form": form,
                "theoretical_d_q": theory.value,
                "target": target,
                "empirical": got["value"],
                "stderr": got["stderr"],
                "discrepancy": got["value"] - target,
            })
    worst = max(abs(r["discrepancy"]) for r in rows) if rows else None
    return {
        "sample": sample_payload,
        "estimate": est_payload,
        "comparison": rows,
        "max_abs_discrepancy": worst,
    }


def cmd_multienergy(cfg, out_dir):
    ifs, model = build_system(cfg)
    me = cfg["multienergy"]
    est = mc_multienergy(
        ifs, model, me["s"], me["n"], me["q"], me["samples"], me["depth"],
        seed=cfg["run"]["seed"], inner=me["inner"],
        unresolved=me["mode"],
    )
    exact = exact_truncated_multienergy(
        ifs, model, me["s"], me["n"], me["q"], me["depth"]
    )
    decay = check_decay_criterion(
        ifs, model, me["s"], me["q"], me["decay_k_max"]
    )
    survey = prop71_survey(
        ifs, model, me["s"], me["q"], me["survey_depth"]
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "multienergy.csv", "w") as fh:
        fh.write("s,n,q,depth,estimate,stderr,failures,exact_truncated\n")
        fh.write(
            f"{me['s']!r},{me['n']},{me['q']!r},{me['depth']},"
            f"{est.value!r},{est.stderr!r},{est.failures},{exact!r}\n"
        )
    return {
        "estimate": {
            "value": est.value,
            "stderr": est.stderr,
            "sample_count": est.sample_count,
            "failures": est.failures,
            "mode": me["mode"],
        },
        "exact_truncated": exact,
        "decay": {
            "lambda_fit": decay.lambda_fit,
            "geometric": decay.geometric,
            "slope": decay.slope,
        },
        "prop71": {
            "classes": len(survey),
            "all_hold": bool(all(row.holds for row in survey)),
            "worst_margin": min(
                (row.rhs - row.lhs for row in survey), default=None
            ),
        },
    }


# ---------------------------------------------------------------------------
# Entry point.


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="affdims",
        description="q-dimensions of measures on self-affine sets: "
                    "theoretical solvers and sampled verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "sample", "estimate", "verify", "multienergy"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed (64-bit)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for sampling")
        p.add_argument("--reuse-cloud", default=None,
                       help="existing cloud file (estimate and verify)")
    return parser


def run_command(args):
    cfg = resolve_config(args.config, seed=args.seed, out=args.out)
    out_dir = Path(cfg["run"]["out"])
    started = time.perf_counter()
    if args.command == "solve":
        payload = cmd_solve(cfg, out_dir)
    elif args.command == "sample":
        payload = cmd_sample(cfg, out_dir, threads=args.threads)
    elif args.command == "estimate":
        payload = cmd_estimate(cfg, out_dir, cloud_path=args.reuse_cloud)
    elif args.command == "verify":
        payload = cmd_verify(
            cfg, out_dir, threads=args.threads, cloud_path=args.reuse_cloud
        )
    else:
        payload = cmd_multienergy(cfg, out_dir)
    elapsed = time.perf_counter() - started
    return _emit_run_files(out_dir, args.command, cfg, payload, elapsed)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        record = run_command(args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        for classes, code in _EXIT_CODES:
            if isinstance(exc, classes):
                print(f"error: {exc}", file=sys.stderr)
                return code
        raise
    print(json.dumps(record, indent=2, sort_keys=True, default=_to_jsonable))
    return 0


if __name__ == "__main__":
    sys.exit(main())
