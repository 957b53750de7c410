"""Command-line front end: ``torogrow --config run.json --out results/``.

Exit status: 0 on success, 1 on input or structural errors, 2 when a
hypothesis check or the conjugacy residual fails.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import config as cfgmod
from .cocycle import check_limit_identities, drift_grid, estimate_growth, random_growth_mc, sublinear_drift
from .conjugacy import build_conjugacy, verify_conjugacy
from .errors import HypothesisFailure, InputError, TorogrowError
from .lattice import image_preimages, is_full_image, membership, orthogonal_generators
from .nilpotent import classify_pair, square_zero_factor
from .svg import loglog_svg

EXIT_OK, EXIT_INPUT, EXIT_HYPOTHESIS = 0, 1, 2


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not serialisable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _grid(dim: int, per_axis: int) -> np.ndarray:
    u = np.arange(per_axis) / per_axis
    mesh = np.meshgrid(*([u] * dim), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, dim)


# --- commands -----------------------------------------------------------
# each returns (report dict, extra files {name: text}, exit status)

def cmd_growth(cfg: dict):
    spec = cfgmod.system(cfg["system"])
    per_axis = cfg.get("grid", {}).get("per_axis", 64 if spec.dim == 2 else 32)
    grid = _grid(spec.dim, per_axis)
    schedule = cfg.get("n_schedule", [2**k for k in range(4, 15)])
    rep = estimate_growth(spec, grid, schedule, cfg.get("tau_hint"))
    out = rep.to_dict(include_grid=False)
    out["grid_per_axis"] = per_axis
    out["limit_mean"] = rep.limit_estimate.mean(axis=0).tolist()
    if "identities" in cfg:
        ident = cfg["identities"]
        diag = check_limit_identities(spec, rep, grid, ident.get("n_probe", 1), ident.get("max_pair_points", 64))
        out["identities"] = diag.to_dict()
    files = {"growth.csv": rep.to_csv()}
    if cfg.get("plot", True):
        files["growth.svg"] = loglog_svg({"sup |Df^n|": (rep.n_schedule, rep.per_n_norms),
                                          f"n^-{rep.tau_used:g} sup |Df^n|": (rep.n_schedule, rep.scaled_norms)},
                                         title=f"derivative growth, tau_fit = {rep.tau_fit:.4f}",
                                         ylabel="sup-grid max-entry norm")
    return out, files, EXIT_OK


def cmd_lattice(cfg: dict):
    basis = orthogonal_generators(cfg["c"])
    out = basis.to_dict()
    full, g = is_full_image(basis.a, basis.b)
    out["full_image"] = full
    pre = image_preimages(basis.a, basis.b)
    out["preimages"] = None if pre is None else [list(pre[0]), list(pre[1])]
    if "members" in cfg:
        out["membership"] = [{"m": list(m), "coefficients": (None if (r := membership(basis, m)) is None else list(r))}
                             for m in cfg["members"]]
    return out, {}, EXIT_OK


def cmd_nilpotent(cfg: dict):
    A = np.array([[cfgmod.real(v) for v in row] for row in cfg["matrix"]])
    tol = cfg.get("tolerance", 1e-9)
    if "matrix_b" in cfg:
        B = np.array([[cfgmod.real(v) for v in row] for row in cfg["matrix_b"]])
        pc = classify_pair(A, B, tol)
        RA, RB = pc.reconstruct()
        out = {"kind": pc.kind.value, "shared": pc.shared, "first": pc.first, "second": pc.second,
               "reconstruction_error": max(float(np.abs(RA - A).max()), float(np.abs(RB - B).max()))}
        return out, {}, EXIT_OK
    fac = square_zero_factor(A, tol)
    out = {"column": fac.column, "row": fac.row,
           "reconstruction_error": float(np.abs(fac.matrix - A).max())}
    if A.shape == (2, 2):
        h, c, swapped = fac.canonical_2x2()
        out["canonical"] = {"h": h, "c": c, "swapped": swapped}
    return out, {}, EXIT_OK


def cmd_conjugate(cfg: dict):
    f = cfgmod.conjugate_map(cfg)
    xi = cfgmod.first_integral(cfg["xi"])
    tol = cfg.get("tolerances", {})
    res = build_conjugacy(f, xi, cfgmod.real(cfg["alpha"]), cfg.get("grid_sizes", (64, 64)),
                          cfg.get("ode_step", 1e-3), hypothesis_tol=tol.get("hypothesis", 1e-8),
                          residual_tol=tol.get("residual", 1e-4), tau_tol=tol.get("tau", 1e-6),
                          max_harmonics=cfg.get("max_harmonics"))
    ver = verify_conjugacy(f, res)
    out = res.to_dict(include_grid=True)
    out["verification"] = ver.to_dict()
    ok = res.ok and ver.residual_sup <= res.tolerance
    out["ok"] = ok
    return out, {}, EXIT_OK if ok else EXIT_HYPOTHESIS


def cmd_random_growth(cfg: dict):
    spec = cfgmod.random_anzai(cfg)
    seed = cfg.get("seed", 0)
    mean, l1 = random_growth_mc(spec, cfg["samples"], cfg["n"], seed)
    out = {"mean_matrix": mean, "l1_error": l1, "seed": seed, "samples": cfg["samples"], "n": cfg["n"],
           "limit_theoretical": [[0.0, 0.0], [spec.mean_degree(), 0.0]]}
    return out, {}, EXIT_OK


def cmd_drift(cfg: dict):
    spec = cfgmod.special_flow(cfg)
    g = cfg.get("grid", {})
    grid = drift_grid(spec, g.get("n1", 64), g.get("n2", 16))
    ns = list(cfg["n_values"])
    vals = [sublinear_drift(spec, n, grid) for n in ns]
    out = {"n_values": ns, "drift": vals, "roof_bounds": list(spec.roof_bounds()),
           "strictly_decreasing": all(b < a for a, b in zip(vals, vals[1:]))}
    csv = "n,drift\n" + "".join(f"{n},{v!r}\n" for n, v in zip(ns, vals))
    files = {"drift.csv": csv}
    if cfg.get("plot", True):
        files["drift.svg"] = loglog_svg({"drift": (ns, vals)}, title="sublinear drift", ylabel="drift sup")
    return out, files, EXIT_OK


COMMANDS = {"growth": cmd_growth, "lattice": cmd_lattice, "nilpotent": cmd_nilpotent,
            "conjugate": cmd_conjugate, "random-growth": cmd_random_growth, "drift": cmd_drift}


def run(cfg: dict, out_dir: Optional[Path] = None, quiet: bool = False) -> int:
    """Validate ``cfg``, run its command and write ``<command>.json`` (plus CSV/SVG) into ``out_dir``."""
    cfgmod.validate(cfg)
    command = cfg["command"]
    report, files, status = COMMANDS[command](cfg)
    report = {"schema": cfgmod.SCHEMA_VERSION, "command": command, "config": cfg, "result": report}
    text = dumps(report)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{command}.json").write_text(text)
        for name, body in files.items():
            (out_dir / name).write_text(body)
    if not quiet:
        summary = report["result"]
        keys = [k for k in ("tau_fit", "residual_sup", "minor_gcd", "kind", "l1_error", "drift", "ok")
                if k in summary]
        for k in keys:
            print(f"{k}: {summary[k]}")
        if out_dir is not None:
            print(f"wrote {', '.join([f'{command}.json', *files])} to {out_dir}")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="torogrow", description=__doc__.splitlines()[0])
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="JSON run configuration (schema torogrow/1)")
    src.add_argument("--fixture", help="name of a bundled fixture configuration")
    p.add_argument("--out", type=Path, default=None, help="output directory for reports")
    p.add_argument("--seed", type=int, default=None, help="override the configuration seed")
    p.add_argument("--quiet", action="store_true", help="suppress the console summary")
    p.add_argument("--list-fixtures", action="store_true", help="list bundled fixtures and exit")
    p.add_argument("--print-schema", action="store_true", help="print the configuration schema and exit")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_fixtures:
        print("\n".join(cfgmod.fixture_names()))
        return EXIT_OK
    if args.print_schema:
        sys.stdout.write(dumps(cfgmod.schema()))
        return EXIT_OK
    try:
        if args.config is not None:
            cfg = cfgmod.load(args.config)
        elif args.fixture is not None:
            cfg = cfgmod.load_fixture(args.fixture)
        else:
            raise InputError("one of --config or --fixture is required")
        if args.seed is not None:
            cfg = {**cfg, "seed": args.seed}
        return run(cfg, args.out, args.quiet)
    except cfgmod.ConfigError as exc:
        for ptr, msg in exc.errors:
            print(f"error: {ptr or '/'}: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except HypothesisFailure as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except TorogrowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
