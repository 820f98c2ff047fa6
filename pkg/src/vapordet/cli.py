"""Command-line front end.

    vapordet budget   --config paper-design.json
    vapordet dynamics --config cfg.json --out results/
    vapordet mc | sweep | optimize --config cfg.json [--seed N] [--format json|csv|both]

Configs are single JSON documents with a ``design`` block (plain SI keys or
unit-suffixed keys such as ``n_density_cm3``) plus optional per-command
blocks. Output files go to --out, else $VAPORDET_OUT, else ./vapordet-out.
Every file carries the package version, seed, config hash and the config
itself, so rerunning from it reproduces the file byte for byte.
"""

import argparse
import hashlib
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, dynamics, explorer, model, oracle, readout
from .species import validate_units

OUT_ENV = "VAPORDET_OUT"
DEFAULT_OUT = "vapordet-out"


class ConfigError(ValueError):
    pass


def bundled_config_path(name="paper-design.json"):
    return resources.files("vapordet") / "data" / name


def load_config(path):
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict) or "design" not in cfg:
        raise ConfigError(f"{path}: config must be a JSON object with a 'design' block")
    return cfg


def design_from_config(cfg):
    try:
        design = model.design_from_dict(cfg["design"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"design: {exc}") from None
    problems = validate_units(design)
    if problems:
        raise ConfigError("design failed validation:\n  " + "\n  ".join(problems))
    return design


def config_hash(cfg):
    return hashlib.sha256(canonical(cfg).encode()).hexdigest()


def canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def header(cfg, command):
    return {
        "vapordet_version": __version__,
        "command": command,
        "seed": cfg.get("rng_seed", 0),
        "config_sha256": config_hash(cfg),
        "config": canonical(cfg),
    }


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, (np.floating, np.integer)):
        return _jsonable(x.item())
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _rows_csv(path, hdr, rows):
    explorer.write_sweep_csv(rows, path, header=hdr)


def _wants(fmt, kind):
    return fmt in (kind, "both")


def _table(pairs):
    width = max(len(k) for k, _ in pairs)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in pairs)


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


# --- commands -------------------------------------------------------------


def cmd_budget(cfg, out, fmt):
    design = design_from_config(cfg)
    conv = cfg.get("convention", "ordinary")
    result = {"header": header(cfg, "budget"), "ordinary": model.summary(design, "ordinary"), "angular": model.summary(design, "angular")}
    result["selected"] = conv
    print(_table([(k, _fmt(v)) for k, v in result[conv].items()]), file=sys.stderr)
    print(json.dumps(_jsonable(result), indent=2, sort_keys=True))
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        if _wants(fmt, "json"):
            write_json(out / "budget.json", result)
        if _wants(fmt, "csv"):
            rows = [{"convention": c, **{k: v for k, v in result[c].items() if k not in ("convention", "warnings")}} for c in model.CONVENTIONS]
            _rows_csv(out / "budget.csv", header(cfg, "budget"), rows)
    return 0


def cmd_dynamics(cfg, out, fmt):
    design = design_from_config(cfg)
    block = cfg.get("dynamics", {})
    conv = cfg.get("convention", "ordinary")
    drive = block.get("photon_drive")
    if drive is None:
        drive = dynamics.normalized_photon_drive(design, conv)
    run_design = design.replace(omega_e=design.omega_e * block.get("escort_scale", 1.0))
    n_points = int(block.get("n_points", 201))
    closed = dynamics.solve_markov_square(run_design, drive, conv, n_points=n_points)
    numeric = dynamics.solve_markov_numeric(
        run_design, photon_drive=drive, convention=conv, rtol=block.get("rtol", 1e-12), atol=block.get("atol", 1e-14), n_points=n_points
    )
    scale = abs(closed.beta_final)
    agreement = abs(closed.beta_final - numeric.beta_final) / scale if scale > 0 else abs(numeric.beta_final)
    result = {
        "header": header(cfg, "dynamics"),
        "photon_drive": drive,
        "closed_form": {"p_absorb": closed.p_absorb, "p_scatter": closed.p_scatter, "beta_re": closed.beta_final.real, "beta_im": closed.beta_final.imag},
        "numeric": {"p_absorb": numeric.p_absorb, "p_scatter": numeric.p_scatter, "beta_re": numeric.beta_final.real, "beta_im": numeric.beta_final.imag},
        "agreement": agreement,
        "scatter_crosscheck": dynamics.scatter_loss_crosscheck(design, conv),
    }
    traj = None
    if block.get("oracle", {}).get("enabled", False):
        result["oracle"], traj = run_oracle(design, block["oracle"], conv)
    out.mkdir(parents=True, exist_ok=True)
    if _wants(fmt, "json"):
        write_json(out / "dynamics.json", result)
    if _wants(fmt, "csv"):
        for name, res in (("closed", closed), ("numeric", numeric)):
            path = out / f"trajectory_{name}.csv"
            _with_header(path, header(cfg, "dynamics"), lambda p, r=res: dynamics.write_trajectory_csv(r, p))
        if traj is not None:
            _with_header(out / "trajectory_oracle.csv", header(cfg, "dynamics"), traj.to_csv)
    print(json.dumps(_jsonable(result), indent=2, sort_keys=True))
    return 0


def run_oracle(design, block, conv):
    """Desk-scale oracle run: norm/excitation drift and Markov agreement."""
    modes = int(block.get("modes", 64))
    atoms = int(block.get("atoms", 8))
    T = design.pulse_duration
    omega_0 = 2 * math.pi * model.CONSTANTS.c / design.species.lambda_31
    grid = oracle.comb_grid(modes, block.get("bandwidth_Tp", 100.0) / T, omega_0, n_atoms=atoms, cell_length=design.cell_length, seed=int(block.get("seed", 0)))
    coupling = oracle.build_coupling(design, grid, convention=conv)
    init = oracle.gaussian_wavepacket(grid, 0.5 * T, block.get("width_Tp", 0.1) * T)
    traj = oracle.integrate_schrodinger(grid, coupling, init, T, method=block.get("method", "rk"))
    markov = oracle.markov_prediction(design, grid, coupling, init, T, convention=conv, rtol=1e-10, atol=1e-14)
    p_oracle = float(traj.p_absorb[-1])
    return {
        "modes": modes,
        "atoms": atoms,
        "p_absorb_oracle": p_oracle,
        "p_absorb_markov": float(markov.sum()),
        "relative_difference": float(markov.sum() / p_oracle - 1) if p_oracle > 0 else 0.0,
        "conservation_drift": traj.info["norm_drift"],
    }, traj


def _with_header(path, hdr, writer):
    writer(path)
    body = Path(path).read_text()
    Path(path).write_text("".join(f"# {k}: {v}\n" for k, v in hdr.items()) + body)


def cmd_mc(cfg, out, fmt):
    design = design_from_config(cfg)
    block = cfg.get("mc", {})
    conv = cfg.get("convention", "ordinary")
    seed = int(cfg.get("rng_seed", 0))
    n_range = block.get("n_range", [0, 1, 2])
    trials = int(block.get("trials", 10000))
    if "readout_duration" in block:
        duration = float(block["readout_duration"])
    else:
        duration = float(block.get("readout_duration_tro", 10.0)) * model.readout_time(design)
    try:
        report = readout.discrimination_report(
            design, n_range, trials, seed, readout_duration=duration, absorb_prob=block.get("absorb_prob"), dark_counts=block.get("dark_counts", True), convention=conv
        )
    except ValueError as exc:
        raise ConfigError(f"mc: {exc}") from None
    hdr = header(cfg, "mc")
    out.mkdir(parents=True, exist_ok=True)
    summary_rows = []
    for n, row in zip(report.n_values, report.confusion):
        m = np.arange(row.size)
        summary_rows.append({"n_true": int(n), "p_exact": float(row[n]) if n < row.size else 0.0, "mean_inferred": float(m @ row)})
    if _wants(fmt, "json"):
        report.write_json(out / "confusion.json", hdr)
        write_json(out / "mc_summary.json", {"header": hdr, "rows": summary_rows})
    if _wants(fmt, "csv"):
        report.write_csv(out / "confusion.csv", hdr)
        _rows_csv(out / "mc_summary.csv", hdr, summary_rows)
    print(json.dumps(_jsonable({"error_n_vs_n1": report.error_n_vs_n1, "rows": summary_rows}), indent=2, sort_keys=True))
    return 0


def _axes(block, design):
    axes = block.get("axes")
    if not axes:
        raise ConfigError("sweep: 'axes' must list at least one axis")
    items = axes.items() if isinstance(axes, dict) else axes
    out = []
    for key, values in items:
        name, factor = model.resolve_key(key, design.species)
        out.append((name, [v * factor for v in values]))
    return out


def cmd_sweep(cfg, out, fmt):
    design = design_from_config(cfg)
    block = cfg.get("sweep", {})
    try:
        spec = explorer.SweepSpec(design, _axes(block, design), block.get("outputs", list(explorer.METRICS)), cfg.get("convention", "ordinary"))
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None
    rows = explorer.run_sweep(spec)
    hdr = header(cfg, "sweep")
    out.mkdir(parents=True, exist_ok=True)
    if _wants(fmt, "csv"):
        _rows_csv(out / "sweep.csv", hdr, rows)
    if _wants(fmt, "json"):
        write_json(out / "sweep.json", {"header": hdr, "rows": rows})
    print(f"{len(rows)} grid points written to {out}", file=sys.stderr)
    return 0


def cmd_optimize(cfg, out, fmt):
    design = design_from_config(cfg)
    block = cfg.get("optimize", {})
    try:
        free = {}
        for key, (lo, hi) in block.get("free_fields", {}).items():
            name, factor = model.resolve_key(key, design.species)
            free[name] = (lo * factor, hi * factor)
        problem = explorer.OptimizationProblem(design, free, block.get("budget", 1.0), cfg.get("convention", "ordinary"), int(block.get("probe_points", 5)))
    except ValueError as exc:
        raise ConfigError(f"optimize: {exc}") from None
    result = explorer.optimize(problem)
    hdr = header(cfg, "optimize")
    out.mkdir(parents=True, exist_ok=True)
    summary = {"header": hdr, "values": result.values, "budget": result.budget.to_dict(), "net_dark_exact": result.net_dark_exact, "objective": result.objective, "evaluations": len(result.trace)}
    result.write_trace(out / "optimize_trace.jsonl", hdr)
    if _wants(fmt, "json"):
        write_json(out / "optimize.json", summary)
    if _wants(fmt, "csv"):
        _rows_csv(out / "optimize.csv", hdr, [{**result.values, "eta": result.budget.eta, "net_dark_exact": result.net_dark_exact}])
    print(json.dumps(_jsonable(summary), indent=2, sort_keys=True))
    return 0


HELP = {
    "budget": "efficiency budget, dark counts and atom number",
    "dynamics": "closed-form vs numeric absorption dynamics (optionally the mode-resolved oracle)",
    "mc": "Monte Carlo readout: confusion matrix and n vs n+1 errors",
    "sweep": "Cartesian parameter sweep",
    "optimize": "maximize efficiency under a net dark-count budget",
}

COMMANDS = {"budget": cmd_budget, "dynamics": cmd_dynamics, "mc": cmd_mc, "sweep": cmd_sweep, "optimize": cmd_optimize}


def build_parser():
    p = argparse.ArgumentParser(
        prog="vapordet",
        description="Atomic-vapor photon-number-resolving detector model.",
        epilog=f"Output directory: --out, else ${OUT_ENV}, else ./{DEFAULT_OUT}. "
        f"Without --config the bundled paper-design.json is used.",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        s = sub.add_parser(name, help=HELP[name])
        s.add_argument("--config", type=Path, help="JSON run config (default: bundled paper-design.json)")
        s.add_argument("--seed", type=int, help="overrides rng_seed from the config")
        s.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        s.add_argument("--format", choices=("json", "csv", "both"), default="both")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config or bundled_config_path())
        if args.seed is not None:
            cfg["rng_seed"] = args.seed
        if args.out is not None:
            out = args.out
        elif args.command == "budget":
            out = Path(os.environ[OUT_ENV]) if OUT_ENV in os.environ else None
        else:
            out = Path(os.environ.get(OUT_ENV, DEFAULT_OUT))
        return COMMANDS[args.command](cfg, out, args.format)
    except ConfigError as exc:
        print(f"vapordet {args.command}: config error: {exc}", file=sys.stderr)
        return 2
    except explorer.InfeasibleProblem as exc:
        print(f"vapordet {args.command}: infeasible: {exc}", file=sys.stderr)
        return 3
    except dynamics.IntegrationError as exc:
        print(f"vapordet {args.command}: integration failed: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"vapordet {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
