"""Batch command-line front end.

Every run writes its outputs and a ``manifest.json`` into ``--out``. The
manifest echoes the effective config, so ``synclab <cmd> --config
out/manifest.json`` replays the run and reproduces the same output bytes.

Exit codes: 0 on success whatever the verdict, 2 for an invalid config or
input, 3 when a trajectory diverges (partial output is still written).
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import annulus as ann
from . import certifier as cert
from . import linear
from . import sync
from .structure import ProductStructure, drive_from_config, structure_from_config
from .svg import curves_plot, downsample, line_plot
from .systems import DivergedError, DomainError, IntegratorConfig, integrate, orbit, system_from_config


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "orbit": {"system": {"system": "polar"}, "x0": [1.5, 0.0], "n": 100, "svg": False,
              "svg_columns": ["x0", "x1"]},
    "integrate": {"system": {"system": "lorenz"}, "x0": [1.0, 1.0, 1.0], "T": 10.0, "h": 1e-3,
                  "svg": False, "svg_columns": ["x0", "x2"]},
    "sync-test": {"system": {"system": "henon"}, "structure": {"drive": [1]}, "mode": "orbit",
                  "orbit_starts": [[0.1, 0.1], [0.3, -0.2]], "drives": [{"kind": "iid_uniform", "seed": 1}],
                  "n_steps": 200, "n_pairs": 10, "init_box": [-1.0, 1.0], "delta_sync": 1e-8,
                  "delta_fail": 1e-2, "sample_dt": 1.0, "h": 1e-3, "record_every": 1},
    "lyapunov": {"system": {"system": "henon"}, "structure": {"drive": [1]}, "orbit_start": [0.1, 0.1],
                 "n": 2000, "dt": 1e-2, "h": 1e-3},
    "linsync": {"matrix": [[2.0, 0.0], [0.0, 0.5]], "kind": "map", "structure": None,
                "search": False, "budget": 1000, "density": None},
    "annulus": {"system": {"system": "polar"}, "annuli": [[1.0, 2.0], [3.0, 4.0]], "check": "type",
                "n_iter": 1_000_000, "tol": 1e-3, "grid_n": 1024, "svg": False, "svg_iterates": 5},
    "certify": {"system": {"system": "polar"}, "n_rotations": 12, "n_shears": 0, "structures": None,
                "window": [0.0, 5.0], "grid_step": 1e-4, "section_step": 1e-3},
    "perturb-sweep": {"system": {"system": "polar"}, "eps_list": [1e-5, 1e-3, 1e-1], "n_samples": 5,
                      "n_rotations": 12, "n_modes": 3, "direction": "random", "window": [0.0, 5.0],
                      "critical": {"direction": "radial_in", "eps_lo": 1e-5, "eps_hi": 1e-1, "iters": 10}},
    "plot": {"csv": None, "x": None, "y": None, "where": None, "title": "", "log_y": False, "svg": "plot.svg"},
}


@dataclass
class Result:
    outputs: dict
    summary: dict
    exit_code: int = 0
    partial: bool = False


# --------------------------------------------------------------------------
# text formats


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# config helpers


def _system(cfg):
    try:
        return system_from_config(cfg["system"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad system config: {exc}") from exc


def _structure(cfg, d):
    return structure_from_config(cfg.get("structure"), d)


def _state_header(d):
    return [f"x{i}" for i in range(d)]


def _plot_pair(header, rows, columns, title):
    try:
        ia, ib = header.index(columns[0]), header.index(columns[1])
    except ValueError as exc:
        raise ConfigError(f"unknown svg column: {exc}") from exc
    idx = downsample(len(rows))
    arr = np.asarray(rows, dtype=float)[idx]
    return line_plot(arr[:, ia], [arr[:, ib]], [columns[1]], title=title, xlabel=columns[0])


# --------------------------------------------------------------------------
# commands


def cmd_orbit(cfg, args) -> Result:
    system = _system(cfg)
    if system.kind != "map":
        raise ConfigError("orbit needs a map; use integrate for flows")
    n = int(cfg["n"])
    x0 = np.asarray(cfg["x0"], dtype=float)
    if x0.size != system.dim:
        raise ConfigError("x0 has the wrong dimension")
    partial, code, summary = False, 0, {"rows": n + 1}
    try:
        states = orbit(system, x0, n).states
    except DivergedError as exc:
        states = exc.partial.states
        partial, code = True, 3
        summary = {"rows": int(states.shape[0]), "diverged_after": exc.last_index}
    header = ["n"] + _state_header(system.dim)
    rows = [[i] + list(s) for i, s in enumerate(states)]
    outputs = {"orbit.csv": to_csv(header, rows)}
    if cfg.get("svg"):
        outputs["orbit.svg"] = _plot_pair(header, rows, cfg["svg_columns"], "orbit")
    return Result(outputs, summary, code, partial)


def cmd_integrate(cfg, args) -> Result:
    system = _system(cfg)
    if system.kind != "flow":
        raise ConfigError("integrate needs a flow; use orbit for maps")
    icfg = IntegratorConfig(h=float(cfg["h"]))
    partial, code = False, 0
    try:
        traj = integrate(system, cfg["x0"], float(cfg["T"]), icfg)
        states = traj.states
        summary = {"rows": int(states.shape[0])}
    except DivergedError as exc:
        states = exc.partial.states if exc.partial is not None else np.empty((0, system.dim))
        partial, code = True, 3
        summary = {"rows": int(states.shape[0]), "diverged_after": exc.last_index}
    header = ["t"] + _state_header(system.dim)
    rows = [[i * icfg.h] + list(s) for i, s in enumerate(states)]
    outputs = {"integrate.csv": to_csv(header, rows)}
    if cfg.get("svg"):
        outputs["integrate.svg"] = _plot_pair(header, rows, cfg["svg_columns"], "trajectory")
    return Result(outputs, summary, code, partial)


def _trial_config(cfg) -> sync.TrialConfig:
    return sync.TrialConfig(
        n_steps=int(cfg["n_steps"]), n_pairs=int(cfg["n_pairs"]), init_box=tuple(cfg["init_box"]),
        delta_sync=float(cfg["delta_sync"]), delta_fail=float(cfg["delta_fail"]), seed=int(cfg["seed"]),
        sample_dt=float(cfg["sample_dt"]), integrator=IntegratorConfig(h=float(cfg["h"])),
        record_every=int(cfg["record_every"]))


def cmd_sync_test(cfg, args) -> Result:
    system = _system(cfg)
    s = _structure(cfg, system.dim)
    tcfg = _trial_config(cfg)
    if cfg["mode"] == "orbit":
        v = sync.sync_test(system, s, tcfg, [np.asarray(p, dtype=float) for p in cfg["orbit_starts"]])
    elif cfg["mode"] == "absolute":
        drives = [drive_from_config(d, system, s) for d in cfg["drives"]]
        v = sync.absolute_sync_test(system, s, tcfg, drives)
    else:
        raise ConfigError("mode must be 'orbit' or 'absolute'")
    rows = [[f"{di}_{j}", i * tcfg.record_every, d]
            for di, j in sorted(v.series) for i, d in enumerate(v.series[(di, j)])]
    return Result({"verdict.json": to_json(v.to_json()),
                   "distances.csv": to_csv(["pair_id", "n", "distance"], rows)},
                  {"verdict": v.verdict, "worst_final_distance": v.worst_final_distance})


def cmd_lyapunov(cfg, args) -> Result:
    system = _system(cfg)
    s = _structure(cfg, system.dim)
    lam = sync.conditional_lyapunov(system, s, np.asarray(cfg["orbit_start"], dtype=float), int(cfg["n"]),
                                    dt=float(cfg["dt"]), cfg=IntegratorConfig(h=float(cfg["h"])))
    out = {"conditional_lyapunov": lam, "negative": lam < 0.0,
           "units": "per unit time" if system.kind == "flow" else "per iterate"}
    return Result({"lyapunov.json": to_json(out)}, {"conditional_lyapunov": lam})


def cmd_linsync(cfg, args) -> Result:
    out, summary = {}, {}
    if cfg.get("matrix") is not None:
        A = np.asarray(cfg["matrix"], dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError("matrix must be square")
        s = _structure(cfg, A.shape[0])
        rep = linear.decide(A, s, cfg["kind"], seed=int(cfg["seed"]))
        out["report"] = rep.to_json()
        summary["synchronizable"] = rep.synchronizable
        if cfg.get("search"):
            found = linear.search_structure(A, cfg["kind"], int(cfg["budget"]), int(cfg["seed"]))
            out["search"] = None if found is None else found.to_config()
            summary["search_found"] = found is not None
    dens = cfg.get("density")
    if dens:
        res = linear.density_experiment(int(dens.get("d", 3)), int(dens.get("n_samples", 50)),
                                        int(dens.get("budget", 1000)), int(cfg["seed"]),
                                        dens.get("kind", cfg["kind"]), dens.get("family", "gaussian"))
        out["density"] = res.to_json()
        summary["density_fraction"] = res.fraction
    if not out:
        raise ConfigError("linsync needs 'matrix' or 'density'")
    return Result({"linsync.json": to_json(out)}, summary)


def cmd_annulus(cfg, args) -> Result:
    system = _system(cfg)
    acfg = ann.AnnulusConfig(n_iter=int(cfg["n_iter"]), tol=float(cfg["tol"]), grid_n=int(cfg["grid_n"]))
    check = args.check or cfg["check"]
    if check == "check":
        check = "type"
    if check == "R":
        rep = ann.condition_R_report(system, cfg["annuli"], acfg)
        reports, payload = rep.reports, rep.to_json()
        summary = {"condition_R": rep.overall}
    elif check == "type":
        reports = [ann.type_report(ann.AnnulusAdapter(system, float(a), float(b)), None, acfg)
                   for a, b in cfg["annuli"]]
        payload = {"annuli": [r.to_json() for r in reports]}
        summary = {"type_Q": [r.type_Q for r in reports]}
    else:
        raise ConfigError("check must be 'type' or 'R'")
    header = ["r_in", "r_out", "condition_i", "type_P", "type_Q", "witness_ii", "witness_iii"]
    rows = [[r.annulus[0], r.annulus[1], r.condition_i.passed, r.type_P, r.type_Q,
             "" if r.condition_ii.witness is None else r.condition_ii.witness,
             "" if r.condition_iii.witness is None else r.condition_iii.witness] for r in reports]
    outputs = {"annulus.json": to_json(payload), "annulus.csv": to_csv(header, rows)}
    if cfg.get("svg"):
        for i, r in enumerate(reports):
            outputs[f"annulus_{i}.svg"] = _annulus_svg(system, r.annulus, int(cfg.get("svg_iterates", 5)))
    return Result(outputs, summary)


def _annulus_svg(system, annulus, n_iterates):
    """Boundary circles, the middle circle C, F(C) and a few forward iterates."""
    lo, hi = annulus
    ang = np.linspace(0.0, 2.0 * np.pi, 513)
    circ = np.column_stack((np.cos(ang), np.sin(ang)))
    c = 0.5 * (lo + hi)
    curves = [(lo * circ[:, 0], lo * circ[:, 1]), (hi * circ[:, 0], hi * circ[:, 1]),
              (c * circ[:, 0], c * circ[:, 1])]
    labels = [f"r={lo:g}", f"r={hi:g}", "C"]
    P = c * circ
    for k in range(1, n_iterates + 1):
        P = system.apply_batch(P)
        curves.append((P[:, 0], P[:, 1]))
        labels.append("F(C)" if k == 1 else f"F^{k}(C)")
    return curves_plot(curves, labels, title=f"annulus [{lo:g}, {hi:g}]", equal_aspect=True)


def _structures(cfg):
    if cfg.get("structures"):
        return [structure_from_config(c, 2) for c in cfg["structures"]]
    return cert.sampled_structures(int(cfg["n_rotations"]), int(cfg.get("n_shears", 0)), int(cfg["seed"]))


def cmd_certify(cfg, args) -> Result:
    system = _system(cfg)
    structures = _structures(cfg)
    ccfg = cert.CertifyConfig(window=tuple(cfg["window"]), grid_step=float(cfg["grid_step"]))
    certs = cert.certify(system, structures, ccfg)
    rows = [[i, len(c.fixed_points), len(c.transversal), c.verdict] for i, c in enumerate(certs)]
    lo, hi = ccfg.window
    outputs = {"certify.json": to_json({"certificates": [c.to_json() for c in certs]}),
               "certify.csv": to_csv(["structure_id", "n_fixed_points", "n_transversal", "verdict"], rows)}
    first = next((c for c in certs if c.fixed_point is not None), None)
    if first is not None:
        psi = cert.slave_section(system, first.structure, first.fixed_point)
        t = np.linspace(lo, hi, int(round((hi - lo) / float(cfg["section_step"]))) + 1)
        p = psi(t)
        outputs["section.csv"] = to_csv(["t", "psi", "psi_minus_t"], zip(t, p, p - t))
    return Result(outputs, {"verdicts": [c.verdict for c in certs]})


def cmd_perturb_sweep(cfg, args) -> Result:
    system = _system(cfg)
    structures = cert.rotated_structures(int(cfg["n_rotations"]))
    ccfg = cert.CertifyConfig(window=tuple(cfg["window"]))
    res = cert.perturbation_sweep(system, cfg["eps_list"], int(cfg["n_samples"]), structures,
                                  int(cfg["seed"]), ccfg, int(cfg["n_modes"]), cfg["direction"],
                                  workers=max(1, int(args.threads)))
    header = ["epsilon", "sample", "structure_id", "n_fixed_points", "verdict"]
    rows = [[r[k] for k in header] for r in res.rows]
    payload = {"fractions": [{"epsilon": e, "success_fraction": f} for e, f in res.fractions.items()]}
    crit = cfg.get("critical")
    if crit:
        try:
            ce = cert.estimate_critical_epsilon(
                system, [ProductStructure.identity()], int(cfg["seed"]), float(crit["eps_lo"]),
                float(crit["eps_hi"]), int(crit["iters"]), crit.get("direction", "radial_in"),
                int(cfg["n_modes"]), ccfg)
            payload["critical_epsilon"] = ce.to_json()
        except DomainError as exc:
            payload["critical_epsilon"] = {"error": str(exc)}
    return Result({"sweep.csv": to_csv(header, rows), "sweep.json": to_json(payload)},
                  {"fractions": payload["fractions"]})


def cmd_plot(cfg, args) -> Result:
    path = args.csv or cfg.get("csv")
    xcol = args.x or cfg.get("x")
    ycols = args.y.split(",") if args.y else cfg.get("y")
    if not path or not xcol or not ycols:
        raise ConfigError("plot needs a csv path, an x column and y columns")
    if isinstance(ycols, str):
        ycols = [ycols]
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            table = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if len(table) < 2:
        raise ConfigError("CSV has no data rows")
    header, body = table[0], table[1:]
    where = args.where or cfg.get("where")
    if where:
        col, _, value = where.partition("=")
        if col not in header:
            raise ConfigError(f"missing column(s): {col}")
        k = header.index(col)
        body = [row for row in body if row[k] == value]
        if not body:
            raise ConfigError(f"no rows with {where}")
    missing = [c for c in [xcol] + list(ycols) if c not in header]
    if missing:
        raise ConfigError(f"missing column(s): {', '.join(missing)}")
    cols = [header.index(c) for c in [xcol] + list(ycols)]
    try:
        data = np.array([[float(row[k]) for k in cols] for row in body])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad CSV data: {exc}") from exc
    idx = downsample(data.shape[0])
    x = data[idx, 0]
    ys = [data[idx, 1 + i] for i in range(len(ycols))]
    title = args.title or cfg.get("title") or os.path.basename(path)
    doc = line_plot(x, ys, ycols, title=title, xlabel=xcol, log_y=bool(cfg.get("log_y")))
    return Result({cfg.get("svg") or "plot.svg": doc}, {"rows": int(data.shape[0])})


COMMANDS = {
    "orbit": cmd_orbit,
    "integrate": cmd_integrate,
    "sync-test": cmd_sync_test,
    "lyapunov": cmd_lyapunov,
    "linsync": cmd_linsync,
    "annulus": cmd_annulus,
    "certify": cmd_certify,
    "perturb-sweep": cmd_perturb_sweep,
    "plot": cmd_plot,
}


# --------------------------------------------------------------------------
# driver


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON config or a previous manifest.json")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory (default: out)")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    ap = argparse.ArgumentParser(prog="synclab", parents=[common],
                                 description="Master-slave synchronization experiments.")
    ap.add_argument("--version", action="version", version=f"synclab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "annulus":
            p.add_argument("check", nargs="?", choices=["check", "type", "R"], default=None,
                           help="'check' or 'type': per-annulus type report; 'R': condition (R)")
        if name == "plot":
            p.add_argument("csv", nargs="?", default=None)
            p.add_argument("--x", default=None)
            p.add_argument("--y", default=None, help="comma-separated column names")
            p.add_argument("--title", default=None)
            p.add_argument("--where", default=None, help="keep rows with COLUMN=VALUE")
    return ap


def load_config(command: str, path) -> dict:
    cfg = copy.deepcopy(DEFAULTS[command])
    if path is None:
        cfg.setdefault("seed", 0)
        return cfg
    try:
        with open(path, encoding="utf-8") as fh:
            user = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    if "manifest_version" in user:
        if user.get("command") != command:
            raise ConfigError(f"manifest is for command {user.get('command')!r}, not {command!r}")
        user = user["config"]
    unknown = set(user) - set(cfg) - {"seed"}
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    cfg.update(user)
    cfg.setdefault("seed", 0)
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for k, v in (("config", None), ("seed", None), ("out", "out"), ("threads", 1)):
        if not hasattr(args, k):
            setattr(args, k, v)
    for k in ("check", "csv", "x", "y", "title", "where"):
        if not hasattr(args, k):
            setattr(args, k, None)
    started = time.perf_counter()
    try:
        cfg = load_config(args.command, args.config)
        if args.seed is not None:
            cfg["seed"] = int(args.seed)
        result = COMMANDS[args.command](cfg, args)
    except (ConfigError, DomainError, KeyError, TypeError, ValueError) as exc:
        print(f"synclab: error: {exc}", file=sys.stderr)
        return 2
    except DivergedError as exc:
        print(f"synclab: diverged: {exc}", file=sys.stderr)
        write_atomic(os.path.join(args.out, "manifest.json"), to_json(
            _manifest(args.command, cfg, [], {"diverged_after": exc.last_index}, True, started)))
        return 3
    for name, text in result.outputs.items():
        write_atomic(os.path.join(args.out, name), text)
    manifest = _manifest(args.command, cfg, sorted(result.outputs), result.summary, result.partial, started)
    write_atomic(os.path.join(args.out, "manifest.json"), to_json(manifest))
    print(to_json(result.summary), end="")
    if result.exit_code == 3:
        print("synclab: diverged; partial output written", file=sys.stderr)
    return result.exit_code


def _manifest(command, cfg, outputs, summary, partial, started) -> dict:
    return {"manifest_version": 1, "tool": "synclab", "version": __version__, "command": command,
            "config": cfg, "outputs": outputs, "summary": summary, "partial": partial,
            "wall_time_s": round(time.perf_counter() - started, 6)}


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
