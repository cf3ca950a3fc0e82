"""Command-line interface: ``qlab <command> [options]``.

Commands
--------
solve          shoot one Delaunay orbit and export its samples
period-table   period, energy and v''(0) over a necksize grid
indicial       indicial roots from Floquet analysis of modes 0..jmax
symplectic     symplectic matrix on the deficiency space of k ends
qcheck         flat-gauge Q-curvature of a Delaunay profile

Settings are resolved as defaults < config file (``--config``, key=value
lines or JSON) < environment (``QLAB_<KEY>``) < command-line flags.  Exit
codes: 0 success, 1 usage error, 2 numerical failure.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .conformal import (delaunay_euclidean_profile, log_grid, q_curvature_radial,
                        write_profile_csv)
from .cylinder_ode import ToleranceConfig, hamiltonian_array, shoot_delaunay
from .dimension import make_params
from .errors import DomainError, QLabError
from .linearization import cylinder_indicial_closed_form, indicial_roots
from .symplectic import dH_deps, omega_matrix

__all__ = ["RunConfig", "main", "build_parser", "resolve_config"]

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
QCHECK_TOL = 1e-4


class UsageError(Exception):
    """Bad flags, config keys or values."""


# -- configuration ----------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one command."""

    command: str
    n: int = 5
    eps: tuple = ()
    eps_grid: tuple = ()
    relative: bool = False
    jmax: int = 10
    gamma_max: float = 10.0
    convention: str = "geometric"
    output_dir: str = "."
    format: str = "csv"
    tol_ode: float = 1e-10
    tol_shoot: float = 1e-9
    points_per_unit: int = 24
    jobs: int = 1

    @property
    def tolerances(self):
        return ToleranceConfig(ode_rel=self.tol_ode, ode_abs=self.tol_ode * 1e-2,
                               shoot_tol=self.tol_shoot)


_KEYS = {f.name for f in fields(RunConfig)} - {"command"}


def _parse_eps_list(text):
    text = str(text).strip()
    if not text:
        return ()
    if text.count(":") == 2:
        a, b, m = text.split(":")
        return tuple(float(x) for x in np.linspace(float(a), float(b), int(m)))
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        out.append("bar" if tok.lower() in ("bar", "eps_bar") else float(tok))
    return tuple(out)


def _as_bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


_CONVERT = {
    "n": int, "eps": _parse_eps_list, "eps_grid": _parse_eps_list, "relative": _as_bool,
    "jmax": int, "gamma_max": float, "convention": str, "output_dir": str,
    "format": str, "tol_ode": float, "tol_shoot": float, "points_per_unit": int,
    "jobs": int,
}


def _convert(key, value):
    if key not in _KEYS:
        raise UsageError(f"unknown setting {key!r}")
    if isinstance(value, (list, tuple)) and key in ("eps", "eps_grid"):
        value = ",".join(str(v) for v in value)
    try:
        return _CONVERT[key](value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value for {key}: {value!r}") from exc


def load_config_file(path):
    """Read settings from a JSON object or ``key = value`` lines (# comments)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad JSON config {path}: {exc}") from exc
    else:
        data = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            data[key.strip().replace("-", "_")] = value.strip()
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve_config(command, flags, environ=None):
    """Merge defaults, config file, ``QLAB_*`` environment and flags."""
    environ = os.environ if environ is None else environ
    merged = {}
    flags = dict(flags)
    config_path = flags.pop("config", None) or environ.get("QLAB_CONFIG")
    if config_path:
        for k, v in load_config_file(config_path).items():
            merged[k] = _convert(k, v)
    for key in sorted(_KEYS):
        env_key = "QLAB_" + key.upper()
        if env_key in environ:
            merged[key] = _convert(key, environ[env_key])
    for k, v in flags.items():
        if v is not None:
            merged[k] = _convert(k, v)
    cfg = RunConfig(command=command, **merged)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.n < 5:
        raise UsageError(f"n must be an integer >= 5, got {cfg.n}")
    if cfg.format not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    if cfg.convention not in ("geometric", "shifted"):
        raise UsageError("convention must be geometric or shifted")
    if not (cfg.tol_ode > 0 and cfg.tol_shoot > 0):
        raise UsageError("tolerances must be positive")
    if cfg.jmax < 1:
        raise UsageError("jmax must be >= 1")
    if cfg.jobs < 1:
        raise UsageError("jobs must be >= 1")
    if cfg.points_per_unit < 4:
        raise UsageError("points_per_unit must be >= 4")


def _necksizes(values, prm, relative):
    out = []
    for x in values:
        e = prm.eps_bar if x == "bar" else (x * prm.eps_bar if relative else x)
        if not math.isfinite(e) or e <= 0.0:
            raise UsageError(f"eps must be positive and finite, got {e!r}")
        if e > prm.eps_bar:
            raise UsageError(f"eps > eps_bar ≈ {prm.eps_bar:.6f} (got {e!r})")
        out.append(float(e))
    return out


# -- output helpers ---------------------------------------------------------

def _fmt(x):
    return "%.17g" % x


def _json_text(obj):
    """JSON with every float written as %.17g, keys in insertion order."""
    if isinstance(obj, dict):
        items = ", ".join(f"{json.dumps(str(k))}: {_json_text(v)}" for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_text(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return _fmt(x)
        return json.dumps(str(x))
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _write(cfg, stem, text):
    os.makedirs(cfg.output_dir, exist_ok=True)
    path = os.path.join(cfg.output_dir, f"{stem}.{cfg.format}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _tag(x):
    return ("%.6f" % x).rstrip("0").rstrip(".").replace(".", "p")


def _map(cfg, fn, items):
    if cfg.jobs == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(fn, items))


# -- commands ---------------------------------------------------------------

def cmd_solve(cfg, out):
    prm = make_params(cfg.n)
    if len(cfg.eps) != 1:
        raise UsageError("solve needs exactly one --eps")
    (eps,) = _necksizes(cfg.eps, prm, cfg.relative)
    sol = shoot_delaunay(eps, cfg.tolerances, prm)
    energy = hamiltonian_array(sol.y, prm)
    summary = {"n": cfg.n, "eps": sol.eps, "vpp0": sol.vpp0, "period": sol.period,
               "energy": sol.energy}
    if cfg.format == "csv":
        rows = [(t, *y, h) for t, y, h in zip(sol.t, sol.y.T, energy)]
        text = _csv_text(["t", "v", "v1", "v2", "v3", "H"], rows)
    else:
        text = _json_text({**summary, "t": sol.t, "v": sol.y[0], "v1": sol.y[1],
                           "v2": sol.y[2], "v3": sol.y[3], "H": energy}) + "\n"
    path = _write(cfg, f"orbit_n{cfg.n}_eps{_tag(eps)}", text)
    out.write(_json_text({**summary, "file": path}) + "\n")
    return EXIT_OK


def _period_row(args):
    eps, n, tol = args
    sol = shoot_delaunay(eps, tol, make_params(n))
    return (sol.eps, sol.period, sol.energy, sol.vpp0)


def cmd_period_table(cfg, out):
    prm = make_params(cfg.n)
    eps_list = sorted(_necksizes(cfg.eps_grid or cfg.eps, prm, cfg.relative))
    rows = _map(cfg, _period_row, [(e, cfg.n, cfg.tolerances) for e in eps_list])
    header = ["eps", "period", "energy", "vpp0"]
    if cfg.format == "csv":
        text = _csv_text(header, rows)
    else:
        text = _json_text({"n": cfg.n, "columns": header, "rows": rows}) + "\n"
    path = _write(cfg, f"period_table_n{cfg.n}", text)
    out.write(_csv_text(header, rows))
    out.write(f"# written to {path}\n")
    energies = [r[2] for r in rows]
    if any(b >= a for a, b in zip(energies, energies[1:])):
        out.write("# energy column is not strictly decreasing\n")
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_indicial(cfg, out):
    prm = make_params(cfg.n)
    if len(cfg.eps) != 1:
        raise UsageError("indicial needs exactly one --eps")
    (eps,) = _necksizes(cfg.eps, prm, cfg.relative)
    sol = shoot_delaunay(eps, cfg.tolerances, prm)
    ind = indicial_roots(sol, cfg.jmax, cfg.gamma_max, cfg.tolerances,
                         convention=cfg.convention)
    rows = ind.as_rows()
    # distance to the cylinder closed form, meaningful near eps_bar
    dev = 0.0
    for fd in ind.floquet:
        cf = cylinder_indicial_closed_form(prm, fd.j, cfg.convention)
        dev = max(dev, float(np.max(np.abs(np.sort(fd.exponents.real) - np.sort(cf.real)))))
    meta = {"n": cfg.n, "eps": sol.eps, "period": sol.period, "jmax": cfg.jmax,
            "gamma_max": cfg.gamma_max, "convention": cfg.convention,
            "gamma_1": ind.gamma_1, "gamma_1_nonradial": ind.gamma_1_nonradial,
            "closed_form_deviation": dev}
    if cfg.format == "csv":
        text = _csv_text(["eps", "j", "gamma", "multiplicity"], rows)
    else:
        text = _json_text({**meta, "roots": [
            {"j": j, "gamma": g, "multiplicity": m} for _, j, g, m in rows]}) + "\n"
    path = _write(cfg, f"indicial_n{cfg.n}_eps{_tag(eps)}", text)
    out.write(_json_text({**meta, "file": path}) + "\n")
    return EXIT_OK


def cmd_symplectic(cfg, out):
    prm = make_params(cfg.n)
    eps_list = _necksizes(cfg.eps, prm, cfg.relative)
    if not eps_list:
        raise UsageError("symplectic needs --eps with at least one value")
    tol = cfg.tolerances
    om = omega_matrix(eps_list, None, prm, tol)
    checks = []
    for e, a in zip(eps_list, om.blocks):
        if e < prm.eps_bar * (1.0 - 5e-4):
            d = dH_deps(e, None, prm, tol)
            checks.append({"eps": e, "A": a, "dH_deps": d,
                           "identity_error": abs(a + d) / abs(d)})
        else:
            checks.append({"eps": e, "A": a, "dH_deps": None, "identity_error": None})
    text = om.to_csv() if cfg.format == "csv" else _json_text(om.to_dict()) + "\n"
    path = _write(cfg, f"omega_n{cfg.n}_k{om.k}", text)
    out.write(_json_text({"k": om.k, "det": om.det(), "skew_defect": om.skew_defect(),
                          "ends": checks, "file": path}) + "\n")
    return EXIT_OK


def cmd_qcheck(cfg, out):
    prm = make_params(cfg.n)
    if len(cfg.eps) != 1:
        raise UsageError("qcheck needs exactly one --eps")
    (eps,) = _necksizes(cfg.eps, prm, cfg.relative)
    sol = shoot_delaunay(eps, cfg.tolerances, prm)
    prof = delaunay_euclidean_profile(sol, log_grid(0.0, 2.0 * sol.period, cfg.points_per_unit))
    qc = q_curvature_radial(prof, prm)
    if cfg.format == "csv":
        text = write_profile_csv(prof)
    else:
        text = _json_text({"r": prof.r, "u": prof.u}) + "\n"
    path = _write(cfg, f"profile_n{cfg.n}_eps{_tag(eps)}", text)
    err = qc.max_rel_error
    out.write(_json_text({"n": cfg.n, "eps": sol.eps, "q_target": prm.q_target,
                          "max_rel_error": err, "pass": err < QCHECK_TOL,
                          "file": path}) + "\n")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve, "period-table": cmd_period_table, "indicial": cmd_indicial,
    "symplectic": cmd_symplectic, "qcheck": cmd_qcheck,
}


# -- argument parsing -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="qlab", description="Delaunay-type constant Q-curvature metrics.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    common = _Parser(add_help=False)
    common.add_argument("--n", type=int, help="dimension (>= 5)")
    common.add_argument("--config", help="config file (key=value lines or JSON)")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--tol-ode", dest="tol_ode", type=float,
                        help="relative integrator tolerance (absolute is 1e-2 of it)")
    common.add_argument("--tol-shoot", dest="tol_shoot", type=float)
    common.add_argument("--relative", action="store_const", const=True,
                        help="read necksizes as multiples of eps_bar")
    common.add_argument("--jobs", type=int, help="worker processes for grid commands")
    helps = {
        "solve": "shoot one orbit", "period-table": "period and energy over a grid",
        "indicial": "indicial roots", "symplectic": "deficiency-space symplectic matrix",
        "qcheck": "Q-curvature check",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--eps", help="necksize (comma list; 'bar' means eps_bar)")
        if name == "period-table":
            p.add_argument("--eps-grid", dest="eps_grid",
                           help="comma list or start:stop:count")
        if name == "indicial":
            p.add_argument("--jmax", type=int)
            p.add_argument("--gamma-max", dest="gamma_max", type=float)
            p.add_argument("--convention", choices=("geometric", "shifted"))
        if name == "qcheck":
            p.add_argument("--points-per-unit", dest="points_per_unit", type=int)
    return parser


def main(argv=None, out=None, err=None, environ=None):
    """Run the CLI; returns the exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        flags = {k: v for k, v in vars(ns).items() if k != "command"}
        cfg = resolve_config(ns.command, flags, environ)
        return COMMANDS[cfg.command](cfg, out)
    except UsageError as exc:
        err.write(f"qlab: error: {exc}\n")
        return EXIT_USAGE
    except DomainError as exc:
        err.write(f"qlab: error: {exc}\n")
        return EXIT_USAGE
    except QLabError as exc:
        err.write(f"qlab: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        err.write(f"qlab: numerical failure: {exc}\n")
        return EXIT_NUMERIC


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
