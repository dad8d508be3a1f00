"""Command-line entry point: classify / solve / analyze / scan / mixing /
jets workflows with machine-readable JSON reports, CSV traces, and raw grid
binaries. Every report embeds the resolved run configuration so a run can be
reproduced bit-identically at a fixed thread count."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, asdict

import click
import numpy as np

from . import classify as cls
from . import conjugacy as cj
from . import fields
from . import harmonic
from . import jets as jets_mod
from . import mixing as mixing_mod
from .errors import ConfigInvalid, ToralLabError
from .exact_algebra import IntMatrix
from .spectral import build_splitting
from .torus_maps import TrigPolyMap, GridSampledMap

ARTIFACT_VERSION = "1"


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)    # named input paths
    params: dict = field(default_factory=dict)    # numeric parameters
    seed: int = 0
    threads: int | None = None
    out_dir: str = "."

    def to_json(self) -> dict:
        return asdict(self)


def _resolve_threads(threads: int | None) -> int | None:
    if threads is not None:
        return threads
    env = os.environ.get("TORAL_LAB_THREADS")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise ConfigInvalid(f"TORAL_LAB_THREADS={env!r} is not an integer")


class _ThreadLimit:
    """Apply the thread cap to BLAS/FFT pools where possible; no-op if the
    limiter package is absent or no cap was requested."""

    def __init__(self, threads: int | None):
        self.threads = threads
        self._ctx = None

    def __enter__(self):
        if self.threads is None:
            return self
        try:
            from threadpoolctl import threadpool_limits
            self._ctx = threadpool_limits(limits=self.threads)
        except ImportError:
            pass
        return self

    def __exit__(self, *exc):
        if self._ctx is not None:
            self._ctx.__exit__(*exc)
        return False


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigInvalid(f"cannot read JSON from {path}: {e}")
    return data


def _load_matrix(path: str) -> IntMatrix:
    data = _read_json(path)
    if isinstance(data, dict):
        data = data.get("matrix")
    if not isinstance(data, list):
        raise ConfigInvalid(f"{path}: expected a matrix (list of rows)")
    try:
        return IntMatrix(data)
    except (ValueError, TypeError) as e:
        raise ConfigInvalid(f"{path}: {e}")


def _load_map(path: str) -> TrigPolyMap:
    data = _read_json(path)
    if not isinstance(data, dict) or "L" not in data:
        raise ConfigInvalid(f"{path}: expected a map object with an 'L' entry")
    try:
        return TrigPolyMap.from_json(data)
    except (KeyError, ValueError, TypeError) as e:
        raise ConfigInvalid(f"{path}: malformed map: {e}")


def _write_report(out_dir: str, name: str, config: RunConfig, payload: dict) -> str:
    os.makedirs(out_dir, exist_ok=True)
    doc = {"artifact_version": ARTIFACT_VERSION,
           "config": config.to_json(),
           **payload}
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_csv(out_dir: str, name: str, header: list, rows) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
    return path


def write_grid_field(out_dir: str, name: str, gf: fields.GridField) -> str:
    """Raw row-major float64 binary plus a JSON header describing it."""
    os.makedirs(out_dir, exist_ok=True)
    bin_name = name + ".bin"
    values = np.ascontiguousarray(gf.values, dtype=np.float64)
    values.tofile(os.path.join(out_dir, bin_name))
    header = {"artifact_version": ARTIFACT_VERSION, "kind": "grid_field",
              "shape": list(values.shape), "d": gf.d, "dtype": "float64",
              "order": "C", "bin": bin_name}
    path = os.path.join(out_dir, name + ".json")
    with open(path, "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_grid_field(path: str) -> fields.GridField:
    header = _read_json(path)
    if header.get("kind") != "grid_field":
        raise ConfigInvalid(f"{path}: not a grid_field header")
    bin_path = os.path.join(os.path.dirname(path) or ".", header["bin"])
    try:
        values = np.fromfile(bin_path, dtype=np.float64)
    except OSError as e:
        raise ConfigInvalid(f"cannot read {bin_path}: {e}")
    shape = tuple(header["shape"])
    if values.size != int(np.prod(shape)):
        raise ConfigInvalid(f"{bin_path}: size does not match header shape")
    d = int(header.get("d", len(shape)))
    return fields.GridField(values.reshape(shape), d)


@click.group()
def main():
    """Numerical laboratory for toral automorphisms: classification,
    conjugacy solvers, harmonic diagnostics, mixing, and jet growth."""


_threads_opt = click.option("--threads", type=int, default=None,
                            help="thread cap (fallback: TORAL_LAB_THREADS)")
_out_opt = click.option("--out", "out_dir", default=".", show_default=True,
                        help="output directory")


@main.command("classify")
@click.argument("matrix_path")
@_threads_opt
@_out_opt
def classify_cmd(matrix_path, threads, out_dir):
    """Classify an integer matrix given as JSON (list of rows)."""
    threads = _resolve_threads(threads)
    config = RunConfig(command="classify", inputs={"matrix": matrix_path},
                       threads=threads, out_dir=out_dir)
    with _ThreadLimit(threads):
        M = _load_matrix(matrix_path)
        record = cls.classify(M)
    path = _write_report(out_dir, "classify.json", config,
                         {"matrix": M.entries, "classification": record.to_json()})
    click.echo(path)


@main.command("solve")
@click.option("--map", "map_path", required=True, help="map JSON (L + modes)")
@click.option("--grid", "grid_n", type=int, default=64, show_default=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.option("--components", default="usc", show_default=True,
              help="subset of 'usc' to solve")
@_threads_opt
@_out_opt
def solve_cmd(map_path, grid_n, tol, components, threads, out_dir):
    """Solve the conjugacy equation for f = L + R component by component."""
    threads = _resolve_threads(threads)
    if not components or any(c not in "usc" for c in components):
        raise ConfigInvalid(f"--components must be a subset of 'usc', got {components!r}")
    config = RunConfig(command="solve", inputs={"map": map_path},
                       params={"grid": grid_n, "tol": tol,
                               "components": components},
                       threads=threads, out_dir=out_dir)
    with _ThreadLimit(threads):
        f = _load_map(map_path)
        splitting = build_splitting(f.L)
        payload: dict = {"components": {}}
        solved = {}
        dims = {"s": splitting.E_s.shape[1], "c": splitting.E_c.shape[1],
                "u": splitting.E_u.shape[1]}
        for comp in components:
            if dims[comp] == 0:
                payload["components"][comp] = {"dimension": 0, "skipped": True}
                continue
            if comp == "u":
                sol = cj.solve_unstable(f, splitting, grid_n, tol=tol)
                info = {"iterations": sol.iterations,
                        "contraction_ratio": sol.contraction_ratio}
            elif comp == "s":
                sol = cj.solve_stable(f, splitting, grid_n, tol=tol)
                info = {"iterations": sol.iterations,
                        "contraction_ratio": sol.contraction_ratio}
            else:
                sol = cj.solve_center(f, splitting, grid_n, tol=max(tol, 1e-9))
                ret = sol.retained_mask
                ratios = sol.increment_ratios
                ok = np.where(np.isnan(ratios), False, ratios < 1.0)
                info = {"terms_used": sol.terms_used,
                        "ball_radius": sol.ball_radius,
                        "retained": int(ret.sum()),
                        "converged": int(sol.converged_mask.sum()),
                        "ratio_below_one_fraction":
                            float(ok[ret].mean()) if ret.any() else 1.0}
            solved[comp] = sol.field
            info["dimension"] = dims[comp]
            info["field"] = f"h_{comp}.json"
            write_grid_field(out_dir, f"h_{comp}", sol.field)
            payload["components"][comp] = info
        if set(components) >= {c for c in "usc" if dims[c] > 0}:
            full = cj.assemble_and_validate(
                f, splitting, h_s=solved.get("s"), h_u=solved.get("u"),
                h_c=solved.get("c"))
            payload["residual_sup"] = full.residual_sup
            payload["jacobian_sign_consistency"] = full.jacobian_sign_consistency
    path = _write_report(out_dir, "solve.json", config, payload)
    click.echo(path)


@main.command("analyze-regularity")
@click.argument("field_path")
@_threads_opt
@_out_opt
def analyze_cmd(field_path, threads, out_dir):
    """Coefficient-decay report (exponential vs power) for a solved field."""
    threads = _resolve_threads(threads)
    config = RunConfig(command="analyze-regularity",
                       inputs={"field": field_path},
                       threads=threads, out_dir=out_dir)
    with _ThreadLimit(threads):
        gf = read_grid_field(field_path)
        rep = harmonic.regularity_report(gf)
    _write_csv(out_dir, "regularity_fit.csv",
               ["shell_radius", "shell_max"], rep.fit_csv)
    path = _write_report(out_dir, "regularity.json", config, {
        "model": rep.model, "exp_rate": rep.exp_rate,
        "power_exponent": rep.power_exponent,
        "exp_residual": rep.exp_residual, "power_residual": rep.power_residual,
        "floor": rep.floor, "trace_csv": "regularity_fit.csv"})
    click.echo(path)


@main.command("dioph-scan")
@click.option("--matrix", "matrix_path", required=True)
@click.option("--subspace", type=click.Choice(["u", "s", "c"]), default="u",
              show_default=True)
@click.option("--radius", type=float, default=100.0, show_default=True)
@click.option("--exponent", type=int, default=None,
              help="norm exponent (default: ambient dimension)")
@_threads_opt
@_out_opt
def dioph_cmd(matrix_path, subspace, radius, exponent, threads, out_dir):
    """Scan lattice points for the Diophantine constant of an invariant
    subspace."""
    threads = _resolve_threads(threads)
    config = RunConfig(command="dioph-scan", inputs={"matrix": matrix_path},
                       params={"subspace": subspace, "radius": radius,
                               "exponent": exponent},
                       threads=threads, out_dir=out_dir)
    with _ThreadLimit(threads):
        M = _load_matrix(matrix_path)
        splitting = build_splitting(M)
        V = {"u": splitting.E_u, "s": splitting.E_s, "c": splitting.E_c}[subspace]
        if V.shape[1] == 0:
            raise ConfigInvalid(f"subspace '{subspace}' of this matrix is trivial")
        trace = os.path.join(out_dir, "dioph_trace.csv")
        os.makedirs(out_dir, exist_ok=True)
        scan = harmonic.diophantine_scan(V, radius, exponent=exponent,
                                         trace_csv=trace)
    path = _write_report(out_dir, "dioph_scan.json", config, {
        "empirical_K": scan.empirical_K, "witness": scan.witness,
        "katznelson_K": scan.katznelson_K,
        "katznelson_witness": scan.katznelson_witness,
        "points_scanned": scan.points_scanned,
        "trace_csv": "dioph_trace.csv"})
    click.echo(path)


@main.command("mixing")
@click.option("--matrix", "matrix_path", required=True)
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--trials", type=int, default=8, show_default=True)
@click.option("--n-max", type=int, default=50, show_default=True)
@click.option("--radius", type=float, default=96.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_threads_opt
@_out_opt
def mixing_cmd(matrix_path, alpha, trials, n_max, radius, seed, threads, out_dir):
    """Empirical correlation-decay fit on Holder test fields."""
    threads = _resolve_threads(threads)
    config = RunConfig(command="mixing", inputs={"matrix": matrix_path},
                       params={"alpha": alpha, "trials": trials,
                               "n_max": n_max, "radius": radius},
                       seed=seed, threads=threads, out_dir=out_dir)
    with _ThreadLimit(threads):
        M = _load_matrix(matrix_path)
        trace = mixing_mod.decay_fit(M, alpha, trials=trials, n_max=n_max,
                                     radius=radius, seed=seed)
    _write_csv(out_dir, "mixing_trace.csv",
               ["n", "corr_max", "tail_bound"], trace.rows)
    path = _write_report(out_dir, "mixing.json", config, {
        "C": trace.C, "gamma": trace.gamma, "r_squared": trace.r_squared,
        "fit_range": list(trace.fit_range), "tail_bound": trace.tail_bound,
        "trace_csv": "mixing_trace.csv"})
    click.echo(path)


@main.command("jets-growth")
@click.option("--sigma", type=float, default=0.5628, show_default=True)
@click.option("--eps", type=float, default=0.02, show_default=True)
@click.option("--n-max", type=int, default=30, show_default=True)
@click.option("--m-max", type=int, default=4, show_default=True)
@click.option("--delta", type=float, default=0.05, show_default=True)
@click.option("--two-rate", "lam", type=(float, float), default=None,
              help="lam0 lam1: run the two-rate model instead")
@_threads_opt
@_out_opt
def jets_cmd(sigma, eps, n_max, m_max, delta, lam, threads, out_dir):
    """Derivative-growth tables for iterated leaf models."""
    threads = _resolve_threads(threads)
    params = {"sigma": sigma, "eps": eps, "n_max": n_max, "m_max": m_max,
              "delta": delta}
    if lam is not None:
        params["lam0"], params["lam1"] = lam
    config = RunConfig(command="jets-growth", params=params,
                       threads=threads, out_dir=out_dir)
    with _ThreadLimit(threads):
        if lam is None:
            table = jets_mod.iterate_growth(
                jets_mod.Periodic1D(sigma, eps), n_max, m_max, delta)
            payload = {"regime": table.regime, "sigma": table.sigma,
                       "constants": table.constants,
                       "fitted_bases": table.fitted_bases}
            rows = [[n + 1] + [table.table[m, n] for m in range(m_max)]
                    for n in range(n_max)]
            header = ["n"] + [f"m{m}" for m in range(1, m_max + 1)]
        else:
            model = jets_mod.TwoRateModel(sigma, eps, *lam)
            table = jets_mod.two_rate_growth(model, n_max, m_max, delta)
            payload = {"regime": "two-rate", "lam_sup": table.lam_sup,
                       "constants": table.constants}
            rows = [[n + 1] + [table.table[m, n] for m in range(m_max + 1)]
                    for n in range(n_max)]
            header = ["n"] + [f"m{m}" for m in range(m_max + 1)]
    _write_csv(out_dir, "jets_growth.csv", header, rows)
    payload["trace_csv"] = "jets_growth.csv"
    path = _write_report(out_dir, "jets_growth.json", config, payload)
    click.echo(path)


@main.command("report")
@_out_opt
def report_cmd(out_dir):
    """Bundle all JSON reports in the output directory into report.json."""
    config = RunConfig(command="report", out_dir=out_dir)
    bundle = {}
    if os.path.isdir(out_dir):
        for name in sorted(os.listdir(out_dir)):
            if name.endswith(".json") and name != "report.json":
                data = _read_json(os.path.join(out_dir, name))
                if isinstance(data, dict) and "artifact_version" in data:
                    bundle[name] = data
    if not bundle:
        raise ConfigInvalid(f"no reports found in {out_dir}")
    path = _write_report(out_dir, "report.json", config, {"reports": bundle})
    click.echo(path)


def run(argv: list | None = None) -> int:
    """Programmatic entry point returning an exit code; errors become a
    structured JSON line on stderr."""
    try:
        main.main(args=argv, standalone_mode=False)
        return 0
    except ToralLabError as e:
        click.echo(json.dumps({"error": type(e).__name__, "message": str(e)}),
                   err=True)
        return 2
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        return 1


def _script_main():
    raise SystemExit(run())


if __name__ == "__main__":
    _script_main()
