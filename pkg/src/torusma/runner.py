"""Subcommand execution and artifact writing.

Every run produces a manifest.json carrying the tool version, the hash
of the fully resolved configuration, the configuration itself, and the
results.  Sweeps add per-s CSV tables and, on request, binary field
snapshots.  All artifacts are deterministic: sorted-key JSON, round-trip
float formatting, no timestamps, so rerunning an identical config
reproduces every output byte for byte.

Exit codes separate failure modes for scripting: 0 success, 1 a check
or identity failed (or an unexpected error), 2 invalid configuration,
3 the requested parameter lies outside the existence range, 4 the solver
failed to converge.  On failure a machine-readable report is printed to
stderr and, when the output directory is known, mirrored to
failure.json.
"""

import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cherrier import cherrier_residual
from .config import ExperimentConfig, default_config
from .continuity import (TwistSpec, max_time_bisect, max_time_closed_form,
                         normalized_sweep, solve_continuity_at, sweep)
from .diagnostics import (bound_suite, ce_residual, diagnostics_csv_text,
                          format_float, report_json_text, trdet_check,
                          volume_expansion_check)
from .errors import (ConfigError, ContinuationStalledError,
                     InfeasibleParameterError, NonConvergenceError,
                     PositivityLossError, TorusmaError)
from .geometry import MetricField, chern_ricci, gauduchon_defect
from .grid import HermitianFormField, constant_form, i_ddbar, make_grid, \
    save_field
from .ma import solve_ma
from .randomfields import random_hermitian_field, random_potential_form

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NO_CONVERGENCE = 4

TOOL = {"name": "torusma", "version": __version__}


def _plain(obj):
    """Recursively convert numpy scalars and arrays to JSON-ready data.

    Non-finite floats become the strings "inf", "-inf", "nan" so the
    output stays standard JSON (an unbounded bisection bracket would
    otherwise serialize as a bare Infinity token).
    """
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return format_float(obj)
    return obj


def _json_text(payload):
    return json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n"


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _csv_text(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else format_float(v)
                         for v in row])
    return buf.getvalue()


def _progress(verbose, message):
    if verbose:
        print(message, file=sys.stderr)


def _snapshot_states(out, states):
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    for i, st in enumerate(states):
        save_field(out / "snapshots" / f"phi_{i:04d}.field", st.phi)


# ---------------------------------------------------------------------------
# Subcommand handlers.  Each returns (results dict, list of extra artifact
# names) and may write CSVs or snapshots under ``out``.


def _cmd_solve_ma(cfg, out, snapshot, verbose):
    grid = cfg.build_grid()
    prob = cfg.build_ma_problem(grid)
    opts = cfg.build_solver_options()
    _progress(verbose, f"solve-ma: n={grid.n} N={grid.N} lam={prob.lam}")
    phi, report = solve_ma(prob, opts=opts)
    extras = []
    if verbose:
        rows = []
        for i, res in enumerate(report.residual_history):
            damp = report.damping_history[i - 1] if 0 < i <= \
                len(report.damping_history) else ""
            rows.append([str(i), res, damp])
        _write(out / "trace.csv",
               _csv_text(["iteration", "residual", "damping"], rows))
        extras.append("trace.csv")
    if snapshot:
        out.mkdir(parents=True, exist_ok=True)
        save_field(out / "phi.field", phi)
        extras.append("phi.field")
    results = {
        "lam": prob.lam,
        "sup_F": prob.F.sup_norm(),
        "sup_phi": phi.sup_norm(),
        "final_residual": report.final_residual,
        "newton_iterations": report.newton_iterations,
        "linear_iterations": report.linear_iterations,
        "positivity_margin": report.positivity_margin,
        "sup_bound": report.sup_bound,
    }
    return EXIT_OK, results, extras


_SWEEP_COLUMNS = ["s", "sup_phi", "final_residual", "newton_iterations",
                  "positivity_margin", "sup_ric", "ce_residual"]


def _cmd_sweep(cfg, out, snapshot, verbose):
    grid = cfg.build_grid()
    omega0 = cfg.build_omega0(grid)
    twist = cfg.build_twist()
    schedule = cfg.build_schedule()
    opts = cfg.build_solver_options()
    _progress(verbose, f"sweep: {len(schedule)} values of s in "
              f"[{schedule[0]:g}, {schedule[-1]:g}]")
    path = sweep(schedule, omega0, twist=twist, opts=opts)
    rows = []
    ce_values = []
    for st in path:
        ce = ce_residual(st, omega0=omega0, twist=twist)
        ce_values.append(ce)
        d = st.diagnostics
        rows.append([st.s, d["sup_phi"], d["final_residual"],
                     str(d["newton_iterations"]), d["positivity_margin"],
                     chern_ricci(st.omega).sup_norm(), ce])
        _progress(verbose, f"  s={st.s:g} sup_phi={d['sup_phi']:.3e} "
                  f"ce={ce:.3e}")
    _write(out / "sweep.csv", _csv_text(_SWEEP_COLUMNS, rows))
    extras = ["sweep.csv"]
    if snapshot:
        _snapshot_states(out, path.states)
        extras.append("snapshots/")
    results = {
        "s_values": [st.s for st in path],
        "sup_phi_final": path.states[-1].diagnostics["sup_phi"],
        "max_ce_residual": max(ce_values),
        "max_newton_iterations": max(
            st.diagnostics["newton_iterations"] for st in path),
    }
    return EXIT_OK, results, extras


def _cmd_normalized_sweep(cfg, out, snapshot, verbose):
    grid = cfg.build_grid()
    ccfg = cfg.build_collapsing(grid)
    schedule = cfg.build_schedule()
    opts = cfg.build_solver_options()
    _progress(verbose, f"normalized-sweep: c={ccfg.c_value:g}, "
              f"{len(schedule)} values of s")
    path = normalized_sweep(schedule, ccfg, opts=opts)
    report = bound_suite(path, ccfg)
    _write(out / "diagnostics.csv", diagnostics_csv_text(report))
    extras = ["diagnostics.csv"]
    if snapshot:
        _snapshot_states(out, path.states)
        extras.append("snapshots/")
    results = dict(report.to_dict())
    results["c_value"] = ccfg.c_value
    results["Omega_em"] = ccfg.Omega_em
    return EXIT_OK, results, extras


def _cmd_maxtime(cfg, out, snapshot, verbose):
    grid = cfg.build_grid()
    omega0 = cfg.build_omega0(grid)
    twist = cfg.build_twist()
    if twist is None:
        twist = TwistSpec.zero(grid.n)
    mt = cfg.data["maxtime"]
    const = np.array([[complex(re, im) for re, im in row]
                      for row in cfg.data["omega0"]["matrix"]])
    t_closed = max_time_closed_form(const, twist)
    _progress(verbose, f"maxtime: closed form for the constant class "
              f"T={t_closed:g}, probing up to s_max={mt['s_max']:g}")
    result = max_time_bisect(omega0, twist, mt["s_max"],
                             opts=cfg.build_solver_options(),
                             rel_width=mt["rel_width"])
    results = {"T_closed": t_closed, "T_bisect": result.estimate}
    results.update({k: v for k, v in result.to_dict().items()
                    if k != "estimate"})
    return EXIT_OK, results, []


def _cmd_verify_identities(cfg, out, snapshot, verbose):
    grid = cfg.build_grid()
    n = grid.n
    results = {}
    failures = []

    if n == 2:
        # det expansion of a Hermitian sum against the mixed term, on
        # i.i.d. positive pairs drawn pointwise (no smoothness needed:
        # the identity is algebraic at each point)
        rng = np.random.default_rng(9201)

        def iid_metric():
            b = (rng.standard_normal(grid.shape + (2, 2))
                 + 1j * rng.standard_normal(grid.shape + (2, 2)))
            ents = b @ np.conj(np.swapaxes(b, -1, -2))
            ents[..., 0, 0] += 0.1
            ents[..., 1, 1] += 0.1
            return MetricField(HermitianFormField(grid, ents))

        worst = max(trdet_check(iid_metric(), iid_metric())
                    for _ in range(2))
        results["trdet"] = {"pointwise_pairs": 2 * grid.num_points,
                            "max_residual": worst, "threshold": 1e-12}
        if worst > 1e-12:
            failures.append("trdet")

        # curvature commutation identity at two resolutions; the analytic
        # pair is fixed by its seeds, so refinement only changes sampling
        N_lo = grid.N if 2 * grid.N <= 256 else grid.N // 2
        N_hi = 2 * N_lo
        analytic, _ = random_hermitian_field(grid, seed=2024,
                                             amplitude=0.05, max_mode=1)
        poly, _ = random_potential_form(grid, seed=2025,
                                        amplitude=0.05, max_mode=1)
        res = {}
        for N in (N_lo, N_hi):
            gN = make_grid(2, N)
            gform = analytic.sample(gN).symmetrized()
            gp_form = (gform + i_ddbar(poly.sample(gN))).symmetrized()
            res[N] = cherrier_residual(MetricField(gform),
                                       MetricField(gp_form))
        results["cherrier"] = {
            "N_coarse": N_lo, "N_fine": N_hi,
            "residual_coarse": res[N_lo], "residual_fine": res[N_hi],
            "threshold_fine": 1e-6,
        }
        if res[N_hi] > 1e-6:
            failures.append("cherrier")

        # the ddbar(omega) obstruction vanishes identically for a metric
        # obtained from a constant one by a potential, and generically
        # does not for an arbitrary Hermitian field
        _, closed_form = random_potential_form(grid, seed=501, amplitude=0.2)
        closed = gauduchon_defect(MetricField(closed_form.symmetrized()))
        _, generic_form = random_hermitian_field(grid, seed=502,
                                                 amplitude=0.2)
        generic = gauduchon_defect(MetricField(generic_form.symmetrized()))
        results["gauduchon"] = {"closed_defect": closed,
                                "generic_defect": generic,
                                "threshold_closed": 1e-8}
        if closed > 1e-8:
            failures.append("gauduchon")
    else:
        results["trdet"] = None
        results["cherrier"] = None
        results["gauduchon"] = {"closed_defect": 0.0,
                                "generic_defect": 0.0,
                                "threshold_closed": 1e-8,
                                "note": "every metric is Gauduchon in one "
                                        "complex dimension"}

    if "collapsing" in cfg.data:
        ccfg = cfg.build_collapsing(grid)
        worst = max(volume_expansion_check(s, ccfg)
                    for s in cfg.build_schedule())
        results["volume_expansion"] = {"max_deviation": worst,
                                       "threshold": 1e-12}
        if worst > 1e-12:
            failures.append("volume_expansion")
    else:
        results["volume_expansion"] = None

    # metric-level defect of one solved state against the form equation
    opts = cfg.build_solver_options()
    omega0 = cfg.build_omega0(grid)
    twist = cfg.build_twist()
    s0 = cfg.build_schedule()[0]
    state = solve_continuity_at(s0, omega0, twist=twist, opts=opts)
    ce = ce_residual(state, omega0=omega0, twist=twist)
    results["ce"] = {"s": s0, "residual": ce,
                     "threshold": 10.0 * opts.newton_tol}
    if ce > 10.0 * opts.newton_tol:
        failures.append("ce")

    results["failures"] = sorted(failures)
    results["pass"] = not failures
    code = EXIT_OK if not failures else EXIT_FAILURE
    return code, results, []


def _cmd_acceptance(cfg, out, snapshot, verbose, suite):
    from .acceptance import run_all as run_acceptance_suite
    rows, all_passed = run_acceptance_suite(suite=suite, verbose=verbose)
    for row in rows:
        print(row["line"])
    results = {"suite": suite, "criteria": rows,
               "all_passed": bool(all_passed)}
    return (EXIT_OK if all_passed else EXIT_FAILURE), results, []


# ---------------------------------------------------------------------------
# Dispatch.

_HANDLERS = {
    "solve-ma": _cmd_solve_ma,
    "sweep": _cmd_sweep,
    "normalized-sweep": _cmd_normalized_sweep,
    "maxtime": _cmd_maxtime,
    "verify-identities": _cmd_verify_identities,
}


def _failure_payload(code, err, extra=None):
    payload = {"error": type(err).__name__, "message": str(err),
               "exit_code": code}
    if extra:
        payload.update(extra)
    return payload


def _emit_failure(out, payload):
    text = _json_text(payload)
    sys.stderr.write(text)
    if out is not None:
        try:
            _write(Path(out) / "failure.json", text)
        except OSError:
            pass


def run_command(subcommand, config_path=None, out=None, suite=None,
                snapshot_fields=False, verbose=False):
    """Execute one subcommand; returns the process exit code."""
    try:
        if config_path is None:
            cfg = ExperimentConfig.from_dict(default_config())
        else:
            cfg = ExperimentConfig.from_file(config_path)
    except ConfigError as err:
        _emit_failure(out, _failure_payload(
            EXIT_CONFIG, err, {"field": err.field}))
        return EXIT_CONFIG

    out_dir = Path(out) if out is not None else Path(cfg.output_directory())
    suite_name = suite if suite is not None else cfg.suite_name()

    try:
        if subcommand == "acceptance":
            code, results, extras = _cmd_acceptance(
                cfg, out_dir, snapshot_fields, verbose, suite_name)
        else:
            handler = _HANDLERS[subcommand]
            code, results, extras = handler(cfg, out_dir, snapshot_fields,
                                            verbose)
    except ConfigError as err:
        _emit_failure(out_dir, _failure_payload(
            EXIT_CONFIG, err, {"field": err.field,
                               "config_hash": cfg.hash()}))
        return EXIT_CONFIG
    except InfeasibleParameterError as err:
        _emit_failure(out_dir, _failure_payload(
            EXIT_INFEASIBLE, err, {"s": err.s, "min_eig": err.min_eig,
                                   "config_hash": cfg.hash()}))
        return EXIT_INFEASIBLE
    except (NonConvergenceError, PositivityLossError,
            ContinuationStalledError) as err:
        _emit_failure(out_dir, _failure_payload(
            EXIT_NO_CONVERGENCE, err, {"config_hash": cfg.hash()}))
        return EXIT_NO_CONVERGENCE
    except TorusmaError as err:
        _emit_failure(out_dir, _failure_payload(
            EXIT_FAILURE, err, {"config_hash": cfg.hash()}))
        return EXIT_FAILURE

    manifest = {
        "artifact": subcommand,
        "tool": TOOL,
        "config_hash": cfg.hash(),
        "config": cfg.resolved(),
        "suite": suite_name,
        "results": results,
        "extra_files": extras,
    }
    _write(out_dir / "manifest.json", _json_text(manifest))
    return code
