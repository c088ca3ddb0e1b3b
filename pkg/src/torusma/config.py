"""Experiment configuration: TOML parsing, validation, canonical hashing.

A configuration file describes one experiment completely: the grid, how
to construct the background metric (a constant matrix plus an optional
seeded i ddbar perturbation), the twist, an optional collapsing setup,
the s-schedule, solver options, and output destination.  Matrix entries
are TOML numbers for real values or two-element arrays [re, im] for
complex ones.

Validation is strict: unknown keys and malformed values raise
ConfigError carrying the dotted path of the offending field.  After
validation the configuration is held in a fully resolved plain-data
form, every solver tolerance included, and the canonical hash is taken
over that resolved form.  Whatever the hash covers is also what the
manifest echoes, so no setting that affects results can hide behind a
default.
"""

import hashlib
import json

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .continuity import CollapsingConfig, TwistSpec, geometric_schedule
from .errors import ConfigError
from .geometry import MetricField
from .grid import ScalarField, constant_form, i_ddbar, make_grid
from .ma import MAProblem, SolverOptions
from .randomfields import random_potential_form, random_scalar_field

_SOLVER_FIELDS = {
    "newton_tol": float,
    "max_newton": int,
    "positivity_floor": float,
    "backtrack_factor": float,
    "max_backtracks": int,
    "dt_init": float,
    "dt_min": float,
    "linear_tol": float,
    "max_linear_iters": int,
    "polish_steps": int,
}

_RECIPE_FIELDS = {"seed": int, "amplitude": float, "max_mode": int,
                  "num_modes": int}

_TOP_SECTIONS = {"grid", "omega0", "twist", "collapsing", "schedule",
                 "solver", "maxtime", "solve_ma", "output", "suite"}


def _fail(path, message):
    raise ConfigError(f"{path}: {message}", field=path)


def _expect_table(data, path):
    if not isinstance(data, dict):
        _fail(path, "expected a table")
    return data


def _check_keys(table, allowed, path):
    for key in table:
        if key not in allowed:
            _fail(f"{path}.{key}", "unknown key")


def _coerce(value, kind, path):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _fail(path, f"expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            _fail(path, f"expected an integer, got {value!r}")
        return int(value)
    raise AssertionError(kind)


def _parse_entry(value, path):
    """One matrix entry: a real number or a [re, im] pair."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value), 0.0]
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in value)):
        return [float(value[0]), float(value[1])]
    _fail(path, f"expected a number or [re, im] pair, got {value!r}")


def _parse_matrix(value, n, path):
    if not (isinstance(value, list) and len(value) == n
            and all(isinstance(row, list) and len(row) == n
                    for row in value)):
        _fail(path, f"expected a {n}x{n} matrix of rows")
    return [[_parse_entry(value[i][j], f"{path}[{i}][{j}]")
             for j in range(n)] for i in range(n)]


def _matrix_to_array(resolved_matrix):
    rows = [[complex(re, im) for re, im in row] for row in resolved_matrix]
    return np.array(rows, dtype=np.complex128)


def _parse_recipe(table, path, defaults):
    table = _expect_table(table, path)
    _check_keys(table, _RECIPE_FIELDS, path)
    out = dict(defaults)
    if "seed" not in table:
        _fail(f"{path}.seed", "a seed is required; randomness must be "
              "pinned explicitly")
    if "amplitude" not in table:
        _fail(f"{path}.amplitude", "an amplitude is required")
    for key, kind in _RECIPE_FIELDS.items():
        if key in table:
            out[key] = _coerce(table[key], kind, f"{path}.{key}")
    if out["amplitude"] <= 0:
        _fail(f"{path}.amplitude", "must be positive")
    if out["max_mode"] < 1 or out["num_modes"] < 1:
        _fail(path, "max_mode and num_modes must be at least 1")
    return out


_RECIPE_DEFAULTS = {"max_mode": 2, "num_modes": 6}


class ExperimentConfig:
    """Validated, fully resolved experiment description."""

    def __init__(self, data):
        data = _expect_table(data, "config")
        _check_keys(data, _TOP_SECTIONS, "config")
        resolved = {}

        grid = _expect_table(data.get("grid", {}), "grid")
        _check_keys(grid, {"n", "N"}, "grid")
        if "n" not in grid:
            _fail("grid.n", "missing")
        if "N" not in grid:
            _fail("grid.N", "missing")
        n = _coerce(grid["n"], int, "grid.n")
        N = _coerce(grid["N"], int, "grid.N")
        if n not in (1, 2):
            _fail("grid.n", f"complex dimension must be 1 or 2, got {n}")
        if N % 2 != 0 or not 8 <= N <= 256:
            _fail("grid.N", f"grid size must be even and in [8, 256], "
                  f"got {N}")
        resolved["grid"] = {"n": n, "N": N}

        omega0 = _expect_table(data.get("omega0", {}), "omega0")
        _check_keys(omega0, {"matrix", "perturbation"}, "omega0")
        if "matrix" in omega0:
            matrix = _parse_matrix(omega0["matrix"], n, "omega0.matrix")
        else:
            matrix = _parse_matrix(np.eye(n).tolist(), n, "omega0.matrix")
        entry = {"matrix": matrix}
        if "perturbation" in omega0:
            entry["perturbation"] = _parse_recipe(
                omega0["perturbation"], "omega0.perturbation",
                _RECIPE_DEFAULTS)
        resolved["omega0"] = entry

        if "twist" in data:
            twist = _expect_table(data["twist"], "twist")
            _check_keys(twist, {"matrix"}, "twist")
            if "matrix" not in twist:
                _fail("twist.matrix", "missing")
            resolved["twist"] = {
                "matrix": _parse_matrix(twist["matrix"], n, "twist.matrix")}

        if "collapsing" in data:
            if n != 2:
                _fail("collapsing", "collapsing runs need grid.n = 2")
            col = _expect_table(data["collapsing"], "collapsing")
            _check_keys(col, {"omega_P", "sigma0", "rho"}, "collapsing")
            for key in ("omega_P", "sigma0"):
                if key not in col:
                    _fail(f"collapsing.{key}", "missing")
            entry = {
                "omega_P": _parse_matrix(col["omega_P"], 2,
                                         "collapsing.omega_P"),
                "sigma0": _parse_matrix(col["sigma0"], 2,
                                        "collapsing.sigma0"),
            }
            if "rho" in col:
                entry["rho"] = _parse_recipe(col["rho"], "collapsing.rho",
                                             _RECIPE_DEFAULTS)
            resolved["collapsing"] = entry

        sched = _expect_table(data.get("schedule", {}), "schedule")
        _check_keys(sched, {"s_min", "s_max", "ratio"}, "schedule")
        s_min = _coerce(sched.get("s_min", 1.0), float, "schedule.s_min")
        s_max = _coerce(sched.get("s_max", 16.0), float, "schedule.s_max")
        ratio = _coerce(sched.get("ratio", 2.0), float, "schedule.ratio")
        if not 0 < s_min <= s_max:
            _fail("schedule.s_min", "need 0 < s_min <= s_max")
        if ratio <= 1:
            _fail("schedule.ratio", "ratio must exceed 1")
        resolved["schedule"] = {"s_min": s_min, "s_max": s_max,
                                "ratio": ratio}

        solver = _expect_table(data.get("solver", {}), "solver")
        _check_keys(solver, _SOLVER_FIELDS, "solver")
        opts = {}
        defaults = SolverOptions()
        for key, kind in _SOLVER_FIELDS.items():
            if key in solver:
                opts[key] = _coerce(solver[key], kind, f"solver.{key}")
            else:
                opts[key] = getattr(defaults, key)
        try:
            SolverOptions(**opts)
        except ValueError as err:
            _fail("solver", str(err))
        resolved["solver"] = opts

        mt = _expect_table(data.get("maxtime", {}), "maxtime")
        _check_keys(mt, {"s_max", "rel_width"}, "maxtime")
        mt_cap = _coerce(mt.get("s_max", 4.0), float, "maxtime.s_max")
        mt_width = _coerce(mt.get("rel_width", 1e-2), float,
                           "maxtime.rel_width")
        if not (np.isfinite(mt_cap) and mt_cap > 0):
            _fail("maxtime.s_max", "must be finite and positive")
        if mt_width <= 0:
            _fail("maxtime.rel_width", "must be positive")
        resolved["maxtime"] = {"s_max": mt_cap, "rel_width": mt_width}

        sm = _expect_table(data.get("solve_ma", {}), "solve_ma")
        _check_keys(sm, {"lam", "source"}, "solve_ma")
        lam = _coerce(sm.get("lam", 1.0), float, "solve_ma.lam")
        if lam <= 0:
            _fail("solve_ma.lam", "the multiplier must be positive")
        entry = {"lam": lam}
        if "source" in sm:
            entry["source"] = _parse_recipe(sm["source"], "solve_ma.source",
                                            _RECIPE_DEFAULTS)
        resolved["solve_ma"] = entry

        output = _expect_table(data.get("output", {}), "output")
        _check_keys(output, {"directory"}, "output")
        directory = output.get("directory", "out")
        if not isinstance(directory, str) or not directory:
            _fail("output.directory", "expected a nonempty string")
        resolved["output"] = {"directory": directory}

        suite = _expect_table(data.get("suite", {}), "suite")
        _check_keys(suite, {"name"}, "suite")
        name = suite.get("name", "default")
        if not isinstance(name, str) or not name:
            _fail("suite.name", "expected a nonempty string")
        resolved["suite"] = {"name": name}

        self.data = resolved

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config file: {err}",
                              field="config") from err
        except tomllib.TOMLDecodeError as err:
            raise ConfigError(f"config file is not valid TOML: {err}",
                              field="config") from err
        return cls(data)

    @classmethod
    def from_dict(cls, data):
        return cls(data)

    def resolved(self):
        """Plain-data form covering everything that affects results."""
        return json.loads(json.dumps(self.data))

    def hash(self):
        canonical = json.dumps(self.data, sort_keys=True,
                               separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    # -- constructors for domain objects ------------------------------------

    def build_grid(self):
        g = self.data["grid"]
        return make_grid(g["n"], g["N"])

    def build_omega0(self, grid=None):
        """Constant matrix plus the optional seeded Hessian perturbation.

        The perturbation recipe fixes the largest complex Hessian entry
        to its amplitude, so positivity of the result is easy to reason
        about from the constant part alone.
        """
        grid = grid if grid is not None else self.build_grid()
        section = self.data["omega0"]
        base = _matrix_to_array(section["matrix"])
        if "perturbation" in section:
            rec = section["perturbation"]
            _, form = random_potential_form(
                grid, rec["seed"], base_matrix=base,
                amplitude=rec["amplitude"], max_mode=rec["max_mode"],
                num_modes=rec["num_modes"])
        else:
            form = constant_form(grid, base)
        return MetricField(form)

    def build_twist(self):
        if "twist" not in self.data:
            return None
        return TwistSpec(_matrix_to_array(self.data["twist"]["matrix"]))

    def build_collapsing(self, grid=None):
        if "collapsing" not in self.data:
            raise ConfigError("collapsing section is required for "
                              "normalized runs", field="collapsing")
        grid = grid if grid is not None else self.build_grid()
        section = self.data["collapsing"]
        if "rho" in section:
            rec = section["rho"]
            poly, _ = random_potential_form(
                grid, rec["seed"], amplitude=rec["amplitude"],
                max_mode=rec["max_mode"], num_modes=rec["num_modes"])
            rho = poly.sample(grid)
        else:
            rho = ScalarField(grid, np.zeros(grid.shape))
        return CollapsingConfig(_matrix_to_array(section["omega_P"]), rho,
                                _matrix_to_array(section["sigma0"]))

    def build_schedule(self):
        s = self.data["schedule"]
        return geometric_schedule(s["s_min"], s["s_max"], s["ratio"])

    def build_solver_options(self):
        return SolverOptions(**self.data["solver"])

    def build_ma_problem(self, grid=None):
        """Standalone scalar problem: reference metric from the omega0
        recipe, seeded source field, configured multiplier."""
        grid = grid if grid is not None else self.build_grid()
        omega_hat = self.build_omega0(grid)
        section = self.data["solve_ma"]
        if "source" in section:
            rec = section["source"]
            _, F = random_scalar_field(
                grid, rec["seed"], amplitude=rec["amplitude"],
                max_mode=rec["max_mode"], num_modes=rec["num_modes"])
        else:
            F = ScalarField(grid, np.zeros(grid.shape))
        return MAProblem(omega_hat, F, section["lam"])

    def output_directory(self):
        return self.data["output"]["directory"]

    def suite_name(self):
        return self.data["suite"]["name"]


def default_config():
    """Built-in configuration used when no file is given: n = 2 at modest
    resolution, a perturbed identity background with a negative twist
    mild enough that the whole default schedule stays feasible while the
    maxtime cap still brackets the existence threshold, and a c = 2
    collapsing setup."""
    return {
        "grid": {"n": 2, "N": 16},
        "omega0": {
            "matrix": [[1.0, 0.0], [0.0, 1.0]],
            "perturbation": {"seed": 31, "amplitude": 0.1,
                             "max_mode": 2, "num_modes": 6},
        },
        "twist": {"matrix": [[-0.25, 0.0], [0.0, -0.125]]},
        "collapsing": {
            "omega_P": [[2.0, 0.0], [0.0, 1.0]],
            "sigma0": [[1.0, 0.0], [0.0, 0.0]],
            "rho": {"seed": 67, "amplitude": 0.1, "max_mode": 2,
                    "num_modes": 6},
        },
        "schedule": {"s_min": 0.25, "s_max": 2.0, "ratio": 2.0},
        "solver": {"newton_tol": 1e-10},
        "maxtime": {"s_max": 4.0, "rel_width": 1e-2},
        "solve_ma": {"lam": 1.0,
                     "source": {"seed": 11, "amplitude": 0.3,
                                "max_mode": 2, "num_modes": 6}},
        "output": {"directory": "out"},
        "suite": {"name": "default"},
    }
