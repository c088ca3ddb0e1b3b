"""Driver for the elliptic continuity family omega(s) = omega0 - s Ric(omega).

Each parameter value s reduces to one scalar Monge-Ampere solve: with a
constant Hermitian twist sigma standing in for the harmonic part of the
Ricci class, the reference form is omega_hat = omega0 + s*sigma, the
multiplier is lambda = 1/s, and the source is the mean-centered log
determinant of omega_hat.  The solved potential phi gives back the metric
omega = omega_hat + i ddbar phi, and log det g then differs from phi/s by
a constant, which is exactly the twisted equation.

The module also provides the normalized family (1+s) omega = omega0
- s (Ric(omega) - sigma0) used to study collapse onto a rank-1 limit,
closed-form and bisection estimates of the maximal existence parameter,
and warm-started sweeps over geometric s-schedules.
"""

import hashlib

import numpy as np
import scipy.linalg

from .errors import (ContinuationStalledError, GridMismatchError,
                     HermitianError, InfeasibleParameterError,
                     NonConvergenceError, PositivityError, PositivityLossError,
                     TorusmaError)
from .geometry import (MetricField, chern_ricci, herm_det, herm_eig_range,
                       mixed_det)
from .grid import (HERMITIAN_TOL, ScalarField, constant_form, i_ddbar)
from .ma import MAProblem, SolverOptions, continuation_solve, solve_ma


class TwistSpec:
    """Constant Hermitian form adjoined to the Ricci operator.

    On the flat torus the Chern-Ricci form of every metric is i ddbar
    exact, so the untwisted family exists for all s.  Subtracting a fixed
    Hermitian matrix sigma from Ric emulates a metric whose Ricci class
    has harmonic part -sigma, which is what makes finite existence times
    and collapsing limits reachable in this laboratory.
    """

    def __init__(self, sigma):
        sigma = np.asarray(sigma, dtype=np.complex128)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise ValueError("twist matrix must be square")
        defect = np.abs(sigma - sigma.conj().T).max()
        scale = max(1.0, np.abs(sigma).max())
        if defect > HERMITIAN_TOL * scale:
            raise HermitianError(
                f"twist matrix is not Hermitian (defect {defect:.3e})")
        sigma = 0.5 * (sigma + sigma.conj().T)
        sigma.setflags(write=False)
        self.sigma = sigma
        self.n = sigma.shape[0]

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((n, n)))

    def as_form(self, grid):
        if grid.n != self.n:
            raise GridMismatchError(
                f"twist is {self.n}x{self.n} but the grid has n = {grid.n}")
        return constant_form(grid, self.sigma)

    def is_zero(self):
        return not np.any(self.sigma)


def twisted_ricci(g, twist):
    """Ric_sigma(g) = chern_ricci(g) - sigma as a Hermitian form field."""
    ric = chern_ricci(g)
    if twist is None or twist.is_zero():
        return ric
    return ric - twist.as_form(g.grid)


def build_volume_form(omega0, psi, T_tilde):
    """Density of the volume form det(g0) * exp(psi / T_tilde).

    Before returning, the construction is cross-checked through the
    identity i ddbar log(density) = -Ric(omega0) + i ddbar psi / T_tilde,
    evaluated with an independent exp/log round trip; a residual above
    1e-8 raises TorusmaError.
    """
    if not (np.isfinite(T_tilde) and T_tilde > 0):
        raise ValueError(f"T_tilde must be positive, got {T_tilde}")
    values = psi.real_values()
    if psi.grid is not omega0.grid:
        raise GridMismatchError("psi and omega0 live on different grids")
    density = omega0.det * np.exp(values / T_tilde)
    log_density = ScalarField(
        omega0.grid, np.log(density).astype(np.complex128))
    lhs = i_ddbar(log_density)
    rhs = (1.0 / T_tilde) * i_ddbar(psi) - chern_ricci(omega0)
    residual = (lhs - rhs).sup_norm()
    if residual > 1e-8:
        raise TorusmaError(
            f"volume form failed its curvature identity check "
            f"(residual {residual:.3e})")
    return ScalarField(omega0.grid, density.astype(np.complex128))


class ContinuityState:
    """One solved point of the family: the parameter, the potential, the
    metric it produces, and the solver report that certifies it."""

    def __init__(self, s, phi, omega, report, flavor, diagnostics=None):
        self.s = float(s)
        self.phi = phi
        self.omega = omega
        self.report = report
        self.flavor = flavor
        self.diagnostics = dict(diagnostics or {})

    @property
    def grid(self):
        return self.phi.grid


class ContinuityPath:
    """Ordered states over a strictly increasing s-schedule."""

    def __init__(self, states, schedule=None):
        s_vals = [st.s for st in states]
        if any(b <= a for a, b in zip(s_vals, s_vals[1:])):
            raise ValueError("path parameters must be strictly increasing")
        self.states = list(states)
        self.schedule = dict(schedule or {})

    @property
    def s_values(self):
        return [st.s for st in self.states]

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, i):
        return self.states[i]


def geometric_schedule(s_min, s_max, ratio=2.0):
    """s-values s_min, s_min*ratio, ... capped at s_max (always included)."""
    if not (0 < s_min <= s_max and ratio > 1):
        raise ValueError("need 0 < s_min <= s_max and ratio > 1")
    out = [float(s_min)]
    while out[-1] * ratio < s_max * (1 - 1e-12):
        out.append(out[-1] * ratio)
    if out[-1] < s_max:
        out.append(float(s_max))
    return out


# ---------------------------------------------------------------------------
# Single solves and sweeps for the direct (twisted) family.


def _reference_form(omega0, twist, s):
    form = omega0.form
    if twist is not None and not twist.is_zero():
        form = form + constant_form(omega0.grid, s * twist.sigma)
    return form


def solve_continuity_at(s, omega0, twist=None, opts=None, warm=None,
                        fallback=True):
    """Solve omega = omega0 + s*sigma + i ddbar phi with log det pinned.

    The scalar reduction uses lambda = 1/s and the mean-centered source
    F = mean(log det g_hat) - log det g_hat, so constant data solves with
    phi identically zero.  A warm initialization is passed through to the
    Newton solver, which discards it unless it keeps the metric positive.
    When ``fallback`` is set, a failed direct solve is retried by homotopy
    continuation in the source term before giving up.
    """
    if not (np.isfinite(s) and s > 0):
        raise ValueError(f"parameter s must be positive, got {s}")
    opts = opts if opts is not None else SolverOptions()
    hat_form = _reference_form(omega0, twist, s)
    lo, _ = herm_eig_range(hat_form.entries)
    lo_min = float(lo.min())
    if lo_min <= max(opts.positivity_floor, 0.0):
        raise InfeasibleParameterError(
            f"reference form omega0 + s*sigma loses positivity at s = {s:g} "
            f"(min eigenvalue {lo_min:.6e})", s=s, min_eig=lo_min)
    metric_hat = MetricField(hat_form)
    log_det = metric_hat.log_det
    source = ScalarField(
        metric_hat.grid,
        (log_det.mean() - log_det).astype(np.complex128))
    problem = MAProblem(metric_hat, source, 1.0 / s)
    used_fallback = False
    try:
        phi, report = solve_ma(problem, opts, init=warm)
    except (NonConvergenceError, PositivityLossError):
        if not fallback:
            raise
        phi, report = continuation_solve(problem, opts)
        used_fallback = True
    omega = MetricField(metric_hat.form + i_ddbar(phi))
    diagnostics = {
        "lambda": 1.0 / s,
        "sup_F": source.sup_norm(),
        "sup_phi": phi.sup_norm(),
        "newton_iterations": report.newton_iterations,
        "final_residual": report.final_residual,
        "positivity_margin": report.positivity_margin,
        "warm_started": warm is not None,
        "fallback_used": used_fallback,
    }
    return ContinuityState(s, phi, omega, report, "direct", diagnostics)


def sweep(schedule, omega0, twist=None, opts=None):
    """Solve the family along an increasing schedule with warm starts.

    The potential scales roughly linearly in s, so each solve starts from
    the previous potential rescaled by s_new/s_old.  If the reference form
    goes non-positive partway, the raised InfeasibleParameterError carries
    the partial path built so far in its ``partial_path`` attribute.
    """
    schedule = [float(s) for s in schedule]
    if not schedule:
        raise ValueError("schedule is empty")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    states = []
    prev = None
    for s in schedule:
        warm = None
        if prev is not None:
            warm = ScalarField(prev.grid, (s / prev.s) * prev.phi.values)
        try:
            state = solve_continuity_at(s, omega0, twist, opts, warm=warm)
        except InfeasibleParameterError as err:
            err.partial_path = ContinuityPath(
                states, {"kind": "partial", "s_values": schedule})
            raise
        states.append(state)
        prev = state
    return ContinuityPath(states, {"kind": "explicit", "s_values": schedule})


# ---------------------------------------------------------------------------
# Normalized collapsing family.


class CollapsingConfig:
    """Data for the normalized family collapsing onto a rank-1 twist.

    Pieces: a constant positive Hermitian matrix omega_P, a real potential
    rho_hat deforming it to omega0 = omega_P - i ddbar rho_hat, and a
    constant rank-1 positive semidefinite twist sigma0.  The reference
    volume density Omega_em is the constant 2 * (density of the wedge
    omega_P ^ sigma0); with it the constant-data family has the closed
    form returned by ``normalized_constant_solution``.
    """

    RANK_TOL = 1e-12

    def __init__(self, omega_P, rho_hat, sigma0):
        if not isinstance(rho_hat, ScalarField):
            raise TypeError("rho_hat must be a ScalarField")
        grid = rho_hat.grid
        if grid.n != 2:
            raise ValueError("collapsing runs are defined for n = 2 only")
        rho_hat.real_values()
        omega_P = self._check_constant(omega_P, "omega_P")
        sigma0 = self._check_constant(sigma0, "sigma0")
        lo_P, _ = herm_eig_range(omega_P)
        if lo_P.min() <= 0:
            raise PositivityError("omega_P must be positive definite")
        lo_S, hi_S = herm_eig_range(sigma0)
        if hi_S.max() <= 0 or lo_S.min() < -self.RANK_TOL * hi_S.max():
            raise PositivityError("sigma0 must be positive semidefinite "
                                  "and nonzero")
        if lo_S.min() > self.RANK_TOL * hi_S.max():
            raise ValueError("sigma0 must have rank exactly 1")
        self.grid = grid
        self.omega_P = omega_P
        self.rho_hat = rho_hat
        self.sigma0 = sigma0
        self.mixed_density = float(np.real(mixed_det(omega_P, sigma0)))
        if self.mixed_density <= 0:
            raise PositivityError("omega_P and sigma0 give a nonpositive "
                                  "reference volume density")
        self.Omega_em = 8.0 * self.mixed_density
        # det(omega_P + s sigma0) = det omega_P + s * mixed_density exactly,
        # because the rank-1 factor contributes no s^2 term
        self.c_value = float(np.real(herm_det(omega_P))) / self.mixed_density
        self.omega0 = MetricField(
            constant_form(grid, omega_P) - i_ddbar(rho_hat))

    @staticmethod
    def _check_constant(matrix, name):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (2, 2):
            raise ValueError(f"{name} must be a constant 2x2 matrix")
        if np.abs(matrix - matrix.conj().T).max() > HERMITIAN_TOL * max(
                1.0, np.abs(matrix).max()):
            raise HermitianError(f"{name} is not Hermitian")
        matrix = 0.5 * (matrix + matrix.conj().T)
        matrix.setflags(write=False)
        return matrix

    def twist(self):
        return TwistSpec(self.sigma0)


def collapsing_config_hash(cfg):
    """Deterministic fingerprint of collapsing data: grid, omega_P, sigma0,
    and the sampled rho_hat.  Embedded in sweep metadata so reports can
    refuse to mix a path with the wrong configuration."""
    h = hashlib.sha256()
    h.update(f"n={cfg.grid.n};N={cfg.grid.N};".encode())
    h.update(np.ascontiguousarray(cfg.omega_P).tobytes())
    h.update(np.ascontiguousarray(cfg.sigma0).tobytes())
    h.update(np.ascontiguousarray(cfg.rho_hat.values).tobytes())
    return h.hexdigest()


def reference_metric(s, cfg):
    """Constant reference form (omega_P + s*sigma0)/(1+s); at s = 0 this
    is omega_P and as s grows it degenerates onto the rank-1 twist."""
    if not (np.isfinite(s) and s >= 0):
        raise ValueError(f"parameter s must be nonnegative, got {s}")
    matrix = (cfg.omega_P + s * cfg.sigma0) / (1.0 + s)
    return constant_form(cfg.grid, matrix)


def normalized_constant_solution(s, c):
    """Closed-form potential for constant data (rho_hat = 0): the solved
    phi(s) = (s/(1+s)) log(1 + (c-1)/(1+s)) with c = det(omega_P) divided
    by the mixed density of omega_P and sigma0."""
    return (s / (1.0 + s)) * np.log1p((c - 1.0) / (1.0 + s))


def solve_normalized_at(s, cfg, opts=None, warm=None, fallback=True):
    """One solve of (1+s) omega = omega0 + s*sigma0 - s Ric(omega).

    The scalar reduction uses the constant reference metric, multiplier
    lambda = (1+s)/s, and the source rho_hat/s minus the constant
    log((1+s) * density(reference^2) / Omega_em).  The source is not
    mean-centered here: its constant part encodes the volume pinning.
    """
    if not (np.isfinite(s) and s > 0):
        raise ValueError(f"parameter s must be positive, got {s}")
    opts = opts if opts is not None else SolverOptions()
    ref = reference_metric(s, cfg)
    lo, _ = herm_eig_range(ref.entries)
    lo_min = float(lo.min())
    if lo_min <= max(opts.positivity_floor, 0.0):
        raise InfeasibleParameterError(
            f"reference metric is not positive enough at s = {s:g} "
            f"(min eigenvalue {lo_min:.6e} vs solver floor "
            f"{opts.positivity_floor:.0e})", s=s, min_eig=lo_min)
    metric_ref = MetricField(ref, floor=min(lo_min / 2, 1e-8))
    det_ref = float(np.real(herm_det(cfg.omega_P + s * cfg.sigma0))) \
        / (1.0 + s) ** 2
    const_part = np.log(8.0 * (1.0 + s) * det_ref / cfg.Omega_em)
    source = ScalarField(
        cfg.grid,
        (cfg.rho_hat.values / s - const_part).astype(np.complex128))
    lam = (1.0 + s) / s
    problem = MAProblem(metric_ref, source, lam)
    used_fallback = False
    try:
        phi, report = solve_ma(problem, opts, init=warm)
    except (NonConvergenceError, PositivityLossError):
        if not fallback:
            raise
        phi, report = continuation_solve(problem, opts)
        used_fallback = True
    omega = MetricField(metric_ref.form + i_ddbar(phi),
                        floor=min(lo_min / 2, 1e-8))
    diagnostics = {
        "lambda": lam,
        "sup_F": source.sup_norm(),
        "sup_phi": phi.sup_norm(),
        "newton_iterations": report.newton_iterations,
        "final_residual": report.final_residual,
        "positivity_margin": report.positivity_margin,
        "warm_started": warm is not None,
        "fallback_used": used_fallback,
        "det_reference": det_ref,
    }
    return ContinuityState(s, phi, omega, report, "normalized", diagnostics)


def normalized_sweep(schedule, cfg, opts=None):
    """Warm-started sweep of the normalized family over increasing s.

    The potential decays like 1/(1+s), so each solve starts from the
    previous potential rescaled by (1+s_old)/(1+s_new).
    """
    schedule = [float(s) for s in schedule]
    if not schedule:
        raise ValueError("schedule is empty")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    meta = {"kind": "explicit", "s_values": schedule,
            "config_hash": collapsing_config_hash(cfg)}
    states = []
    prev = None
    for s in schedule:
        warm = None
        if prev is not None:
            scale = (1.0 + prev.s) / (1.0 + s)
            warm = ScalarField(prev.grid, scale * prev.phi.values)
        try:
            state = solve_normalized_at(s, cfg, opts, warm=warm)
        except InfeasibleParameterError as err:
            err.partial_path = ContinuityPath(
                states, dict(meta, kind="partial"))
            raise
        states.append(state)
        prev = state
    return ContinuityPath(states, meta)


# ---------------------------------------------------------------------------
# Maximal existence parameter.


def max_time_closed_form(omega0_const, twist):
    """T = sup{s : omega0 + s*sigma > 0} for constant data.

    Averaging over torus translations removes any i ddbar perturbation
    from a constant class, so positivity of the class equals positivity
    of the constant representative and T is a generalized eigenvalue
    problem: T = 1/mu_max with mu_max the largest eigenvalue of -sigma
    against omega0, or infinity when -sigma has none positive.
    """
    omega0_const = np.asarray(omega0_const, dtype=np.complex128)
    if not isinstance(twist, TwistSpec):
        twist = TwistSpec(twist)
    sigma = twist.sigma
    if omega0_const.shape != sigma.shape:
        raise ValueError("omega0 and twist dimensions differ")
    defect = np.abs(omega0_const - omega0_const.conj().T).max()
    if defect > HERMITIAN_TOL * max(1.0, np.abs(omega0_const).max()):
        raise HermitianError("omega0 must be Hermitian")
    lo, _ = herm_eig_range(omega0_const)
    if lo.min() <= 0:
        raise PositivityError("omega0 must be positive definite")
    mu = scipy.linalg.eigh(-sigma, omega0_const, eigvals_only=True)
    mu_max = float(mu.max())
    if mu_max <= 0:
        return np.inf
    return 1.0 / mu_max


class MaxTimeResult:
    """Outcome of the bisection probe for the maximal parameter."""

    def __init__(self, estimate, verdict, lo, hi, probes, states):
        self.estimate = estimate
        self.verdict = verdict
        self.lo = lo
        self.hi = hi
        self.probes = probes
        self.states = states

    def to_dict(self):
        return {
            "estimate": self.estimate,
            "verdict": self.verdict,
            "bracket": [self.lo, self.hi],
            "probes": self.probes,
        }


def max_time_bisect(omega0, twist, s_max, opts=None, rel_width=1e-2):
    """Bracket the maximal parameter by probing solves.

    Feasibility of a parameter means solve_continuity_at succeeds there;
    a solver failure inside the bracket is treated as evidence of
    infeasibility and logged in the probe record.  Returns a verdict
    "at-least-cap" when s_max itself is feasible, otherwise a bracket of
    relative width ``rel_width`` around the crossing.
    """
    if not (np.isfinite(s_max) and s_max > 0):
        raise ValueError("s_max must be finite and positive")
    probes = []
    states = []

    def feasible(s):
        try:
            state = solve_continuity_at(s, omega0, twist, opts)
        except InfeasibleParameterError as err:
            probes.append({"s": s, "feasible": False,
                           "reason": "reference-nonpositive",
                           "min_eig": err.min_eig})
            return False
        except (NonConvergenceError, PositivityLossError,
                ContinuationStalledError) as err:
            probes.append({"s": s, "feasible": False,
                           "reason": f"solver-failure: {type(err).__name__}"})
            return False
        states.append(state)
        probes.append({"s": s, "feasible": True,
                       "min_eig": state.omega.min_eig})
        return True

    if feasible(s_max):
        return MaxTimeResult(s_max, "at-least-cap", s_max, np.inf,
                             probes, states)
    hi = s_max
    lo = None
    probe = s_max
    for _ in range(60):
        probe = probe / 2.0
        if feasible(probe):
            lo = probe
            break
        hi = probe
    if lo is None:
        raise TorusmaError(
            f"no feasible parameter found down to {probe:g}; the family "
            "appears empty below the cap")
    while (hi - lo) > rel_width * lo:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return MaxTimeResult(0.5 * (lo + hi), "bracketed", lo, hi, probes, states)
