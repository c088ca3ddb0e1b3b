"""Estimate suites, identity checks, and decay fits on solved paths.

Everything here re-derives its quantities from the stored potential and
the defining data, rather than trusting numbers the solver recorded, so
a passing report is an independent certificate.  The one numerical
subtlety is shared with the solver: determinant ratios are expanded by
polarization (det(g_hat + H) = det g_hat * (1 + x) with x built from
mixed determinants), which keeps log-determinant differences meaningful
when the fluctuation is many orders below the reference scale.
"""

import csv
import io
import json

import numpy as np

from .continuity import collapsing_config_hash, reference_metric
from .errors import TorusmaError
from .geometry import MetricField, herm_det, trace_pair
from .grid import ScalarField, _i_ddbar_raw, i_ddbar
from .ma import det_ratio_minus_one

CSV_COLUMNS = ["s", "sup_phi_scaled", "vol_ratio_scaled", "trace_gap",
               "ric_eig_lo", "ric_eig_hi", "q_max"]


# ---------------------------------------------------------------------------
# Pointwise algebraic identities.


def trdet_check(g, gt):
    """Sup residual of tr_g gt = tr_gt g + (det gt / det g - 1) tr_gt g.

    A two-dimensional pointwise identity: writing a, b for the
    eigenvalues of g^{-1} gt, the left side is a + b and the right side
    is (1/a + 1/b) ab.  Returns the grid sup of the difference.
    """
    if g.n != 2:
        raise ValueError("the trace-determinant identity needs n = 2")
    lhs = trace_pair(g, gt.form).values
    rev = trace_pair(gt, g.form).values
    ratio = gt.det / g.det
    rhs = rev + (ratio - 1.0) * rev
    return float(np.abs(lhs - rhs).max())


def volume_expansion_check(s, cfg):
    """Deviation in (1+s) * ref(s)^2 / Omega_em = 1 + (c - 1)/(1+s).

    Exact for a rank-1 twist, whose square wedges to zero; the left side
    is evaluated through the actual determinant of the reference metric,
    not through the rank-1 shortcut, so the cancellation is exercised.
    """
    matrix = (cfg.omega_P + s * cfg.sigma0) / (1.0 + s)
    det_ref = float(np.real(herm_det(matrix)))
    lhs = 8.0 * (1.0 + s) * det_ref / cfg.Omega_em
    rhs = 1.0 + (cfg.c_value - 1.0) / (1.0 + s)
    return abs(lhs - rhs)


def phong_sturm_q(gp, ghat, phi, A):
    """The barrier quantity log tr_ghat gp - A phi + 1/(phi - inf phi + 1).

    Monitored along sweeps: its grid maximum stays finite while the
    family exists, and second-order estimates for the trace are read off
    at its maximum point.
    """
    vals = phi.real_values()
    tr = trace_pair(ghat, gp.form).real_values()
    q = np.log(tr) - A * vals + 1.0 / (vals - vals.min() + 1.0)
    return ScalarField(phi.grid, q.astype(np.complex128))


# ---------------------------------------------------------------------------
# Continuity-equation residuals, evaluated from scratch.


def ce_residual(state, omega0=None, twist=None, normalized=False, cfg=None):
    """Sup-norm residual of the metric-level continuity equation.

    Direct flavor: omega - omega0 + s*(Ric(omega) - sigma), with omega
    reassembled from its defining decomposition (omega0 + s*sigma)
    + i ddbar phi and Ric taken from the split log determinant
    log det g_hat + log1p(x).  Normalized flavor: (1+s)*omega - omega0
    - s*sigma0 + s*Ric(omega), where (1+s) times the reference metric is
    combined exactly to its closed form omega_P + s*sigma0.

    Only the state's potential and the defining data enter; nothing is
    taken from solver internals.
    """
    s = state.s
    grid = state.grid
    H = i_ddbar(state.phi).entries
    if normalized:
        if cfg is None:
            raise ValueError("normalized residual requires the collapsing "
                             "config")
        ref_matrix = (cfg.omega_P + s * cfg.sigma0) / (1.0 + s)
        det_ref = float(np.real(herm_det(ref_matrix)))
        x = det_ratio_minus_one(ref_matrix, det_ref, H)
        ric = -_i_ddbar_raw(np.log1p(x), grid)
        ce = (cfg.omega_P - cfg.omega0.entries) + (1.0 + s) * H + s * ric
    else:
        if omega0 is None:
            raise ValueError("direct residual requires omega0")
        sigma = np.zeros((grid.n, grid.n)) if twist is None else twist.sigma
        hat = omega0.entries + s * sigma
        hat_det = herm_det(hat)
        x = det_ratio_minus_one(hat, hat_det, H)
        ric = -_i_ddbar_raw(np.log(hat_det) + np.log1p(x), grid)
        ce = (hat + H) - omega0.entries + s * (ric - sigma)
    return float(np.abs(ce).max())


# ---------------------------------------------------------------------------
# Decay fits and growth ratios.


class SlopeFit:
    """Least-squares slope of log(quantity) against log(s)."""

    def __init__(self, slope, intercept, residual, window, count):
        self.slope = slope
        self.intercept = intercept
        self.residual = residual
        self.window = window
        self.count = count

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept,
                "residual": self.residual, "window": list(self.window),
                "count": self.count}


def fit_decay_slope(s_values, quantity, s_min=10.0):
    """OLS fit of log q vs log s over the decade-aligned asymptotic window.

    Points with s below ``s_min`` are discarded; the window is the
    smallest run of whole decades containing what remains and must hold
    at least 5 points.  The residual is the root mean square misfit in
    log space, reported alongside the slope because a straight-line fit
    through curved data is meaningless without it.
    """
    s_values = np.asarray(s_values, dtype=float)
    quantity = np.asarray(quantity, dtype=float)
    mask = s_values >= s_min
    if mask.sum() < 5:
        raise ValueError("need at least 5 points with s >= "
                         f"{s_min:g} for a slope fit")
    s_used = s_values[mask]
    q_used = quantity[mask]
    if np.any(q_used <= 0):
        raise ValueError("slope fit needs strictly positive quantities")
    lo = 10.0 ** np.floor(np.log10(s_used.min()))
    hi = 10.0 ** np.ceil(np.log10(s_used.max()))
    ls, lq = np.log10(s_used), np.log10(q_used)
    slope, intercept = np.polyfit(ls, lq, 1)
    fitted = slope * ls + intercept
    residual = float(np.sqrt(np.mean((lq - fitted) ** 2)))
    return SlopeFit(float(slope), float(intercept), residual,
                    (float(lo), float(hi)), int(mask.sum()))


def no_growth_ratio(s_values, quantity):
    """Max over the last decade of s divided by max over the first.

    The operational meaning of "uniformly bounded": the ratio must not
    exceed 1.5 across the sweep.  Identically zero data gives 0.
    """
    s_values = np.asarray(s_values, dtype=float)
    quantity = np.asarray(quantity, dtype=float)
    if s_values.size == 0:
        raise ValueError("empty sequence")
    first = quantity[s_values < s_values.min() * 10.0]
    last = quantity[s_values > s_values.max() / 10.0]
    top = float(np.abs(last).max())
    bottom = float(np.abs(first).max())
    if bottom == 0.0:
        return 0.0 if top == 0.0 else np.inf
    return top / bottom


# ---------------------------------------------------------------------------
# The collapsing bound suite.


class BoundSuiteReport:
    """Per-s estimate records for a normalized path, plus fits and growth
    ratios over the schedule, keyed to the collapsing config hash."""

    def __init__(self, records, slopes, ratios, config_hash):
        self.records = records
        self.slopes = slopes
        self.ratios = ratios
        self.config_hash = config_hash

    def to_dict(self):
        return {
            "records": self.records,
            "slopes": {k: (v.to_dict() if v is not None else None)
                       for k, v in self.slopes.items()},
            "ratios": self.ratios,
            "config_hash": self.config_hash,
        }


def bound_suite(path, cfg, A=1.0):
    """Evaluate the collapsing estimates along a normalized path.

    Per state: the scaled potential (1+s)*sup|phi|; the scaled volume
    ratio s*sup|omega^2/ref^2 - 1|; both trace gaps against the reference
    metric; the eigenvalue band of the twisted Ricci endomorphism; and
    the maximum of the barrier quantity.  Afterward the trace gap gets a
    decay-slope fit and the bounded quantities get last/first decade
    growth ratios.
    """
    want = collapsing_config_hash(cfg)
    got = path.schedule.get("config_hash")
    if got != want:
        raise TorusmaError(
            "path metadata does not carry the matching collapsing config "
            f"hash (path: {got}, config: {want[:12]}...)")
    records = []
    for st in path:
        if st.flavor != "normalized":
            raise TorusmaError("bound suite expects normalized states")
        s = st.s
        ref_matrix = (cfg.omega_P + s * cfg.sigma0) / (1.0 + s)
        ref_metric = MetricField(reference_metric(s, cfg))
        det_ref = float(np.real(herm_det(ref_matrix)))
        H = i_ddbar(st.phi).entries
        x = det_ratio_minus_one(ref_matrix, det_ref, H)
        gap_ref_g = trace_pair(ref_metric, st.omega.form).real_values() - 2.0
        gap_g_ref = trace_pair(st.omega, ref_metric.form).real_values() - 2.0
        ric = -_i_ddbar_raw(np.log1p(x), st.grid) - cfg.sigma0
        tr_endo = trace_pair(st.omega, ric).real_values()
        det_quot = np.real(herm_det(ric)) / st.omega.det
        disc = np.sqrt(np.maximum(tr_endo ** 2 - 4.0 * det_quot, 0.0))
        mu_lo = 0.5 * (tr_endo - disc)
        mu_hi = 0.5 * (tr_endo + disc)
        q_field = phong_sturm_q(st.omega, ref_metric, st.phi, A)
        records.append({
            "s": s,
            "sup_phi_scaled": (1.0 + s) * st.phi.sup_norm(),
            "vol_ratio_scaled": s * float(np.abs(x).max()),
            "trace_gap": float(gap_ref_g.max()),
            "trace_gap_rev": float(gap_g_ref.max()),
            "ric_eig_lo": float(mu_lo.min()),
            "ric_eig_hi": float(mu_hi.max()),
            "ric_bound": float(max(np.abs(mu_lo).max(), np.abs(mu_hi).max())),
            "q_max": float(q_field.real_values().max()),
        })
    s_vals = [r["s"] for r in records]
    gaps = [r["trace_gap"] for r in records]
    slopes = {}
    try:
        slopes["trace_gap"] = fit_decay_slope(s_vals, gaps)
    except ValueError:
        slopes["trace_gap"] = None
    ratios = {
        "sup_phi_scaled": no_growth_ratio(
            s_vals, [r["sup_phi_scaled"] for r in records]),
        "vol_ratio_scaled": no_growth_ratio(
            s_vals, [r["vol_ratio_scaled"] for r in records]),
        "ric_bound": no_growth_ratio(
            s_vals, [r["ric_bound"] for r in records]),
    }
    return BoundSuiteReport(records, slopes, ratios, want)


# ---------------------------------------------------------------------------
# Serialization: CSV rows for per-s diagnostics, JSON for reports.


def format_float(value):
    """Shortest decimal string that round-trips the float exactly."""
    if value != value:
        return "nan"
    if value in (np.inf, -np.inf):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))


def diagnostics_csv_text(report):
    """Render the per-s records as CSV with the fixed column set."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in report.records:
        writer.writerow([format_float(rec[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_diagnostics_csv(path, report):
    text = diagnostics_csv_text(report)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def report_json_text(report):
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def write_report_json(path, report):
    with open(path, "w") as fh:
        fh.write(report_json_text(report))
