"""Melnikov sweeps, displacement expansion fits, root finding and the limit-cycle report.

Order rule used throughout: if M_1 = ... = M_{k-1} vanish identically and
M_k does not, every simple root of M_k marks one limit cycle near the
corresponding orbit for small eps, and no root means no limit cycle near
the scanned orbits. Multiplicity is only classified as simple or
degenerate; finite differences cannot certify more.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import bisect

from app.utils.errors import InvalidInputError, MelnikovError, NumericalFailure
from app.utils.flow import displacement
from app.utils.melnikov import (
    DEFAULT_TOL,
    EPSILON_STEP,
    GRAZING_TOL_FACTOR,
    QUAD_LIMIT,
    MelnikovCurve,
    first_nonvanishing_order,
    grazing_tolerance,
    m1_closed_form,
    m1_general,
    m1_quadrature,
    sample_melnikov,
)
from app.utils.model import GeneralHarnessSystem, PerturbedSystem, ShapeFunction, ZonePartition
from app.utils.workers import map_ordered

logger = logging.getLogger(__name__)

CONJECTURE_CAVEAT = (
    "The second-order formula behind M2 = pi r^2 was derived for continuous "
    "perturbations; here g jumps across every line x = a_i, so M2 is used as "
    "corroboration and the measured displacement is the primary evidence."
)
ANNULUS_CAVEAT = (
    "Statements cover only the scanned annulus and the sampled eps values; "
    "Melnikov-based conclusions are asymptotic in small eps."
)


def radius_grid(r_min, r_max, count, spacing="linear"):
    if not (0.0 < r_min < r_max) or count < 1:
        raise InvalidInputError(f"need 0 < min < max and count >= 1, got ({r_min}, {r_max}, {count})", field="r_grid")
    if spacing == "linear":
        return np.linspace(r_min, r_max, int(count))
    if spacing == "log":
        return np.geomspace(r_min, r_max, int(count))
    raise InvalidInputError(f"unknown spacing {spacing!r}", field="r_grid.spacing")


def _validate_grid(r_grid):
    rs = [float(r) for r in r_grid]
    if not rs:
        raise InvalidInputError("grid is empty", field="r_grid")
    if any(not math.isfinite(r) or r <= 0.0 for r in rs):
        raise InvalidInputError("radii must be positive and finite", field="r_grid")
    if any(b <= a for a, b in zip(rs, rs[1:])):
        raise InvalidInputError("radii must be strictly increasing", field="r_grid")
    return rs


def nudge_off_breakpoints(partition, r, factor=GRAZING_TOL_FACTOR, multiple=10, lower=-math.inf, upper=math.inf):
    """Move r off a breakpoint it grazes, staying strictly inside (lower, upper).

    Tries just above the breakpoint, then just below. With no room on either
    side r is kept and only flagged. Returns (r, nudged).
    """
    tol = grazing_tolerance(r, factor)
    for a in partition.breakpoints:
        if abs(r - a) < tol:
            for moved in (a + multiple * tol, a - multiple * tol):
                if lower < moved < upper:
                    logger.warning("r=%.17g grazes a=%.17g; nudged to %.17g", r, a, moved)
                    return moved, True
            logger.warning("r=%.17g grazes a=%.17g with no room between its neighbours; kept", r, a)
            return r, True
    return r, False


def nudge_grid(partition, rs, factor=GRAZING_TOL_FACTOR, multiple=10):
    """Nudge every grazing radius of an increasing grid; returns [(r, nudged), ...], still increasing."""
    plan = []
    for i, r in enumerate(rs):
        lower = plan[-1][0] if plan else -math.inf
        upper = rs[i + 1] if i + 1 < len(rs) else math.inf
        plan.append(nudge_off_breakpoints(partition, float(r), factor, multiple, lower, upper))
    return plan


def sweep_melnikov(system, r_grid, tol=DEFAULT_TOL, jobs=1, grazing_factor=GRAZING_TOL_FACTOR, nudge_multiple=10,
                   limit=QUAD_LIMIT, epsilon_step=None):
    """Closed-form and quadrature M1, M2 over a radius grid.

    With epsilon_step set, every sample also carries the finite-difference M2.
    """
    plan = nudge_grid(system.partition, _validate_grid(r_grid), grazing_factor, nudge_multiple)
    samples = map_ordered(
        lambda item: sample_melnikov(system, item[0], tol, grazing=item[1], limit=limit, epsilon_step=epsilon_step),
        plan, jobs,
    )
    curve = MelnikovCurve(samples=samples, tol=tol, grazing_tol_factor=grazing_factor)
    curve.order = first_nonvanishing_order(samples, tol)
    logger.info("Melnikov sweep over %d radii, first non-vanishing order %s", len(samples), curve.order)
    return curve


@dataclass
class ExpansionFit:
    r: float
    epsilons: Tuple[float, ...]
    displacements: Tuple[float, ...]
    c1: float
    c2: float
    residual_norm: float
    c2_uncertainty: float
    terms: int = 2
    c3: Optional[float] = None
    target_m1: float = 0.0
    target_m2: float = math.nan

    @property
    def c2_relative_error(self):
        return abs(self.c2 - self.target_m2) / abs(self.target_m2)

    def to_dict(self):
        return {
            "r": self.r,
            "epsilons": list(self.epsilons),
            "displacements": list(self.displacements),
            "terms": self.terms,
            "c1": self.c1,
            "c2": self.c2,
            "c3": self.c3,
            "residual_norm": self.residual_norm,
            "c2_uncertainty": self.c2_uncertainty,
            "target_m1": self.target_m1,
            "target_m2": self.target_m2,
            "c2_relative_error": self.c2_relative_error,
        }


def _validate_epsilons(epsilons, max_epsilon):
    values = sorted((float(e) for e in epsilons), reverse=True)
    if len(values) < 4:
        raise InvalidInputError(f"need at least 4 values, got {len(values)}", field="epsilons")
    if any(not math.isfinite(e) or e <= 0.0 for e in values):
        raise InvalidInputError("values must be positive and finite", field="epsilons")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise InvalidInputError("values must be distinct", field="epsilons")
    if values[0] > max_epsilon:
        raise InvalidInputError(f"largest value {values[0]:g} exceeds {max_epsilon:g}", field="epsilons")
    ratios = [b / a for a, b in zip(values, values[1:])]
    if max(ratios) - min(ratios) > 1e-6 * max(ratios):
        logger.warning("eps grid %s is not geometric", values)
    return values


def fit_expansion(system, r, epsilons, options=None, terms=3, max_epsilon=0.05, jobs=1):
    """Least-squares fit of measured d(h, eps) on the basis {eps, ..., eps^terms}.

    The columns are scaled by the largest eps before solving. The residual
    is reported together with a residual-based standard error of c2.
    """
    if terms not in (2, 3):
        raise InvalidInputError(f"must be 2 or 3, got {terms!r}", field="terms")
    eps = np.array(_validate_epsilons(epsilons, max_epsilon))

    def measure(e):
        try:
            return displacement(system, r, e, options).d
        except NumericalFailure as failure:
            raise NumericalFailure(
                f"fit aborted: displacement at r={r:g}, eps={e:g} failed: {failure}",
                estimate=failure.estimate, error=failure.error,
            )

    d = np.array(map_ordered(measure, eps, jobs))
    scale = eps[0]
    design = np.column_stack([(eps / scale) ** k for k in range(1, terms + 1)])
    beta, _, _, _ = np.linalg.lstsq(design, d, rcond=None)
    coefficients = [beta[k] / scale ** (k + 1) for k in range(terms)]

    residual = d - design @ beta
    residual_norm = float(np.linalg.norm(residual))
    dof = len(eps) - terms
    if dof > 0:
        sigma2 = float(residual @ residual) / dof
        covariance = sigma2 * np.linalg.inv(design.T @ design)
        c2_uncertainty = math.sqrt(max(covariance[1, 1], 0.0)) / scale ** 2
    else:
        c2_uncertainty = math.nan

    fit = ExpansionFit(
        r=float(r),
        epsilons=tuple(float(e) for e in eps),
        displacements=tuple(float(v) for v in d),
        c1=float(coefficients[0]),
        c2=float(coefficients[1]),
        c3=float(coefficients[2]) if terms == 3 else None,
        residual_norm=residual_norm,
        c2_uncertainty=c2_uncertainty,
        terms=terms,
        target_m2=math.pi * r * r,
    )
    logger.info("expansion fit at r=%g: c1=%.3e c2=%.9g (target %.9g)", r, fit.c1, fit.c2, fit.target_m2)
    return fit


@dataclass
class RootEstimate:
    location: float
    bracket: Tuple[float, float]
    multiplicity: str
    derivative: Optional[float] = None

    @property
    def confirmed(self):
        return self.multiplicity in ("simple", "degenerate")

    def to_dict(self):
        return {
            "location": self.location,
            "bracket": list(self.bracket),
            "multiplicity": self.multiplicity,
            "derivative": self.derivative,
        }


@dataclass
class RootReport:
    interval: Tuple[float, float]
    function_label: str
    roots: List[RootEstimate] = field(default_factory=list)
    predicted_cycles: int = 0
    notes: List[str] = field(default_factory=list)
    samples: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def confirmed_roots(self):
        return [root for root in self.roots if root.confirmed]

    def to_dict(self):
        return {
            "interval": list(self.interval),
            "function": self.function_label,
            "roots": [root.to_dict() for root in self.roots],
            "predicted_cycles": self.predicted_cycles,
            "notes": list(self.notes),
        }


def find_roots(function=None, samples=None, interval=None, count=200, xtol=1e-10,
               derivative_step=1e-5, derivative_floor=1e-6, even_root_floor=1e-3,
               label="f", jobs=1):
    """Bracket, refine and classify the roots of a sampled function.

    Pass ``samples`` as (radii, values), a callable ``function`` with an
    ``interval``, or both (samples locate brackets, the callable refines
    them by bisection). Without a callable, brackets are refined by linear
    interpolation and the derivative is the bracket secant.
    """
    if samples is not None:
        rs = np.asarray(samples[0], dtype=float)
        vs = np.asarray(samples[1], dtype=float)
        if rs.shape != vs.shape:
            raise InvalidInputError("radii and values differ in length", field="samples")
    elif function is not None and interval is not None:
        lo, hi = (float(v) for v in interval)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise InvalidInputError(f"empty interval ({lo}, {hi})", field="interval")
        rs = np.linspace(lo, hi, int(count))
        vs = np.array(map_ordered(function, rs, jobs), dtype=float)
    else:
        raise InvalidInputError("either samples or a function with an interval is required", field="samples")

    if rs.size < 2:
        raise InvalidInputError("need at least two samples", field="samples")
    if interval is None:
        interval = (float(rs[0]), float(rs[-1]))
    if not interval[0] < interval[1]:
        raise InvalidInputError(f"empty interval {tuple(interval)}", field="interval")
    if not (np.all(np.isfinite(rs)) and np.all(np.isfinite(vs))):
        raise InvalidInputError("samples must be finite", field="samples")
    if np.any(np.diff(rs) <= 0.0):
        raise InvalidInputError("sample locations must be strictly increasing", field="samples")

    report = RootReport(interval=(float(interval[0]), float(interval[1])), function_label=label,
                        samples=list(zip(rs.tolist(), vs.tolist())))
    scale = float(np.max(np.abs(vs)))
    if scale == 0.0:
        report.notes.append("function vanishes at every sample; a higher-order function is needed")
        return report
    slope_floor = derivative_floor * scale / (rs[-1] - rs[0])

    def derivative_at(x, lo, hi, v_lo, v_hi):
        if function is None:
            return (v_hi - v_lo) / (hi - lo) if hi > lo else None
        delta = derivative_step * max(1.0, abs(x))
        return (float(function(x + delta)) - float(function(x - delta))) / (2.0 * delta)

    def classify(x, lo, hi, v_lo, v_hi):
        slope = derivative_at(x, lo, hi, v_lo, v_hi)
        kind = "simple" if slope is not None and abs(slope) > slope_floor else "degenerate"
        return RootEstimate(location=float(x), bracket=(float(lo), float(hi)), multiplicity=kind,
                            derivative=None if slope is None else float(slope))

    signs = np.sign(vs)
    zero_indices = set(np.flatnonzero(signs == 0).tolist())
    for i in range(len(rs) - 1):
        if i in zero_indices or (i + 1) in zero_indices or signs[i] * signs[i + 1] > 0:
            continue
        lo, hi = rs[i], rs[i + 1]
        if function is not None:
            location = bisect(function, lo, hi, xtol=xtol)
        else:
            location = lo - vs[i] * (hi - lo) / (vs[i + 1] - vs[i])
        report.roots.append(classify(location, lo, hi, vs[i], vs[i + 1]))

    for i in sorted(zero_indices):
        left = signs[i - 1] if i > 0 else 0.0
        right = signs[i + 1] if i + 1 < len(rs) else 0.0
        lo, hi = rs[max(i - 1, 0)], rs[min(i + 1, len(rs) - 1)]
        if left * right < 0.0:
            report.roots.append(classify(rs[i], lo, hi, vs[max(i - 1, 0)], vs[min(i + 1, len(rs) - 1)]))
        else:
            report.roots.append(RootEstimate(float(rs[i]), (float(lo), float(hi)), "suspected even"))

    magnitudes = np.abs(vs)
    for i in range(1, len(rs) - 1):
        if i in zero_indices or (i - 1) in zero_indices or (i + 1) in zero_indices:
            continue
        local_min = magnitudes[i] <= magnitudes[i - 1] and magnitudes[i] < magnitudes[i + 1]
        if local_min and magnitudes[i] <= even_root_floor * scale and signs[i - 1] == signs[i] == signs[i + 1]:
            report.roots.append(RootEstimate(float(rs[i]), (float(rs[i - 1]), float(rs[i + 1])), "suspected even"))

    report.roots.sort(key=lambda root: root.location)
    report.predicted_cycles = sum(1 for root in report.roots if root.multiplicity == "simple")
    if not report.confirmed_roots:
        report.notes.append("no sign change detected")
    if any(root.multiplicity == "degenerate" for root in report.roots):
        report.notes.append("degenerate roots need manual study")
    if function is None and report.confirmed_roots:
        report.notes.append("roots refined by interpolation between samples")
    return report


def search_limit_cycles(system, epsilon, r_min, r_max, count=32, options=None, jobs=1, **root_options):
    """Roots of the measured displacement r -> d(r, eps) over [r_min, r_max]."""
    grid = radius_grid(r_min, r_max, count)
    grid = [r for r, _ in nudge_grid(system.partition, grid)]

    def measured(r):
        return displacement(system, float(r), epsilon, options).d

    values = map_ordered(measured, grid, jobs)
    return find_roots(function=measured, samples=(grid, values), interval=(r_min, r_max),
                      label=f"d(r, eps={epsilon:g})", **root_options)


def search_harness_roots(harness, r_min, r_max, count=64, tol=DEFAULT_TOL, jobs=1, limit=QUAD_LIMIT, **root_options):
    """Roots of M1 for a harness system over [r_min, r_max]."""
    def m1(r):
        return m1_general(harness, float(r), tol, validate=False, limit=limit)

    harness.check_orbit_family(r_min)
    harness.check_orbit_family(r_max)
    return find_roots(function=m1, interval=(r_min, r_max), count=count, label="M1", jobs=jobs, **root_options)


def random_partition_trials(seed, trials=100, radii=10, shapes=("linear", "cubic", "power-6", "random-polynomial"),
                            tol=DEFAULT_TOL):
    """Randomized closed-form and quadrature checks of M1 = 0.

    Each trial draws n in 1..8, increasing breakpoints with a_1 > 0 and
    increasing slopes, then evaluates every shape at ``radii`` radii kept
    away from the breakpoints. Returns a list of row dictionaries.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for trial in range(int(trials)):
        n = int(rng.integers(1, 9))
        breakpoints = np.cumsum(rng.uniform(0.05, 0.35, n))
        slopes = rng.uniform(-2.0, 0.0) + np.cumsum(rng.uniform(0.05, 0.6, n + 1))
        partition = ZonePartition(tuple(breakpoints), tuple(slopes))

        r_values = []
        while len(r_values) < radii:
            r = float(rng.uniform(0.05, breakpoints[-1] + 0.5))
            if min(abs(r - a) for a in breakpoints) > 1e-6:
                r_values.append(r)

        for name in shapes:
            if name == "random-polynomial":
                degree = int(rng.integers(0, 6))
                shape = ShapeFunction.polynomial(tuple(rng.uniform(-1.0, 1.0, degree + 1)))
            elif name == "linear":
                shape = ShapeFunction.linear()
            elif name == "cubic":
                shape = ShapeFunction.cubic()
            elif name.startswith("power-"):
                shape = ShapeFunction.power(int(name.split("-")[1]))
            else:
                raise InvalidInputError(f"unknown shape {name!r}", field="shapes")
            system = PerturbedSystem(partition, shape)
            for r in sorted(r_values):
                pieces = m1_closed_form(partition, shape, r)
                magnitude = abs(pieces.first) + abs(pieces.second) + abs(pieces.third)
                rows.append({
                    "trial": trial,
                    "n": n,
                    "shape": name,
                    "r": r,
                    "first": pieces.first,
                    "second": pieces.second,
                    "third": pieces.third,
                    "total": pieces.total,
                    "relative_total": abs(pieces.total) / magnitude if magnitude > 0.0 else 0.0,
                    "m1_quad": m1_quadrature(system, r, tol),
                })
    return rows


@dataclass
class ConjectureReport:
    system_label: str
    kind: str
    r_range: Tuple[float, float]
    epsilons: Tuple[float, ...]
    verdict: str = ""
    evidence: Dict[str, dict] = field(default_factory=dict)
    caveats: List[str] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)
    melnikov: Optional[MelnikovCurve] = None
    displacements: list = field(default_factory=list)
    root_reports: List[RootReport] = field(default_factory=list)

    @property
    def predicted_cycles(self):
        return sum(report.predicted_cycles for report in self.root_reports
                   if report.function_label in ("M1", "M2"))

    def to_dict(self):
        return {
            "system": self.system_label,
            "kind": self.kind,
            "r_range": list(self.r_range),
            "epsilons": list(self.epsilons),
            "verdict": self.verdict,
            "predicted_cycles": self.predicted_cycles,
            "evidence": self.evidence,
            "root_reports": [report.to_dict() for report in self.root_reports],
            "caveats": list(self.caveats),
            "failures": list(self.failures),
        }


def _fit_radius(partition, r_min, r_max):
    r = 0.5 * (r_min + r_max)
    for a in partition.breakpoints:
        if abs(r - a) < 1e-3:
            r = a + 0.05
    return r


def conjecture_report(system, r_range=(0.25, 4.0), epsilons=(0.005, 0.01, 0.02), count=16,
                      tol=DEFAULT_TOL, options=None, fit_epsilons=(0.02, 0.01, 0.005, 0.0025),
                      fit_terms=3, seed=None, trials=0, jobs=1, root_options=None,
                      limit=QUAD_LIMIT, epsilon_step=EPSILON_STEP):
    """Collect the limit-cycle evidence for one system.

    Piecewise systems get Melnikov-level evidence (M1 vanishing, M2 sign and
    roots, with the finite-difference M2 alongside when ``epsilon_step`` is
    set), measured displacement positivity, an expansion fit and, when
    ``trials`` > 0, the seeded randomized closed-form checks. Harness
    systems use the order rule with k = 1 on M1. Sub-computation
    failures are recorded, never raised.
    """
    root_options = dict(root_options or {})
    r_min, r_max = (float(v) for v in r_range)
    if isinstance(system, GeneralHarnessSystem):
        return harness_report(system, (r_min, r_max), count, tol, jobs, root_options, limit=limit)

    report = ConjectureReport(system_label=system.label, kind="piecewise", r_range=(r_min, r_max),
                              epsilons=tuple(float(e) for e in epsilons))
    report.caveats = [CONJECTURE_CAVEAT, ANNULUS_CAVEAT]
    grid = radius_grid(r_min, r_max, count)

    curve = sweep_melnikov(system, grid, tol, jobs, limit=limit, epsilon_step=epsilon_step)
    report.melnikov = curve
    m1_values = [s.m1_quad for s in curve.samples if math.isfinite(s.m1_quad)]
    m1_closed = [s.m1_closed for s in curve.samples if math.isfinite(s.m1_closed)]
    m2_values = [s.m2_quad for s in curve.samples if math.isfinite(s.m2_quad)]
    m2_gaps = [abs(s.m2_fd - s.m2_quad) / abs(s.m2_quad) for s in curve.samples
               if math.isfinite(s.m2_fd) and math.isfinite(s.m2_quad) and s.m2_quad != 0.0]
    report.failures.extend(f"r={s.r:.6g}: {s.note}" for s in curve.samples if s.note)

    max_m1 = max((abs(v) for v in m1_values), default=math.nan)
    report.evidence["m1_vanishes"] = {
        "max_abs_m1_quad": max_m1,
        "max_abs_m1_closed": max((abs(v) for v in m1_closed), default=math.nan),
        "bound": 2.0 * tol,
        "holds": bool(m1_values) and max_m1 <= 2.0 * tol,
    }

    m2_roots = None
    if m2_values:
        radii = [s.r for s in curve.samples if math.isfinite(s.m2_quad)]
        m2_roots = find_roots(samples=(radii, m2_values), label="M2", **root_options)
        report.root_reports.append(m2_roots)
    min_m2 = min(m2_values, default=math.nan)
    report.evidence["m2_positive"] = {
        "min_m2_quad": min_m2,
        "max_rel_gap_m2_finite_difference": max(m2_gaps, default=math.nan),
        "lower_bound": math.pi * grid[0] ** 2 * (1.0 - 1e-8),
        "order": curve.order,
        "confirmed_roots": len(m2_roots.confirmed_roots) if m2_roots else None,
        "holds": bool(m2_values) and min_m2 >= math.pi * grid[0] ** 2 * (1.0 - 1e-8)
                 and not m2_roots.confirmed_roots,
    }

    displacement_ok = None
    if report.epsilons:
        displacement_ok = _displacement_evidence(report, system, grid, options, jobs, root_options)
        _fit_evidence(report, system, _fit_radius(system.partition, r_min, r_max), fit_epsilons,
                      fit_terms, options, jobs)
    else:
        report.caveats.append("No eps values given: the report holds Melnikov-level evidence only.")

    if trials:
        _trial_evidence(report, seed, trials, tol)

    melnikov_ok = report.evidence["m1_vanishes"]["holds"] and report.evidence["m2_positive"]["holds"]
    if displacement_ok is False:
        report.verdict = "limit cycle candidate detected: measured displacement changes sign or vanishes"
    elif not melnikov_ok:
        report.verdict = "inconclusive: Melnikov evidence does not match M1 = 0 and M2 > 0"
    elif displacement_ok:
        report.verdict = "no limit cycle detected; evidence consistent with Conjecture"
    else:
        report.verdict = "no limit cycle predicted at Melnikov level; consistent with Conjecture"
    logger.info("report verdict: %s", report.verdict)
    return report


def _displacement_evidence(report, system, grid, options, jobs, root_options):
    radii = [r for r, _ in nudge_grid(system.partition, grid)]
    plan = [(r, float(e)) for e in report.epsilons for r in radii]

    def measure(pair):
        try:
            return displacement(system, pair[0], pair[1], options)
        except MelnikovError as e:
            return f"displacement at r={pair[0]:.6g}, eps={pair[1]:g} failed: {e}"

    results = map_ordered(measure, plan, jobs)
    records = [item for item in results if not isinstance(item, str)]
    report.failures.extend(item for item in results if isinstance(item, str))
    report.displacements = records

    all_positive = bool(records) and all(rec.d > 0.0 for rec in records)
    sign_changes = 0
    for e in report.epsilons:
        rows = [rec for rec in records if rec.epsilon == e]
        if len(rows) < 2:
            continue
        roots = find_roots(samples=([rec.r for rec in rows], [rec.d for rec in rows]),
                           label=f"d(r, eps={e:g})", **root_options)
        report.root_reports.append(roots)
        sign_changes += len(roots.confirmed_roots)

    report.evidence["displacement_positive"] = {
        "samples": len(records),
        "min_d": min((rec.d for rec in records), default=math.nan),
        "min_d_over_eps2_r2": min((rec.d / (rec.epsilon ** 2 * rec.r ** 2) for rec in records
                                   if rec.epsilon != 0.0), default=math.nan),
        "confirmed_roots": sign_changes,
        "holds": all_positive and sign_changes == 0,
    }
    return all_positive and sign_changes == 0


def _fit_evidence(report, system, r, fit_epsilons, terms, options, jobs):
    try:
        fit = fit_expansion(system, r, fit_epsilons, options, terms=terms, jobs=jobs)
    except MelnikovError as e:
        report.failures.append(f"expansion fit failed: {e}")
        return
    evidence = fit.to_dict()
    evidence["holds"] = abs(fit.c1) <= 1e-4 and fit.c2_relative_error <= 0.02
    report.evidence["expansion_fit"] = evidence


def _trial_evidence(report, seed, trials, tol):
    try:
        rows = random_partition_trials(seed, trials, tol=tol)
    except MelnikovError as e:
        report.failures.append(f"randomized checks failed: {e}")
        return
    report.evidence["randomized_checks"] = {
        "seed": seed,
        "trials": int(trials),
        "evaluations": len(rows),
        "max_relative_total": max(row["relative_total"] for row in rows),
        "max_abs_m1_quad": max(abs(row["m1_quad"]) for row in rows),
        "holds": all(row["relative_total"] <= 1e-12 and abs(row["m1_quad"]) <= 2.0 * tol for row in rows),
    }


def harness_report(harness, r_range=(0.25, 4.0), count=64, tol=DEFAULT_TOL, jobs=1, root_options=None,
                   limit=QUAD_LIMIT):
    """Order rule with k = 1 on M1 of a harness system over the annulus r_range."""
    r_min, r_max = (float(v) for v in r_range)
    root_options = dict(root_options or {})
    report = ConjectureReport(system_label=harness.label, kind="harness", r_range=(r_min, r_max), epsilons=())
    report.caveats = [
        ANNULUS_CAVEAT,
        "Displacement measurements are only available for piecewise systems.",
    ]
    try:
        roots = search_harness_roots(harness, r_min, r_max, max(count, 32), tol, jobs, limit, **root_options)
    except MelnikovError as e:
        report.failures.append(f"M1 search failed: {e}")
        report.verdict = "inconclusive: M1 could not be evaluated"
        return report

    report.root_reports.append(roots)
    values = [v for _, v in roots.samples]
    max_m1 = max(abs(v) for v in values)
    report.evidence["m1"] = {
        "max_abs_m1": max_m1,
        "order": 1 if max_m1 > 2.0 * tol else None,
        "simple_roots": [root.location for root in roots.roots if root.multiplicity == "simple"],
        "derivatives": [root.derivative for root in roots.roots if root.multiplicity == "simple"],
    }
    if max_m1 <= 2.0 * tol:
        report.verdict = "inconclusive: M1 vanishes identically; a higher-order function is needed"
    elif roots.predicted_cycles:
        where = ", ".join(f"r={root.location:.6f}" for root in roots.roots if root.multiplicity == "simple")
        plural = "s" if roots.predicted_cycles > 1 else ""
        report.verdict = f"limit cycle{plural} predicted near {where}"
    else:
        report.verdict = "no limit cycle predicted: M1 has no simple root in the scanned annulus"
    logger.info("report verdict: %s", report.verdict)
    return report
