"""First- and second-order Melnikov functions for the piecewise Duffing family.

Orbits are the circles x = r sin t, y = r cos t. Closed forms follow the
three-piece split of [0, 2*pi) at pi/2 and 3*pi/2; the quadrature versions
split the circle at every crossing time t_i, sin t_i = a_i / r, so each
piece of the integrand is smooth.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from app.utils.errors import InvalidInputError, MelnikovError, PreconditionError
from app.utils.model import TWO_PI, _require_finite
from app.utils.quadrature import MACHINE_EPS, integrate_pieces

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
GRAZING_TOL_FACTOR = 1e-9
EPSILON_STEP = 1e-6
QUAD_LIMIT = 200


def grazing_tolerance(r, factor=GRAZING_TOL_FACTOR):
    return factor * max(1.0, abs(r))


def _require_radius(r):
    r = _require_finite(r, "r")
    if r <= 0.0:
        raise InvalidInputError(f"must be positive, got {r!r}", field="r")
    return r


class Segment(NamedTuple):
    t_start: float
    t_end: float
    zone: int

    @property
    def midpoint(self):
        return 0.5 * (self.t_start + self.t_end)


@dataclass(frozen=True)
class CrossingSchedule:
    r: float
    segments: Tuple[Segment, ...]
    crossing_times: Tuple[float, ...]
    m: int
    grazing: bool

    @property
    def edges(self):
        return (0.0,) + self.crossing_times + (TWO_PI,)

    def zone_at(self, t):
        for segment in self.segments:
            if segment.t_start <= t < segment.t_end:
                return segment.zone
        return self.segments[-1].zone


def crossing_schedule(partition, r, tol=None):
    """Times in [0, 2*pi) where r sin t passes a breakpoint, with zone labels.

    A breakpoint within ``tol`` of r is a grazing contact: the orbit is
    treated as staying below it and the schedule is flagged.
    """
    r = _require_radius(r)
    tol = grazing_tolerance(r) if tol is None else float(tol)

    grazing = any(abs(r - a) < tol for a in partition.breakpoints)
    touched = [a for a in partition.breakpoints if a < r - tol]
    m = len(touched)

    rising = [math.asin(a / r) for a in touched]
    falling = [math.pi - t for t in reversed(rising)]
    crossing_times = tuple(rising + falling)

    edges = (0.0,) + crossing_times + (TWO_PI,)
    zones = list(range(m + 1)) + list(range(m - 1, -1, -1))
    segments = tuple(Segment(edges[k], edges[k + 1], zones[k]) for k in range(len(zones)))

    if grazing:
        logger.debug("orbit r=%.17g grazes a breakpoint", r)
    return CrossingSchedule(r=r, segments=segments, crossing_times=crossing_times, m=m, grazing=grazing)


class MelnikovPieces(NamedTuple):
    first: float
    second: float
    third: float
    total: float


def m1_closed_form(partition, shape, r, tol=None):
    """Telescoping closed form of M1 split over [0, pi/2], [pi/2, 3pi/2], [3pi/2, 2pi].

    ``total`` is the exactly rounded sum of every term of the three pieces,
    which cancel pairwise.
    """
    m = crossing_schedule(partition, r, tol).m
    alpha = partition.slopes
    h = shape.h

    h_r = float(h(r))
    h_zero = float(h(0.0))
    h_minus_r = float(h(-r))
    jumps = math.fsum(
        (alpha[i] - alpha[i - 1]) * float(h(partition.breakpoints[i - 1])) for i in range(1, m + 1)
    )

    first_terms = [h_r * alpha[m], -h_zero * alpha[0], -jumps]
    second_terms = [-h_r * alpha[m], h_minus_r * alpha[0], jumps]
    third_terms = [h_zero * alpha[0], -h_minus_r * alpha[0]]

    return MelnikovPieces(
        first=math.fsum(first_terms),
        second=math.fsum(second_terms),
        third=math.fsum(third_terms),
        total=math.fsum(first_terms + second_terms + third_terms),
    )


def m1_quadrature(system, r, tol=DEFAULT_TOL, limit=QUAD_LIMIT):
    """M1(r) = integral over [0, 2pi) of r cos t g(r sin t, r cos t, 0)."""
    schedule = crossing_schedule(system.partition, r)
    r = schedule.r

    def piece(zone):
        return lambda t: r * math.cos(t) * system.zone_g(zone, r * math.sin(t), r * math.cos(t), 0.0)

    pieces = [(s.t_start, s.t_end, piece(s.zone)) for s in schedule.segments]
    return integrate_pieces(pieces, tol, limit=limit).value


def m1_general(harness, r, tol=DEFAULT_TOL, validate=True, limit=QUAD_LIMIT):
    """First Melnikov function of (f1, f2) + eps (g1, g2) along the supplied orbit family.

    M1(r) = int_0^T exp(-int_0^t div f) (f1 g2 - g1 f2)(tau_r(t)) dt, with the
    inner integral accumulated segment by segment.
    """
    r = _require_radius(r)
    if validate:
        harness.check_orbit_family(r)
    curve, period = harness.orbit(r)
    edges = [0.0] + harness.breaks(r, period) + [period]

    def work(t):
        x, y = curve(t)
        return (harness.f1(x, y) * harness.g2(x, y, 0.0)
                - harness.g1(x, y, 0.0) * harness.f2(x, y))

    def divergence(s):
        return harness.div_f(*curve(s))

    spot_values = [divergence(t) for t in np.linspace(0.0, period, 17)]
    if all(value == 0.0 for value in spot_values):
        pieces = [(edges[k], edges[k + 1], work) for k in range(len(edges) - 1)]
        return integrate_pieces(pieces, tol, limit=limit).value

    # cumulative divergence integral at each segment start
    starts = [0.0]
    for k in range(len(edges) - 2):
        step = integrate_pieces([(edges[k], edges[k + 1], divergence)], tol, limit=limit).value
        starts.append(starts[-1] + step)

    def weighted(k):
        def integrand(t):
            inner = integrate_pieces([(edges[k], t, divergence)], tol, limit=limit).value
            return math.exp(-(starts[k] + inner)) * work(t)
        return integrand

    pieces = [(edges[k], edges[k + 1], weighted(k)) for k in range(len(edges) - 1)]
    return integrate_pieces(pieces, tol, limit=limit).value


def m2_closed_form(r):
    """M2(r) = pi r^2 for the piecewise Duffing family."""
    r = _require_radius(r)
    return math.pi * r * r


def check_zero_divergence(system, r, samples=9, atol=1e-9):
    """Sample df/dx + dg/dy at eps = 0 over the disc of radius r.

    Points that land on a breakpoint line are moved off it. Raises
    PreconditionError naming the first offending point.
    """
    r = _require_radius(r)
    grid = np.linspace(-r, r, samples)
    for x in grid:
        if system.partition.on_breakpoint(x):
            x = x + grazing_tolerance(r)
        for y in grid:
            value = system.divergence_at_eps0(float(x), float(y))
            if not math.isfinite(value) or abs(value) > atol:
                raise PreconditionError(
                    f"second-order formula needs zero divergence, found {value:.3e}", point=(x, y)
                )


def m2_quadrature(system, r, tol=DEFAULT_TOL, mode="analytic", epsilon_step=EPSILON_STEP, limit=QUAD_LIMIT):
    """M2(r) = closed integral of dg/deps(x, y, 0) dx along the circle of radius r.

    ``mode`` is "analytic" (dg/deps = y for this family) or
    "finite_difference" (central difference in eps on each zone).
    """
    if mode not in ("analytic", "finite_difference"):
        raise InvalidInputError(f"unknown mode {mode!r}", field="mode")
    schedule = crossing_schedule(system.partition, r)
    r = schedule.r
    check_zero_divergence(system, r)

    noise = 0.0
    if mode == "analytic":
        def piece(zone):
            return lambda t: (r * math.cos(t)) * (r * math.cos(t))
    else:
        def piece(zone):
            def integrand(t):
                x, y = r * math.sin(t), r * math.cos(t)
                delta = epsilon_step * max(1.0, abs(y))
                derivative = (system.zone_g(zone, x, y, delta) - system.zone_g(zone, x, y, -delta)) / (2.0 * delta)
                return r * math.cos(t) * derivative
            return integrand

        xs = np.linspace(-r, r, 65)
        peak = max(abs(float(system.zone_g(s.zone, x, 0.0, 0.0))) for s in schedule.segments for x in xs)
        noise = 4.0 * MACHINE_EPS * (peak + r) / epsilon_step * r

    pieces = [(s.t_start, s.t_end, piece(s.zone)) for s in schedule.segments]
    return integrate_pieces(pieces, tol, limit=limit, noise=noise).value


@dataclass
class MelnikovSample:
    r: float
    m1_closed: float = math.nan
    m1_quad: float = math.nan
    m2_closed: float = math.nan
    m2_quad: float = math.nan
    m2_fd: float = math.nan
    grazing: bool = False
    note: str = ""


@dataclass
class MelnikovCurve:
    samples: List[MelnikovSample] = field(default_factory=list)
    order: Optional[int] = None
    tol: float = DEFAULT_TOL
    grazing_tol_factor: float = GRAZING_TOL_FACTOR

    def __post_init__(self):
        rs = [s.r for s in self.samples]
        if any(b <= a for a, b in zip(rs, rs[1:])):
            raise InvalidInputError("sample radii must be strictly increasing", field="r_grid")

    @property
    def radii(self):
        return [s.r for s in self.samples]

    def column(self, name):
        return [getattr(s, name) for s in self.samples]


def sample_melnikov(system, r, tol=DEFAULT_TOL, grazing=False, limit=QUAD_LIMIT, epsilon_step=None):
    """Closed-form and quadrature values of M1 and M2 at one radius.

    With epsilon_step set, M2 is also estimated with the finite-difference
    derivative in eps. Failures are written into the sample's note; the
    remaining fields stay NaN.
    """
    sample = MelnikovSample(r=r, grazing=grazing or crossing_schedule(system.partition, r).grazing)
    steps = [
        ("m1_closed", lambda: m1_closed_form(system.partition, system.shape, r).total),
        ("m1_quad", lambda: m1_quadrature(system, r, tol, limit=limit)),
        ("m2_closed", lambda: m2_closed_form(r)),
        ("m2_quad", lambda: m2_quadrature(system, r, tol, limit=limit)),
    ]
    if epsilon_step is not None:
        steps.append(("m2_fd", lambda: m2_quadrature(system, r, tol, mode="finite_difference",
                                                     epsilon_step=epsilon_step, limit=limit)))
    notes = []
    for name, compute in steps:
        try:
            setattr(sample, name, compute())
        except MelnikovError as e:
            logger.warning("r=%.17g: %s failed: %s", r, name, e)
            notes.append(f"{name}: {e}")
            estimate = getattr(e, "estimate", None)
            if estimate is not None:
                setattr(sample, name, estimate)
    sample.note = "; ".join(notes)
    return sample


def first_nonvanishing_order(samples, tol=DEFAULT_TOL):
    """Order k of the first Melnikov function not identically zero over the samples."""
    m1 = [abs(s.m1_quad) for s in samples if math.isfinite(s.m1_quad)]
    m2 = [abs(s.m2_quad) for s in samples if math.isfinite(s.m2_quad)]
    if m1 and max(m1) > 2.0 * tol:
        return 1
    if m2 and max(m2) > 2.0 * tol:
        return 2
    return None
