"""Piecewise Duffing-type system with n+1 vertical zones.

The unperturbed part is the linear centre x' = y, y' = -x. On zone i,
i.e. for x in (a_i, a_{i+1}] with a_0 = -inf and a_{n+1} = +inf, the
perturbation is

    g(x, y, eps) = alpha_i * h'(x) + eps * y

so the full field is (y, -x + eps * g). Epsilon is never stored on a
system; every evaluation takes it as an argument.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import solve_ivp

from app.utils.errors import BoundaryPointError, InvalidInputError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def _require_finite(value, field):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidInputError(f"expected a real number, got {value!r}", field=field)
    if not math.isfinite(value):
        raise InvalidInputError(f"must be finite, got {value!r}", field=field)
    return value


def hamiltonian(x, y):
    """H(x, y) = (x^2 + y^2) / 2."""
    return 0.5 * (x * x + y * y)


@dataclass(frozen=True)
class ZonePartition:
    breakpoints: Tuple[float, ...]
    slopes: Tuple[float, ...]
    strict_mode: bool = True

    def __post_init__(self):
        breakpoints = tuple(_require_finite(a, "breakpoints") for a in self.breakpoints)
        slopes = tuple(_require_finite(s, "slopes") for s in self.slopes)
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "slopes", slopes)

        if len(breakpoints) < 1:
            raise InvalidInputError("at least one breakpoint is required (n >= 1)", field="breakpoints")
        if breakpoints[0] <= 0.0:
            raise InvalidInputError(
                f"first breakpoint must be positive, got {breakpoints[0]!r}", field="breakpoints"
            )
        if any(upper <= lower for lower, upper in zip(breakpoints, breakpoints[1:])):
            raise InvalidInputError("must be strictly increasing", field="breakpoints")
        if len(slopes) != len(breakpoints) + 1:
            raise InvalidInputError(
                f"expected {len(breakpoints) + 1} slopes for {len(breakpoints)} breakpoints, got {len(slopes)}",
                field="slopes",
            )
        increasing = all(upper > lower for lower, upper in zip(slopes, slopes[1:]))
        if not increasing:
            if self.strict_mode:
                raise InvalidInputError("must be strictly increasing when strict_mode is true", field="slopes")
            logger.warning("Relaxed mode: slopes %s are not strictly increasing", slopes)

    @property
    def n(self):
        return len(self.breakpoints)

    @property
    def zone_count(self):
        return len(self.slopes)

    def bounds(self, i):
        """Return (a_i, a_{i+1}) for zone i with the infinite outer ends."""
        lower = -math.inf if i == 0 else self.breakpoints[i - 1]
        upper = math.inf if i == self.n else self.breakpoints[i]
        return lower, upper

    def zone_index(self, x):
        x = _require_finite(x, "x")
        # number of breakpoints strictly below x, so x = a_i falls in zone i-1
        return int(np.searchsorted(self.breakpoints, x, side="left"))

    def zone_indices(self, xs):
        xs = np.asarray(xs, dtype=float)
        if not np.all(np.isfinite(xs)):
            raise InvalidInputError("must be finite", field="x")
        return np.searchsorted(self.breakpoints, xs, side="left")

    def on_breakpoint(self, x):
        return any(x == a for a in self.breakpoints)


def linear_scan_zone(partition, x):
    """Reference zone lookup by walking the breakpoints in order."""
    index = 0
    for a in partition.breakpoints:
        if x > a:
            index += 1
        else:
            break
    return index


@dataclass(frozen=True)
class ShapeFunction:
    h: Callable
    h_prime: Callable
    label: str = "custom"
    coefficients: Optional[Tuple[float, ...]] = None

    def derivative_error(self, xs, delta=1e-4):
        """Largest gap between a central difference of h and the supplied h'."""
        xs = np.asarray(xs, dtype=float)
        central = (self.h(xs + delta) - self.h(xs - delta)) / (2.0 * delta)
        return float(np.max(np.abs(central - self.h_prime(xs))))

    @classmethod
    def polynomial(cls, coefficients, label="custom-polynomial"):
        """Shape with h'(x) = sum c_k x^k and h the antiderivative with h(0) = 0."""
        coefficients = tuple(_require_finite(c, "coefficients") for c in coefficients)
        if not coefficients:
            raise InvalidInputError("at least one coefficient is required", field="coefficients")
        h_prime = Polynomial(coefficients)
        return cls(h=h_prime.integ(), h_prime=h_prime, label=label, coefficients=coefficients)

    @classmethod
    def linear(cls):
        return cls.polynomial((0.0, 1.0), label="linear")

    @classmethod
    def cubic(cls):
        return cls.polynomial((0.0, 0.0, 0.0, 1.0), label="cubic")

    @classmethod
    def power(cls, k):
        """h(x) = x^k / k."""
        if int(k) != k or k < 1:
            raise InvalidInputError(f"power must be a positive integer, got {k!r}", field="shape")
        return cls.polynomial((0.0,) * (int(k) - 1) + (1.0,), label=f"power-{int(k)}")


def circular_orbit(r):
    """Parametrization x = r sin t, y = r cos t of the unperturbed circles, period 2*pi."""
    def curve(t):
        return r * np.sin(t), r * np.cos(t)
    return curve, TWO_PI


@dataclass(frozen=True)
class PeriodicOrbit:
    radius: float

    def __post_init__(self):
        radius = _require_finite(self.radius, "r")
        if radius <= 0.0:
            raise InvalidInputError(f"must be positive, got {radius!r}", field="r")
        object.__setattr__(self, "radius", radius)

    @classmethod
    def from_energy(cls, h):
        h = _require_finite(h, "h")
        if h <= 0.0:
            raise InvalidInputError(f"must be positive, got {h!r}", field="h")
        return cls(math.sqrt(2.0 * h))

    @property
    def energy(self):
        return 0.5 * self.radius * self.radius

    @property
    def period(self):
        return TWO_PI

    def point(self, t):
        return self.radius * math.sin(t), self.radius * math.cos(t)


@dataclass(frozen=True)
class PerturbedSystem:
    partition: ZonePartition
    shape: ShapeFunction
    label: str = "piecewise-duffing"

    def slope(self, i):
        return self.partition.slopes[i]

    def zone_g(self, i, x, y, eps):
        """g on zone i, extended smoothly past the zone's edges (accepts arrays)."""
        return self.partition.slopes[i] * self.shape.h_prime(x) + eps * y

    def eval_g(self, x, y, eps):
        i = self.partition.zone_index(x)
        return float(self.zone_g(i, x, y, eps))

    def vector_field(self, state, eps):
        x, y = state
        x = _require_finite(x, "x")
        y = _require_finite(y, "y")
        return y, -x + eps * self.eval_g(x, y, eps)

    def zone_field(self, i, eps):
        """Right-hand side f(t, s) of the smooth zone-i field, for the ODE solvers."""
        alpha = self.partition.slopes[i]
        h_prime = self.shape.h_prime

        def field(t, s):
            x, y = s[0], s[1]
            return np.array([y, -x + eps * (alpha * h_prime(x) + eps * y)])

        return field

    def divergence_at_eps0(self, x, y, step=1e-6):
        """df/dx + dg/dy at eps = 0 on the open strip containing x.

        f vanishes in this family, so only the y-derivative of g remains.
        """
        x = _require_finite(x, "x")
        y = _require_finite(y, "y")
        if self.partition.on_breakpoint(x):
            raise BoundaryPointError(f"x = {x!r} lies on a zone boundary; move off the line", field="x")
        delta = step * max(1.0, abs(y))
        return (self.eval_g(x, y + delta, 0.0) - self.eval_g(x, y - delta, 0.0)) / (2.0 * delta)

    def as_harness(self):
        """Wrap the system as (f1, f2) = (y, -x), (g1, g2) = (0, g)."""
        partition = self.partition

        def switch_times(r):
            from app.utils.melnikov import crossing_schedule
            return crossing_schedule(partition, r).crossing_times

        return GeneralHarnessSystem(
            f1=lambda x, y: y,
            f2=lambda x, y: -x,
            g1=lambda x, y, eps: 0.0,
            g2=self.eval_g,
            orbit=circular_orbit,
            label=self.label,
            divergence=lambda x, y: 0.0,
            switch_times=switch_times,
        )


@dataclass(frozen=True)
class GeneralHarnessSystem:
    """Planar system (f1, f2) + eps (g1, g2) with a supplied family of unperturbed orbits.

    ``orbit(r)`` returns ``(curve, period)`` where ``curve(t)`` gives the point
    tau_r(t). ``switch_times(r)`` optionally lists the times in [0, period)
    where g jumps along tau_r, so quadrature can split there.
    """
    f1: Callable
    f2: Callable
    g1: Callable
    g2: Callable
    orbit: Callable
    label: str = "harness"
    divergence: Optional[Callable] = None
    switch_times: Optional[Callable] = None

    def unperturbed_field(self, t, s):
        return np.array([self.f1(s[0], s[1]), self.f2(s[0], s[1])])

    def vector_field(self, state, eps):
        x, y = state
        return (self.f1(x, y) + eps * self.g1(x, y, eps),
                self.f2(x, y) + eps * self.g2(x, y, eps))

    def div_f(self, x, y, step=1e-6):
        if self.divergence is not None:
            return self.divergence(x, y)
        dx = step * max(1.0, abs(x))
        dy = step * max(1.0, abs(y))
        return ((self.f1(x + dx, y) - self.f1(x - dx, y)) / (2.0 * dx)
                + (self.f2(x, y + dy) - self.f2(x, y - dy)) / (2.0 * dy))

    def divergence_at_eps0(self, x, y, step=1e-6):
        """dg1/dx + dg2/dy at eps = 0, by central differences."""
        x = _require_finite(x, "x")
        y = _require_finite(y, "y")
        dx = step * max(1.0, abs(x))
        dy = step * max(1.0, abs(y))
        return ((self.g1(x + dx, y, 0.0) - self.g1(x - dx, y, 0.0)) / (2.0 * dx)
                + (self.g2(x, y + dy, 0.0) - self.g2(x, y - dy, 0.0)) / (2.0 * dy))

    def breaks(self, r, period):
        if self.switch_times is None:
            return []
        return sorted(t for t in self.switch_times(r) if 0.0 < t < period)

    def check_orbit_family(self, r, tol=1e-8, rtol=1e-11, atol=1e-12, samples=9):
        """Integrate (f1, f2) from tau_r(0) and compare with the supplied curve.

        Returns the largest deviation; raises InvalidInputError above tol * max(1, r).
        """
        curve, period = self.orbit(r)
        if not (period > 0.0 and math.isfinite(period)):
            raise InvalidInputError(f"orbit period must be positive, got {period!r}", field="orbit")
        start = np.array(curve(0.0), dtype=float)
        times = np.linspace(0.0, period, samples)
        solution = solve_ivp(self.unperturbed_field, (0.0, period), start, method="DOP853",
                             rtol=rtol, atol=atol, t_eval=times)
        if not solution.success:
            raise InvalidInputError(f"could not integrate the unperturbed field: {solution.message}", field="orbit")
        expected = np.array([curve(t) for t in times], dtype=float).T
        error = float(np.max(np.abs(solution.y - expected)))
        closure = float(np.max(np.abs(np.array(curve(period)) - start)))
        error = max(error, closure)
        if error > tol * max(1.0, r):
            raise InvalidInputError(
                f"parametrization at r={r:g} does not follow the unperturbed flow (deviation {error:.3e})",
                field="orbit",
            )
        return error


def van_der_pol_harness():
    """x' = y, y' = -x + eps (1 - x^2) y; first-order Melnikov function pi r^2 (1 - r^2/4)."""
    return GeneralHarnessSystem(
        f1=lambda x, y: y,
        f2=lambda x, y: -x,
        g1=lambda x, y, eps: 0.0,
        g2=lambda x, y, eps: (1.0 - x * x) * y,
        orbit=circular_orbit,
        label="van-der-pol",
        divergence=lambda x, y: 0.0,
    )


def zero_harness():
    return GeneralHarnessSystem(
        f1=lambda x, y: y,
        f2=lambda x, y: -x,
        g1=lambda x, y, eps: 0.0,
        g2=lambda x, y, eps: 0.0,
        orbit=circular_orbit,
        label="zero-perturbation",
        divergence=lambda x, y: 0.0,
    )


def zone_index(partition, x):
    return partition.zone_index(x)


def eval_g(system, x, y, eps):
    return system.eval_g(x, y, eps)


def vector_field(system, state, eps):
    return system.vector_field(state, eps)


def divergence_at_eps0(system, x, y):
    return system.divergence_at_eps0(x, y)
