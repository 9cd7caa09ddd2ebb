"""Growth rates, relative entropy, Lyapunov exponents and the entropy bound checks."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

import gmpy2
import numpy as np
from gmpy2 import mpq

from .exchange import GpeSystem, evaluate
from .geometry import Enclosure, Point
from .join import Caps, JoinLevel, generating_evidence, join_sequence

FINSLER_NORM = "euclidean-operator-norm"

DEFAULT_WINDOW = 0.25
DEFAULT_TOL = 1e-6


def _log(v) -> float:
    if isinstance(v, Enclosure):
        v = (v.lo + v.hi) / 2
    if isinstance(v, type(mpq(0))):
        return math.log(v.numerator) - math.log(v.denominator)
    return math.log(v)


@dataclass(frozen=True)
class GrowthEstimate:
    theta_tail: float
    theta_slope: float
    residual: float
    loglog_slope: float
    loglog_residual: float
    monotone: bool
    window: tuple[int, int]

    @property
    def subexponential(self) -> bool:
        # a power law explains the tail at least as well as an exponential
        return self.theta_slope <= 1e-12 or self.loglog_residual <= self.residual

    @property
    def rate(self) -> float:
        """The rate used in bound margins: 0 for subexponential series, else theta_tail."""
        return 0.0 if self.subexponential else self.theta_tail


def _lsq(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    if np.ptp(x) == 0:
        return 0.0, 0.0
    slope, icpt = np.polyfit(x, y, 1)
    res = y - (slope * x + icpt)
    return float(slope), float(np.sqrt(np.mean(res * res)))


def growth_rate(values: Sequence, window: float = DEFAULT_WINDOW) -> GrowthEstimate:
    """Finite-N proxies for limsup (log a_n)/n of a_1..a_N.

    ``theta_tail`` is the largest (log a_n)/n over the last ``window``
    fraction (at least three terms); ``theta_slope`` is the least-squares
    slope of log a_n against n over the same terms.
    """
    N = len(values)
    if N < 4:
        raise ValueError("series too short: need at least 4 terms")
    logs = np.array([_log(v) for v in values])
    if not np.all(np.isfinite(logs)):
        raise ValueError("series values must be positive")
    m = min(N, max(3, math.ceil(window * N)))
    start = N - m
    n = np.arange(1, N + 1, dtype=float)
    tail_n, tail_log = n[start:], logs[start:]
    theta_tail = float(np.max(tail_log / tail_n))
    slope, resid = _lsq(tail_n, tail_log)
    ll_slope, ll_resid = _lsq(np.log(tail_n), tail_log)
    monotone = bool(np.all(np.diff(logs) >= -1e-15))
    return GrowthEstimate(theta_tail, slope, resid, ll_slope, ll_resid, monotone, (start + 1, N))


def relative_entropy(
    g: GpeSystem, N: int, window: float = DEFAULT_WINDOW, caps: Caps = Caps()
) -> tuple[GrowthEstimate, list[int], list[JoinLevel]]:
    levels = join_sequence(g, N, caps)
    counts = [lv.stats.atom_count for lv in levels]
    return growth_rate(counts, window), counts, levels


# --------------------------------------------------------------------------
# Lyapunov exponents
# --------------------------------------------------------------------------


class SingularOrbit(ValueError):
    def __init__(self, step: int):
        super().__init__(f"orbit hits the singular set at step {step}")
        self.step = step


PRECISION = 256


def _log_norm(a, b, c, d):
    # log of the largest singular value, as an mpfr in the caller's context
    fro = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = gmpy2.mpfr(fro * fro - 4 * det * det)
    sigma2 = (gmpy2.mpfr(fro) + gmpy2.sqrt(max(disc, gmpy2.mpfr(0)))) / 2
    return gmpy2.log(sigma2) / 2


def log_operator_norm(a, b, c, d) -> float:
    """log ||[[a, b], [c, d]]|| in the Euclidean operator norm."""
    with gmpy2.context(gmpy2.get_context(), precision=PRECISION):
        return float(_log_norm(a, b, c, d))


def lyapunov(g: GpeSystem, x, n: int) -> list[float]:
    """lambda_k(x)/k for k = 1..n with lambda_k = log ||DT^k(x)||."""
    orbit = evaluate(g, x, n)
    if not orbit.regular:
        raise SingularOrbit(orbit.singular_step)
    a, b, c, d = mpq(1), mpq(0), mpq(0), mpq(1)
    out = []
    with gmpy2.context(gmpy2.get_context(), precision=PRECISION):
        for k, i in enumerate(orbit.itinerary, start=1):
            m = g.maps[i]
            a, b, c, d = m.a * a + m.b * c, m.a * b + m.b * d, m.c * a + m.d * c, m.c * b + m.d * d
            out.append(float(_log_norm(a, b, c, d) / k))
    return out


def regular_sample(
    g: GpeSystem, n: int, count: int, seed: int = 0, grid: int = 997, max_tries: int = 10_000
) -> list[Point]:
    """``count`` points of a rational grid in X that stay regular for n steps."""
    rng = random.Random(seed)
    x0, y0, x1, y1 = g.space.bbox()
    out: list[Point] = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("could not draw enough regular points")
        p = Point(
            x0 + (x1 - x0) * mpq(rng.randrange(1, grid), grid),
            y0 + (y1 - y0) * mpq(rng.randrange(1, grid), grid),
        )
        if g.space.locate(p) != "interior":
            continue
        if evaluate(g, p, n).regular:
            out.append(p)
    return out


# --------------------------------------------------------------------------
# bound checks
# --------------------------------------------------------------------------


@dataclass
class BoundReport:
    system: str
    N: int
    h_estimate: float
    theta_estimate: float
    h_tail: float
    theta_tail: float
    theta_slope: float
    b_growth: float
    lyapunov_sup: float
    margin_entropy: float
    margin_multiplicity: float
    margin_lyapunov: float
    uniformity_N: Optional[int]
    cells_convex: bool
    generating: str
    skeleton_width: float
    subexponential: bool
    tol: float
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def items(self) -> list[tuple[str, str]]:
        def f(v: float) -> str:
            return f"{v:.12g}"

        return [
            ("system", self.system),
            ("N", str(self.N)),
            ("h_estimate", f(self.h_estimate)),
            ("theta_estimate", f(self.theta_estimate)),
            ("h_tail", f(self.h_tail)),
            ("theta_tail", f(self.theta_tail)),
            ("theta_slope", f(self.theta_slope)),
            ("b_growth", f(self.b_growth)),
            ("lyapunov_sup", f(self.lyapunov_sup)),
            ("margin_entropy", f(self.margin_entropy)),
            ("margin_multiplicity", f(self.margin_multiplicity)),
            ("margin_lyapunov", f(self.margin_lyapunov)),
            ("b_growth_hypothesis", "holds" if self.margin_multiplicity >= -self.tol else "fails"),
            ("uniformity_N", "none" if self.uniformity_N is None else str(self.uniformity_N)),
            ("uniformity_status", "hypothesis evidence"),
            ("cells_convex", str(self.cells_convex).lower()),
            ("generating", self.generating),
            ("h_status", "h(T)" if self.generating == "shrinking" else "h(T,R), a lower bound for h(T)"),
            ("skeleton_enclosure_width", f(self.skeleton_width)),
            ("theta_subexponential", str(self.subexponential).lower()),
            ("finsler_norm", FINSLER_NORM),
            ("tol", f(self.tol)),
            ("violations", "none" if not self.violations else "|".join(self.violations)),
        ]

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.items())

    def to_csv(self) -> str:
        return "key,value\n" + "".join(f"{k},{v}\n" for k, v in self.items())


def _strictly_convex(levels: Sequence[JoinLevel]) -> bool:
    from .geometry import cross

    for lv in levels:
        for c in lv.cells:
            v = c.region.vertices
            k = len(v)
            if k < 3 or any(cross(v[i - 1], v[i], v[(i + 1) % k]) <= 0 for i in range(k)):
                return False
    return True


def check_bounds(
    g: GpeSystem,
    N: int,
    sample: Optional[Sequence[Point]] = None,
    *,
    samples: int = 16,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    window: float = DEFAULT_WINDOW,
    caps: Caps = Caps(),
    levels: Optional[Sequence[JoinLevel]] = None,
) -> BoundReport:
    """Empirical check of h(T,R) <= theta, with the b-growth and Lyapunov hypotheses monitored.

    Only a failed conclusion (h above theta, or a non-convex cell) is a
    violation; the hypotheses are reported with their margins.
    """
    if levels is None:
        levels = join_sequence(g, N, caps)
    counts = [lv.stats.atom_count for lv in levels]
    lengths = [lv.stats.skeleton_length for lv in levels]
    mults = [lv.stats.multiplicity for lv in levels]
    h = growth_rate(counts, window)
    theta = growth_rate(lengths, window)
    bg = growth_rate(mults, window)
    if sample is None:
        sample = regular_sample(g, N, samples, seed)
    if not sample:
        raise ValueError("sample of regular points is empty")
    lyap = [lyapunov(g, x, N) for x in sample]
    lyap_sup = max(seq[-1] for seq in lyap)
    bound = theta.rate + tol
    uniform: Optional[int] = None
    for start in range(1, N + 1):
        if all(v <= bound for seq in lyap for v in seq[start - 1 :]):
            uniform = start
            break
    report = BoundReport(
        system=g.name,
        N=N,
        h_estimate=h.rate,
        theta_estimate=theta.rate,
        h_tail=h.theta_tail,
        theta_tail=theta.theta_tail,
        theta_slope=theta.theta_slope,
        b_growth=bg.rate,
        lyapunov_sup=lyap_sup,
        margin_entropy=theta.rate - h.rate,
        margin_multiplicity=theta.rate - bg.rate,
        margin_lyapunov=theta.rate - lyap_sup,
        uniformity_N=uniform,
        cells_convex=_strictly_convex(levels),
        generating=generating_evidence(levels),
        skeleton_width=float(max(x.width for x in lengths)),
        subexponential=theta.subexponential,
        tol=tol,
    )
    if report.margin_entropy < -tol:
        report.violations.append("entropy exceeds skeleton growth rate")
    if not report.cells_convex:
        report.violations.append("non-convex join cell")
    return report
