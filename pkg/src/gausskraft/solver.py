"""Minimization of Q over gauge-fixed log radii.

The iteration is L-BFGS (or plain gradient descent) on the hyperplane
sum_i mu_i r_i = 0 with a backtracking line search.  Steps that leave the
region where the origin is interior to the hull are halved.  Near the
optimum the change in Q drops below the quadrature noise, so a step whose
value change is within that noise is accepted on the approximate Wolfe
test, which only uses the (exact) gradient.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import admissibility, ingest, sphgeom
from .errors import GausskraftError, InvalidInstance
from .functional import EvalReport, evaluate, gauge_project
from .polytope import ProblemInstance, RadialPolytope

STEP_POLICIES = ("LBFGS", "GradientArmijo")
ARMIJO_C1 = 1e-4
WOLFE_SIGMA = 0.9
WOLFE_DELTA = 0.1
MIN_STEP = 1e-14


@dataclass(frozen=True)
class SolveConfig:
    max_iters: int = 500
    mass_tol: float = 1e-8
    quad_tol: float = 1e-10
    step_policy: str = "LBFGS"
    memory: int = 10
    degeneration_threshold: float = 20.0
    q_noise: float = 1e-11

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        for name in ("mass_tol", "quad_tol", "degeneration_threshold", "q_noise"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.step_policy not in STEP_POLICIES:
            raise ValueError(f"step_policy must be one of {STEP_POLICIES}")
        if self.memory < 1:
            raise ValueError("memory must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TraceEntry:
    Q: float
    residual: float
    step: float


@dataclass(frozen=True)
class SolveReport:
    status: str  # Converged | Degenerated | MaxIters
    log_radii: np.ndarray
    Q_star: float
    residual: float
    iterations: int
    trace: tuple[TraceEntry, ...]
    witness: Optional[list[int]] = None
    cell_areas: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def radii(self) -> np.ndarray:
        return np.exp(self.log_radii)


def require_admissible(instance: ProblemInstance) -> admissibility.AdmissibilityReport:
    """Run the cheap necessary checks; raise InvalidInstance if one fails."""
    report = admissibility.validate(instance, exhaustive=False)
    if not report.ok:
        raise InvalidInstance("instance fails: " + ", ".join(report.failures()), report)
    return report


def collapse_witness(log_radii: np.ndarray) -> list[int]:
    """Indices below the widest gap of the sorted log radii."""
    order = np.argsort(log_radii, kind="stable")
    gaps = np.diff(log_radii[order])
    cut = int(np.argmax(gaps)) + 1
    return sorted(int(i) for i in order[:cut])


def detect_degeneration(
    trace: Sequence[TraceEntry], log_radii, threshold: float = SolveConfig.degeneration_threshold, window: int = 3
) -> Optional[list[int]]:
    """Collapse witness if the spread is past ``threshold`` while Q keeps falling."""
    r = np.asarray(log_radii, dtype=float)
    if np.ptp(r) <= threshold or len(trace) < window + 1:
        return None
    recent = [t.Q for t in trace[-(window + 1):]]
    if not all(b < a for a, b in zip(recent, recent[1:])):
        return None
    return collapse_witness(r)


class _Evaluator:
    def __init__(self, instance: ProblemInstance, quad_tol: float):
        self.instance = instance
        self.quad_tol = quad_tol
        self.count = 0

    def __call__(self, r: np.ndarray) -> Optional[EvalReport]:
        self.count += 1
        try:
            rep = evaluate(self.instance, r, self.quad_tol)
        except GausskraftError:
            return None
        if not np.isfinite(rep.Q):
            return None
        return rep


def _lbfgs_direction(g: np.ndarray, s_hist: list, y_hist: list) -> np.ndarray:
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        alphas.append((rho, a))
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def _initial_step(instance: ProblemInstance, g: np.ndarray) -> float:
    # Hessian of Q scales like sigma/K per unit change of r; first step of size ~1
    return 1.0 / max(np.max(np.abs(g)) * instance.K / instance.sigma, 1.0)


def solve(
    instance: ProblemInstance,
    config: Optional[SolveConfig] = None,
    initial: Optional[Sequence[float]] = None,
    check: bool = True,
) -> SolveReport:
    """Minimize Q from ``initial`` (default zeros).

    With ``check=False`` the admissibility preconditions are skipped, which
    lets the degeneration detector observe inadmissible data.
    """
    config = config or SolveConfig()
    if check:
        require_admissible(instance)
    f = _Evaluator(instance, config.quad_tol)
    mu = instance.mu
    r = gauge_project(instance, np.zeros(instance.K) if initial is None else np.asarray(initial, dtype=float))
    cur = f(r)
    if cur is None:
        raise InvalidInstance("objective undefined at the initial point")

    def project(d):
        # keep the gauge: the all-ones direction leaves Q unchanged
        return d - np.dot(mu, d) / np.sum(mu)

    trace: list[TraceEntry] = [TraceEntry(cur.Q, cur.residual, 0.0)]
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    status, witness = "MaxIters", None
    iterations = 0
    for iterations in range(1, config.max_iters + 1):
        if cur.residual <= config.mass_tol:
            status, iterations = "Converged", iterations - 1
            break
        g = cur.gradient
        if config.step_policy == "LBFGS" and s_hist:
            d = project(_lbfgs_direction(g, s_hist, y_hist))
            t = 1.0
        else:
            d = project(-g)
            t = _initial_step(instance, g)
        slope = float(np.dot(g, d))
        if slope >= 0:
            d, slope = project(-g), -float(np.dot(g, g))
            t = _initial_step(instance, g)
            s_hist.clear()
            y_hist.clear()
        accepted = None
        noise = config.q_noise * max(1.0, abs(cur.Q))
        while t >= MIN_STEP:
            trial = f(gauge_project(instance, r + t * d))
            if trial is not None:
                dq = trial.Q - cur.Q
                if dq <= ARMIJO_C1 * t * slope:
                    accepted = trial
                    break
                new_slope = float(np.dot(trial.gradient, d))
                if dq <= noise and WOLFE_SIGMA * slope <= new_slope <= (2 * WOLFE_DELTA - 1) * slope:
                    accepted = trial
                    break
            t *= 0.5
        if accepted is None:
            s_hist.clear()
            y_hist.clear()
            if config.step_policy == "LBFGS" and not np.allclose(d, project(-g)):
                continue
            break
        s = accepted.polytope.log_radii - r
        y = accepted.gradient - cur.gradient
        if np.dot(s, y) > 1e-16 * np.dot(s, s) ** 0.5 * np.dot(y, y) ** 0.5 and np.dot(s, y) > 0:
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > config.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        r = np.array(accepted.polytope.log_radii)
        cur = accepted
        trace.append(TraceEntry(cur.Q, cur.residual, t))
        witness = detect_degeneration(trace, r, config.degeneration_threshold)
        if witness is not None:
            status = "Degenerated"
            break
    else:
        if cur.residual <= config.mass_tol:
            status = "Converged"
    return SolveReport(status, r, cur.Q, cur.residual, iterations, tuple(trace), witness, cur.cell_areas)


# ---------------------------------------------------------------------------
# refinement


@dataclass(frozen=True)
class LevelResult:
    level: int
    instance: ProblemInstance
    report: SolveReport
    polytope: RadialPolytope
    sphere_deviation: float
    change_from_previous: Optional[float]


def sphere_deviation(P: RadialPolytope, probes: np.ndarray) -> float:
    """(max - min) / max of the radial function over probe directions."""
    rho = P.radial_function(probes)
    return float((rho.max() - rho.min()) / rho.max())


def probe_directions(dimension: int, level: int = 4) -> np.ndarray:
    return sphgeom.geodesic_partition(level, dimension).representatives


def solve_refined(
    density: ingest.DensitySpec, levels: int, config: Optional[SolveConfig] = None, probe_level: int = 4
) -> list[LevelResult]:
    """Discretize and solve at levels 0..levels-1.

    Each level records the spread of the radial function over a fixed probe
    set and the largest radial change relative to the previous level.
    """
    config = config or SolveConfig()
    probes = probe_directions(density.dimension, probe_level)
    out: list[LevelResult] = []
    prev: Optional[np.ndarray] = None
    for level in range(levels):
        inst = ingest.discretize(density, level)
        rep = solve(inst, config)
        P = evaluate(inst, rep.log_radii, config.quad_tol).polytope
        rho = P.radial_function(probes)
        change = None if prev is None else float(np.max(np.abs(rho - prev)))
        out.append(LevelResult(level, inst, rep, P, sphere_deviation(P, probes), change))
        prev = rho
    return out
