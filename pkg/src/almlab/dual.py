"""Outer dual methods on the augmented-Lagrangian dual.

With x+(lam) = argmin_x L_rho(x, lam), the dual function

    phi(lam) = L_rho(x+(lam), lam)

is concave with full domain and a (1/rho)-Lipschitz gradient A x+(lam) - b,
so the classic multiplier update

    lam_{k+1} = lam_k + rho (A x+ - b)

is exactly gradient ascent on phi with step rho.  ``alm`` runs that update
verbatim; ``accelerated_alm`` is one faithful Nesterov-style instantiation
for smooth concave maximization: the ascent step is taken at an extrapolated
point, with extrapolation weights theta_{k+1} = (1 + sqrt(1+4 theta_k^2))/2
and a restart to plain ascent whenever the recorded dual value decreases.

Each trace record k holds lam_k together with the inner solution computed at
lam_k (dual value estimate, gradient norm, primal objective, inner iteration
count).  For ``alm`` that same inner solution produces lam_{k+1}, so traces
replay bit for bit; the accelerated method performs a second inner solve at
the extrapolated point for its step.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .atoms import ValidationError, _vector
from .inner import InnerSettings, solve_subproblem

__all__ = [
    "TolSchedule",
    "OuterSettings",
    "TraceRecord",
    "SolveTrace",
    "dual_value",
    "dual_gradient",
    "alm",
    "accelerated_alm",
]

_DUAL_DIVERGE_FACTOR = 1e12


@dataclass(frozen=True)
class TolSchedule:
    """Inner tolerance per outer iteration: constant, or geometric decay
    tol0 * factor^k floored at ``floor``."""

    kind: str
    tol0: float
    factor: float = 1.0
    floor: float = 1e-12

    def __post_init__(self):
        if self.kind not in ("constant", "geometric"):
            raise ValidationError("schedule kind must be 'constant' or 'geometric'")
        if not (self.tol0 > 0.0):
            raise ValidationError("schedule tol0 must be positive")
        if not (0.0 < self.factor <= 1.0):
            raise ValidationError("schedule factor must lie in (0, 1]")
        if not (self.floor > 0.0):
            raise ValidationError("schedule floor must be positive")

    @staticmethod
    def constant(tol: float) -> "TolSchedule":
        return TolSchedule("constant", tol)

    @staticmethod
    def geometric(tol0: float = 1e-4, factor: float = 0.5, floor: float = 1e-12) -> "TolSchedule":
        return TolSchedule("geometric", tol0, factor, floor)

    def at(self, k: int) -> float:
        if self.kind == "constant":
            return self.tol0
        return max(self.floor, self.tol0 * self.factor ** k)


@dataclass(frozen=True)
class OuterSettings:
    """Outer loop controls; max_outer counts dual updates, so a trace holds
    at most max_outer + 1 records."""

    max_outer: int = 500
    schedule: TolSchedule = field(default_factory=TolSchedule.geometric)
    grad_stop: float = 1e-6
    momentum: bool = False
    inner_max_iter: int = 100_000
    step_safety: float = 0.99

    def __post_init__(self):
        if self.max_outer < 0:
            raise ValidationError("max_outer must be nonnegative")
        if not (self.grad_stop > 0.0):
            raise ValidationError("grad_stop must be positive")
        if self.inner_max_iter < 1:
            raise ValidationError("inner_max_iter must be at least 1")


@dataclass(frozen=True, eq=False)
class TraceRecord:
    """One outer iteration: the multiplier and its inner solution summary.

    constraint_map is kept in memory for replay checks; only the scalar
    columns go to disk.
    """

    k: int
    lam: np.ndarray
    phi_est: float
    grad_norm: float
    primal_obj: float
    inner_iters: int
    constraint_map: np.ndarray


@dataclass(frozen=True, eq=False)
class SolveTrace:
    records: tuple
    settings: OuterSettings
    terminated_reason: str

    def grad_norms(self):
        return [rec.grad_norm for rec in self.records]

    def phi_estimates(self):
        return [rec.phi_est for rec in self.records]


def dual_value(pb, lam, tol=1e-8, x0=None, max_iter=100_000) -> float:
    """Upper-bound estimate of phi(lam): inner objective at tolerance tol."""
    sol = solve_subproblem(pb, lam, InnerSettings(tol=tol, max_iter=max_iter, x0=x0))
    return sol.obj_value


def dual_gradient(pb, lam, tol=1e-8, x0=None, max_iter=100_000) -> np.ndarray:
    """A x+ - b at an inner solution of tolerance tol; any inner minimizer
    yields the same value up to that tolerance."""
    sol = solve_subproblem(pb, lam, InnerSettings(tol=tol, max_iter=max_iter, x0=x0))
    return sol.constraint_map


def _run_outer(pb, lam0, settings, accelerated):
    if settings is None:
        settings = OuterSettings()
    settings = replace(settings, momentum=accelerated)
    if lam0 is None:
        lam = np.zeros(pb.p)
    else:
        lam = _vector(lam0, pb.p, "lam0").copy()

    diverge_bound = _DUAL_DIVERGE_FACTOR * (1.0 + float(np.linalg.norm(lam)))
    records = []
    reason = "max_outer"
    x_warm = None
    y = lam
    theta = 1.0
    phi_prev = None

    for k in range(settings.max_outer + 1):
        tol_k = settings.schedule.at(k)
        inner = InnerSettings(tol=tol_k, max_iter=settings.inner_max_iter,
                              x0=x_warm, step_safety=settings.step_safety)
        sol = solve_subproblem(pb, lam, inner)
        x_warm = sol.x_plus
        rec = TraceRecord(
            k=k,
            lam=lam.copy(),
            phi_est=sol.obj_value,
            grad_norm=float(np.linalg.norm(sol.constraint_map)),
            primal_obj=pb.f.value(sol.x_plus),
            inner_iters=sol.iterations,
            constraint_map=sol.constraint_map.copy(),
        )
        records.append(rec)

        if not sol.converged:
            reason = "inner_max_iter"
            break
        if rec.grad_norm <= settings.grad_stop:
            reason = "grad_stop"
            break
        if k == settings.max_outer:
            reason = "max_outer"
            break
        if float(np.linalg.norm(lam)) > diverge_bound:
            reason = "dual_divergence"
            break

        if not accelerated:
            lam = lam + pb.rho * sol.constraint_map
        else:
            if phi_prev is not None and rec.phi_est < phi_prev:
                theta = 1.0
                y = lam
            if y is lam or np.array_equal(y, lam):
                sol_step = sol
            else:
                step_inner = InnerSettings(tol=tol_k, max_iter=settings.inner_max_iter,
                                           x0=x_warm, step_safety=settings.step_safety)
                sol_step = solve_subproblem(pb, y, step_inner)
                x_warm = sol_step.x_plus
            lam_new = y + pb.rho * sol_step.constraint_map
            theta_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))
            y = lam_new + ((theta - 1.0) / theta_new) * (lam_new - lam)
            lam = lam_new
            theta = theta_new
        phi_prev = rec.phi_est

    return SolveTrace(tuple(records), settings, reason)


def alm(pb, lam0=None, settings=None) -> SolveTrace:
    """Multiplier method: lam_{k+1} = lam_k + rho (A x+ - b), warm-starting
    each inner solve at the previous x+.  Stops when the gradient norm falls
    to grad_stop or after max_outer updates."""
    return _run_outer(pb, lam0, settings, accelerated=False)


def accelerated_alm(pb, lam0=None, settings=None) -> SolveTrace:
    """Nesterov-accelerated variant; see the module docstring for the scheme."""
    return _run_outer(pb, lam0, settings, accelerated=True)
