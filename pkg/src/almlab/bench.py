"""Deterministic benchmark instance generators.

Five families cover the regimes the solver and certificate suite care about:
strongly convex quadratics with a closed-form dual optimum, l1 basis pursuit,
a nonnegative LP (bounded but not coercive), a rank-deficient duplicated-row
family whose inner minimizers are genuinely non-unique, and the scalar family
on which the 1/rho gradient-Lipschitz bound is tight.

All randomness comes from one SplitMix64 stream per instance, and each
generator documents its draw order; together with the row-major matrix fill
this makes instances portable across implementations, not just across runs.
Every family constructs b as A @ x0 for a witness x0 in dom f, so witness
feasibility is exact in floating point, not merely approximate.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._rng import SplitMix64
from .atoms import (
    Box,
    CompositeFunction,
    L1,
    Quadratic,
    SmoothQuadratic,
    ValidationError,
)
from .problem import ProblemInstance

__all__ = ["BenchmarkSpec", "generate", "FAMILIES"]

FAMILIES = ("qp", "basis_pursuit", "nonneg_lp", "rank_deficient_box",
            "tight_bound_family")


@dataclass(frozen=True)
class BenchmarkSpec:
    """Family name plus shape, penalty and seed; validated on construction."""

    family: str
    d: int
    p: int
    rho: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(
                f"unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}"
            )
        if not (isinstance(self.d, int) and isinstance(self.p, int)):
            raise ValidationError("d and p must be integers")
        if not (self.d >= self.p >= 1):
            raise ValidationError("families require d >= p >= 1")
        if self.family == "tight_bound_family" and (self.d, self.p) != (1, 1):
            raise ValidationError("tight_bound_family is defined only for d = p = 1")
        if not (isinstance(self.rho, (int, float)) and math.isfinite(self.rho)
                and self.rho > 0):
            raise ValidationError("rho must be a positive finite scalar")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValidationError("seed must be a nonnegative integer")

    @property
    def name(self) -> str:
        return (f"{self.family}_d{self.d}_p{self.p}"
                f"_rho{self.rho:g}_seed{self.seed}")


def _nonneg_orthant(d):
    return Box(np.zeros(d), np.full(d, np.inf))


def _gen_qp(spec):
    """Draw order: B (d x d), q (d), A (p x d), x0 (d); Q = B B'/d + I/2.

    b = A x0 keeps the witness exactly feasible; the dual optimum comes from
    the (d+p) KKT system, which needs A to have full row rank.
    """
    rng = SplitMix64(spec.seed)
    d, p = spec.d, spec.p
    B = rng.uniform_matrix(d, d)
    q = rng.uniform_vector(d)
    A = rng.uniform_matrix(p, d)
    x0 = rng.uniform_vector(d)
    b = A @ x0
    M = (B @ B.T) / d
    Q = 0.5 * (M + M.T) + 0.5 * np.eye(d)
    if np.linalg.matrix_rank(A) < p:
        raise ValidationError("qp family drew a rank-deficient A; use another seed")
    K = np.zeros((d + p, d + p))
    K[:d, :d] = Q
    K[:d, d:] = A.T
    K[d:, :d] = A
    rhs = np.concatenate([-q, b])
    sol = np.linalg.solve(K, rhs)
    x_star, lam_star = sol[:d], sol[d:]
    phi_star = 0.5 * float(x_star @ Q @ x_star) + float(q @ x_star)
    f = CompositeFunction.single(Quadratic(Q, q))
    return ProblemInstance(f, A, b, spec.rho, name=spec.name, witness_x0=x0,
                           lambda_star=lam_star, phi_star=phi_star)


def _gen_basis_pursuit(spec):
    """Draw order: A (p x d), then for each of max(1, p//2) spikes an index
    stream (64-bit draws mod d, rejecting repeats) followed by one value draw
    shifted away from zero so |x0_i| is in [0.5, 1.5)."""
    rng = SplitMix64(spec.seed)
    d, p = spec.d, spec.p
    A = rng.uniform_matrix(p, d)
    x0 = np.zeros(d)
    used = set()
    for _ in range(max(1, p // 2)):
        while True:
            idx = int(rng.next_u64() % d)
            if idx not in used:
                used.add(idx)
                break
        u = rng.uniform()
        x0[idx] = u + 0.5 if u >= 0 else u - 0.5
    b = A @ x0
    f = CompositeFunction.single(L1(d))
    return ProblemInstance(f, A, b, spec.rho, name=spec.name, witness_x0=x0)


def _gen_nonneg_lp(spec):
    """Draw order: A (p x d), c (d, made nonnegative by |.|), xf (d, shifted
    positive).  c >= 0 on the nonnegative orthant keeps the LP bounded below
    without making it coercive."""
    rng = SplitMix64(spec.seed)
    d, p = spec.d, spec.p
    A = rng.uniform_matrix(p, d)
    c = np.abs(rng.uniform_vector(d))
    xf = np.abs(rng.uniform_vector(d)) + 0.1
    b = A @ xf
    f = CompositeFunction([(_nonneg_orthant(d), (0, d))],
                          smooth_quad=SmoothQuadratic(d, q=c))
    return ProblemInstance(f, A, b, spec.rho, name=spec.name, witness_x0=xf)


def _gen_rank_deficient_box(spec):
    """max(1, p//2) base rows (an all-ones row, then random rows) cycled to
    fill p rows, so A always has duplicated rows and the inner minimizer set
    is a nontrivial face of the orthant.  At d = p = 2 this is exactly
    A = [[1,1],[1,1]], b = (2,2), f the nonnegativity indicator."""
    rng = SplitMix64(spec.seed)
    d, p = spec.d, spec.p
    n_base = max(1, p // 2)
    base = np.empty((n_base, d))
    base[0] = 1.0
    for i in range(1, n_base):
        base[i] = rng.uniform_vector(d)
    A = np.empty((p, d))
    for j in range(p):
        A[j] = base[j % n_base]
    x0 = np.ones(d)
    b = A @ x0
    f = CompositeFunction.single(_nonneg_orthant(d))
    return ProblemInstance(f, A, b, spec.rho, name=spec.name, witness_x0=x0)


def _gen_tight_bound(spec):
    """Scalar instance f = indicator(x >= 0), A = [1], b = 1.  The dual
    gradient is -min(lam/rho, 1), whose Lipschitz modulus equals 1/rho on
    lam <= rho, so the smoothness bound is attained, not just respected."""
    f = CompositeFunction.single(_nonneg_orthant(1))
    return ProblemInstance(f, np.array([[1.0]]), np.array([1.0]), spec.rho,
                           name=spec.name, witness_x0=np.array([1.0]),
                           lambda_star=np.array([0.0]), phi_star=0.0)


_GENERATORS = {
    "qp": _gen_qp,
    "basis_pursuit": _gen_basis_pursuit,
    "nonneg_lp": _gen_nonneg_lp,
    "rank_deficient_box": _gen_rank_deficient_box,
    "tight_bound_family": _gen_tight_bound,
}


def generate(spec: BenchmarkSpec) -> ProblemInstance:
    """Build the instance for a validated spec.

    Returns a ProblemInstance whose witness_x0 satisfies A @ x0 = b exactly
    (b is computed as that very product) and f(x0) < inf; the qp and
    tight_bound_family instances also carry lambda_star and phi_star.
    """
    if not isinstance(spec, BenchmarkSpec):
        spec = BenchmarkSpec(**spec) if isinstance(spec, dict) else BenchmarkSpec(*spec)
    return _GENERATORS[spec.family](spec)
