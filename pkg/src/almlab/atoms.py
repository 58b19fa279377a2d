"""Catalog of closed proper convex functions with exact value and prox oracles.

Atoms are immutable after construction and safe to share across threads.
Extended-real values are represented directly by ``math.inf``; an atom value
may be ``+inf`` but never ``-inf``.  Proximal steps are exact closed forms,
except the quadratic atom, which solves a ridge system and caches the
factorization per step size (cache writes are idempotent, so concurrent use
is benign).

A :class:`CompositeFunction` is a separable sum of atoms over a partition of
the coordinates, plus an optional quadratic term that is meant to be handled
by gradient rather than by prox (see :class:`SmoothQuadratic`).
"""

import math

import numpy as np

__all__ = [
    "ValidationError",
    "Atom",
    "Zero",
    "Quadratic",
    "L1",
    "Box",
    "Nonneg",
    "L2Ball",
    "Linear",
    "SmoothQuadratic",
    "CompositeFunction",
    "atom_value",
    "atom_prox",
    "atom_prox_residual",
]

# relative slack for ball membership; absorbs the rounding of a projection
_BALL_SLACK = 1e-12


class ValidationError(ValueError):
    """A structural invariant on user input is violated."""


def _vector(x, dim=None, name="x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be a one-dimensional vector")
    if dim is not None and arr.shape[0] != dim:
        raise ValidationError(f"{name} has length {arr.shape[0]}, expected {dim}")
    return arr


def _check_symmetric_psd(Q, name):
    """Validate symmetry (within 1e-12) and PSD (min eig >= -1e-10 * ||Q||)."""
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValidationError(f"{name} must be a square matrix")
    if Q.shape[0] > 0 and np.max(np.abs(Q - Q.T)) > 1e-12:
        raise ValidationError(f"{name} is not symmetric within 1e-12")
    eigs = np.linalg.eigvalsh(Q)
    spectral = max(abs(float(eigs[0])), abs(float(eigs[-1])))
    if float(eigs[0]) < -1e-10 * spectral:
        raise ValidationError(
            f"{name} is not positive semidefinite (min eigenvalue {float(eigs[0]):g})"
        )
    return float(eigs[0]), float(eigs[-1])


class Atom:
    """A closed proper convex function on R^dim with exact value and prox."""

    kind = "abstract"

    def __init__(self, dim):
        if int(dim) != dim or dim < 1:
            raise ValidationError("atom dimension must be a positive integer")
        self.dim = int(dim)

    def value(self, x) -> float:
        raise NotImplementedError

    def value_batch(self, X) -> np.ndarray:
        """Values at the rows of X, vectorized."""
        raise NotImplementedError

    def prox(self, alpha, v) -> np.ndarray:
        """argmin_y  f(y) + ||y - v||^2 / (2*alpha)  for alpha > 0."""
        raise NotImplementedError

    def curvature(self) -> float:
        """Upper bound on the largest Hessian eigenvalue when treated as smooth."""
        return 0.0

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class Zero(Atom):
    """f(x) = 0."""

    kind = "zero"

    def value(self, x):
        _vector(x, self.dim)
        return 0.0

    def value_batch(self, X):
        return np.zeros(X.shape[0])

    def prox(self, alpha, v):
        return _vector(v, self.dim, "v").copy()


class Quadratic(Atom):
    """f(x) = 0.5 x'Qx + q'x + c with symmetric positive semidefinite Q."""

    kind = "quadratic"

    def __init__(self, Q, q=None, c=0.0):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2:
            raise ValidationError("quadratic matrix must be two-dimensional")
        super().__init__(Q.shape[0])
        self._eig_min, self._eig_max = _check_symmetric_psd(Q, "quadratic matrix")
        self.Q = Q
        self.q = _vector(q, self.dim, "q") if q is not None else np.zeros(self.dim)
        self.c = float(c)
        self.Q.setflags(write=False)
        self.q.setflags(write=False)
        self._ridge_cache = {}

    def value(self, x):
        x = _vector(x, self.dim)
        return float(0.5 * (x @ self.Q @ x) + self.q @ x + self.c)

    def value_batch(self, X):
        return 0.5 * np.einsum("ni,ij,nj->n", X, self.Q, X) + X @ self.q + self.c

    def gradient(self, x):
        return self.Q @ x + self.q

    def curvature(self):
        return self._eig_max

    def is_positive_definite(self):
        return self._eig_min > 0.0

    def prox(self, alpha, v):
        v = _vector(v, self.dim, "v")
        key = float(alpha)
        inv = self._ridge_cache.get(key)
        if inv is None:
            # (I + alpha Q) is SPD for alpha > 0, so the inverse is stable here
            inv = np.linalg.inv(np.eye(self.dim) + key * self.Q)
            self._ridge_cache[key] = inv
        return inv @ (v - key * self.q)


class L1(Atom):
    """f(x) = weight * sum_i |x_i| with weight >= 0."""

    kind = "l1"

    def __init__(self, dim, weight=1.0):
        super().__init__(dim)
        if not (float(weight) >= 0.0):
            raise ValidationError("l1 weight must be nonnegative")
        self.weight = float(weight)

    def value(self, x):
        x = _vector(x, self.dim)
        return float(self.weight * np.sum(np.abs(x)))

    def value_batch(self, X):
        return self.weight * np.sum(np.abs(X), axis=1)

    def prox(self, alpha, v):
        v = _vector(v, self.dim, "v")
        thresh = alpha * self.weight
        return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)


class Box(Atom):
    """Indicator of {lo <= x <= hi}; entries of lo/hi may be -inf/+inf."""

    kind = "box"

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.ndim == 0:
            lo = lo.reshape(1)
        if hi.ndim == 0:
            hi = hi.reshape(1)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValidationError("box bounds must be vectors of equal length")
        super().__init__(lo.shape[0])
        if np.any(lo > hi):
            raise ValidationError("box requires lo <= hi componentwise")
        if np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValidationError("box domain is empty on some coordinate")
        self.lo = lo
        self.hi = hi
        self.lo.setflags(write=False)
        self.hi.setflags(write=False)

    def value(self, x):
        x = _vector(x, self.dim)
        inside = np.all(x >= self.lo) and np.all(x <= self.hi)
        return 0.0 if inside else math.inf

    def value_batch(self, X):
        inside = np.all((X >= self.lo) & (X <= self.hi), axis=1)
        return np.where(inside, 0.0, np.inf)

    def prox(self, alpha, v):
        v = _vector(v, self.dim, "v")
        return np.clip(v, self.lo, self.hi)


class Nonneg(Atom):
    """Indicator of the nonnegative orthant."""

    kind = "nonneg"

    def value(self, x):
        x = _vector(x, self.dim)
        return 0.0 if np.all(x >= 0.0) else math.inf

    def value_batch(self, X):
        return np.where(np.all(X >= 0.0, axis=1), 0.0, np.inf)

    def prox(self, alpha, v):
        v = _vector(v, self.dim, "v")
        return np.maximum(v, 0.0)


class L2Ball(Atom):
    """Indicator of the Euclidean ball {||x - center|| <= radius}, radius > 0."""

    kind = "l2ball"

    def __init__(self, radius, center):
        center = _vector(center, None, "center")
        super().__init__(center.shape[0])
        if not (float(radius) > 0.0):
            raise ValidationError("ball radius must be positive")
        self.radius = float(radius)
        self.center = center
        self.center.setflags(write=False)

    def value(self, x):
        x = _vector(x, self.dim)
        dist = float(np.linalg.norm(x - self.center))
        return 0.0 if dist <= self.radius * (1.0 + _BALL_SLACK) else math.inf

    def value_batch(self, X):
        dist = np.linalg.norm(X - self.center, axis=1)
        return np.where(dist <= self.radius * (1.0 + _BALL_SLACK), 0.0, np.inf)

    def prox(self, alpha, v):
        v = _vector(v, self.dim, "v")
        diff = v - self.center
        n = float(np.linalg.norm(diff))
        if n <= self.radius:
            return v.copy()
        return self.center + diff * (self.radius / n)


class Linear(Atom):
    """f(x) = c'x."""

    kind = "linear"

    def __init__(self, c):
        c = _vector(c, None, "c")
        super().__init__(c.shape[0])
        self.c = c
        self.c.setflags(write=False)

    def value(self, x):
        x = _vector(x, self.dim)
        return float(self.c @ x)

    def value_batch(self, X):
        return X @ self.c

    def prox(self, alpha, v):
        v = _vector(v, self.dim, "v")
        return v - alpha * self.c


class SmoothQuadratic:
    """Optional quadratic term 0.5 x'Qx + q'x + c on all coordinates.

    Unlike a :class:`Quadratic` atom, this term may overlap nonsmooth atoms;
    solvers handle it through its gradient, never through a prox.
    """

    def __init__(self, dim, Q=None, q=None, c=0.0):
        if int(dim) != dim or dim < 1:
            raise ValidationError("quadratic term dimension must be a positive integer")
        self.dim = int(dim)
        if Q is not None:
            Q = np.asarray(Q, dtype=float)
            if Q.shape != (self.dim, self.dim):
                raise ValidationError("quadratic term matrix has wrong shape")
            self._eig_min, self._eig_max = _check_symmetric_psd(Q, "quadratic term matrix")
            Q.setflags(write=False)
        else:
            self._eig_min, self._eig_max = 0.0, 0.0
        self.Q = Q
        self.q = _vector(q, self.dim, "q") if q is not None else np.zeros(self.dim)
        self.q.setflags(write=False)
        self.c = float(c)
        self._ridge_cache = {}

    def value(self, x):
        out = float(self.q @ x) + self.c
        if self.Q is not None:
            out += float(0.5 * (x @ self.Q @ x))
        return out

    def value_batch(self, X):
        out = X @ self.q + self.c
        if self.Q is not None:
            out = out + 0.5 * np.einsum("ni,ij,nj->n", X, self.Q, X)
        return out

    def gradient(self, x):
        g = self.q.copy()
        if self.Q is not None:
            g += self.Q @ x
        return g

    def curvature(self):
        return self._eig_max

    def ridge_solve(self, alpha, rhs):
        """Solve (I + alpha Q) y = rhs, caching the inverse per step size."""
        if self.Q is None:
            return rhs.copy()
        key = float(alpha)
        inv = self._ridge_cache.get(key)
        if inv is None:
            inv = np.linalg.inv(np.eye(self.dim) + key * self.Q)
            self._ridge_cache[key] = inv
        return inv @ rhs


class CompositeFunction:
    """Separable sum of atoms over a coordinate partition, plus an optional
    quadratic term.

    Parameters
    ----------
    blocks : sequence of (Atom, (start, stop))
        Half-open index ranges; they must jointly partition range(dim) and
        each range length must equal the atom dimension.
    dim : int, optional
        Total dimension; inferred from the blocks when omitted.
    smooth_quad : SmoothQuadratic, optional
        Quadratic term on all coordinates, handled by gradient.
    """

    def __init__(self, blocks, dim=None, smooth_quad=None):
        norm_blocks = []
        for entry in blocks:
            try:
                atom, rng = entry
                start, stop = int(rng[0]), int(rng[1])
            except (TypeError, ValueError, IndexError):
                raise ValidationError("each block must be (atom, (start, stop))") from None
            if not isinstance(atom, Atom):
                raise ValidationError("block does not hold an atom")
            if stop - start != atom.dim:
                raise ValidationError(
                    f"block range [{start},{stop}) does not match atom dimension {atom.dim}"
                )
            norm_blocks.append((atom, (start, stop)))
        norm_blocks.sort(key=lambda blk: blk[1][0])
        if not norm_blocks:
            raise ValidationError("composite function needs at least one block")
        cursor = 0
        for _, (start, stop) in norm_blocks:
            if start != cursor:
                raise ValidationError("atom ranges must partition the coordinate range")
            cursor = stop
        inferred = cursor
        if dim is not None and int(dim) != inferred:
            raise ValidationError(f"blocks cover {inferred} coordinates, expected {dim}")
        self.dim = inferred
        self.blocks = tuple(norm_blocks)
        if smooth_quad is not None and smooth_quad.dim != self.dim:
            raise ValidationError("quadratic term dimension does not match the blocks")
        self.smooth_quad = smooth_quad
        self._nonsmooth = None

    @classmethod
    def single(cls, atom, smooth_quad=None):
        return cls([(atom, (0, atom.dim))], smooth_quad=smooth_quad)

    def value(self, x) -> float:
        x = _vector(x, self.dim)
        total = 0.0
        for atom, (start, stop) in self.blocks:
            val = atom.value(x[start:stop])
            if math.isinf(val):
                return math.inf
            total += val
        if self.smooth_quad is not None:
            total += self.smooth_quad.value(x)
        return float(total)

    def value_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        total = np.zeros(X.shape[0])
        for atom, (start, stop) in self.blocks:
            total = total + atom.value_batch(X[:, start:stop])
        if self.smooth_quad is not None:
            total = total + self.smooth_quad.value_batch(X)
        return total

    def _prox_blocks(self, alpha, v):
        out = np.empty(self.dim)
        for atom, (start, stop) in self.blocks:
            out[start:stop] = atom.prox(alpha, v[start:stop])
        return out

    def prox(self, alpha, v) -> np.ndarray:
        if not (float(alpha) > 0.0):
            raise ValidationError("prox step alpha must be positive")
        v = _vector(v, self.dim, "v")
        sq = self.smooth_quad
        if sq is None:
            return self._prox_blocks(alpha, v)
        if sq.Q is None:
            # linear tilt shifts the prox argument exactly
            return self._prox_blocks(alpha, v - alpha * sq.q)
        if all(isinstance(atom, Zero) for atom, _ in self.blocks):
            return sq.ridge_solve(alpha, v - alpha * sq.q)
        raise ValidationError(
            "prox unavailable: dense quadratic term combined with nonsmooth atoms"
        )

    def prox_residual(self, x, grad_smooth, t) -> float:
        """Prox-gradient residual (1/t) ||x - prox_{t f}(x - t g)||.

        Zero exactly when x minimizes f plus a smooth part whose gradient
        at x is g.  The value depends on the step t; callers must report
        the t they used.
        """
        if not (float(t) > 0.0):
            raise ValidationError("residual step t must be positive")
        x = _vector(x, self.dim)
        g = _vector(grad_smooth, self.dim, "grad_smooth")
        step = self.prox(t, x - t * g)
        return float(np.linalg.norm(x - step) / t)

    def nonsmooth_part(self) -> "CompositeFunction":
        """Copy with quadratic atoms replaced by Zero and the quadratic term dropped.

        This is the part a splitting solver handles by prox; quadratic pieces
        are meant to go through the gradient.
        """
        if self._nonsmooth is None:
            if self.smooth_quad is None and not any(
                isinstance(atom, Quadratic) for atom, _ in self.blocks
            ):
                self._nonsmooth = self
            else:
                blocks = [
                    (Zero(stop - start) if isinstance(atom, Quadratic) else atom, (start, stop))
                    for atom, (start, stop) in self.blocks
                ]
                self._nonsmooth = CompositeFunction(blocks)
        return self._nonsmooth

    def quadratic_gradient(self, x) -> np.ndarray:
        """Gradient of the quadratic pieces (quadratic atoms plus the extra term)."""
        x = _vector(x, self.dim)
        g = np.zeros(self.dim)
        for atom, (start, stop) in self.blocks:
            if isinstance(atom, Quadratic):
                g[start:stop] = atom.gradient(x[start:stop])
        if self.smooth_quad is not None:
            g += self.smooth_quad.gradient(x)
        return g

    def quadratic_curvature(self) -> float:
        """Upper bound on the Hessian of the quadratic pieces."""
        block_curv = max((atom.curvature() for atom, _ in self.blocks), default=0.0)
        extra = self.smooth_quad.curvature() if self.smooth_quad is not None else 0.0
        return block_curv + extra

    def __repr__(self):
        parts = ", ".join(f"{atom!r}@[{a},{b})" for atom, (a, b) in self.blocks)
        return f"CompositeFunction({parts})"


def atom_value(f, x) -> float:
    """Extended-real value of an atom or composite at x (never -inf)."""
    return f.value(x)


def atom_prox(f, alpha, v) -> np.ndarray:
    """Unique minimizer of f(y) + ||y - v||^2 / (2 alpha), blockwise for composites."""
    return f.prox(alpha, v)


def atom_prox_residual(f, x, grad_smooth, t) -> float:
    """Prox-gradient residual of f plus a smooth part with gradient grad_smooth at x."""
    return f.prox_residual(x, grad_smooth, t)
