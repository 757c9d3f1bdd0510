"""Norms on R^n: evaluation, derivatives, and smoothness classification.

The norm families here are declarative value objects. Derivatives come in
two independent flavors: closed forms where the family is known to be
differentiable (``analytic_gradient``) and a central-difference oracle
(``fd_gradient``). ``classify_point`` decides smooth vs corner by probing
one-sided directional slopes, which exist for every norm by convexity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TypeAlias

import numpy as np
from numpy.typing import NDArray

from ._linalg import extrapolate_to_zero, frozen_copy
from .errors import NotDifferentiableError

Vector: TypeAlias = NDArray[np.float64]

#: Relative tolerance below which two competing max-attainers count as tied.
TIE_REL_TOL = 1e-9

#: Threshold separating one-sided slope disagreement from extrapolation noise.
CLASSIFY_TOL = 1e-6

#: Step grid for one-sided difference quotients (scaled by the point size).
DEFAULT_STEP_SEQUENCE = (1e-3, 1e-4, 1e-5)

_MAX_LP_EXPONENT = 16.0


def as_vector(x, dim: int | None = None) -> Vector:
    """Validate and convert an array-like to a finite 1-D float vector."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a nonempty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    if dim is not None and v.size != dim:
        raise ValueError(f"expected dimension {dim}, got {v.size}")
    return v


class NormSpec:
    """Declarative description of a norm on R^n.

    Subclasses are immutable value objects; ``value`` evaluates the norm.
    """

    dim: int

    def value(self, x) -> float:
        raise NotImplementedError

    def __call__(self, x) -> float:
        return self.value(x)

    def to_dict(self) -> dict:
        return spec_to_dict(self)


@dataclass(frozen=True, eq=False)
class LpNorm(NormSpec):
    """The l^p norm with exponent in (1, 16]; the smooth power family.

    Exponents above 16 are rejected: |x|**(p-1) loses too many digits to
    cancellation there, and p = 1 or infinity have dedicated variants.
    """

    p: float
    dim: int

    def __post_init__(self):
        if not (1.0 < float(self.p) <= _MAX_LP_EXPONENT):
            raise ValueError(f"p must lie in (1, {_MAX_LP_EXPONENT}], got {self.p}")
        if int(self.dim) < 1:
            raise ValueError("dim must be >= 1")

    def value(self, x) -> float:
        v = np.abs(as_vector(x, self.dim))
        peak = float(v.max())
        if peak == 0.0:
            return 0.0
        return peak * float(np.sum((v / peak) ** self.p) ** (1.0 / self.p))


@dataclass(frozen=True, eq=False)
class L1Norm(NormSpec):
    """Sum of absolute values; non-smooth on the coordinate hyperplanes."""

    dim: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dim must be >= 1")

    def value(self, x) -> float:
        return float(np.sum(np.abs(as_vector(x, self.dim))))


@dataclass(frozen=True, eq=False)
class LInfNorm(NormSpec):
    """Max of absolute values; non-smooth where the max is tied."""

    dim: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dim must be >= 1")

    def value(self, x) -> float:
        return float(np.max(np.abs(as_vector(x, self.dim))))


@dataclass(frozen=True, eq=False)
class QuadraticNorm(NormSpec):
    """sqrt(x' Q x) for a symmetric positive-definite Q."""

    q: Vector

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] < 1:
            raise ValueError("q must be a square matrix")
        scale = float(np.abs(q).max()) or 1.0
        if not np.allclose(q, q.T, rtol=0.0, atol=1e-12 * scale):
            raise ValueError("q must be symmetric")
        q = 0.5 * (q + q.T)
        if float(np.linalg.eigvalsh(q)[0]) <= 0.0:
            raise ValueError("q must be positive definite")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    def value(self, x) -> float:
        v = as_vector(x, self.dim)
        peak = float(np.abs(v).max())
        if peak == 0.0:
            return 0.0
        w = v / peak  # scale out before squaring so tiny vectors do not underflow
        return peak * float(np.sqrt(max(float(w @ self.q @ w), 0.0)))


@dataclass(frozen=True, eq=False)
class PolyhedralNorm(NormSpec):
    """max_i |<f_i, x>| over a full-rank family of row functionals.

    Full rank guarantees the max vanishes only at the origin, so the
    expression is a genuine norm.
    """

    functionals: Vector

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.functionals, dtype=float))
        if f.ndim != 2 or f.shape[0] < 1 or f.shape[1] < 1:
            raise ValueError("functionals must be a nonempty matrix of rows")
        if not np.all(np.isfinite(f)):
            raise ValueError("functionals must be finite")
        if np.linalg.matrix_rank(f) < f.shape[1]:
            raise ValueError("functionals must have full column rank")
        f.setflags(write=False)
        object.__setattr__(self, "functionals", f)

    @property
    def dim(self) -> int:
        return self.functionals.shape[1]

    def value(self, x) -> float:
        v = as_vector(x, self.dim)
        return float(np.max(np.abs(self.functionals @ v)))


@dataclass(frozen=True, eq=False)
class ProductMaxNorm(NormSpec):
    """max(|left block|, |right block|) on the concatenated space."""

    left: NormSpec
    right: NormSpec

    def __post_init__(self):
        if not isinstance(self.left, NormSpec) or not isinstance(self.right, NormSpec):
            raise ValueError("left and right must be norms")

    @property
    def dim(self) -> int:
        return self.left.dim + self.right.dim

    def value(self, x) -> float:
        v = as_vector(x, self.dim)
        return max(self.left.value(v[: self.left.dim]),
                   self.right.value(v[self.left.dim:]))


def eval_norm(spec: NormSpec, x) -> float:
    """Evaluate ``spec`` at ``x`` (dimension-checked)."""
    return spec.value(x)


@dataclass(frozen=True, eq=False)
class GradientFunctional:
    """A linear functional representing the norm's derivative at a point.

    The coefficients are degree-0 homogeneous in the base point: the same
    functional serves every positive multiple of ``base_point``.
    """

    coeffs: Vector
    base_point: Vector

    def __post_init__(self):
        object.__setattr__(self, "coeffs", frozen_copy(as_vector(self.coeffs)))
        object.__setattr__(self, "base_point",
                           frozen_copy(as_vector(self.base_point, self.coeffs.size)))

    def apply(self, h) -> float:
        return float(self.coeffs @ as_vector(h, self.coeffs.size))

    def __call__(self, h) -> float:
        return self.apply(h)


@dataclass(frozen=True, eq=False)
class SmoothnessVerdict:
    """Outcome of probing a point for differentiability of the norm.

    For a non-smooth verdict, ``right_deriv``/``left_deriv`` are the two
    one-sided slopes along ``witness_direction``; their disagreement is
    what breaks linearity.
    """

    point: Vector
    smooth: bool
    gradient: GradientFunctional | None = None
    witness_direction: Vector | None = None
    right_deriv: float | None = None
    left_deriv: float | None = None
    violation: float = 0.0


def analytic_gradient(spec: NormSpec, e0) -> GradientFunctional:
    """Closed-form derivative functional of the norm at ``e0``.

    Raises NotDifferentiableError at corner points (tied max attainers,
    zero coordinates of the l1 norm) and ValueError at the origin.
    """
    e0 = as_vector(e0, spec.dim)
    if not np.any(e0):
        raise ValueError("the norm is not differentiable at the origin")

    if isinstance(spec, LpNorm):
        r = spec.value(e0)
        coeffs = np.sign(e0) * (np.abs(e0) / r) ** (spec.p - 1.0)
        return GradientFunctional(coeffs, e0)

    if isinstance(spec, QuadraticNorm):
        return GradientFunctional(spec.q @ e0 / spec.value(e0), e0)

    if isinstance(spec, L1Norm):
        peak = float(np.abs(e0).max())
        if float(np.abs(e0).min()) <= TIE_REL_TOL * peak:
            raise NotDifferentiableError(
                "l1 norm is not differentiable where a coordinate vanishes")
        return GradientFunctional(np.sign(e0), e0)

    if isinstance(spec, LInfNorm):
        mags = np.abs(e0)
        peak = float(mags.max())
        attained = np.flatnonzero(mags >= (1.0 - TIE_REL_TOL) * peak)
        if attained.size > 1:
            raise NotDifferentiableError("max norm has tied attaining coordinates")
        coeffs = np.zeros_like(e0)
        coeffs[attained[0]] = np.sign(e0[attained[0]])
        return GradientFunctional(coeffs, e0)

    if isinstance(spec, PolyhedralNorm):
        vals = spec.functionals @ e0
        mags = np.abs(vals)
        peak = float(mags.max())
        attained = np.flatnonzero(mags >= (1.0 - TIE_REL_TOL) * peak)
        if attained.size > 1:
            raise NotDifferentiableError("tied attaining functionals")
        j = attained[0]
        return GradientFunctional(np.sign(vals[j]) * spec.functionals[j], e0)

    if isinstance(spec, ProductMaxNorm):
        a, b = product_split(e0, spec.left.dim)
        na, nb = spec.left.value(a), spec.right.value(b)
        if abs(na - nb) <= TIE_REL_TOL * max(na, nb):
            raise NotDifferentiableError("both factors attain the product max")
        if na > nb:
            g = analytic_gradient(spec.left, a)
            coeffs = np.concatenate([g.coeffs, np.zeros(spec.right.dim)])
        else:
            g = analytic_gradient(spec.right, b)
            coeffs = np.concatenate([np.zeros(spec.left.dim), g.coeffs])
        return GradientFunctional(coeffs, e0)

    raise TypeError(f"no closed-form gradient for {type(spec).__name__}")


def default_fd_step(spec: NormSpec, e0) -> float:
    """Cube root of machine epsilon scaled by the point size."""
    return float(np.cbrt(np.finfo(float).eps)) * max(1.0, eval_norm(spec, e0))


def fd_gradient(spec: NormSpec, e0, step: float | None = None) -> GradientFunctional:
    """Central-difference derivative functional, one coordinate at a time.

    Carries no smoothness guarantee: at a corner it averages the two
    one-sided slopes. Callers that need a certificate validate the result
    against one-sided derivatives (see ``classify_point``).
    """
    e0 = as_vector(e0, spec.dim)
    if not np.any(e0):
        raise ValueError("cannot differentiate at the origin")
    r = eval_norm(spec, e0)
    if step is None:
        step = default_fd_step(spec, e0)
    step = float(step)
    if not (0.0 < step < r / 10.0):
        raise ValueError(f"step must lie in (0, {r / 10.0:.3e}), got {step:.3e}")
    coeffs = np.empty_like(e0)
    for i in range(e0.size):
        unit = np.zeros_like(e0)
        unit[i] = step
        coeffs[i] = (spec.value(e0 + unit) - spec.value(e0 - unit)) / (2.0 * step)
    return GradientFunctional(coeffs, e0)


def one_sided_derivative(spec: NormSpec, e0, v,
                         step_sequence=None) -> float:
    """Right-sided directional slope lim_{t->0+} (|e0 + t v| - |e0|) / t.

    The quotient is evaluated on a decreasing step grid and polynomially
    extrapolated to zero. Convexity of the norm guarantees the limit
    exists in every direction, smooth point or not.
    """
    e0 = as_vector(e0, spec.dim)
    v = as_vector(v, spec.dim)
    if not np.any(e0):
        raise ValueError("base point must be nonzero")
    if not np.any(v):
        raise ValueError("direction must be nonzero")
    if step_sequence is None:
        scale = max(1.0, float(np.linalg.norm(e0)))
        step_sequence = tuple(s * scale for s in DEFAULT_STEP_SEQUENCE)
    steps = [float(t) for t in step_sequence]
    if any(t <= 0.0 for t in steps) or any(a <= b for a, b in zip(steps, steps[1:])):
        raise ValueError("step_sequence must be positive and strictly decreasing")
    r = eval_norm(spec, e0)
    quotients = [(spec.value(e0 + t * v) - r) / t for t in steps]
    return extrapolate_to_zero(steps, quotients)


def classify_point(spec: NormSpec, e0, direction_budget: int | None = None, *,
                   tol: float = CLASSIFY_TOL, seed: int = 0) -> SmoothnessVerdict:
    """Decide whether the norm is differentiable at ``e0`` by probing slopes.

    Probes the coordinate directions plus seeded random directions, up to
    ``direction_budget`` in total. A point is smooth when, in every probed
    direction, the two one-sided slopes are negatives of each other and
    both agree with the central-difference gradient. Otherwise the worst
    violating direction is returned with its one-sided slopes.
    """
    e0 = as_vector(e0, spec.dim)
    if not np.any(e0):
        raise ValueError("cannot classify the origin")
    n = spec.dim
    if direction_budget is None:
        direction_budget = 2 * n
    if direction_budget < 2 * n:
        raise ValueError(f"direction_budget must be >= {2 * n}")

    rng = np.random.default_rng(seed)
    directions = [np.eye(n)[i] for i in range(n)]
    while len(directions) < direction_budget:
        d = rng.standard_normal(n)
        length = np.linalg.norm(d)
        if length > 1e-12:
            directions.append(d / length)

    grad = fd_gradient(spec, e0)
    worst_violation = -np.inf
    worst = None
    for v in directions:
        d_plus = one_sided_derivative(spec, e0, v)
        d_minus = one_sided_derivative(spec, e0, -v)
        gap = d_plus + d_minus  # zero iff the two-sided derivative exists
        linearity = max(abs(d_plus - grad.apply(v)), abs(d_minus + grad.apply(v)))
        violation = max(abs(gap), linearity)
        if violation > worst_violation:
            worst_violation = violation
            worst = (v, d_plus, d_minus)

    v, d_plus, d_minus = worst
    if worst_violation <= tol:
        try:  # prefer the exact closed form; the fd oracle validated it above
            gradient = analytic_gradient(spec, e0)
        except NotDifferentiableError:
            gradient = grad
        return SmoothnessVerdict(point=frozen_copy(e0), smooth=True,
                                 gradient=gradient, violation=worst_violation)
    return SmoothnessVerdict(point=frozen_copy(e0), smooth=False,
                             witness_direction=frozen_copy(v),
                             right_deriv=d_plus, left_deriv=-d_minus,
                             violation=worst_violation)


def product_embed(left, right) -> Vector:
    """Concatenate two block vectors into the product space."""
    return np.concatenate([as_vector(left), as_vector(right)])


def product_split(x, left_dim: int) -> tuple[Vector, Vector]:
    """Split a product-space vector back into its two blocks."""
    x = as_vector(x)
    if not (0 < left_dim < x.size):
        raise ValueError(f"left_dim must lie in (0, {x.size})")
    return x[:left_dim].copy(), x[left_dim:].copy()


def product_norm_constants(spec: NormSpec, left_dim: int,
                           samples: int = 10_000, *,
                           seed: int = 0) -> tuple[float, float]:
    """Sampled equivalence constants between a norm and its block-max form.

    Returns (c1, c2) with max(|x_left|, |x_right|) <= c1 * |x| and
    |x| <= c2 * max(|x_left|, |x_right|), each block measured by ``spec``
    after zero-padding. Estimated by maximizing ratios over random
    directions, so the values are lower bounds of the true constants,
    not certified ones.
    """
    if not (0 < left_dim < spec.dim):
        raise ValueError(f"left_dim must lie in (0, {spec.dim})")
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    c1 = 0.0
    c2 = 0.0
    for _ in range(samples):
        x = rng.standard_normal(spec.dim)
        full = spec.value(x)
        if full == 0.0:
            continue
        padded_left = np.concatenate([x[:left_dim], np.zeros(spec.dim - left_dim)])
        padded_right = np.concatenate([np.zeros(left_dim), x[left_dim:]])
        block = max(spec.value(padded_left), spec.value(padded_right))
        if block == 0.0:
            continue
        c1 = max(c1, block / full)
        c2 = max(c2, full / block)
    return c1, c2


_SPEC_FIELDS = {
    "lp": {"type", "p", "dim"},
    "l1": {"type", "dim"},
    "linf": {"type", "dim"},
    "quadratic": {"type", "q"},
    "polyhedral": {"type", "functionals"},
    "product_max": {"type", "left", "right"},
}


def _require_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    return value


def spec_from_dict(data) -> NormSpec:
    """Build a norm from its JSON object form. Unknown fields are rejected."""
    if not isinstance(data, dict):
        raise ValueError("norm description must be a JSON object")
    kind = data.get("type")
    if kind not in _SPEC_FIELDS:
        raise ValueError(f"unknown norm type {kind!r}")
    allowed = _SPEC_FIELDS[kind]
    extra = set(data) - allowed
    if extra:
        raise ValueError(f"unknown fields for norm type {kind!r}: {sorted(extra)}")
    missing = allowed - set(data)
    if missing:
        raise ValueError(f"missing fields for norm type {kind!r}: {sorted(missing)}")

    if kind == "lp":
        return LpNorm(p=float(data["p"]), dim=_require_int(data["dim"], "dim"))
    if kind == "l1":
        return L1Norm(dim=_require_int(data["dim"], "dim"))
    if kind == "linf":
        return LInfNorm(dim=_require_int(data["dim"], "dim"))
    if kind == "quadratic":
        return QuadraticNorm(q=np.asarray(data["q"], dtype=float))
    if kind == "polyhedral":
        return PolyhedralNorm(functionals=np.asarray(data["functionals"], dtype=float))
    return ProductMaxNorm(left=spec_from_dict(data["left"]),
                          right=spec_from_dict(data["right"]))


def spec_to_dict(spec: NormSpec) -> dict:
    """Serialize a norm to its JSON object form."""
    if isinstance(spec, LpNorm):
        return {"type": "lp", "p": float(spec.p), "dim": int(spec.dim)}
    if isinstance(spec, L1Norm):
        return {"type": "l1", "dim": int(spec.dim)}
    if isinstance(spec, LInfNorm):
        return {"type": "linf", "dim": int(spec.dim)}
    if isinstance(spec, QuadraticNorm):
        return {"type": "quadratic", "q": spec.q.tolist()}
    if isinstance(spec, PolyhedralNorm):
        return {"type": "polyhedral", "functionals": spec.functionals.tolist()}
    if isinstance(spec, ProductMaxNorm):
        return {"type": "product_max", "left": spec_to_dict(spec.left),
                "right": spec_to_dict(spec.right)}
    raise TypeError(f"cannot serialize {type(spec).__name__}")
