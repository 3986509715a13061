"""Affine-plus-nonlinear operator maps and their constructive subspace checks.

An operator is stored in split form: a constant part, a bounded linear part,
and a black-box nonlinear remainder with declared bounds.  The checks here
instantiate explicit subspace constructions for the image of a sample set and
verify, numerically and with fixed tolerance, the inequalities those
constructions guarantee: an inclusion radius for the image of a neighborhood,
a width-transport bound using the affine fit of the inputs, and a split
variant that spends extra dimensions on the nonlinear remainder's image.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .subspaces import AffineSubspace, orthonormal_columns, set_distance, subspace_sum
from .widths import SnapshotCloud, affine_width_estimate, linear_width_estimate

CHECK_TOL = 1e-10


@dataclass(frozen=True)
class OperatorSpec:
    """Operator ``x ↦ ell0 + pi0 @ x + f(x)`` with declared bounds on ``f``.

    ``f`` may be None (zero remainder).  ``f_sup`` is the declared supremum of
    ``‖f(x)‖`` over the sample set a check is run on; it is verified against
    the actual samples and a violation fails loudly.  ``f_lipschitz`` is an
    optional Lipschitz constant used only by `lipschitz_bound`.
    """

    ell0: np.ndarray
    pi0: np.ndarray
    f: Optional[Callable[[np.ndarray], np.ndarray]] = None
    f_sup: Optional[float] = None
    f_lipschitz: Optional[float] = None

    def __post_init__(self):
        ell0 = np.asarray(self.ell0)
        pi0 = np.asarray(self.pi0)
        if ell0.ndim != 1 or pi0.ndim != 2 or pi0.shape[0] != ell0.size:
            raise ValueError(
                f"inconsistent shapes: ell0 {ell0.shape}, pi0 {pi0.shape}"
            )
        if not (np.all(np.isfinite(ell0)) and np.all(np.isfinite(pi0))):
            raise ValueError("operator data has non-finite entries")
        if np.iscomplexobj(ell0) or np.iscomplexobj(pi0):
            ell0 = ell0.astype(np.complex128)
            pi0 = pi0.astype(np.complex128)
        else:
            ell0 = ell0.astype(np.float64)
            pi0 = pi0.astype(np.float64)
        if self.f_sup is not None and self.f_sup < 0:
            raise ValueError("declared sup bound must be nonnegative")
        if self.f_lipschitz is not None and self.f_lipschitz < 0:
            raise ValueError("Lipschitz constant must be nonnegative")
        ell0.setflags(write=False)
        pi0.setflags(write=False)
        object.__setattr__(self, "ell0", ell0)
        object.__setattr__(self, "pi0", pi0)

    @property
    def dim_in(self) -> int:
        return self.pi0.shape[1]

    @property
    def dim_out(self) -> int:
        return self.pi0.shape[0]

    @property
    def pi0_norm(self) -> float:
        """Operator norm of the linear part (largest singular value)."""
        return float(np.linalg.norm(self.pi0, 2))

    def f_value(self, x: np.ndarray) -> np.ndarray:
        if self.f is None:
            return np.zeros(self.dim_out, dtype=self.ell0.dtype)
        y = np.asarray(self.f(np.asarray(x)))
        if y.shape != (self.dim_out,):
            raise ValueError(
                f"nonlinear part returned shape {y.shape}, expected ({self.dim_out},)"
            )
        if not np.all(np.isfinite(y)):
            raise ValueError("nonlinear part returned non-finite values")
        return y


@dataclass(frozen=True)
class BoundedSampleSet:
    """Samples from a set known to lie in the ball of radius ``radius_bound``."""

    samples: SnapshotCloud
    radius_bound: float

    def __post_init__(self):
        samples = self.samples
        if not isinstance(samples, SnapshotCloud):
            samples = SnapshotCloud(np.asarray(samples))
            object.__setattr__(self, "samples", samples)
        if self.radius_bound < 0:
            raise ValueError("radius bound must be nonnegative")
        if samples.radius > self.radius_bound + 1e-12:
            raise ValueError(
                f"sample norm {samples.radius} exceeds declared radius {self.radius_bound}"
            )


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one inequality check: observed left side vs certified right side."""

    name: str
    lhs: float
    rhs: float
    ok: bool
    details: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def apply_operator(spec: OperatorSpec, x) -> np.ndarray:
    """Evaluate ``ell0 + pi0 @ x + f(x)``."""
    x = np.asarray(x)
    if x.shape != (spec.dim_in,):
        raise ValueError(f"input shape {x.shape} does not match operator input {spec.dim_in}")
    return spec.ell0 + spec.pi0 @ x + spec.f_value(x)


def _apply_batch(spec: OperatorSpec, points: np.ndarray) -> np.ndarray:
    images = points @ spec.pi0.T + spec.ell0[None, :]
    if spec.f is not None:
        images = images + np.stack([spec.f_value(x) for x in points])
    return images


def _f_norms(spec: OperatorSpec, points: np.ndarray) -> np.ndarray:
    if spec.f is None:
        return np.zeros(points.shape[0])
    return np.array([np.linalg.norm(spec.f_value(x)) for x in points])


def _verify_declared_sup(spec: OperatorSpec, max_f: float):
    if spec.f_sup is not None and max_f > spec.f_sup + 1e-12:
        raise ValueError(
            f"observed sup of the nonlinear part {max_f} exceeds declared bound {spec.f_sup}"
        )


def pushforward_subspace(spec: OperatorSpec, w: AffineSubspace) -> AffineSubspace:
    """Image of an affine subspace under the affine part of the operator.

    Offset maps through ``ell0 + pi0 @ offset``; the basis maps through
    ``pi0`` and is re-orthonormalized, so the dimension can drop when the
    linear part has a kernel on the subspace.
    """
    if w.ambient_dim != spec.dim_in:
        raise ValueError(
            f"subspace ambient {w.ambient_dim} does not match operator input {spec.dim_in}"
        )
    offset = spec.ell0 + spec.pi0 @ w.offset
    basis = orthonormal_columns(spec.pi0 @ w.basis)
    return AffineSubspace(offset, basis)


def image_inclusion_check(
    spec: OperatorSpec, w: AffineSubspace, k: BoundedSampleSet, r1: float
) -> CheckReport:
    """Image of an r1-neighborhood of a subspace stays in a certified neighborhood.

    Requires every sample within ``r1`` of ``w``; certifies radius
    ``r1·‖pi0‖ + max‖f‖`` around the pushforward subspace and reports the
    observed image residual against it.
    """
    points = k.samples.points
    observed_r1 = set_distance(points, w)
    if observed_r1 > r1 + 1e-12:
        raise ValueError(
            f"sample at distance {observed_r1} from the subspace exceeds r1={r1}"
        )
    f_norms = _f_norms(spec, points)
    max_f = float(f_norms.max(initial=0.0))
    _verify_declared_sup(spec, max_f)
    r2 = r1 * spec.pi0_norm + max_f
    lhs = set_distance(_apply_batch(spec, points), pushforward_subspace(spec, w))
    return CheckReport(
        name="image_inclusion",
        lhs=lhs,
        rhs=r2,
        ok=lhs <= r2 + CHECK_TOL,
        details={"pi0_norm": spec.pi0_norm, "max_f": max_f, "r1": r1},
    )


def transport_check(spec: OperatorSpec, k: BoundedSampleSet, n: int) -> CheckReport:
    """Width transport: image cloud stays near the pushforward of the affine fit.

    Fits the samples with an n-dimensional affine subspace, pushes it
    forward, and checks the image residual against
    ``‖pi0‖·(fit residual) + max‖f‖``.  Because the image's own affine width
    estimate never exceeds the left side, this certifies the transported
    width inequality for the sampled sets.
    """
    points = k.samples.points
    w, rho = affine_width_estimate(k.samples, n)
    f_norms = _f_norms(spec, points)
    max_f = float(f_norms.max(initial=0.0))
    _verify_declared_sup(spec, max_f)
    rhs = spec.pi0_norm * rho + max_f
    lhs = set_distance(_apply_batch(spec, points), pushforward_subspace(spec, w))
    return CheckReport(
        name="transport",
        lhs=lhs,
        rhs=rhs,
        ok=lhs <= rhs + CHECK_TOL,
        details={"pi0_norm": spec.pi0_norm, "max_f": max_f, "input_residual": rho, "n": n},
    )


def split_transport_check(
    spec: OperatorSpec, k: BoundedSampleSet, n: int, m: int
) -> CheckReport:
    """Split transport: spend n dimensions on the input fit, m on the remainder.

    Builds the sum of the pushforward of the n-dimensional affine input fit
    and the m-dimensional linear fit of the remainder cloud ``f(samples)``;
    the image residual is checked against
    ``‖pi0‖·(input residual) + (remainder residual)`` and the constructed
    subspace dimension against ``n + m``.
    """
    points = k.samples.points
    wn, rho_x = affine_width_estimate(k.samples, n)
    if spec.f is None:
        f_cloud = np.zeros((points.shape[0], spec.dim_out))
    else:
        f_cloud = np.stack([spec.f_value(x) for x in points])
    _verify_declared_sup(spec, float(np.linalg.norm(f_cloud, axis=1).max(initial=0.0)))
    wm, rho_y = linear_width_estimate(SnapshotCloud(f_cloud), m)
    w_tilde = subspace_sum(pushforward_subspace(spec, wn), wm)
    rhs = spec.pi0_norm * rho_x + rho_y
    lhs = set_distance(_apply_batch(spec, points), w_tilde)
    ok = lhs <= rhs + CHECK_TOL and w_tilde.dim <= n + m
    return CheckReport(
        name="split_transport",
        lhs=lhs,
        rhs=rhs,
        ok=ok,
        details={
            "pi0_norm": spec.pi0_norm,
            "input_residual": rho_x,
            "remainder_residual": rho_y,
            "n": n,
            "m": m,
            "subspace_dim": w_tilde.dim,
        },
    )


def lipschitz_bound(
    spec: OperatorSpec, k: BoundedSampleSet, n: int, d_nk: float
) -> float:
    """Width bound ``‖pi0‖·d_nk + μ·radius`` for a remainder vanishing at 0.

    Requires a declared Lipschitz constant and ``f(0) = 0`` (verified by
    evaluation); the caller guarantees 0 belongs to the sampled set's hull.
    """
    if spec.f_lipschitz is None:
        raise ValueError("no Lipschitz constant declared for the nonlinear part")
    if d_nk < 0:
        raise ValueError("width argument must be nonnegative")
    f0 = spec.f_value(np.zeros(spec.dim_in, dtype=spec.ell0.dtype))
    if float(np.linalg.norm(f0)) > 1e-12:
        raise ValueError("nonlinear part does not vanish at 0")
    return spec.pi0_norm * d_nk + spec.f_lipschitz * k.radius_bound
