"""Closed-form width bounds for bilinear reachable sets, with validity gates.

Every evaluator takes plain scalars so the bounds can be computed from
infinite-dimensional constants (for example an L2 norm of a moment function)
independent of any truncation.  Each returns a `BoundReport` splitting the
value into an affine term (the coefficient multiplying the control-set width
d_nK) and a constant term (the geometric tail of the nonlinear remainder).
Outside the validity region the gate is flagged, never thrown: sweep
workflows must be able to record where a hypothesis fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

_NAMES = ("bilinear", "beam", "schrodinger")


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound: value split into affine and constant parts.

    ``valid`` records whether the smallness hypothesis of the bound holds;
    when it fails the constant term diverges, so ``constant_term`` and
    ``value`` are None and only the affine coefficient part is reported.
    """

    name: str
    inputs: dict = field(repr=False)
    affine_term: float
    constant_term: Optional[float]
    valid: bool
    reason: str = ""

    def __post_init__(self):
        if not self.name:
            raise ValueError("name must be nonempty")
        if not (np.isfinite(self.affine_term) and self.affine_term >= 0):
            raise ValueError("affine_term must be finite and nonnegative")
        if self.valid:
            if self.constant_term is None:
                raise ValueError("valid reports need a constant term")
            if not (np.isfinite(self.constant_term) and self.constant_term >= 0):
                raise ValueError("constant_term must be finite and nonnegative")
        elif self.constant_term is not None:
            raise ValueError("invalid reports must leave the constant term unset")

    @property
    def value(self) -> Optional[float]:
        if not self.valid:
            return None
        return self.affine_term + self.constant_term


def _check_nonnegative(**kwargs):
    for key, val in kwargs.items():
        if not np.isfinite(val):
            raise ValueError(f"{key} must be finite, got {val}")
        if val < 0:
            raise ValueError(f"{key} must be nonnegative, got {val}")


def linear_gain_bound(
    M: float, omega: float, B_norm: float, x0_norm: float, T: float
) -> float:
    """Bound on the operator norm of the endpoint map's linear part.

    The first series term is linear in the control; its operator norm from
    L2 controls to endpoints is at most M^2 |B| |x0| sqrt(T) e^{omega T}.
    """
    _check_nonnegative(M=M, B_norm=B_norm, x0_norm=x0_norm, T=T)
    if not np.isfinite(omega):
        raise ValueError("omega must be finite")
    if T <= 0:
        raise ValueError("T must be positive")
    return float(M**2 * B_norm * x0_norm * np.sqrt(T) * np.exp(omega * T))


def bilinear_width_bound(
    M: float,
    omega: float,
    B_norm: float,
    x0_norm: float,
    T: float,
    r: float,
    d_nK: float,
) -> BoundReport:
    """Width bound for reachable sets of x' = (A + uB)x over an L2 ball.

    Affine term: gain bound times the control-set width d_nK.  Constant
    term: geometric tail of the series from order two on, with ratio
    q = M |B| sqrt(T) r; the report is valid iff q < 1.
    """
    _check_nonnegative(M=M, B_norm=B_norm, x0_norm=x0_norm, T=T, r=r, d_nK=d_nK)
    affine = linear_gain_bound(M, omega, B_norm, x0_norm, T) * d_nK
    q = M * B_norm * np.sqrt(T) * r
    inputs = {
        "M": M, "omega": omega, "B_norm": B_norm, "x0_norm": x0_norm,
        "T": T, "r": r, "d_nK": d_nK, "q": float(q),
    }
    if q >= 1.0:
        return BoundReport(
            name="bilinear", inputs=inputs, affine_term=float(affine),
            constant_term=None, valid=False,
            reason=f"series gate M*|B|*sqrt(T)*r = {q:.6g} is not below 1",
        )
    # Same expression as the order-two series tail certificate.
    constant = float(M * np.exp(omega * T) * x0_norm * q**2 / (1.0 - q))
    return BoundReport(
        name="bilinear", inputs=inputs, affine_term=float(affine),
        constant_term=constant, valid=True,
        reason=f"series gate M*|B|*sqrt(T)*r = {q:.6g} < 1",
    )


def beam_width_bound(
    a: float, x0_norm: float, T: float, r: float, d_nK: float
) -> BoundReport:
    """Width bound for the controlled beam, written in its own closed form.

    Valid iff T < (a/r)^2 (always when r = 0); agrees with
    `bilinear_width_bound` at M = 1, omega = 0, |B| = 1/a.
    """
    _check_nonnegative(x0_norm=x0_norm, T=T, r=r, d_nK=d_nK)
    if a <= 0:
        raise ValueError("a must be positive")
    if T <= 0:
        raise ValueError("T must be positive")
    affine = float(x0_norm * np.sqrt(T) / a * d_nK)
    inputs = {
        "a": a, "x0_norm": x0_norm, "T": T, "r": r, "d_nK": d_nK,
        "q": float(np.sqrt(T) * r / a),
    }
    if r > 0 and T >= (a / r) ** 2:
        return BoundReport(
            name="beam", inputs=inputs, affine_term=affine,
            constant_term=None, valid=False,
            reason=f"horizon gate T < (a/r)^2 fails: T = {T:.6g}, (a/r)^2 = {(a / r) ** 2:.6g}",
        )
    constant = float(x0_norm * T * r**2 / (a * (a - np.sqrt(T) * r)))
    return BoundReport(
        name="beam", inputs=inputs, affine_term=affine,
        constant_term=constant, valid=True,
        reason=f"horizon gate T = {T:.6g} < (a/r)^2 holds" if r > 0
        else "zero control radius, gate holds trivially",
    )


def schrodinger_width_bound(
    mu_l2: float, phi0_norm: float, T: float, r: float, d_nK: float
) -> BoundReport:
    """Width bound for the dipolar quantum model, in its own closed form.

    Valid iff |mu| sqrt(T) r < 1; agrees with `bilinear_width_bound` at
    M = 1, omega = 0, |B| = mu_l2.
    """
    _check_nonnegative(phi0_norm=phi0_norm, T=T, r=r, d_nK=d_nK)
    if mu_l2 <= 0:
        raise ValueError("mu_l2 must be positive")
    if T <= 0:
        raise ValueError("T must be positive")
    affine = float(mu_l2 * phi0_norm * np.sqrt(T) * d_nK)
    gate = mu_l2 * np.sqrt(T) * r
    inputs = {
        "mu_l2": mu_l2, "phi0_norm": phi0_norm, "T": T, "r": r,
        "d_nK": d_nK, "q": float(gate),
    }
    if gate >= 1.0:
        return BoundReport(
            name="schrodinger", inputs=inputs, affine_term=affine,
            constant_term=None, valid=False,
            reason=f"gate |mu|*sqrt(T)*r = {gate:.6g} is not below 1",
        )
    constant = float(mu_l2**2 * phi0_norm * T * r**2 / (1.0 - mu_l2 * np.sqrt(T) * r))
    return BoundReport(
        name="schrodinger", inputs=inputs, affine_term=affine,
        constant_term=constant, valid=True,
        reason=f"gate |mu|*sqrt(T)*r = {gate:.6g} < 1",
    )
