"""Concrete bilinear models built by spectral truncation.

Two systems are provided.  The first is a simply supported beam whose
transverse deflection is controlled through an axial force acting on a
segment [z1, z2]: expanding in the sine eigenbasis and scaling modal
positions by their frequencies yields a real block system
x' = (A + uB)x with a rotation semigroup (an isometry, so M = 1, omega = 0)
and a constant coupling matrix with closed-form entries.  The second is a
single quantum particle in a box with a dipolar control term: in the sine
eigenbasis the drift is diagonal with phase factors e^{-i lambda_k t} and the
coupling is i times a real symmetric matrix of moment integrals, so the
dynamics are skew-Hermitian and norm-preserving.

Truncation at ``N_modes`` is the finite surrogate for the full systems; all
reporting downstream carries the truncation count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .volterra import BilinearModel

BEAM_DEFAULT_MODES = 8
SCHRODINGER_DEFAULT_MODES = 8
QUAD_NODES_DEFAULT = 200


@dataclass(frozen=True)
class BeamSpec:
    """Beam geometry and actuator segment.

    ``a`` is the square root of stiffness over linear density; the actuator
    acts on [z1, z2] within [0, L].  ``z2 = None`` selects the full segment.
    """

    L: float = math.pi
    a: float = 1.0
    z1: float = 0.0
    z2: Optional[float] = None
    N_modes: int = BEAM_DEFAULT_MODES

    def __post_init__(self):
        if self.z2 is None:
            object.__setattr__(self, "z2", float(self.L))
        if not (self.L > 0 and self.a > 0):
            raise ValueError("L and a must be positive")
        if not (0.0 <= self.z1 < self.z2 <= self.L):
            raise ValueError(
                f"actuator segment [{self.z1}, {self.z2}] must satisfy 0 <= z1 < z2 <= L"
            )
        if self.N_modes < 1:
            raise ValueError("N_modes must be at least 1")

    @property
    def full_segment(self) -> bool:
        return self.z1 == 0.0 and self.z2 == self.L


def beam_eigen(spec: BeamSpec, n: int):
    """Eigenvalue, frequency, and eigenfunction sampler of mode ``n``."""
    if not 1 <= n <= spec.N_modes:
        raise ValueError(f"mode index {n} outside 1..{spec.N_modes}")
    rate = math.pi * n / spec.L
    lam = rate**4
    omega = spec.a * rate**2

    def phi(z):
        return math.sqrt(2.0 / spec.L) * np.sin(rate * np.asarray(z))

    return lam, omega, phi


def beam_b_matrix(spec: BeamSpec) -> np.ndarray:
    """Coupling matrix entries in closed form.

    Rows n, columns j (1-based modes).  On the full segment every sine term
    vanishes and the matrix reduces to -(1/a) times the identity.
    """
    N = spec.N_modes
    n = np.arange(1, N + 1)[:, None].astype(np.float64)
    j = np.arange(1, N + 1)[None, :].astype(np.float64)
    a, L, z1, z2 = spec.a, spec.L, spec.z1, spec.z2

    diff = j - n
    tot = j + n
    with np.errstate(divide="ignore", invalid="ignore"):
        off = n / (a * np.pi * j * diff) * (
            np.sin(diff * np.pi * z1 / L) + np.sin(-diff * np.pi * z2 / L)
        ) + n / (a * np.pi * j * tot) * (
            np.sin(tot * np.pi * z1 / L) - np.sin(tot * np.pi * z2 / L)
        )
    modes = np.arange(1, N + 1).astype(np.float64)
    diag = (z1 - z2) / (a * L) + (
        np.sin(2.0 * np.pi * modes * z1 / L) - np.sin(2.0 * np.pi * modes * z2 / L)
    ) / (2.0 * a * np.pi * modes)
    b = np.where(np.eye(N, dtype=bool), np.diag(diag), off)
    return b


def beam_model(spec: BeamSpec) -> BilinearModel:
    """Real model of dimension 2 N_modes in frequency-scaled coordinates.

    The state stacks the scaled positions then the velocities; the drift
    rotates each mode pair at its frequency, so the flow is an isometry for
    every t and the semigroup constants are M = 1, omega = 0.
    """
    N = spec.N_modes
    omegas = spec.a * (np.pi * np.arange(1, N + 1) / spec.L) ** 2
    A = np.zeros((2 * N, 2 * N))
    A[:N, N:] = np.diag(omegas)
    A[N:, :N] = -np.diag(omegas)
    b = beam_b_matrix(spec)
    B = np.zeros((2 * N, 2 * N))
    B[N:, :N] = b

    def action(t: float, v: np.ndarray, _om=omegas, _n=N) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        c = np.cos(_om * t)
        s = np.sin(_om * t)
        if v.ndim == 1:
            xi, eta = v[:_n], v[_n:]
            return np.concatenate([c * xi + s * eta, -s * xi + c * eta])
        xi, eta = v[:_n], v[_n:]
        return np.concatenate(
            [c[:, None] * xi + s[:, None] * eta, -s[:, None] * xi + c[:, None] * eta]
        )

    return BilinearModel(
        dim=2 * N, A_action=action, A_matrix=A, B_matrix=B,
        M=1.0, omega=0.0, label="beam",
    )


def _resolve_mu(mu) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(mu, str):
        if mu == "z":
            return lambda z: np.asarray(z, dtype=np.float64)
        raise ValueError(f"unknown builtin moment function {mu!r}")
    if callable(mu):
        return mu
    samples = np.asarray(mu, dtype=np.float64)
    if samples.ndim != 1 or samples.size < 2:
        raise ValueError("tabulated moment needs at least two samples on [0, 1]")
    grid = np.linspace(0.0, 1.0, samples.size)
    return lambda z, _g=grid, _s=samples: np.interp(np.asarray(z), _g, _s)


def _gauss_01(nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return (x + 1.0) / 2.0, w / 2.0


@dataclass(frozen=True)
class SchrodingerSpec:
    """Dipolar moment and truncation for the particle-in-a-box model.

    ``mu`` is the real moment function on [0, 1]: the builtin name "z", a
    callable, or uniformly spaced samples (linearly interpolated).
    ``mu_l2`` defaults to the L2 norm of the moment; for the builtin "z"
    this is 1/sqrt(3) exactly.
    """

    mu: Union[str, Callable, np.ndarray] = "z"
    N_modes: int = SCHRODINGER_DEFAULT_MODES
    mu_l2: Optional[float] = None
    quad_nodes: int = QUAD_NODES_DEFAULT

    def __post_init__(self):
        if self.N_modes < 1:
            raise ValueError("N_modes must be at least 1")
        if self.quad_nodes < 2:
            raise ValueError("quad_nodes must be at least 2")
        fn = _resolve_mu(self.mu)
        probe = np.asarray(fn(np.linspace(0.0, 1.0, 17)))
        if np.iscomplexobj(probe) and np.max(np.abs(probe.imag)) > 0:
            raise ValueError("the dipolar moment must be real-valued")
        if self.mu_l2 is None:
            if isinstance(self.mu, str) and self.mu == "z":
                l2 = 1.0 / math.sqrt(3.0)
            else:
                x, w = _gauss_01(max(self.quad_nodes, 400))
                l2 = float(np.sqrt(np.sum(w * np.asarray(fn(x)) ** 2)))
            object.__setattr__(self, "mu_l2", l2)
        if not self.mu_l2 > 0:
            raise ValueError("the moment's L2 norm must be positive")

    def mu_fn(self) -> Callable[[np.ndarray], np.ndarray]:
        return _resolve_mu(self.mu)


def _moment_matrix(spec: SchrodingerSpec, nodes: int) -> np.ndarray:
    x, w = _gauss_01(nodes)
    k = np.arange(1, spec.N_modes + 1)
    phi = math.sqrt(2.0) * np.sin(np.pi * k[:, None] * x[None, :])
    weighted = phi * (np.asarray(spec.mu_fn()(x)) * w)[None, :]
    return weighted @ phi.T


def schrodinger_lambda(k: int) -> float:
    """Drift eigenvalue of mode k (exact)."""
    return math.pi**2 * k**2


def schrodinger_model(spec: SchrodingerSpec) -> BilinearModel:
    """Complex diagonal-drift model of dimension N_modes.

    The coupling matrix is i times the real symmetric moment matrix, hence
    skew-Hermitian; the quadrature for its entries is convergence-checked by
    node doubling and fails loudly if entries still move by more than 1e-10.
    """
    m = _moment_matrix(spec, spec.quad_nodes)
    m2 = _moment_matrix(spec, 2 * spec.quad_nodes)
    drift = float(np.max(np.abs(m - m2)))
    if drift > 1e-10:
        raise ValueError(
            f"moment quadrature not converged: doubling nodes moves entries by {drift}"
        )
    lam = np.pi**2 * np.arange(1, spec.N_modes + 1).astype(np.float64) ** 2
    A = np.diag(-1j * lam)
    B = 1j * m2

    def action(t: float, v: np.ndarray, _lam=lam) -> np.ndarray:
        v = np.asarray(v, dtype=np.complex128)
        phases = np.exp(-1j * _lam * t)
        if v.ndim == 1:
            return phases * v
        return phases[:, None] * v

    return BilinearModel(
        dim=spec.N_modes, A_action=action, A_matrix=A, B_matrix=B,
        M=1.0, omega=0.0, label="schrodinger",
    )
