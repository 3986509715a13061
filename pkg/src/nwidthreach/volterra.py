"""Series expansion of the endpoint map of a bilinear system x' = (A + uB)x.

The endpoint x(T) decomposes into the free term e^{TA}x0 plus a series of
terms V_k, each k-linear in the control.  V_k solves the triangular chain
x_k' = A x_k + u(t) B x_{k-1} with x_k(0) = 0, which this module integrates
in the interaction picture: z_k(t) = e^{-tA} x_k(t) turns each chain step
into a pure integral

    z_k(t) = \\int_0^t u(s) e^{-sA} B e^{sA} z_{k-1}(s) ds,

evaluated per control cell on Gauss-Legendre nodes with a spectral
cumulative-integration matrix (exact whenever the integrand restricted to a
cell is a polynomial of degree < node count).  Controls are piecewise
constant, so an exact oracle is available: the product of per-cell matrix
exponentials of dt*(A + u_i B).

Per-term and truncation-tail certificates mirror the closed-form growth
bounds: ||V_k|| <= M e^{wt} ||x0|| (M ||B|| sqrt(t) ||u||_L2)^k, and the tail
from k_start sums the geometric series in q = M ||B|| sqrt(T) r, valid only
for q < 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

DEFAULT_NODES = 32
_SEMIGROUP_CHECK_TIMES = (0.1, 0.7, 1.9)


class SeriesDivergenceError(ValueError):
    """Raised when the geometric-tail certificate does not apply (q >= 1)."""


@dataclass(frozen=True, eq=False)
class BilinearModel:
    """Bilinear system data with an exact semigroup applicator.

    ``A_action(t, v)`` must apply e^{tA} exactly (up to roundoff) to a vector
    or to the columns of a matrix, for positive and negative ``t``.
    ``A_matrix`` is the dense generator used by the exact endpoint oracle.
    ``M`` and ``omega`` certify the growth bound ||e^{tA}|| <= M e^{omega t},
    which is spot-checked on random vectors at construction.
    """

    dim: int
    A_action: Callable[[float, np.ndarray], np.ndarray]
    A_matrix: np.ndarray
    B_matrix: np.ndarray
    M: float = 1.0
    omega: float = 0.0
    B_norm: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        a = np.asarray(self.A_matrix)
        b = np.asarray(self.B_matrix)
        if a.shape != (self.dim, self.dim) or b.shape != (self.dim, self.dim):
            raise ValueError(
                f"matrix shapes {a.shape}, {b.shape} do not match dim {self.dim}"
            )
        if self.M < 1.0:
            raise ValueError("semigroup constant M must be >= 1")
        if np.iscomplexobj(a) or np.iscomplexobj(b):
            a = a.astype(np.complex128)
            b = b.astype(np.complex128)
        else:
            a = a.astype(np.float64)
            b = b.astype(np.float64)
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A_matrix", a)
        object.__setattr__(self, "B_matrix", b)
        if self.B_norm is None:
            object.__setattr__(self, "B_norm", float(np.linalg.norm(b, 2)))
        object.__setattr__(self, "_propagator_cache", {})
        rng = np.random.default_rng(12345)
        for t in _SEMIGROUP_CHECK_TIMES:
            v = rng.normal(size=self.dim) + (
                1j * rng.normal(size=self.dim) if self.is_complex else 0.0
            )
            v /= np.linalg.norm(v)
            grown = float(np.linalg.norm(self.A_action(t, v)))
            allowed = self.M * np.exp(self.omega * t)
            if grown > allowed * (1.0 + 1e-9) + 1e-12:
                raise ValueError(
                    f"semigroup bound violated at t={t}: |e^(tA)v| = {grown} > {allowed}"
                )

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.A_matrix)

    @property
    def field_tag(self) -> str:
        return "complex" if self.is_complex else "real"

    @classmethod
    def from_matrices(cls, A, B, M: float = 1.0, omega: float = 0.0, label: str = "") -> "BilinearModel":
        """Generic constructor whose semigroup applicator uses the matrix exponential."""
        A = np.asarray(A)

        def action(t: float, v: np.ndarray, _A=A) -> np.ndarray:
            return scipy.linalg.expm(t * _A) @ v

        return cls(
            dim=A.shape[0], A_action=action, A_matrix=A, B_matrix=B,
            M=M, omega=omega, label=label,
        )


@dataclass(frozen=True)
class ControlSignal:
    """Piecewise-constant control on a uniform grid over [0, horizon]."""

    horizon: float
    values: np.ndarray
    l2_norm: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("control values must form a nonempty 1-d array")
        if not np.all(np.isfinite(values)):
            raise ValueError("control values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        actual = float(np.sqrt(np.sum(values**2) * self.dt))
        if self.l2_norm is None:
            object.__setattr__(self, "l2_norm", actual)
        elif abs(self.l2_norm - actual) > 1e-12 * max(1.0, actual):
            raise ValueError(
                f"cached l2 norm {self.l2_norm} does not match recomputed {actual}"
            )

    @property
    def cells(self) -> int:
        return self.values.size

    @property
    def dt(self) -> float:
        return self.horizon / self.values.size

    def scaled(self, s: float) -> "ControlSignal":
        return ControlSignal(self.horizon, s * self.values)


def _legendre_node_data(g: int):
    """Gauss-Legendre nodes/weights on [-1,1] plus the node-to-node integration matrix.

    ``S[i, j]`` integrates the cardinal interpolant of node j from -1 up to
    node i, exactly for polynomials of degree < g.
    """
    x, w = np.polynomial.legendre.leggauss(g)
    pn = np.polynomial.legendre.legvander(x, g).T  # rows: P_0..P_g at the nodes
    coef = ((2.0 * np.arange(g) + 1.0) / 2.0)[:, None] * (pn[:g] * w[None, :])
    anti = np.zeros((g, g))
    anti[0] = x + 1.0
    for n in range(1, g):
        anti[n] = (pn[n + 1] - pn[n - 1]) / (2.0 * n + 1.0)
    return x, w, anti.T @ coef


def _node_propagators(model: BilinearModel, horizon: float, cells: int, g: int):
    """Per-node forward/backward semigroup matrices on the integration grid."""
    key = (horizon, cells, g)
    cache = model._propagator_cache  # type: ignore[attr-defined]
    if key in cache:
        return cache[key]
    x, w, integ = _legendre_node_data(g)
    dt = horizon / cells
    starts = dt * np.arange(cells)
    sigmas = starts[:, None] + (x[None, :] + 1.0) * (dt / 2.0)
    eye = np.eye(model.dim, dtype=model.A_matrix.dtype)
    fwd = np.empty((cells, g, model.dim, model.dim), dtype=model.A_matrix.dtype)
    back = np.empty_like(fwd)
    for i in range(cells):
        for k in range(g):
            fwd[i, k] = model.A_action(sigmas[i, k], eye)
            back[i, k] = model.A_action(-sigmas[i, k], eye)
    data = (sigmas, w, integ, fwd, back)
    cache[key] = data
    return data


def volterra_terms(
    model: BilinearModel, x0, u: ControlSignal, k_max: int, nodes: int = DEFAULT_NODES
) -> list:
    """Series terms [e^{TA}x0, V_1, ..., V_{k_max}] of the endpoint map.

    Each V_k is obtained from the interaction-picture chain integral on
    ``nodes`` Gauss-Legendre points per control cell; the result is exact for
    integrands that are polynomials of degree < ``nodes`` on each cell and
    spectrally accurate for the analytic integrands produced by e^{sA}.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    x0 = np.asarray(x0, dtype=model.A_matrix.dtype)
    if x0.shape != (model.dim,):
        raise ValueError(f"x0 shape {x0.shape} does not match model dim {model.dim}")
    _, w, integ, fwd, back = _node_propagators(model, u.horizon, u.cells, nodes)
    dt = u.dt
    half = dt / 2.0
    b = model.B_matrix
    uvals = u.values

    # z_{k-1} at every node; z_0 is constant x0
    z_prev = np.broadcast_to(x0, (u.cells, nodes, model.dim)).copy()
    terms = [model.A_action(u.horizon, x0.copy())]
    for _ in range(k_max):
        # integrand u(s) e^{-sA} B e^{sA} z_{k-1}(s) at all nodes
        q = np.einsum("cgde,cge->cgd", fwd, z_prev)
        q = q @ b.T
        q = np.einsum("cgde,cge->cgd", back, q)
        q *= uvals[:, None, None]
        node_inc = half * np.einsum("gj,cjd->cgd", integ, q)
        cell_inc = half * np.einsum("j,cjd->cd", w, q)
        z_starts = np.concatenate(
            [np.zeros((1, model.dim), dtype=q.dtype), np.cumsum(cell_inc, axis=0)]
        )
        z_nodes = z_starts[:-1, None, :] + node_inc
        terms.append(model.A_action(u.horizon, z_starts[-1]))
        z_prev = z_nodes
    return terms


def kernel_eval(model: BilinearModel, x0, t: float, sigmas) -> np.ndarray:
    """Series kernel at ordered interaction times: alternate e^{dA} steps with B."""
    x0 = np.asarray(x0, dtype=model.A_matrix.dtype)
    if x0.shape != (model.dim,):
        raise ValueError(f"x0 shape {x0.shape} does not match model dim {model.dim}")
    sigmas = np.asarray(sigmas, dtype=np.float64)
    if sigmas.ndim != 1:
        raise ValueError("sigmas must be a 1-d sequence")
    if sigmas.size and (np.any(np.diff(sigmas) < 0)):
        raise ValueError("interaction times must be sorted")
    if sigmas.size and (sigmas[0] < 0 or sigmas[-1] > t):
        raise ValueError("interaction times must lie in [0, t]")
    v = x0
    prev = 0.0
    for s in sigmas:
        v = model.A_action(float(s) - prev, v)
        v = model.B_matrix @ v
        prev = float(s)
    return model.A_action(t - prev, v)


def term_bound(
    model: BilinearModel, x0_norm: float, t: float, u_l2: float, k: int
) -> float:
    """Certified norm bound for the k-th series term."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if min(x0_norm, t, u_l2) < 0:
        raise ValueError("arguments must be nonnegative")
    return float(
        model.M
        * np.exp(model.omega * t)
        * x0_norm
        * (model.M * model.B_norm * np.sqrt(t) * u_l2) ** k
    )


def tail_bound(
    model: BilinearModel, x0_norm: float, T: float, r: float, k_start: int
) -> float:
    """Certified bound on the sum of all series terms with index >= k_start.

    Sums the geometric majorant with ratio q = M ||B|| sqrt(T) r; requires
    q < 1 and raises `SeriesDivergenceError` otherwise.
    """
    if k_start < 1:
        raise ValueError("k_start must be at least 1")
    if min(x0_norm, T, r) < 0:
        raise ValueError("arguments must be nonnegative")
    q = model.M * model.B_norm * np.sqrt(T) * r
    if q >= 1.0:
        raise SeriesDivergenceError(
            f"geometric tail certificate needs M*|B|*sqrt(T)*r < 1, got {q}"
        )
    return float(model.M * np.exp(model.omega * T) * x0_norm * q**k_start / (1.0 - q))


def endpoint_exact(model: BilinearModel, x0, u: ControlSignal) -> np.ndarray:
    """Exact endpoint for piecewise-constant control via per-cell matrix exponentials."""
    x0 = np.asarray(x0, dtype=model.A_matrix.dtype)
    if x0.shape != (model.dim,):
        raise ValueError(f"x0 shape {x0.shape} does not match model dim {model.dim}")
    dt = u.dt
    state = x0
    for ui in u.values:
        state = scipy.linalg.expm(dt * (model.A_matrix + ui * model.B_matrix)) @ state
    return state
