"""Central moments of the Stokes vector and the polarization classes they define.

For a direction ``n`` on the Poincare sphere the m-th order polarization is
``<Delta_n^m>`` with ``Delta_n = S_n - <S_n>``. Orders 1-3 are stored as
tensors (mean vector, symmetrized covariance, symmetrized skewness), so that
``<Delta_n^m>`` is the full contraction of the order-m tensor with ``n``.
Only the fully symmetric part of an operator product survives that
contraction, which makes the tensor form exact.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .fock import check_state, stokes_operators

EXACT_TOL = 1e-8
EXPERIMENTAL_TOL = 0.15
TOLERANCE_PROFILES = {"exact": EXACT_TOL, "experimental": EXPERIMENTAL_TOL}
BOUND_TOL = 1e-9


@dataclass(frozen=True)
class MomentTensors:
    mean: np.ndarray  # (3,)
    cov: np.ndarray  # (3, 3)
    skew: np.ndarray  # (3, 3, 3)

    def along(self, n, m: int) -> float:
        """Contract the order-``m`` tensor with ``n``."""
        n = np.asarray(n, dtype=float)
        if m == 1:
            return float(self.mean @ n)
        if m == 2:
            return float(n @ self.cov @ n)
        if m == 3:
            return float(np.einsum("jkl,j,k,l->", self.skew, n, n, n))
        raise ValueError(f"moment order must be 1, 2 or 3, got {m!r}")

    def field(self, directions: np.ndarray, m: int) -> np.ndarray:
        """Vectorized :meth:`along` over an ``(K, 3)`` array of directions."""
        d = np.asarray(directions, dtype=float)
        if m == 1:
            return d @ self.mean
        if m == 2:
            return np.einsum("ij,jk,ik->i", d, self.cov, d)
        if m == 3:
            return np.einsum("jkl,ij,ik,il->i", self.skew, d, d, d)
        raise ValueError(f"moment order must be 1, 2 or 3, got {m!r}")

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist(), "skew": self.skew.tolist()}


def _real_trace(rho, op) -> float:
    return float(np.real(np.vdot(rho.conj().T, op)))


def moment_tensors(state) -> MomentTensors:
    rho = check_state(state)
    S = stokes_operators(rho.shape[0] - 1).vector
    eye = np.eye(rho.shape[0])
    mean = np.array([_real_trace(rho, s) for s in S])
    D = [S[j] - mean[j] * eye for j in range(3)]

    cov = np.empty((3, 3))
    for j in range(3):
        for k in range(j, 3):
            cov[j, k] = cov[k, j] = _real_trace(rho, D[j] @ D[k] + D[k] @ D[j]) / 2

    skew = np.empty((3, 3, 3))
    done = set()
    for idx in np.ndindex(3, 3, 3):
        key = tuple(sorted(idx))
        if key in done:
            continue
        done.add(key)
        perms = set(permutations(key))
        val = sum(_real_trace(rho, D[a] @ D[b] @ D[c]) for a, b, c in perms) / len(perms)
        for p in perms:
            skew[p] = val
    return MomentTensors(mean, cov, skew)


def _unit(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1) > 1e-9:
        raise ValueError(f"direction must be a unit 3-vector, got {n}")
    return n


def moment_along(state, n, m: int) -> float:
    """``Tr(rho (S_n - <S_n>)^m)`` evaluated directly from operator powers."""
    if m not in (1, 2, 3):
        raise ValueError(f"moment order must be 1, 2 or 3, got {m!r}")
    rho = check_state(state)
    n = _unit(n)
    if m == 1:
        return _real_trace(rho, stokes_operators(rho.shape[0] - 1).along(n))
    Sn = stokes_operators(rho.shape[0] - 1).along(n)
    delta = Sn - _real_trace(rho, Sn) * np.eye(rho.shape[0])
    return _real_trace(rho, np.linalg.matrix_power(delta, m))


# --- sphere sampling ---------------------------------------------------------

def fibonacci_directions(n_points: int = 2048) -> np.ndarray:
    """Quasi-uniform directions closed under ``n -> -n``.

    The upper hemisphere carries a Fibonacci spiral of ``n_points // 2``
    points and the lower hemisphere its antipodes, so row ``i + n_points//2``
    is ``-row[i]``.
    """
    if n_points < 16 or n_points % 2:
        raise ValueError("n_points must be even and >= 16")
    half = n_points // 2
    i = np.arange(half)
    z = 1 - (i + 0.5) / half
    r = np.sqrt(1 - z**2)
    phi = i * np.pi * (3 - np.sqrt(5))
    upper = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return np.vstack([upper, -upper])


def grid_directions(n_theta: int = 33, n_phi: int = 64) -> np.ndarray:
    """Regular (theta, phi) mesh; antipode of (theta, phi) is (pi-theta, phi+pi)
    whenever ``n_phi`` is even."""
    if n_theta * n_phi < 16:
        raise ValueError("grid needs at least 16 points")
    theta = np.linspace(0, np.pi, n_theta)
    phi = np.arange(n_phi) * 2 * np.pi / n_phi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    return np.column_stack([
        (np.sin(T) * np.cos(P)).ravel(),
        (np.sin(T) * np.sin(P)).ravel(),
        np.cos(T).ravel(),
    ])


@dataclass(frozen=True)
class SphereField:
    order: int
    directions: np.ndarray  # (K, 3)
    values: np.ndarray  # signed <Delta_n^m>
    grid: str
    resolution: tuple

    @property
    def abs_values(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def theta(self) -> np.ndarray:
        return np.arccos(np.clip(self.directions[:, 2], -1, 1))

    @property
    def phi(self) -> np.ndarray:
        return np.mod(np.arctan2(self.directions[:, 1], self.directions[:, 0]), 2 * np.pi)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["nx", "ny", "nz", "theta", "phi", "value", "abs_value"])
        for (x, y, z), t, p, v in zip(self.directions, self.theta, self.phi, self.values):
            w.writerow([f"{x:.12g}", f"{y:.12g}", f"{z:.12g}", f"{t:.12g}", f"{p:.12g}",
                        f"{v:.12g}", f"{abs(v):.12g}"])
        return buf.getvalue()


def sphere_field(state, m: int, grid: str = "fibonacci", resolution=2048) -> SphereField:
    """Sample ``<Delta_n^m>`` over the sphere.

    ``resolution`` is a point count for ``grid="fibonacci"`` and an
    ``(n_theta, n_phi)`` pair for ``grid="theta_phi"``.
    """
    if grid == "fibonacci":
        dirs = fibonacci_directions(int(resolution))
        res = (int(resolution),)
    elif grid == "theta_phi":
        n_theta, n_phi = resolution
        dirs = grid_directions(n_theta, n_phi)
        res = (n_theta, n_phi)
    else:
        raise ValueError(f"unknown grid {grid!r}")
    tensors = moment_tensors(state)
    return SphereField(m, dirs, tensors.field(dirs, m), grid, res)


# --- bounds and invariance ---------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    variance_sum: float
    lower: float
    upper: float
    at_lower: bool
    at_upper: bool

    @property
    def within(self) -> bool:
        return self.lower - BOUND_TOL <= self.variance_sum <= self.upper + BOUND_TOL

    @property
    def label(self) -> str:
        if self.at_upper:
            return "maximum"
        if self.at_lower:
            return "minimum"
        return "interior"


def variance_sum(state) -> float:
    return float(np.trace(moment_tensors(state).cov))


def check_bounds(state) -> BoundReport:
    """Locate the variance sum inside ``[2N, N(N+2)]``; ``at_upper`` marks a
    maximum sum-uncertainty state."""
    rho = check_state(state)
    N = rho.shape[0] - 1
    s = variance_sum(rho)
    lo, hi = 2.0 * N, float(N * (N + 2))
    return BoundReport(s, lo, hi, abs(s - lo) <= BOUND_TOL, abs(s - hi) <= BOUND_TOL)


@dataclass(frozen=True)
class UncertaintyCheck:
    lhs: float
    rhs: float

    @property
    def saturated(self) -> bool:
        return abs(self.lhs - self.rhs) <= BOUND_TOL


def uncertainty_product(state, j: int, k: int) -> UncertaintyCheck:
    """``sqrt<Dj^2> sqrt<Dk^2>`` against ``|eps_jkl <S_l>|`` (axes numbered 1-3)."""
    if {j, k} - {1, 2, 3} or j == k:
        raise ValueError(f"need two distinct axes in 1..3, got {(j, k)}")
    t = moment_tensors(state)
    l = 6 - j - k
    lhs = np.sqrt(max(t.cov[j - 1, j - 1], 0.0)) * np.sqrt(max(t.cov[k - 1, k - 1], 0.0))
    return UncertaintyCheck(float(lhs), float(abs(t.mean[l - 1])))


@dataclass(frozen=True)
class InvarianceTriple:
    mean_invariant: bool
    var_invariant: bool
    skew_invariant: bool
    residuals: tuple[float, float, float]
    tol: float

    @property
    def flags(self) -> tuple[bool, bool, bool]:
        return (self.mean_invariant, self.var_invariant, self.skew_invariant)

    @property
    def pattern(self) -> str:
        return "".join("O" if f else "X" for f in self.flags)


def invariance(state, tol: float = EXACT_TOL) -> InvarianceTriple:
    """Rotation-invariance of the first three moment orders.

    Residuals are Frobenius norms: ``|mean|``, the traceless part of the
    covariance, and the whole skewness tensor. An odd-order field that is
    rotation invariant must equal its own negative (antipodal identity), so
    invariance of the skewness means the tensor vanishes.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    t = moment_tensors(state)
    r_mean = float(np.linalg.norm(t.mean))
    r_var = float(np.linalg.norm(t.cov - np.trace(t.cov) / 3 * np.eye(3)))
    r_skew = float(np.linalg.norm(t.skew))
    return InvarianceTriple(r_mean <= tol, r_var <= tol, r_skew <= tol, (r_mean, r_var, r_skew), tol)


class PolarizationClass(str, enum.Enum):
    OOO = "OOO"
    OOX = "OOX"
    OXO = "OXO"
    OXX = "OXX"
    XOX = "XOX"
    XXX = "XXX"


class ImpossibleClassError(ValueError):
    """An invariance pattern outside the six realizable three-photon classes."""


def classify(state, tol: float = EXACT_TOL) -> PolarizationClass:
    """Six-class label of a three-photon state from its invariance pattern."""
    rho = check_state(state)
    if rho.shape[0] != 4:
        raise ValueError("the six-class labeling is defined for three photons; use invariance()")
    pattern = invariance(rho, tol).pattern
    try:
        return PolarizationClass(pattern)
    except ValueError:
        raise ImpossibleClassError(
            f"invariance pattern {pattern} cannot occur for a physical three-photon state; "
            f"check the tolerance ({tol:g})"
        ) from None


def unpolarized_order(state, tol: float = EXACT_TOL) -> int:
    """Largest m such that the first m moment orders are all rotation invariant."""
    order = 0
    for flag in invariance(state, tol).flags:
        if not flag:
            break
        order += 1
    return order
