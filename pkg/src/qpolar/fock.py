"""Two-mode Fock space at fixed total photon number.

Basis ordering is fixed throughout the package: index ``k`` is the ket
``|N-k, k>`` in (horizontal, vertical) occupation, i.e. descending ``n_H``.
Pure states are 1-D complex arrays of length ``N + 1``; mixed states are
``(N + 1, N + 1)`` complex arrays in the same basis.

Stokes operators follow

    S0 = nH + nV,  S1 = aH aV^+ + aH^+ aV,  S2 = i (aH aV^+ - aH^+ aV),
    S3 = nH - nV,

so for ``N = 1`` they reduce to the Pauli matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial, sqrt

import numpy as np
import scipy.linalg

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_FLOOR = -1e-10

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_i, _k, _j] = -1.0


def basis(N: int) -> list[tuple[int, int]]:
    """Occupation labels ``(n_H, n_V)`` in package order."""
    _check_photon_number(N)
    return [(N - k, k) for k in range(N + 1)]


def _check_photon_number(N) -> None:
    if int(N) != N or N < 1:
        raise ValueError(f"photon number must be a positive integer, got {N!r}")


def photon_number(state: np.ndarray) -> int:
    return state.shape[0] - 1


def fock_ket(n_h: int, n_v: int) -> np.ndarray:
    """The basis ket ``|n_h, n_v>``."""
    N = n_h + n_v
    _check_photon_number(N)
    psi = np.zeros(N + 1, dtype=complex)
    psi[n_v] = 1.0
    return psi


def density(psi: np.ndarray) -> np.ndarray:
    """Projector onto a (normalized) ket; density matrices pass through."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim == 2:
        return psi
    return np.outer(psi, psi.conj())


def mixture(weights, kets) -> np.ndarray:
    """Incoherent sum ``sum_i w_i |psi_i><psi_i|``."""
    return sum(w * density(k) for w, k in zip(weights, kets))


@dataclass(frozen=True)
class StokesSet:
    N: int
    S0: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    S3: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        """``(S1, S2, S3)`` stacked into shape ``(3, N+1, N+1)``."""
        return np.stack([self.S1, self.S2, self.S3])

    def along(self, n) -> np.ndarray:
        """``S_n = n . (S1, S2, S3)``."""
        n = np.asarray(n, dtype=float)
        return np.tensordot(n, self.vector, axes=1)


@lru_cache(maxsize=None)
def stokes_operators(N: int) -> StokesSet:
    """Stokes operators restricted to the ``N``-photon subspace.

    The only off-diagonal matrix elements are
    ``<n_H, n_V| aH^+ aV |n_H-1, n_V+1> = sqrt(n_H (n_V+1))``.
    """
    _check_photon_number(N)
    k = np.arange(N + 1)
    n_h = N - k
    # raising[k, k+1] = <N-k, k| aH^+ aV |N-k-1, k+1>
    raising = np.diag(np.sqrt(n_h[:-1] * (k[:-1] + 1.0)), 1).astype(complex)
    lowering = raising.conj().T
    S0 = N * np.eye(N + 1, dtype=complex)
    S1 = raising + lowering
    S2 = -1j * raising + 1j * lowering
    S3 = np.diag(n_h - k).astype(complex)
    for m in (S0, S1, S2, S3):
        m.flags.writeable = False
    return StokesSet(N, S0, S1, S2, S3)


# --- single-photon polarization optics ---------------------------------------

def _rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


@dataclass(frozen=True)
class ModeUnitary:
    """A 2x2 unitary acting on the (H, V) creation operators.

    The convention is ``a_j^+ -> sum_k U[k, j] a_k^+``, which makes ``U`` the
    Jones matrix acting on single-photon amplitudes ``(c_H, c_V)``.
    Waveplates are ``R(-t) diag(1, -1) R(t)`` (half wave) and
    ``R(-t) diag(1, i) R(t)`` (quarter wave), with ``t`` the fast-axis angle
    from horizontal. No global phase is removed.
    """

    matrix: np.ndarray
    label: str = "generic"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"mode unitary must be 2x2, got shape {m.shape}")
        if not np.allclose(m.conj().T @ m, np.eye(2), atol=1e-12, rtol=0):
            raise ValueError("mode transformation is not unitary")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))

    @classmethod
    def hwp(cls, angle_deg: float) -> "ModeUnitary":
        t = np.deg2rad(angle_deg)
        return cls(_rotation(-t) @ np.diag([1.0, -1.0]) @ _rotation(t), f"HWP({angle_deg:g})")

    @classmethod
    def qwp(cls, angle_deg: float) -> "ModeUnitary":
        t = np.deg2rad(angle_deg)
        return cls(_rotation(-t) @ np.diag([1.0, 1j]) @ _rotation(t), f"QWP({angle_deg:g})")

    @classmethod
    def identity(cls) -> "ModeUnitary":
        return cls(np.eye(2), "I")

    def __matmul__(self, other: "ModeUnitary") -> "ModeUnitary":
        return ModeUnitary(self.matrix @ other.matrix, f"{self.label}*{other.label}")


def lift_mode_unitary(U, N: int) -> np.ndarray:
    """Action of a mode transformation on the ``N``-photon subspace.

    Each basis ket ``aH^+^p aV^+^q |0> / sqrt(p! q!)`` is expanded after the
    substitution ``aH^+ -> U00 aH^+ + U10 aV^+``, ``aV^+ -> U01 aH^+ + U11 aV^+``.
    The result satisfies ``lift(U @ V) == lift(U) @ lift(V)`` exactly.
    """
    _check_photon_number(N)
    m = U.matrix if isinstance(U, ModeUnitary) else np.asarray(U, dtype=complex)
    if m.shape != (2, 2) or not np.allclose(m.conj().T @ m, np.eye(2), atol=1e-10, rtol=0):
        raise ValueError("lift_mode_unitary needs a 2x2 unitary")
    (u_hh, u_hv), (u_vh, u_vv) = m
    norms = np.array([sqrt(factorial(N - k) * factorial(k)) for k in range(N + 1)])
    out = np.zeros((N + 1, N + 1), dtype=complex)
    for col, (p, q) in enumerate(basis(N)):
        # coefficient of aH^+^(N-r) aV^+^r
        poly = np.zeros(N + 1, dtype=complex)
        for i in range(p + 1):
            a = comb(p, i) * u_hh ** (p - i) * u_vh ** i
            for j in range(q + 1):
                poly[i + j] += a * comb(q, j) * u_hv ** (q - j) * u_vv ** j
        out[:, col] = poly * norms / norms[col]
    return out


def su2_rotation(n, theta: float, N: int) -> np.ndarray:
    """``exp(-i theta S_n / 2)`` on the ``N``-photon subspace."""
    n = np.asarray(n, dtype=float)
    norm = np.linalg.norm(n)
    if norm == 0:
        raise ValueError("rotation axis must be nonzero")
    if abs(norm - 1) > 1e-9:
        raise ValueError(f"rotation axis must be a unit vector, |n| = {norm}")
    return scipy.linalg.expm(-0.5j * theta * stokes_operators(N).along(n))


def so3_rotation(n, theta: float) -> np.ndarray:
    """The Poincare-sphere rotation induced by :func:`su2_rotation`."""
    n = np.asarray(n, dtype=float)
    K = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    return np.eye(3) + np.sin(theta) * K + (1 - np.cos(theta)) * K @ K


def poincare_vector(pol) -> np.ndarray:
    """Unit Stokes direction of a single-photon polarization ``(c_H, c_V)``."""
    c = np.asarray(pol, dtype=complex)
    c = c / np.linalg.norm(c)
    s = stokes_operators(1)
    return np.array([np.real(c.conj() @ m @ c) for m in (s.S1, s.S2, s.S3)])


def coherent_polarization_ket(pol, N: int) -> np.ndarray:
    """All ``N`` photons in the single-photon polarization ``pol``."""
    c = np.asarray(pol, dtype=complex)
    c = c / np.linalg.norm(c)
    k = np.arange(N + 1)
    binom = np.array([comb(N, int(j)) for j in k], dtype=float)
    return np.sqrt(binom) * c[0] ** (N - k) * c[1] ** k


# --- state metrics -----------------------------------------------------------

def expectation(A: np.ndarray, state: np.ndarray) -> float:
    """``Tr(rho A)`` for Hermitian ``A``; pure states are accepted directly."""
    A = np.asarray(A)
    if not np.allclose(A, A.conj().T, atol=1e-10, rtol=0):
        raise ValueError("observable is not Hermitian")
    state = np.asarray(state)
    if state.shape[0] != A.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} vs {state.shape}")
    if state.ndim == 1:
        val = state.conj() @ A @ state
    else:
        val = np.trace(state @ A)
    return float(np.real(val))


def purity(state: np.ndarray) -> float:
    rho = density(state)
    return float(np.real(np.vdot(rho.conj().T, rho)))


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``.

    Square roots use clamped eigendecompositions so that slightly
    non-positive inputs (e.g. from reconstructions) are tolerated.
    """
    rho, sigma = np.asarray(rho), np.asarray(sigma)
    if rho.shape[0] != sigma.shape[0]:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    if rho.ndim == 1 and sigma.ndim == 1:
        return float(abs(np.vdot(rho, sigma)) ** 2)
    if rho.ndim == 1:
        return float(np.real(rho.conj() @ sigma @ rho))
    if sigma.ndim == 1:
        return float(np.real(sigma.conj() @ rho @ sigma))
    # a rank-1 argument would put sqrt(roundoff) ~ 1e-8 into the square root
    for a, b in ((rho, sigma), (sigma, rho)):
        w, v = np.linalg.eigh((a + a.conj().T) / 2)
        if w[-1] > 1 - 1e-12:
            return fidelity(v[:, -1], b)
    r = _psd_sqrt(rho)
    w = np.linalg.eigvalsh(r @ sigma @ r)
    f = np.sum(np.sqrt(np.clip(w, 0, None))) ** 2
    return float(min(max(f, 0.0), 1.0))


@dataclass(frozen=True)
class StateDiagnostics:
    hermiticity_error: float
    trace_error: float
    min_eigenvalue: float
    purity: float
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


def validate(rho: np.ndarray) -> StateDiagnostics:
    """Check the density-operator invariants without raising."""
    rho = np.asarray(rho, dtype=complex)
    problems = []
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 2:
        return StateDiagnostics(np.inf, np.inf, -np.inf, np.nan, ["not a square matrix of size >= 2"])
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    tr = float(abs(np.trace(rho) - 1))
    min_eig = float(np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)))
    if herm > HERMITIAN_TOL:
        problems.append(f"not Hermitian (max |rho - rho^+| = {herm:.3g})")
    if tr > TRACE_TOL:
        problems.append(f"trace differs from 1 by {tr:.3g}")
    if min_eig < PSD_FLOOR:
        problems.append(f"negative eigenvalue {min_eig:.3g}")
    return StateDiagnostics(herm, tr, min_eig, purity(rho), problems)


def check_state(state: np.ndarray) -> np.ndarray:
    """Return the density matrix of ``state`` or raise ``ValueError``."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        nrm = np.linalg.norm(state)
        if abs(nrm - 1) > 1e-12:
            raise ValueError(f"ket is not normalized (norm {nrm})")
        if state.shape[0] < 2:
            raise ValueError("polarization is undefined for the vacuum")
        return density(state)
    diag = validate(state)
    if not diag.ok:
        raise ValueError("invalid density operator: " + "; ".join(diag.problems))
    return state


def random_density(N: int, rng: np.random.Generator) -> np.ndarray:
    """Hilbert-Schmidt random density matrix on the ``N``-photon subspace."""
    d = N + 1
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_pure(N: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
    return psi / np.linalg.norm(psi)
