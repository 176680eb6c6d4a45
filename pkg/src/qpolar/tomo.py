"""Polarization tomography of three-photon states.

Each setting is a (QWP2, HWP3) pair followed by a polarizing beam splitter
and photon counting in both outputs, so one setting yields the four
photon-splitting outcomes ``(3,0), (2,1), (1,2), (0,3)``. Reconstruction is
maximum likelihood via the iterative ``R rho R`` map, with a diluted step
whenever a full step would lower the likelihood.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import least_squares

from .fock import (
    ModeUnitary,
    check_state,
    fidelity,
    lift_mode_unitary,
    poincare_vector,
    purity,
)
from .moments import fibonacci_directions, moment_tensors

N_PHOTONS = 3
OUTCOMES = ((3, 0), (2, 1), (1, 2), (0, 3))
OUTCOME_KEYS = tuple(f"{h}{v}" for h, v in OUTCOMES)

MAX_ITERATIONS = 5000
LIKELIHOOD_GAIN_TOL = 1e-10


@dataclass(frozen=True)
class MeasurementSetting:
    qwp2: float  # degrees
    hwp3: float  # degrees

    @property
    def mode_unitary(self) -> ModeUnitary:
        return ModeUnitary.hwp(self.hwp3) @ ModeUnitary.qwp(self.qwp2)

    @property
    def direction(self) -> np.ndarray:
        """Poincare direction of the single-photon polarization sent to the
        H output of the PBS."""
        u = self.mode_unitary.matrix
        return poincare_vector(u.conj().T @ np.array([1.0, 0.0]))

    def projectors(self, N: int = N_PHOTONS) -> np.ndarray:
        """POVM elements ``U^+ |k><k| U`` for the four outcomes, shape (N+1, d, d)."""
        U = lift_mode_unitary(self.mode_unitary, N)
        return np.einsum("ki,kj->kij", U.conj(), U)


def waveplates_for_direction(n) -> MeasurementSetting:
    """Angles (QWP2, HWP3) that route polarization ``n`` to the H port."""
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)

    def resid(x):
        return MeasurementSetting(*x).direction - n

    # coarse grid seed, then refine; QWP has period 180 deg, HWP 90 deg here
    q, h = np.meshgrid(np.arange(0, 180, 7.5), np.arange(0, 90, 7.5), indexing="ij")
    errs = [np.linalg.norm(resid((a, b))) for a, b in zip(q.ravel(), h.ravel())]
    x0 = (q.ravel()[np.argmin(errs)], h.ravel()[np.argmin(errs)])
    sol = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if np.linalg.norm(resid(sol.x)) > 1e-9:
        raise RuntimeError(f"no waveplate setting found for direction {n}")
    q, h = (float(np.round(a % 180, 12)) % 180 for a in sol.x)
    return MeasurementSetting(q, h)


def default_directions() -> np.ndarray:
    """The six Poincare axes (H/V first), four tetrahedron vertices and six face
    diagonals (16 directions)."""
    axes = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0], [0, 0, -1], [-1, 0, 0], [0, -1, 0]])
    tetra = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3)
    diag = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, -1, 0], [1, 0, -1], [0, 1, -1]]) / np.sqrt(2)
    return np.vstack([axes, tetra, diag])


@lru_cache(maxsize=1)
def _default_settings() -> tuple[MeasurementSetting, ...]:
    return tuple(waveplates_for_direction(n) for n in default_directions())


def default_settings() -> list[MeasurementSetting]:
    """Sixteen informationally complete settings; the first is H/V (0, 0)."""
    return list(_default_settings())


def design_matrix(settings, N: int = N_PHOTONS) -> np.ndarray:
    """Rows are vectorized POVM elements, so ``A @ rho.ravel() = probs``."""
    return np.vstack([s.projectors(N).conj().reshape(N + 1, -1) for s in settings])


def completeness_rank(settings, N: int = N_PHOTONS) -> int:
    return int(np.linalg.matrix_rank(design_matrix(settings, N), tol=1e-9))


def is_informationally_complete(settings, N: int = N_PHOTONS) -> bool:
    return completeness_rank(settings, N) == (N + 1) ** 2


def born_probabilities(state, setting: MeasurementSetting) -> np.ndarray:
    rho = check_state(state)
    N = rho.shape[0] - 1
    U = lift_mode_unitary(setting.mode_unitary, N)
    p = np.real(np.diag(U @ rho @ U.conj().T))
    return np.clip(p, 0, None)


@dataclass(frozen=True)
class CountRecord:
    setting: MeasurementSetting
    counts: np.ndarray  # per outcome in OUTCOMES order; may be expected (float) counts
    shots: float

    def to_dict(self) -> dict:
        c = [int(x) if float(x).is_integer() else float(x) for x in self.counts]
        return {"qwp2": self.setting.qwp2, "hwp3": self.setting.hwp3,
                "shots": int(self.shots) if float(self.shots).is_integer() else self.shots,
                "counts": dict(zip(OUTCOME_KEYS, c))}

    @classmethod
    def from_dict(cls, d: dict) -> "CountRecord":
        counts = np.array([d["counts"][k] for k in OUTCOME_KEYS], dtype=float)
        shots = d.get("shots", counts.sum())
        if counts.sum() > shots + 1e-9 or (counts < 0).any():
            raise ValueError("counts must be nonnegative and sum to at most shots")
        return cls(MeasurementSetting(float(d["qwp2"]), float(d["hwp3"])), counts, shots)


def simulate_counts(state, settings, shots: int, seed=None,
                    poisson_totals: bool = False) -> list[CountRecord]:
    """Multinomial counts per setting; with ``poisson_totals`` the number of
    trials per setting is itself Poisson with mean ``shots``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for s in settings:
        p = born_probabilities(state, s)
        n = int(rng.poisson(shots)) if poisson_totals else int(shots)
        out.append(CountRecord(s, rng.multinomial(n, p / p.sum()), n))
    return out


def expected_records(state, settings, shots: float = 1.0) -> list[CountRecord]:
    """Noiseless 'counts' equal to ``shots * probability``."""
    return [CountRecord(s, shots * born_probabilities(state, s), shots) for s in settings]


def dump_records(records) -> str:
    return json.dumps([r.to_dict() for r in records], indent=2)


def load_records(text: str) -> list[CountRecord]:
    return [CountRecord.from_dict(d) for d in json.loads(text)]


@dataclass
class MLEConfig:
    max_iterations: int = MAX_ITERATIONS
    tol: float = LIKELIHOOD_GAIN_TOL
    dilution: float = 0.5
    track_history: bool = False


@dataclass
class ReconstructionResult:
    rho_hat: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    fidelity_to_target: float | None = None
    history: list = field(default_factory=list)  # log-likelihood per iterate
    iterates: list = field(default_factory=list)


def _log_likelihood(counts, probs) -> float:
    mask = counts > 0
    return float(np.sum(counts[mask] * np.log(np.clip(probs[mask], 1e-300, None))))


def _povm(records, N):
    return np.concatenate([r.setting.projectors(N) for r in records])


def mle_reconstruct(records, config: MLEConfig | None = None, target=None,
                    N: int = N_PHOTONS) -> ReconstructionResult:
    """Maximum-likelihood density matrix from count records.

    Iterates ``rho <- R rho R / Tr`` with ``R = G (sum_i n_i / p_i Pi_i) G``,
    ``G = H^{-1/2}`` and ``H = sum_s n_s sum_k Pi_{s,k}``; ``G`` accounts for
    unequal totals per setting. If a full step lowers the likelihood the
    step is diluted, ``R -> (1 + eps R) / (1 + eps)``, with ``eps`` halved
    from ``config.dilution`` until the likelihood does not decrease.
    """
    config = config or MLEConfig()
    records = list(records)
    if not records:
        raise ValueError("empty data")
    counts = np.concatenate([np.asarray(r.counts, dtype=float) for r in records])
    if counts.sum() <= 0:
        raise ValueError("empty data: all counts are zero")
    if not is_informationally_complete([r.setting for r in records], N):
        warnings.warn("measurement settings are not informationally complete; "
                      "the estimate is not unique", stacklevel=2)
    povm = _povm(records, N)
    d = N + 1
    totals = np.repeat([np.sum(r.counts) for r in records], d)
    H = np.einsum("i,ijk->jk", totals, povm)
    w, v = np.linalg.eigh(H)
    G = (v / np.sqrt(np.clip(w, 1e-300, None))) @ v.conj().T
    eye = np.eye(d)

    def probs(rho):
        return np.real(np.einsum("ijk,kj->i", povm, rho))

    rho = eye / d + 0j
    ll = _log_likelihood(counts, probs(rho))
    history = [ll] if config.track_history else []
    iterates = [rho] if config.track_history else []
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        p = probs(rho)
        ratio = np.where(counts > 0, counts / np.clip(p, 1e-300, None), 0.0)
        R = G @ np.einsum("i,ijk->jk", ratio, povm) @ G
        new = R @ rho @ R
        new = (new + new.conj().T) / 2
        new /= np.real(np.trace(new))
        new_ll = _log_likelihood(counts, probs(new))
        eps = config.dilution
        while new_ll < ll and eps > 1e-12:
            Re = (eye + eps * R) / (1 + eps)
            new = Re @ rho @ Re
            new = (new + new.conj().T) / 2
            new /= np.real(np.trace(new))
            new_ll = _log_likelihood(counts, probs(new))
            eps /= 2
        if new_ll < ll:
            # no ascent direction left at double precision
            converged = True
            break
        gain = new_ll - ll
        rho, ll = new, new_ll
        if config.track_history:
            history.append(ll)
            iterates.append(rho)
        if gain < config.tol:
            converged = True
            break
    f = None if target is None else fidelity(rho, check_state(target))
    return ReconstructionResult(rho, ll, it, converged, f, history, iterates)


@dataclass(frozen=True)
class Evaluation:
    fidelity: float
    purity: float
    target_purity: float
    moment_deviation: dict  # order -> sup_n |<D_n^m>_hat - <D_n^m>_target|

    def to_dict(self) -> dict:
        return {"fidelity": self.fidelity, "purity": self.purity,
                "target_purity": self.target_purity,
                "moment_deviation": {str(k): v for k, v in self.moment_deviation.items()}}


def evaluate(rho_hat, target, n_points: int = 2048) -> Evaluation:
    """Fidelity plus sphere-sup deviations of the first three moment fields."""
    rho_hat, target = check_state(rho_hat), check_state(target)
    if rho_hat.shape != target.shape:
        raise ValueError(f"dimension mismatch: {rho_hat.shape} vs {target.shape}")
    dirs = fibonacci_directions(n_points)
    a, b = moment_tensors(rho_hat), moment_tensors(target)
    dev = {m: float(np.max(np.abs(a.field(dirs, m) - b.field(dirs, m)))) for m in (1, 2, 3)}
    return Evaluation(fidelity(rho_hat, target), purity(rho_hat), purity(target), dev)
