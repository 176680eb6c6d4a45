"""Linear-optics preparation of heralded three-photon polarization states.

Four optical modes are tracked, ordered ``(aH, aV, bH, bV)``. Before the
partially polarizing beam splitter (PPBS) all photons share one spatial
mode, stored in the ``b`` slots. The PPBS sends transmitted light to ``a``
and reflected light to ``b``; a single photon found in ``a`` heralds the
three photons left in ``b``.

Phase convention: the reflected horizontal amplitude carries ``exp(i phi)``
relative to the reflected vertical one. With the waveplate conventions of
:class:`qpolar.fock.ModeUnitary` this gives the heralded NOON state
``(|3,0> - i|0,3>)/sqrt 2`` for QWP1 = 45 deg, HWP2 = phi/4, and a
calibration fringe ``sin^2((phi - 4 theta)/2)``.
"""

from __future__ import annotations

import json
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from math import factorial, prod, sqrt
from pathlib import Path

import numpy as np

from .fock import (
    ModeUnitary,
    check_state,
    coherent_polarization_ket,
    density,
    fidelity,
    fock_ket,
    lift_mode_unitary,
    mixture,
)

MODES = ("aH", "aV", "bH", "bV")
PPBS_R_H = sqrt(1 / 3)
PPBS_T_H = sqrt(2 / 3)
REPETITION_RATE_HZ = 80e6
# single, double and triple pair emission per pulse at 260 mW
DEFAULT_PAIR_PROBABILITIES = (0.025, 0.0006, 0.00002)
DEFAULT_PPBS_PHASE_DEG = -85.7

_AMP_TOL = 1e-15


@dataclass(frozen=True)
class MultimodeState:
    """Sparse amplitudes over occupation tuples ``(n_aH, n_aV, n_bH, n_bV)``."""

    amplitudes: dict

    def __post_init__(self):
        amps = {tuple(int(x) for x in k): complex(v) for k, v in self.amplitudes.items()
                if abs(v) > _AMP_TOL}
        totals = {sum(k) for k in amps}
        if len(totals) > 1:
            raise ValueError(f"occupation tuples have different photon numbers: {sorted(totals)}")
        if any(len(k) != len(MODES) or min(k) < 0 for k in amps):
            raise ValueError("occupation tuples must have four nonnegative entries")
        if self.norm_squared > 1 + 1e-12:
            raise ValueError(f"squared norm {self.norm_squared} exceeds 1")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def total_photons(self) -> int:
        return sum(next(iter(self.amplitudes))) if self.amplitudes else 0

    @property
    def norm_squared(self) -> float:
        return float(sum(abs(v) ** 2 for v in self.amplitudes.values()))

    def mode_b_ket(self) -> np.ndarray:
        """Polarization ket of spatial mode ``b`` (requires mode ``a`` empty)."""
        if any(k[0] or k[1] for k in self.amplitudes):
            raise ValueError("mode a is occupied")
        N = self.total_photons
        psi = np.zeros(N + 1, dtype=complex)
        for (_, _, _, n_bv), amp in self.amplitudes.items():
            psi[n_bv] += amp
        return psi

    @classmethod
    def from_mode_b_ket(cls, psi) -> "MultimodeState":
        N = len(psi) - 1
        return cls({(0, 0, N - k, k): a for k, a in enumerate(psi)})


@dataclass(frozen=True)
class OpticalElement:
    """A linear element given by its creation-operator map on the four modes.

    ``matrix[k, j]`` is the coefficient of ``a_k^+`` in the image of
    ``a_j^+``. ``kind`` is informational; ``params`` records angles (deg),
    phases (deg) and reflectivities.
    """

    kind: str
    matrix: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def is_unitary(self) -> bool:
        m = self.matrix
        return bool(np.allclose(m.conj().T @ m, np.eye(len(MODES)), atol=1e-12, rtol=0))

    @classmethod
    def identity(cls) -> "OpticalElement":
        return cls("I", np.eye(4, dtype=complex))

    @classmethod
    def waveplate(cls, kind: str, angle_deg: float, mode: str = "b") -> "OpticalElement":
        factory = {"HWP": ModeUnitary.hwp, "QWP": ModeUnitary.qwp}[kind.upper()]
        if mode not in ("a", "b"):
            raise ValueError(f"spatial mode must be 'a' or 'b', got {mode!r}")
        m = np.eye(4, dtype=complex)
        s = slice(0, 2) if mode == "a" else slice(2, 4)
        m[s, s] = factory(angle_deg).matrix
        return cls(kind.upper(), m, {"angle": angle_deg, "mode": mode})

    @classmethod
    def ppbs(cls, phi_deg: float) -> "OpticalElement":
        """Beam splitter reflecting V fully and H with probability 1/3.

        Input port ``b`` (the combined SPDC mode) transmits H into ``a``.
        The unused port ``a`` is completed so the 4x4 map is unitary.
        """
        e = np.exp(1j * np.deg2rad(phi_deg))
        m = np.zeros((4, 4), dtype=complex)
        # columns: image of aH^+, aV^+, bH^+, bV^+
        m[0, 2], m[2, 2] = PPBS_T_H, PPBS_R_H * e
        m[0, 0], m[2, 0] = -PPBS_R_H, PPBS_T_H * e
        m[1, 1] = 1.0
        m[3, 3] = 1.0
        return cls("PPBS", m, {"phi": phi_deg, "R_H": 1 / 3, "R_V": 1.0})


def _monomial_expand(matrix: np.ndarray, occupation) -> dict:
    """Image of prod_j a_j^+^n_j under the creation-operator map, as a
    polynomial ``{exponent tuple: coefficient}``."""
    poly = {(0,) * len(MODES): 1.0 + 0j}
    for j, n in enumerate(occupation):
        if not n:
            continue
        col = [(k, matrix[k, j]) for k in range(len(MODES)) if matrix[k, j] != 0]
        for _ in range(n):
            nxt = defaultdict(complex)
            for exps, c in poly.items():
                for k, mkj in col:
                    e = list(exps)
                    e[k] += 1
                    nxt[tuple(e)] += c * mkj
            poly = nxt
    return poly


def apply_element(state: MultimodeState, element: OpticalElement) -> MultimodeState:
    """Propagate a state through a linear element by creation-operator
    substitution. Non-unitary maps are allowed; lost amplitude is simply
    absent from the result."""
    m = np.asarray(element.matrix, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"element must act on the four modes {MODES}, got shape {m.shape}")
    out = defaultdict(complex)
    for occ, amp in state.amplitudes.items():
        norm_in = sqrt(prod(factorial(n) for n in occ))
        for exps, c in _monomial_expand(m, occ).items():
            out[exps] += amp * c * sqrt(prod(factorial(n) for n in exps)) / norm_in
    return MultimodeState(dict(out))


def initial_state() -> MultimodeState:
    """Two horizontally and two vertically polarized photons in one spatial
    mode, ``(1/2) aH^+^2 aV^+^2 |0> = |2,2>``."""
    return MultimodeState({(0, 0, 2, 2): 1.0})


def spdc_single_pair() -> MultimodeState:
    """The ``|1,1>_{H,V}`` single-pair component used for phase calibration."""
    return MultimodeState({(0, 0, 1, 1): 1.0})


@dataclass(frozen=True)
class HeraldedState:
    probability: float
    state: np.ndarray  # normalized polarization ket of mode b

    @property
    def N(self) -> int:
        return len(self.state) - 1

    @property
    def density(self) -> np.ndarray:
        return density(self.state)


class ZeroProbabilityError(ValueError):
    """Raised when conditioning on an event that cannot occur."""


def herald(state: MultimodeState) -> HeraldedState:
    """Condition on exactly one photon in spatial mode ``a``.

    The herald photon's polarization is traced out; the result must be a
    pure mode-``b`` state, which holds whenever the herald is always H.
    """
    branches = defaultdict(dict)
    for (n_ah, n_av, n_bh, n_bv), amp in state.amplitudes.items():
        if n_ah + n_av == 1:
            branches[(n_ah, n_av)][(n_bh, n_bv)] = amp
    if not branches:
        raise ZeroProbabilityError("no amplitude with exactly one photon in mode a")
    N = state.total_photons - 1
    kets = []
    for occ in branches.values():
        psi = np.zeros(N + 1, dtype=complex)
        for (n_bh, n_bv), amp in occ.items():
            psi[n_bv] = amp
        kets.append(psi)
    p = float(sum(np.vdot(k, k).real for k in kets))
    if p <= 0:
        raise ZeroProbabilityError("herald probability is zero")
    if len(kets) > 1:
        rho = sum(np.outer(k, k.conj()) for k in kets) / p
        w, v = np.linalg.eigh(rho)
        if w[-1] < 1 - 1e-10:
            raise ValueError("heralded state is mixed; herald polarization is not unique")
        return HeraldedState(p, v[:, -1])
    return HeraldedState(p, kets[0] / sqrt(p))


def ppbs_and_herald(state: MultimodeState, phi_deg: float) -> HeraldedState:
    """Split at the PPBS and herald on one transmitted photon."""
    if any(k[0] or k[1] for k in state.amplitudes):
        raise ValueError("input must occupy only the combined mode (b slots) before the PPBS")
    return herald(apply_element(state, OpticalElement.ppbs(phi_deg)))


def unnormalized_branch(state: MultimodeState, phi_deg: float) -> dict:
    """Operator-form coefficients of the heralded branch.

    Returns ``{(p, q): c}`` with the mode-``b`` state written as
    ``sum c aH^+^p aV^+^q |0>`` after removing the herald ``a_aH^+``.
    """
    out = apply_element(state, OpticalElement.ppbs(phi_deg))
    coeffs = {}
    for (n_ah, n_av, n_bh, n_bv), amp in out.amplitudes.items():
        if (n_ah, n_av) == (1, 0):
            coeffs[(n_bh, n_bv)] = amp / sqrt(factorial(n_bh) * factorial(n_bv))
    return coeffs


def finish_state(h: HeraldedState, qwp1: float = 0.0, hwp2: float = 0.0) -> HeraldedState:
    """Pass the heralded photons through QWP1 then HWP2 (angles in degrees)."""
    N = h.N
    U = lift_mode_unitary(ModeUnitary.hwp(hwp2) @ ModeUnitary.qwp(qwp1), N)
    return HeraldedState(h.probability, U @ h.state)


def noon_settings(phi_deg: float) -> tuple[float, float]:
    """(QWP1, HWP2) angles that turn the 22.5-degree branch into a NOON state."""
    return 45.0, phi_deg / 4


def post_select_lp(h: HeraldedState, lp_angle_deg: float) -> HeraldedState:
    """Linear polarizer: every photon is projected on the transmission axis.

    Returns the transmitted state with the success probability folded into
    the herald probability.
    """
    t = np.deg2rad(lp_angle_deg)
    axis = coherent_polarization_ket([np.cos(t), np.sin(t)], h.N)
    amp = np.vdot(axis, h.state)
    p = float(abs(amp) ** 2)
    if p < 1e-14:
        raise ZeroProbabilityError(f"polarizer at {lp_angle_deg} deg blocks the state")
    return HeraldedState(h.probability * p, axis * amp / abs(amp))


def lp_conditional_probability(h: HeraldedState, lp_angle_deg: float) -> float:
    return post_select_lp(h, lp_angle_deg).probability / h.probability


def prepare(hwp1: float, phi_deg: float, qwp1: float = 0.0, hwp2: float = 0.0,
            lp: float | None = None) -> HeraldedState:
    """Run the full chain from the double-pair input."""
    s = apply_element(initial_state(), OpticalElement.waveplate("HWP", hwp1))
    h = finish_state(ppbs_and_herald(s, phi_deg), qwp1, hwp2)
    return h if lp is None else post_select_lp(h, lp)


# --- chain description files -------------------------------------------------

def run_chain(description: dict) -> HeraldedState:
    """Execute a chain description.

    Format::

        {"input": "double_pair" | "single_pair",
         "elements": [{"kind": "HWP", "angle": 22.5},
                      {"kind": "PPBS", "phi": -85.7},
                      {"kind": "QWP", "angle": 45},
                      {"kind": "HWP", "angle": -21.425},
                      {"kind": "LP", "angle": 0}]}

    Waveplates before the PPBS act on the combined input mode, those after it
    on the heralded mode ``b``. Exactly one PPBS is required; LP may only
    follow it.
    """
    source = description.get("input", "double_pair")
    if source == "double_pair":
        s = initial_state()
    elif source == "single_pair":
        s = spdc_single_pair()
    else:
        raise ValueError(f"unknown input {source!r}")
    h = None
    for el in description.get("elements", []):
        kind = str(el.get("kind", "")).upper()
        if kind in ("HWP", "QWP"):
            angle = float(el["angle"])
            if h is None:
                s = apply_element(s, OpticalElement.waveplate(kind, angle))
            else:
                u = ModeUnitary.hwp(angle) if kind == "HWP" else ModeUnitary.qwp(angle)
                h = HeraldedState(h.probability, lift_mode_unitary(u, h.N) @ h.state)
        elif kind == "PPBS":
            if h is not None:
                raise ValueError("chain contains more than one PPBS")
            h = ppbs_and_herald(s, float(el.get("phi", 0.0)))
        elif kind == "LP":
            if h is None:
                raise ValueError("LP must come after the PPBS")
            h = post_select_lp(h, float(el.get("angle", 0.0)))
        else:
            raise ValueError(f"unknown element kind {el.get('kind')!r}")
    if h is None:
        raise ValueError("chain has no PPBS, nothing is heralded")
    return h


def load_chain(path) -> dict:
    return json.loads(Path(path).read_text())


# --- phase calibration -------------------------------------------------------

def calibration_curve(phi_deg: float, thetas_deg) -> np.ndarray:
    """Coincidence probability per pulse-pair versus HWP2 angle.

    Single pair ``|1,1>`` -> HWP1 at 15 deg -> PPBS herald -> QWP1 at 45 deg
    -> HWP2 at theta -> projection on ``(|H> - |V>)/sqrt 2``.
    """
    s = apply_element(spdc_single_pair(), OpticalElement.waveplate("HWP", 15.0))
    h = ppbs_and_herald(s, phi_deg)
    anti = np.array([1.0, -1.0]) / sqrt(2)
    q = ModeUnitary.qwp(45.0).matrix @ h.state
    out = []
    for th in np.atleast_1d(thetas_deg):
        out.append(h.probability * abs(anti @ ModeUnitary.hwp(th).matrix @ q) ** 2)
    return np.array(out)


@dataclass(frozen=True)
class CalibrationResult:
    phi_estimate: float  # degrees, from the sinusoid fit
    theta_min: float  # degrees, fitted minimum
    theta_min_grid: float  # degrees, grid point with fewest counts
    thetas: np.ndarray
    counts: np.ndarray


def _wrap_deg(x):
    return (x + 180.0) % 360.0 - 180.0


def calibrate_phase(true_phi_deg: float, thetas_deg, shots: int | None = None,
                    seed=None) -> CalibrationResult:
    """Estimate the PPBS phase from a simulated HWP2 scan.

    With ``shots`` set, counts at each angle are Poisson distributed with
    mean ``shots`` times the fringe normalized to its maximum; otherwise the
    noiseless curve is used. The fringe ``A sin^2((phi - 4 theta)/2) + B`` is
    linear in ``(1, cos 4theta, sin 4theta)``, so the minimum is located by a
    linear least-squares fit and ``phi = 4 theta_min``.
    """
    thetas = np.asarray(thetas_deg, dtype=float)
    if thetas.size == 0:
        raise ValueError("empty angle grid")
    curve = calibration_curve(true_phi_deg, thetas)
    if shots is None:
        counts = curve / curve.max()
    else:
        rng = np.random.default_rng(seed)
        counts = rng.poisson(shots * curve / curve.max()).astype(float)
    theta_grid = float(thetas[np.argmin(counts)])
    x = np.deg2rad(4 * thetas)
    if thetas.size >= 3 and np.linalg.matrix_rank(
            np.column_stack([np.ones_like(x), np.cos(x), np.sin(x)])) == 3:
        A = np.column_stack([np.ones_like(x), np.cos(x), np.sin(x)])
        (_, c, s), *_ = np.linalg.lstsq(A, counts, rcond=None)
        # counts ~ B + A/2 - (A/2) cos(4 theta - phi)
        phi = float(np.rad2deg(np.arctan2(-s, -c)))
    else:
        warnings.warn("angle grid too small for a fringe fit; using the grid minimum")
        phi = 4 * theta_grid
    phi = float(_wrap_deg(phi))
    return CalibrationResult(phi, phi / 4, theta_grid, thetas, counts)


# --- named states ------------------------------------------------------------

def _kets():
    return fock_ket(3, 0), fock_ket(2, 1), fock_ket(1, 2), fock_ket(0, 3)


def noon3() -> np.ndarray:
    return (fock_ket(3, 0) - 1j * fock_ket(0, 3)) / sqrt(2)


def _named():
    k30, k21, k12, k03 = _kets()
    return {
        "identity_quarter": lambda: np.eye(4, dtype=complex) / 4,
        "oox_mix": lambda: mixture([1 / 3, 1 / 2, 1 / 6], [k30, k12, k03]),
        "oxo_mix": lambda: mixture([1 / 2, 1 / 2], [k30, k03]),
        "noon3": lambda: density(noon3()),
        "xox_mix": lambda: mixture([19 / 36, 15 / 36, 1 / 18], [k30, k12, k03]),
        "h3": lambda: density(k30),
        "v3": lambda: density(k03),
        "one_two": lambda: density(k12),
        "two_one": lambda: density(k21),
    }


NAMED_STATES = tuple(_named())
_ALIASES = {"ooxt_mix": "oox_mix"}

# one representative per class, from fully unpolarized to fully polarized
REPRESENTATIVES = {
    "OOO": "identity_quarter",
    "OOX": "oox_mix",
    "OXO": "oxo_mix",
    "OXX": "noon3",
    "XOX": "xox_mix",
    "XXX": "h3",
}


def named_state(name: str) -> np.ndarray:
    """Density matrix of a named three-photon state."""
    table = _named()
    key = _ALIASES.get(name, name)
    if key not in table:
        raise KeyError(f"unknown state {name!r}; choose from {', '.join(NAMED_STATES)}")
    return check_state(table[key]())


def fidelity_to(h: HeraldedState, target: str) -> float:
    return fidelity(h.state, named_state(target))


# --- multi-pair noise --------------------------------------------------------

@dataclass(frozen=True)
class PairNoiseReport:
    p1: float
    p2: float
    p3: float
    repetition_rate: float
    signal_rate: float  # double pairs per second
    noise_rate: float  # triple pairs per second
    snr: float
    noise_free: bool
    monotone: bool

    def scaled(self, pump_factor: float) -> "PairNoiseReport":
        """Rates at ``pump_factor`` times the pump power, using p_k ~ P^k."""
        return pair_noise_report(self.p1 * pump_factor, self.p2 * pump_factor**2,
                                 self.p3 * pump_factor**3, self.repetition_rate)


def pair_noise_report(p1: float, p2: float, p3: float,
                      repetition_rate: float = REPETITION_RATE_HZ) -> PairNoiseReport:
    """Signal (double pair) versus leading noise (triple pair) per pulse."""
    if min(p1, p2, p3) < 0 or p1 > 1:
        raise ValueError("pair probabilities must lie in [0, 1]")
    monotone = p1 >= p2 >= p3
    if not monotone:
        warnings.warn("pair probabilities are not decreasing with pair number")
    noise_free = p3 == 0
    snr = float("inf") if noise_free else p2 / p3
    return PairNoiseReport(p1, p2, p3, repetition_rate, p2 * repetition_rate,
                           p3 * repetition_rate, snr, noise_free, monotone)
