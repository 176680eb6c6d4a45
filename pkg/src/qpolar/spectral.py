"""Joint spectra of type-I SPDC pairs, spectral filtering, Schmidt analysis
and Hong-Ou-Mandel dips.

Frequencies are angular, in rad/fs, and both photons share one frequency
axis that is uniform and symmetric about the degenerate frequency, so the
exchange ``f(w_s, w_i) -> f(w_i, w_s)`` is a plain transpose.

The phase-matching function is a sinc of a phase mismatch expanded to
first order in the sum detuning (group-velocity mismatch with the pump) and
second order in the difference detuning (group-velocity dispersion of the
down-converted light). Crystal dispersion beyond that is not modeled.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

C_NM_PER_FS = 299.792458
LN2 = np.log(2)


def omega_from_nm(wavelength_nm):
    return 2 * np.pi * C_NM_PER_FS / np.asarray(wavelength_nm, dtype=float)


def nm_from_omega(omega):
    return 2 * np.pi * C_NM_PER_FS / np.asarray(omega, dtype=float)


@dataclass(frozen=True)
class PumpParams:
    center_nm: float = 390.0
    duration_fs: float = 140.0  # intensity FWHM, transform limited; inf for CW

    @property
    def bandwidth(self) -> float:
        """Intensity FWHM in rad/fs."""
        return 4 * LN2 / self.duration_fs


@dataclass(frozen=True)
class PhaseMatching:
    length_mm: float = 0.6
    gvm_fs_per_mm: float = 190.0  # pump vs. down-converted inverse group velocity
    gvd_fs2_per_mm: float = 75.0  # down-converted group-velocity dispersion

    def __call__(self, sum_detuning, half_difference):
        phase = 0.5 * self.length_mm * (self.gvm_fs_per_mm * sum_detuning
                                        + self.gvd_fs2_per_mm * half_difference**2)
        return np.sinc(phase / np.pi)


@dataclass(frozen=True)
class FrequencyGrid:
    center_nm: float = 780.0
    span_nm: float = 40.0
    points: int = 256

    def omega(self) -> np.ndarray:
        """Symmetric about the center frequency, wide enough to cover
        ``center +- span/2`` in wavelength."""
        if self.points < 2 or self.span_nm <= 0:
            raise ValueError("degenerate frequency grid")
        w0 = omega_from_nm(self.center_nm)
        half = omega_from_nm(self.center_nm - self.span_nm / 2) - w0
        return np.linspace(w0 - half, w0 + half, self.points)


@dataclass(frozen=True)
class JointSpectralAmplitude:
    omega: np.ndarray  # shared signal/idler axis, rad/fs, increasing
    amplitude: np.ndarray  # [signal, idler], unit L2 norm
    metadata: dict = field(default_factory=dict)
    transmission: float = 1.0  # probability kept by filters applied so far

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        if om.ndim != 1 or om.size < 2 or np.any(np.diff(om) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        amp = np.asarray(self.amplitude, dtype=complex)
        if amp.shape != (om.size, om.size):
            raise ValueError("amplitude must be square on the shared grid")
        nrm = np.linalg.norm(amp)
        if nrm == 0:
            raise ValueError("joint spectral amplitude vanishes on the grid")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "amplitude", amp / nrm)

    @property
    def wavelength_nm(self) -> np.ndarray:
        return nm_from_omega(self.omega)

    def marginal(self, photon: str = "signal") -> np.ndarray:
        axis = 1 if photon == "signal" else 0
        return np.sum(np.abs(self.amplitude) ** 2, axis=axis)

    def marginal_fwhm_nm(self, photon: str = "signal") -> float:
        m = self.marginal(photon)
        above = np.nonzero(m >= m.max() / 2)[0]
        lam = self.wavelength_nm
        return float(abs(lam[above[-1]] - lam[above[0]]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["wavelength_s", "wavelength_i", "re", "im", "abs2"])
        lam = self.wavelength_nm
        for i, ls in enumerate(lam):
            for j, li in enumerate(lam):
                a = self.amplitude[i, j]
                w.writerow([f"{ls:.9g}", f"{li:.9g}", f"{a.real:.9g}", f"{a.imag:.9g}",
                            f"{abs(a) ** 2:.9g}"])
        return buf.getvalue()


def pump_envelope(pump: PumpParams, sum_detuning, step: float) -> np.ndarray:
    if np.isinf(pump.duration_fs):
        # continuous-wave limit: energy conservation to within one grid cell
        return (np.abs(sum_detuning) < step / 2).astype(float)
    return np.exp(-2 * LN2 * sum_detuning**2 / pump.bandwidth**2)


def build_jsa(pump: PumpParams = PumpParams(), pm: PhaseMatching = PhaseMatching(),
              grid: FrequencyGrid = FrequencyGrid()) -> JointSpectralAmplitude:
    """``f(w_s, w_i) = alpha(w_s + w_i) * Phi(w_s, w_i)`` on the grid."""
    om = grid.omega()
    wp = omega_from_nm(pump.center_nm)
    S, I = np.meshgrid(om, om, indexing="ij")
    sum_det = S + I - wp
    f = pump_envelope(pump, sum_det, om[1] - om[0]) * pm(sum_det, (S - I) / 2)
    meta = {"pump_center_nm": pump.center_nm, "pump_duration_fs": pump.duration_fs,
            "crystal_length_mm": pm.length_mm, "gvm_fs_per_mm": pm.gvm_fs_per_mm,
            "gvd_fs2_per_mm": pm.gvd_fs2_per_mm}
    return JointSpectralAmplitude(om, f, meta)


@dataclass(frozen=True)
class FilterSpec:
    center_nm: float = 780.0
    fwhm_nm: float = 3.0  # intensity transmission FWHM
    shape: str = "gaussian"

    def __post_init__(self):
        if not self.fwhm_nm > 0:
            raise ValueError("filter FWHM must be positive")
        if self.shape != "gaussian":
            raise ValueError(f"unsupported filter shape {self.shape!r}")

    def amplitude(self, omega) -> np.ndarray:
        if np.isinf(self.fwhm_nm):
            return np.ones_like(np.asarray(omega, dtype=float))
        w0 = omega_from_nm(self.center_nm)
        dw = 2 * np.pi * C_NM_PER_FS * self.fwhm_nm / self.center_nm**2
        return np.exp(-2 * LN2 * (np.asarray(omega) - w0) ** 2 / dw**2)


def apply_filters(jsa: JointSpectralAmplitude, filt_s: FilterSpec,
                  filt_i: FilterSpec | None = None) -> JointSpectralAmplitude:
    """Multiply by both filter amplitude profiles and renormalize; the kept
    probability multiplies ``transmission``."""
    filt_i = filt_s if filt_i is None else filt_i
    f = jsa.amplitude * filt_s.amplitude(jsa.omega)[:, None] * filt_i.amplitude(jsa.omega)[None, :]
    kept = float(np.sum(np.abs(f) ** 2))
    if kept < 1e-300:
        raise ValueError("filters transmit nothing on this grid")
    meta = dict(jsa.metadata, filter_s=vars(filt_s).copy(), filter_i=vars(filt_i).copy())
    return JointSpectralAmplitude(jsa.omega, f, meta, jsa.transmission * kept)


@dataclass(frozen=True)
class SchmidtDecomposition:
    eigenvalues: np.ndarray  # descending, sum to 1
    signal_modes: np.ndarray  # columns
    idler_modes: np.ndarray  # columns
    singular_values: np.ndarray

    @property
    def K(self) -> float:
        return float(1 / np.sum(self.eigenvalues**2))

    @property
    def purity(self) -> float:
        return float(np.sum(self.eigenvalues**2))

    def reconstruct(self) -> np.ndarray:
        return (self.signal_modes * self.singular_values) @ self.idler_modes.T


def schmidt(jsa: JointSpectralAmplitude) -> SchmidtDecomposition:
    u, s, vh = np.linalg.svd(jsa.amplitude)
    lam = s**2 / np.sum(s**2)
    return SchmidtDecomposition(lam, u, vh.T, s)


@dataclass(frozen=True)
class HomCurve:
    delays: np.ndarray  # fs
    rate: np.ndarray  # coincidence probability, 1/2 far from the dip
    visibility: float
    source: str
    fit: np.ndarray | None = None  # Gaussian dip fit evaluated at delays
    fit_params: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delay_fs", "rate", "fit"])
        fit = self.fit if self.fit is not None else np.full_like(self.rate, np.nan)
        for t, r, g in zip(self.delays, self.rate, fit):
            w.writerow([f"{t:.9g}", f"{r:.12g}", f"{g:.12g}"])
        return buf.getvalue()


def _gauss_dip(t, base, vis, t0, sigma):
    return base * (1 - vis * np.exp(-((t - t0) ** 2) / (2 * sigma**2)))


def hom_overlap(jsa: JointSpectralAmplitude, delays, source: str = "pair") -> np.ndarray:
    """Two-photon interference term at each delay (fs).

    ``source="pair"``: signal and idler of one pair meet at the beam
    splitter, overlap ``Re sum f(s,i) f*(i,s) exp(i (w_s - w_i) tau)``.
    ``source="independent"``: the signal of one pair meets the idler of
    another, overlap ``Re Tr(rho_s D rho_i D^+)`` with ``D = diag(exp(i w tau))``.
    """
    f, om = jsa.amplitude, jsa.omega
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    if source == "pair":
        g = f * f.T.conj()
        diff = om[:, None] - om[None, :]
        return np.array([np.real(np.sum(g * np.exp(1j * diff * t))) for t in delays])
    if source == "independent":
        rho_s = f @ f.conj().T
        rho_i = f.T @ f.conj()
        out = []
        for t in delays:
            ph = np.exp(1j * om * t)
            out.append(np.real(np.trace(rho_s @ (ph[:, None] * rho_i * ph.conj()[None, :]))))
        return np.array(out)
    raise ValueError(f"source must be 'pair' or 'independent', got {source!r}")


def hom_curve(jsa: JointSpectralAmplitude, delays, source: str = "pair",
              fit: bool = True) -> HomCurve:
    """Coincidence probability ``(1 - overlap(tau)) / 2`` behind a 50:50 splitter.

    Visibility is ``(max - min) / max`` over the supplied delays, which
    should bracket zero and reach the flat wings.
    """
    delays = np.asarray(delays, dtype=float)
    if delays.min() > 0 or delays.max() < 0:
        raise ValueError("delays must bracket zero")
    rate = np.clip(0.5 * (1 - hom_overlap(jsa, delays, source)), 0, None)
    vis = float((rate.max() - rate.min()) / rate.max())
    fit_curve, params = None, {}
    if fit and delays.size >= 4 and vis > 0:
        width = max(np.ptp(delays) / 10, 1e-3)
        try:
            with warnings.catch_warnings():
                # exact dips give a singular covariance, which is irrelevant here
                warnings.simplefilter("ignore", OptimizeWarning)
                popt, _ = curve_fit(_gauss_dip, delays, rate, p0=(rate.max(), vis, 0.0, width),
                                    maxfev=20000)
            fit_curve = _gauss_dip(delays, *popt)
            params = dict(zip(("baseline", "visibility", "center_fs", "sigma_fs"), map(float, popt)))
        except RuntimeError:
            pass
    return HomCurve(delays, rate, vis, source, fit_curve, params)


# calibrated so a 0.950 raw visibility corrects to about 0.996 at the default pair probabilities
NOISE_MULTIPLICITY = 2.0


def noise_floor(p1: float, p2: float, multiplicity: float = NOISE_MULTIPLICITY) -> float:
    """Flat accidental background relative to the interfering signal level.

    Double-pair emissions (probability ``p2``) trigger delay-independent
    coincidences; each carries ``multiplicity`` pairs' worth of
    non-interfering events against the single-pair signal ``p1``.
    """
    if p1 <= 0:
        raise ValueError("single-pair probability must be positive")
    return multiplicity * p2 / p1


def noise_subtracted_visibility(v_raw: float, pair_probs=None, floor: float | None = None,
                                multiplicity: float = NOISE_MULTIPLICITY) -> float:
    """Remove a flat accidental floor from a measured dip visibility.

    ``floor`` is the background relative to the signal baseline; by default
    it comes from :func:`noise_floor` with ``pair_probs = (p1, p2, ...)``.
    With measured maximum ``1 + b`` and minimum ``1 - V + b`` the corrected
    visibility is ``V = v_raw (1 + b)``.
    """
    if not 0 <= v_raw <= 1:
        raise ValueError("raw visibility must lie in [0, 1]")
    if floor is None:
        floor = 0.0 if pair_probs is None else noise_floor(pair_probs[0], pair_probs[1], multiplicity)
    if floor < 0:
        raise ValueError("noise floor must be nonnegative")
    v = v_raw * (1 + floor)
    if v > 1 + 1e-12:
        raise ValueError(f"noise floor {floor:.4g} exceeds the measured dip minimum")
    return float(min(v, 1.0))


def default_jsa(filtered: bool = True, grid: FrequencyGrid = FrequencyGrid()) -> JointSpectralAmplitude:
    """390 nm / 140 fs pump, 0.6 mm crystal, optionally 3 nm filters at 780 nm."""
    jsa = build_jsa(PumpParams(), PhaseMatching(), grid)
    return apply_filters(jsa, FilterSpec()) if filtered else jsa
