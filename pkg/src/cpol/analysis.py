"""Azimuthal correlation histograms, visibility fits and concurrence extraction.

Histogram rates are counts divided by the number of counter pairs that
produce each folded angle. Fitted amplitudes are divided by the modulation
factor of the finite counter acceptance, so ``nu`` is the visibility of the
underlying ``1 - nu cos(2 phi)`` correlation.
"""
import logging
import warnings
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any
from typing import Dict
from typing import Iterable
from typing import List
from typing import Optional
from typing import Tuple
from typing import Union

import numpy as np
import numpy.typing as npt
import pandas as pd
from scipy.optimize import OptimizeWarning
from scipy.optimize import curve_fit

from cpol import physics
from cpol.config import GeometryConfig
from cpol.enums import Arm
from cpol.enums import EventTag
from cpol.enums import FitMethod
from cpol.enums import GeometryMode
from cpol.errors import EmptySelectionError
from cpol.errors import FitError
from cpol.errors import HistogramError
from cpol.errors import IllConditionedError
from cpol.events import BinningScheme
from cpol.events import backward_mask
from cpol.events import classify_frame
from cpol.events import folded_steps
from cpol.events import relabel
from cpol.physics import Energy
from cpol.utils import CSV_FLOAT_FORMAT


LOGGER = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

ILL_CONDITIONED_LIMIT = 1e-6
MIN_DIRECT_BINS = 3
SINGULAR_CUTOFF = 1e-10


@dataclass(frozen=True)
class ClassFilter:
    """Selects one event class; ``bin`` only applies to PreScattered."""

    tag: EventTag
    bin: Optional[int] = None

    @property
    def label(self) -> str:
        return self.tag.value if self.bin is None else f"{self.tag.value}_{self.bin}"

    def mask(self, classified: pd.DataFrame) -> npt.NDArray[np.bool_]:
        selected = (classified["tag"] == self.tag.value).to_numpy()
        if self.bin is not None:
            selected &= (classified["theta_bin"] == self.bin).to_numpy()
        return np.asarray(selected & ~classified["lost"].to_numpy(dtype=bool))


@dataclass
class AngleHistogram:
    bin_centers: FloatArray
    counts: FloatArray
    exposure: Optional[FloatArray] = None
    modulation: float = 1.0
    label: str = ""

    def __post_init__(self) -> None:
        self.bin_centers = np.asarray(self.bin_centers, dtype=np.float64)
        self.counts = np.asarray(self.counts, dtype=np.float64)
        if self.exposure is None:
            self.exposure = np.ones_like(self.counts)
        self.exposure = np.asarray(self.exposure, dtype=np.float64)
        if not self.bin_centers.shape == self.counts.shape == self.exposure.shape:
            raise HistogramError("bin_centers, counts and exposure differ in shape")
        if np.any(self.counts < 0) or not np.all(np.isfinite(self.counts)):
            raise HistogramError("counts must be finite and non-negative")

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def rates(self) -> FloatArray:
        assert self.exposure is not None
        return np.asarray(self.counts / self.exposure)

    @property
    def rate_variance(self) -> FloatArray:
        assert self.exposure is not None
        return np.asarray(np.maximum(self.counts, 1.0) / self.exposure**2)

    def index_of(self, angle: float) -> Optional[int]:
        hits = np.flatnonzero(np.isclose(self.bin_centers, angle, atol=1e-9))
        return int(hits[0]) if hits.size else None


@dataclass(frozen=True)
class FitResult:
    """Visibility fit.

    ``sigma_nu`` treats the points as independent; ``sigma_nu_cov`` also
    carries the covariance between points that share counts, and equals
    ``sigma_nu`` for the direct fit. ``chi2_ndf`` is computed with the same
    covariance as ``sigma_nu_cov``.
    """

    nu: float
    sigma_nu: float
    p0: float
    chi2_ndf: float
    method: FitMethod
    sigma_nu_cov: float
    ndf: int


@dataclass(frozen=True)
class SCurve:
    phi: FloatArray
    s: FloatArray
    sigma: FloatArray
    covariance: FloatArray
    p0: float
    modulation: float = 1.0


@dataclass(frozen=True)
class ConcurrencePoint:
    theta_bin: Tuple[float, float]
    c: float
    sigma_c: float
    mean_a_a: float
    mean_a_b: float
    nu: FitResult
    theta_mean: float = float("nan")
    label: str = ""
    events: int = 0
    low_statistics: bool = False


@dataclass(frozen=True)
class AnalysisResult:
    points: List[ConcurrencePoint]
    histograms: List[AngleHistogram] = field(default_factory=list)


def fold_angle(phi: float) -> float:
    """Angle folded onto [0, pi]."""
    folded = float(np.mod(phi, 2.0 * np.pi))
    return 2.0 * np.pi - folded if folded > np.pi else folded


def pair_exposure(cfg: GeometryConfig) -> FloatArray:
    """Ordered counter pairs per folded separation: the endpoints occur
    once per counter, every other separation twice."""
    half = cfg.counter_count // 2
    exposure = np.full(half + 1, 2.0 * cfg.counter_count)
    exposure[0] = cfg.counter_count
    if cfg.counter_count % 2 == 0:
        exposure[half] = cfg.counter_count
    return exposure


def modulation_factor(cfg: GeometryConfig) -> float:
    """Damping of cos(2 phi) by the azimuthal extent of the counters.

    In the ideal geometry every azimuth lands in the nearest of the
    ``counter_azimuth_step`` wide sectors; in the realistic one only
    azimuths within ``counter_half_width_deg`` of a counter count.
    """
    if cfg.mode is GeometryMode.IDEAL:
        w = np.deg2rad(cfg.counter_azimuth_step)
        return float((np.sin(w) / w) ** 2)
    h2 = 2.0 * np.deg2rad(cfg.counter_half_width_deg)
    return float((np.sin(h2) / h2) ** 2)


def separation_angles(cfg: GeometryConfig) -> FloatArray:
    """Folded counter separations 0, step, ..., 180 degrees in radians."""
    return np.deg2rad(np.arange(cfg.counter_count // 2 + 1) * cfg.counter_azimuth_step)


def histogram_events(stream: pd.DataFrame, class_filter: ClassFilter, cfg: GeometryConfig) -> AngleHistogram:
    """Folded counter-separation histogram of one class of a classified stream."""
    half = cfg.counter_count // 2
    selected = stream[class_filter.mask(stream)] if len(stream) else stream
    if len(selected):
        steps = folded_steps(
            selected["counter_a"].to_numpy(),
            selected["counter_b"].to_numpy(),
            backward_mask(selected),
            cfg.counter_count,
        )
        counts = np.bincount(steps, minlength=half + 1).astype(np.float64)
    else:
        counts = np.zeros(half + 1)
    return AngleHistogram(
        bin_centers=separation_angles(cfg),
        counts=counts,
        exposure=pair_exposure(cfg),
        modulation=modulation_factor(cfg),
        label=class_filter.label,
    )


def ratio_visibility(hist: AngleHistogram) -> Tuple[float, float]:
    """(N(90) - N(0)) / (N(90) + N(0)) on rates, with its Poisson error."""
    i0 = hist.index_of(0.0)
    i90 = hist.index_of(0.5 * np.pi)
    if i0 is None or i90 is None:
        raise HistogramError("ratio visibility needs the 0 and 90 degree bins")
    r0, r90 = hist.rates[i0], hist.rates[i90]
    v0, v90 = hist.rate_variance[i0], hist.rate_variance[i90]
    total = r0 + r90
    if total <= 0:
        raise FitError("no counts at 0 and 90 degrees")
    value = (r90 - r0) / total
    sigma = 2.0 * np.sqrt(r0**2 * v90 + r90**2 * v0) / total**2
    return float(value / hist.modulation), float(sigma / hist.modulation)


def _cos2_model(phi: FloatArray, offset: float, slope: float) -> FloatArray:
    return np.asarray(offset + slope * np.cos(2.0 * phi))


def _cos2_jacobian(phi: FloatArray, offset: float, slope: float) -> FloatArray:
    return np.column_stack([np.ones_like(phi), np.cos(2.0 * phi)])


def _curve_fit(*args: Any, **kwargs: Any) -> Tuple[FloatArray, FloatArray]:
    """curve_fit with absolute errors; failures and undefined covariances raise FitError."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", OptimizeWarning)
        try:
            popt, pcov = curve_fit(*args, absolute_sigma=True, **kwargs)
        except (RuntimeError, ValueError, OptimizeWarning) as e:
            raise FitError(f"least squares failed: {e}") from e
    if not np.all(np.isfinite(pcov)):
        raise FitError("parameter covariance is undefined")
    return np.asarray(popt), np.asarray(pcov)


def fit_direct(hist: AngleHistogram) -> FitResult:
    """Weighted least squares of rates to ``P0 (1 - nu' cos 2 phi)``.

    Raises:
        FitError: fewer than three populated bins or a failed fit
    """
    populated = hist.counts > 0
    if populated.sum() < MIN_DIRECT_BINS:
        raise FitError(f"direct fit needs {MIN_DIRECT_BINS} populated bins, got {int(populated.sum())}")
    y = hist.rates
    sigma_y = np.sqrt(hist.rate_variance)
    (a, b), cov = _curve_fit(
        _cos2_model, hist.bin_centers, y, p0=[float(np.mean(y)), 0.0], sigma=sigma_y, jac=_cos2_jacobian
    )
    if a <= 0:
        raise FitError(f"direct fit offset {a} is not positive")
    k = hist.modulation
    nu = -b / (a * k)
    grad = np.array([b / (a**2 * k), -1.0 / (a * k)])
    sigma = float(np.sqrt(grad @ cov @ grad))
    ndf = len(y) - 2
    chi2 = float(np.sum(((y - _cos2_model(hist.bin_centers, a, b)) / sigma_y) ** 2))
    return FitResult(
        nu=float(nu),
        sigma_nu=sigma,
        p0=float(a),
        chi2_ndf=chi2 / ndf if ndf > 0 else float("nan"),
        method=FitMethod.DIRECT,
        sigma_nu_cov=sigma,
        ndf=ndf,
    )


def build_s_function(hist: AngleHistogram) -> SCurve:
    """S(phi) = 3 N(phi) - N(3 phi) - 2 on rates normalized to their mean.

    The normalization is the mean rate over the ring of separations, the
    folded endpoints counted once and every other bin twice. cos 2 phi
    averages to zero over it, so rates ``P0 (1 - nu' cos 2 phi)`` give
    ``nu' (cos 6 phi - 3 cos 2 phi)`` exactly.

    Raises:
        HistogramError: a 3 phi partner bin is missing or unexposed
    """
    assert hist.exposure is not None
    n = len(hist.bin_centers)
    partner = np.empty(n, dtype=np.int64)
    for i, phi in enumerate(hist.bin_centers):
        j = hist.index_of(fold_angle(3.0 * phi))
        if j is None or hist.exposure[j] <= 0:
            raise HistogramError(f"no bin at 3 x {np.rad2deg(phi):.4g} deg")
        partner[i] = j

    endpoint = np.isclose(hist.bin_centers, 0.0, atol=1e-9) | np.isclose(hist.bin_centers, np.pi, atol=1e-9)
    multiplicity = np.where(endpoint, 1.0, 2.0)
    ring = float(multiplicity.sum())
    rates = hist.rates
    mean = float(multiplicity @ rates) / ring
    if mean <= 0:
        mean = 1.0
        s = np.zeros(n)
    else:
        s = (3.0 * rates - rates[partner]) / mean - 2.0
    # Conventional error bar: the count error of the phi bin alone.
    sigma = np.sqrt(hist.rate_variance) / mean

    # Jacobian of S in the counts, including the normalization.
    jac = np.zeros((n, n))
    for i in range(n):
        jac[i, i] += 3.0 / (hist.exposure[i] * mean)
        jac[i, partner[i]] -= 1.0 / (hist.exposure[partner[i]] * mean)
    jac -= np.outer((3.0 * rates - rates[partner]) / mean**2, multiplicity / (hist.exposure * ring))
    covariance = jac @ np.diag(np.maximum(hist.counts, 1.0)) @ jac.T
    return SCurve(
        phi=hist.bin_centers.copy(),
        s=np.asarray(s),
        sigma=np.asarray(sigma),
        covariance=covariance,
        p0=mean,
        modulation=hist.modulation,
    )


def _whitening(covariance: FloatArray) -> FloatArray:
    """Rows ``Lambda^-1/2 U^T`` over the non-null eigenvectors of a covariance.

    ``W^T W`` is the pseudo-inverse, so whitened residuals square to
    ``r^T C^+ r``. S is unchanged when every count is scaled, so its
    covariance always has one null direction.
    """
    values, vectors = np.linalg.eigh(covariance)
    keep = values > values.max(initial=0.0) * SINGULAR_CUTOFF
    return np.asarray((vectors[:, keep] / np.sqrt(values[keep])).T)


def fit_chsh(curve: SCurve) -> FitResult:
    """One-parameter fit of ``S = nu' (cos 6 phi - 3 cos 2 phi)``.

    ``nu`` and ``sigma_nu_cov`` come from generalized least squares on the
    full S covariance, and so does chi2 with one degree of freedom lost
    to the normalization. ``sigma_nu`` is the conventional error that
    treats the S points as independent.

    Raises:
        FitError: fewer than two samples or no sensitivity to nu
    """
    if len(curve.phi) < 2:
        raise FitError("CHSH fit needs at least two samples")
    f = np.cos(6.0 * curve.phi) - 3.0 * np.cos(2.0 * curve.phi)
    sensitivity = float(np.sum(f**2 / curve.sigma**2))
    if sensitivity <= 0:
        raise FitError("CHSH model has no sensitivity at the sampled angles")
    whiten = _whitening(curve.covariance)
    rank = whiten.shape[0]
    design = whiten @ f
    if rank < 2 or not np.any(design):
        raise FitError(f"S covariance of rank {rank} leaves nothing to fit")
    target = whiten @ curve.s
    (nu_raw,), pcov = _curve_fit(
        lambda _, nu: nu * design,
        np.arange(rank, dtype=np.float64),
        target,
        p0=[0.0],
        jac=lambda _, nu: design[:, None],
    )
    k = curve.modulation
    ndf = rank - 1
    chi2 = float(np.sum((target - nu_raw * design) ** 2))
    return FitResult(
        nu=float(nu_raw) / k,
        sigma_nu=float(np.sqrt(1.0 / sensitivity)) / k,
        p0=curve.p0,
        chi2_ndf=chi2 / ndf,
        method=FitMethod.CHSH,
        sigma_nu_cov=float(np.sqrt(pcov[0, 0])) / k,
        ndf=ndf,
    )


def fit_visibility(hist: AngleHistogram, method: FitMethod) -> FitResult:
    if method is FitMethod.DIRECT:
        return fit_direct(hist)
    return fit_chsh(build_s_function(hist))


def arm_energies(
    stream: pd.DataFrame, arm: Arm, source_energy: Energy = physics.ELECTRON_MASS_KEV
) -> Tuple[FloatArray, FloatArray]:
    """(E_in, E_out) at the main scatterer of one arm.

    The pre-scattered arm enters with the source energy minus its
    pre-scatter deposit.
    """
    suffix = "a" if arm is Arm.A else "b"
    scattered = (stream["scattered_arm"] == int(arm)).to_numpy()
    e_in = np.where(scattered, source_energy - stream[f"de_pre_{suffix}"].to_numpy(dtype=np.float64), source_energy)
    e_out = e_in - stream[f"e_main_{suffix}"].to_numpy(dtype=np.float64)
    return np.asarray(e_in), np.asarray(e_out)


def analyzing_power_sample(
    stream: pd.DataFrame,
    arm: Arm,
    class_filter: Optional[ClassFilter] = None,
    source_energy: Energy = physics.ELECTRON_MASS_KEV,
) -> FloatArray:
    selected = stream if class_filter is None else stream[class_filter.mask(stream)]
    if not len(selected):
        raise EmptySelectionError(f"no events for {class_filter.label if class_filter else 'stream'}")
    e_in, e_out = arm_energies(selected, arm, source_energy)
    return np.atleast_1d(np.asarray(physics.analyzing_power_from_energies(e_in, e_out), dtype=np.float64))


def mean_analyzing_power(
    stream: pd.DataFrame,
    arm: Arm,
    class_filter: Optional[ClassFilter] = None,
    source_energy: Energy = physics.ELECTRON_MASS_KEV,
) -> float:
    """Average of A(E_in, E_out) over the selected events of one arm.

    Raises:
        EmptySelectionError: nothing selected
    """
    return float(np.mean(analyzing_power_sample(stream, arm, class_filter, source_energy)))


def extract_concurrence(
    fit: FitResult,
    a_a: float,
    a_b: float,
    sigma_a_a: float = 0.0,
    sigma_a_b: float = 0.0,
    theta_bin: Tuple[float, float] = (0.0, 0.0),
    theta_mean: float = float("nan"),
    label: str = "",
    events: int = 0,
    low_statistics: bool = False,
) -> ConcurrencePoint:
    """C = nu / (A_a A_b) with errors added in quadrature.

    Raises:
        IllConditionedError: A_a A_b below 1e-6
    """
    product = a_a * a_b
    if product < ILL_CONDITIONED_LIMIT:
        raise IllConditionedError(f"mean analyzing powers {a_a:.3g} x {a_b:.3g} too small")
    c = fit.nu / product
    sigma_c = float(
        np.sqrt((fit.sigma_nu_cov / product) ** 2 + (c * sigma_a_a / a_a) ** 2 + (c * sigma_a_b / a_b) ** 2)
    )
    return ConcurrencePoint(
        theta_bin=theta_bin,
        c=float(c),
        sigma_c=sigma_c,
        mean_a_a=a_a,
        mean_a_b=a_b,
        nu=fit,
        theta_mean=theta_mean,
        label=label,
        events=events,
        low_statistics=low_statistics,
    )


def polarimeter_window_mask(
    stream: pd.DataFrame,
    window_deg: Tuple[float, float],
    source_energy: Energy = physics.ELECTRON_MASS_KEV,
) -> npt.NDArray[np.bool_]:
    """Events whose reconstructed main-scatter angles both lie within center +- halfwidth."""
    center, half = window_deg
    keep = np.ones(len(stream), dtype=bool)
    for arm in (Arm.A, Arm.B):
        e_in, e_out = arm_energies(stream, arm, source_energy)
        theta = np.rad2deg(np.asarray(physics.theta_from_energies(e_in, e_out)))
        keep &= np.abs(theta - center) <= half
    return keep


def class_filters(scheme: BinningScheme) -> List[ClassFilter]:
    filters = [ClassFilter(EventTag.DIRECT)]
    filters += [ClassFilter(EventTag.PRE_SCATTERED, k) for k in range(scheme.bin_count)]
    if scheme.backscatter_window is not None:
        filters.append(ClassFilter(EventTag.BACKSCATTER))
    return filters


def _theta_bin(flt: ClassFilter, scheme: BinningScheme) -> Tuple[float, float]:
    if flt.tag is EventTag.PRE_SCATTERED and flt.bin is not None:
        return scheme.bin_bounds(flt.bin)
    if flt.tag is EventTag.BACKSCATTER and scheme.backscatter_window is not None:
        return scheme.backscatter_window
    return 0.0, 0.0


def prepare_stream(
    stream: pd.DataFrame,
    scheme: BinningScheme,
    polarimeter_window_deg: Optional[Tuple[float, float]] = None,
) -> pd.DataFrame:
    """Classify, put the pre-scattered photon in arm a, apply the polarimeter cut."""
    prepared = relabel(classify_frame(stream, scheme))
    if polarimeter_window_deg is not None:
        prepared = prepared[polarimeter_window_mask(prepared, polarimeter_window_deg, scheme.source_energy_kev)]
    return prepared


def concurrence_curve(
    stream: pd.DataFrame,
    scheme: BinningScheme,
    method: FitMethod,
    cfg: GeometryConfig,
    min_events: int = 100,
    polarimeter_window_deg: Optional[Tuple[float, float]] = None,
) -> AnalysisResult:
    """One point for Direct events, one per forward bin and one for Backscatter.

    Classes without events are left out; classes below ``min_events`` are
    kept and flagged.
    """
    return concurrence_curve_chunks([stream], scheme, method, cfg, min_events, polarimeter_window_deg)


def concurrence_curve_chunks(
    chunks: Iterable[pd.DataFrame],
    scheme: BinningScheme,
    method: FitMethod,
    cfg: GeometryConfig,
    min_events: int = 100,
    polarimeter_window_deg: Optional[Tuple[float, float]] = None,
) -> AnalysisResult:
    """:func:`concurrence_curve` of a stream delivered in pieces."""
    accumulator = CurveAccumulator(scheme, cfg, polarimeter_window_deg)
    for chunk in chunks:
        accumulator.add(chunk)
    return accumulator.result(method, min_events)


@dataclass
class _Moments:
    n: int = 0
    total: float = 0.0
    total_sq: float = 0.0

    def add(self, sample: FloatArray) -> None:
        sample = sample[np.isfinite(sample)]
        self.n += len(sample)
        self.total += float(sample.sum())
        self.total_sq += float(np.sum(sample**2))

    @property
    def mean(self) -> float:
        return self.total / self.n if self.n else float("nan")

    @property
    def standard_error(self) -> float:
        """Sample standard deviation (n - 1) over sqrt(n)."""
        if self.n < 2:
            return 0.0
        variance = (self.total_sq - self.total**2 / self.n) / (self.n - 1)
        return float(np.sqrt(max(variance, 0.0) / self.n))


@dataclass
class ClassTally:
    """Running sums of one event class."""

    counts: FloatArray
    events: int = 0
    power_a: _Moments = field(default_factory=_Moments)
    power_b: _Moments = field(default_factory=_Moments)
    theta: _Moments = field(default_factory=_Moments)


class CurveAccumulator:
    """Histograms and analyzing-power sums per event class, filled chunk by chunk.

    Each chunk is classified on its own, so a stream split anywhere gives
    the same counts as the whole stream.
    """

    def __init__(
        self,
        scheme: BinningScheme,
        cfg: GeometryConfig,
        polarimeter_window_deg: Optional[Tuple[float, float]] = None,
    ) -> None:
        self.scheme = scheme
        self.cfg = cfg
        self.polarimeter_window_deg = polarimeter_window_deg
        self.filters = class_filters(scheme)
        bins = cfg.counter_count // 2 + 1
        self.tallies: Dict[str, ClassTally] = {flt.label: ClassTally(np.zeros(bins)) for flt in self.filters}
        self.chunks = 0

    def add(self, chunk: pd.DataFrame) -> None:
        self.chunks += 1
        if chunk.empty:
            return
        prepared = prepare_stream(chunk, self.scheme, self.polarimeter_window_deg)
        energy = self.scheme.source_energy_kev
        for flt in self.filters:
            selected = prepared[flt.mask(prepared)]
            if not len(selected):
                continue
            tally = self.tallies[flt.label]
            tally.counts += histogram_events(selected, flt, self.cfg).counts
            tally.events += len(selected)
            tally.power_a.add(analyzing_power_sample(selected, Arm.A, source_energy=energy))
            tally.power_b.add(analyzing_power_sample(selected, Arm.B, source_energy=energy))
            tally.theta.add(selected["reconstructed_theta"].to_numpy(dtype=np.float64))

    def histogram(self, flt: ClassFilter) -> AngleHistogram:
        return AngleHistogram(
            bin_centers=separation_angles(self.cfg),
            counts=self.tallies[flt.label].counts.copy(),
            exposure=pair_exposure(self.cfg),
            modulation=modulation_factor(self.cfg),
            label=flt.label,
        )

    def result(self, method: FitMethod, min_events: int = 100) -> AnalysisResult:
        LOGGER.debug("Fitting %d classes from %d chunks", len(self.filters), self.chunks)
        points: List[ConcurrencePoint] = []
        histograms: List[AngleHistogram] = []
        for flt in self.filters:
            tally = self.tallies[flt.label]
            if not tally.events:
                LOGGER.warning("No events in class %s, row omitted", flt.label)
                continue
            low = tally.events < min_events
            if low:
                LOGGER.warning("Class %s has %d events, below %d", flt.label, tally.events, min_events)
            hist = self.histogram(flt)
            histograms.append(hist)
            try:
                fit = fit_visibility(hist, method)
            except (FitError, HistogramError) as e:
                LOGGER.warning("Class %s not fitted: %s", flt.label, e)
                continue
            try:
                point = extract_concurrence(
                    fit,
                    tally.power_a.mean,
                    tally.power_b.mean,
                    tally.power_a.standard_error,
                    tally.power_b.standard_error,
                    theta_bin=_theta_bin(flt, self.scheme),
                    theta_mean=tally.theta.mean if tally.theta.n else 0.0,
                    label=flt.label,
                    events=tally.events,
                    low_statistics=low,
                )
            except IllConditionedError as e:
                LOGGER.warning("Class %s: %s", flt.label, e)
                continue
            points.append(point)
        return AnalysisResult(points=points, histograms=histograms)


def concurrence_frame(points: List[ConcurrencePoint]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "label": [p.label for p in points],
            "theta_low_deg": [np.rad2deg(p.theta_bin[0]) for p in points],
            "theta_high_deg": [np.rad2deg(p.theta_bin[1]) for p in points],
            "theta_mean_deg": [np.rad2deg(p.theta_mean) for p in points],
            "nu": [p.nu.nu for p in points],
            "sigma_nu": [p.nu.sigma_nu for p in points],
            "sigma_nu_cov": [p.nu.sigma_nu_cov for p in points],
            "chi2_ndf": [p.nu.chi2_ndf for p in points],
            "a_bar_a": [p.mean_a_a for p in points],
            "a_bar_b": [p.mean_a_b for p in points],
            "c": [p.c for p in points],
            "sigma_c": [p.sigma_c for p in points],
            "events": [p.events for p in points],
            "low_statistics": [p.low_statistics for p in points],
        }
    )


def write_concurrence_csv(points: List[ConcurrencePoint], path: Union[str, Path]) -> None:
    concurrence_frame(points).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def write_histogram_csv(hist: AngleHistogram, path: Union[str, Path]) -> None:
    frame = pd.DataFrame(
        {
            "phi_deg": np.rad2deg(hist.bin_centers),
            "count": hist.counts.astype(np.int64),
            "exposure": np.asarray(hist.exposure).astype(np.int64),
        }
    )
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
