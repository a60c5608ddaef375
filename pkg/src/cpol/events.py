"""Event records and their classification by pre-scatter energy.

A record carries only what the detectors measure plus an optional truth
block. Classification reads the measured columns (:data:`MEASURED_COLUMNS`)
and nothing else.
"""
import logging
from dataclasses import dataclass
from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
import numpy.typing as npt
import pandas as pd
from scipy.integrate import cumulative_trapezoid

from cpol import physics
from cpol.config import BinningConfig
from cpol.config import GeometryConfig
from cpol.enums import Arm
from cpol.enums import EventTag
from cpol.errors import BinningError
from cpol.physics import Energy


LOGGER = logging.getLogger(__name__)

MEASURED_COLUMNS = [
    "event_id",
    "de_pre_a",
    "de_pre_b",
    "e_main_a",
    "e_main_b",
    "counter_a",
    "counter_b",
    "e_counter_a",
    "e_counter_b",
    "lost",
]
TRUTH_COLUMNS = [
    "truth_which_arm",
    "truth_prescatter_theta",
    "truth_prescatter_phi",
    "truth_theta_a",
    "truth_theta_b",
]
EVENT_COLUMNS = MEASURED_COLUMNS + TRUTH_COLUMNS
EVENT_DTYPES: Dict[str, str] = {
    "event_id": "int64",
    "de_pre_a": "float64",
    "de_pre_b": "float64",
    "e_main_a": "float64",
    "e_main_b": "float64",
    "counter_a": "int64",
    "counter_b": "int64",
    "e_counter_a": "float64",
    "e_counter_b": "float64",
    "lost": "bool",
    "truth_which_arm": "int64",
    "truth_prescatter_theta": "float64",
    "truth_prescatter_phi": "float64",
    "truth_theta_a": "float64",
    "truth_theta_b": "float64",
}
CLASS_COLUMNS = ["tag", "theta_bin", "reconstructed_theta", "scattered_arm"]

NO_BIN = -1
NO_COUNTER = -1

_SWAP_PAIRS = [
    ("de_pre_a", "de_pre_b"),
    ("e_main_a", "e_main_b"),
    ("counter_a", "counter_b"),
    ("e_counter_a", "e_counter_b"),
    ("truth_theta_a", "truth_theta_b"),
]


def empty_event_frame(n: int = 0) -> pd.DataFrame:
    """Event frame with the canonical columns and dtypes, zero-filled."""
    return pd.DataFrame({name: np.zeros(n, dtype=dtype) for name, dtype in EVENT_DTYPES.items()})


def coerce_event_frame(frame: pd.DataFrame) -> pd.DataFrame:
    """Reorder and cast columns; truth columns may be absent."""
    missing = [c for c in MEASURED_COLUMNS if c not in frame.columns]
    if missing:
        raise KeyError(f"event frame lacks measured columns {missing}")
    out = frame.copy()
    for name in TRUTH_COLUMNS:
        if name not in out.columns:
            out[name] = 0 if name == "truth_which_arm" else np.nan
    return out[EVENT_COLUMNS].astype(EVENT_DTYPES)


@dataclass(frozen=True)
class EventTruth:
    which_arm: Arm = Arm.NONE
    prescatter_theta: Optional[float] = None
    prescatter_phi: Optional[float] = None
    theta_a: Optional[float] = None
    theta_b: Optional[float] = None


@dataclass(frozen=True)
class EventRecord:
    """Measured quantities of one pair.

    Energies are in keV. ``de_pre_*`` is 0 without an interaction in the
    pre-scatterer. Counters are indices in the ring, or -1 when no counter
    fired, in which case the event is ``lost``.
    """

    event_id: int
    de_pre_a: Energy
    de_pre_b: Energy
    e_main_a: Energy
    e_main_b: Energy
    counter_a: int
    counter_b: int
    e_counter_a: Energy
    e_counter_b: Energy
    lost: bool = False
    truth: Optional[EventTruth] = None

    @classmethod
    def from_row(cls, row: "pd.Series[Any]") -> "EventRecord":
        truth = None
        if "truth_which_arm" in row.index:
            truth = EventTruth(
                which_arm=Arm(int(row["truth_which_arm"])),
                prescatter_theta=_optional(row["truth_prescatter_theta"]),
                prescatter_phi=_optional(row["truth_prescatter_phi"]),
                theta_a=_optional(row["truth_theta_a"]),
                theta_b=_optional(row["truth_theta_b"]),
            )
        return cls(
            event_id=int(row["event_id"]),
            de_pre_a=float(row["de_pre_a"]),
            de_pre_b=float(row["de_pre_b"]),
            e_main_a=float(row["e_main_a"]),
            e_main_b=float(row["e_main_b"]),
            counter_a=int(row["counter_a"]),
            counter_b=int(row["counter_b"]),
            e_counter_a=float(row["e_counter_a"]),
            e_counter_b=float(row["e_counter_b"]),
            lost=bool(row["lost"]),
            truth=truth,
        )

    def measured(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in MEASURED_COLUMNS}

    def as_row(self) -> Dict[str, Any]:
        row = self.measured()
        truth = self.truth or EventTruth()
        row.update(
            truth_which_arm=int(truth.which_arm),
            truth_prescatter_theta=_nan(truth.prescatter_theta),
            truth_prescatter_phi=_nan(truth.prescatter_phi),
            truth_theta_a=_nan(truth.theta_a),
            truth_theta_b=_nan(truth.theta_b),
        )
        return row


def _optional(value: Any) -> Optional[float]:
    return None if pd.isna(value) else float(value)


def _nan(value: Optional[float]) -> float:
    return np.nan if value is None else float(value)


def frame_from_records(records: Sequence[EventRecord]) -> pd.DataFrame:
    if not records:
        return empty_event_frame()
    return coerce_event_frame(pd.DataFrame([r.as_row() for r in records]))


@dataclass(frozen=True)
class EventClass:
    tag: EventTag
    bin: Optional[int] = None
    reconstructed_theta: Optional[float] = None


@dataclass(frozen=True)
class BinningScheme:
    """Pre-scatter angle classes, angles in radians.

    Forward bin ``k`` covers ``(forward_edges[k], forward_edges[k + 1]]``;
    the backscatter window is ``(low, high]``. Angles are reconstructed for
    photons of ``source_energy_kev``.
    """

    noise_threshold: Energy
    forward_edges: Tuple[float, ...]
    backscatter_window: Optional[Tuple[float, float]] = (np.deg2rad(160.0), np.pi)
    source_energy_kev: Energy = physics.ELECTRON_MASS_KEV

    def __post_init__(self) -> None:
        edges = np.asarray(self.forward_edges, dtype=np.float64)
        if edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise BinningError(f"forward edges {self.forward_edges} are not strictly ascending")
        if self.backscatter_window is not None and not self.backscatter_window[0] < self.backscatter_window[1]:
            raise BinningError(f"backscatter window {self.backscatter_window} is empty")

    @property
    def bin_count(self) -> int:
        return len(self.forward_edges) - 1

    def bin_bounds(self, k: int) -> Tuple[float, float]:
        return self.forward_edges[k], self.forward_edges[k + 1]

    @classmethod
    def from_config(
        cls,
        cfg: BinningConfig,
        source_energy_kev: Energy = physics.ELECTRON_MASS_KEV,
    ) -> "BinningScheme":
        window = None
        if cfg.backscatter_window_deg is not None:
            window = (float(np.deg2rad(cfg.backscatter_window_deg[0])), float(np.deg2rad(cfg.backscatter_window_deg[1])))
        if cfg.forward_edges_deg is not None:
            return cls(
                noise_threshold=cfg.noise_threshold_kev,
                forward_edges=tuple(float(np.deg2rad(e)) for e in cfg.forward_edges_deg),
                backscatter_window=window,
                source_energy_kev=source_energy_kev,
            )
        return default_binning(
            None,
            e_in=source_energy_kev,
            noise_threshold=cfg.noise_threshold_kev,
            forward_max_deg=cfg.forward_max_deg,
            bin_count=cfg.forward_bin_count,
            backscatter_window=window,
        )


def threshold_angle(noise_threshold: Energy, e_in: Energy = physics.ELECTRON_MASS_KEV) -> float:
    """Smallest pre-scatter angle whose deposit clears the noise threshold."""
    return float(physics.theta_from_energy_deposit(noise_threshold, e_in))


def default_binning(
    distribution: Optional[npt.ArrayLike] = None,
    e_in: Energy = physics.ELECTRON_MASS_KEV,
    noise_threshold: Energy = 10.0,
    forward_max_deg: float = 35.0,
    bin_count: int = 5,
    backscatter_window: Optional[Tuple[float, float]] = (float(np.deg2rad(160.0)), float(np.pi)),
) -> BinningScheme:
    """Forward bins holding equal shares of the pre-scatter angle distribution.

    Args:
        distribution: sample of angles in radians; None uses the analytic
            Klein-Nishina theta density at e_in
        e_in: photon energy before the pre-scatter, keV
        noise_threshold: deposit below which nothing is seen, keV
        forward_max_deg: upper edge of the last forward bin
        bin_count: number of forward bins
        backscatter_window: (low, high] in radians, or None

    Raises:
        BinningError: when the sample has no angles inside the forward range
    """
    low = threshold_angle(noise_threshold, e_in)
    high = float(np.deg2rad(forward_max_deg))
    if not low < high:
        raise BinningError(f"threshold angle {np.rad2deg(low):.3f} deg is above the forward range")
    probs = np.linspace(0.0, 1.0, bin_count + 1)
    if distribution is None:
        grid = np.linspace(low, high, 4001)
        cdf = cumulative_trapezoid(np.asarray(physics.klein_nishina_theta_pdf(e_in, grid)), grid, initial=0.0)
        edges = np.interp(probs, cdf / cdf[-1], grid)
    else:
        sample = np.asarray(distribution, dtype=np.float64).ravel()
        inside = sample[(sample > low) & (sample <= high)]
        if inside.size == 0:
            raise BinningError("no angles inside the forward range to take quantiles of")
        edges = np.quantile(inside, probs)
    edges[0], edges[-1] = low, high
    return BinningScheme(
        noise_threshold=noise_threshold,
        forward_edges=tuple(float(e) for e in edges),
        backscatter_window=backscatter_window,
        source_energy_kev=e_in,
    )


def _classify_arrays(measured: pd.DataFrame, scheme: BinningScheme) -> pd.DataFrame:
    de_a = measured["de_pre_a"].to_numpy(dtype=np.float64)
    de_b = measured["de_pre_b"].to_numpy(dtype=np.float64)
    lost = measured["lost"].to_numpy(dtype=bool)
    above_a = de_a >= scheme.noise_threshold
    above_b = de_b >= scheme.noise_threshold
    direct = ~above_a & ~above_b & ~lost
    single = above_a ^ above_b

    deposit = np.where(above_a, de_a, de_b)
    de_max = physics.max_energy_deposit(scheme.source_energy_kev)
    reachable = deposit <= de_max * (1.0 + 1e-12)
    theta = np.asarray(
        physics.theta_from_energy_deposit(np.clip(deposit, 0.0, de_max), scheme.source_energy_kev),
        dtype=np.float64,
    )
    candidate = single & reachable & ~lost

    edges = np.asarray(scheme.forward_edges)
    bins = np.searchsorted(edges, theta, side="left") - 1
    forward = candidate & (theta > edges[0]) & (theta <= edges[-1])
    backscatter = np.zeros(len(theta), dtype=bool)
    if scheme.backscatter_window is not None:
        lo, hi = scheme.backscatter_window
        backscatter = candidate & ~forward & (theta > lo) & (theta <= hi)

    tag = np.full(len(theta), EventTag.REJECTED.value, dtype=object)
    tag[direct] = EventTag.DIRECT.value
    tag[forward] = EventTag.PRE_SCATTERED.value
    tag[backscatter] = EventTag.BACKSCATTER.value
    scattered = forward | backscatter
    return pd.DataFrame(
        {
            "tag": tag,
            "theta_bin": np.where(forward, bins, NO_BIN).astype(np.int64),
            "reconstructed_theta": np.where(scattered, theta, np.nan),
            "scattered_arm": np.where(scattered, np.where(above_a, int(Arm.A), int(Arm.B)), int(Arm.NONE)).astype(
                np.int64
            ),
        },
        index=measured.index,
    )


def classify(rec: EventRecord, scheme: BinningScheme) -> EventClass:
    """Direct, PreScattered(bin), Backscatter or Rejected from the measured deposits."""
    row = _classify_arrays(pd.DataFrame([rec.measured()]), scheme).iloc[0]
    tag = EventTag(row["tag"])
    return EventClass(
        tag=tag,
        bin=int(row["theta_bin"]) if tag is EventTag.PRE_SCATTERED else None,
        reconstructed_theta=_optional(row["reconstructed_theta"]),
    )


def classify_frame(frame: pd.DataFrame, scheme: BinningScheme) -> pd.DataFrame:
    """Event frame with the class columns appended."""
    classes = _classify_arrays(frame[MEASURED_COLUMNS], scheme)
    out = pd.concat([frame.drop(columns=[c for c in CLASS_COLUMNS if c in frame.columns]), classes], axis=1)
    counts = out["tag"].value_counts()
    LOGGER.info("Classified %d events: %s", len(out), ", ".join(f"{k}={v}" for k, v in counts.items()))
    return out


def relabel(classified: pd.DataFrame) -> pd.DataFrame:
    """Swap arms so that the pre-scattered photon is always photon a."""
    out = classified.copy()
    swap = (out["scattered_arm"] == int(Arm.B)).to_numpy()
    if not swap.any():
        return out
    for left, right in _SWAP_PAIRS:
        if left in out.columns and right in out.columns:
            a_values = out.loc[swap, left].to_numpy()
            out.loc[swap, left] = out.loc[swap, right].to_numpy()
            out.loc[swap, right] = a_values
    out.loc[swap, "scattered_arm"] = int(Arm.A)
    return out


def is_backward(tag: EventTag, reconstructed_theta: Optional[float]) -> bool:
    if tag is EventTag.BACKSCATTER:
        return True
    return reconstructed_theta is not None and reconstructed_theta > 0.5 * np.pi


def folded_steps(
    counter_a: npt.ArrayLike,
    counter_b: npt.ArrayLike,
    backward: npt.ArrayLike,
    counter_count: int,
) -> npt.NDArray[np.int64]:
    """Counter separation in steps, folded onto [0, counter_count / 2].

    Forward events compare the two lab azimuths directly; backscattered
    events use their sum, which keeps the reversed photon's basis oriented.
    """
    ca = np.asarray(counter_a, dtype=np.int64)
    cb = np.asarray(counter_b, dtype=np.int64)
    k = np.mod(np.where(np.asarray(backward, dtype=bool), ca + cb, ca - cb), counter_count)
    return np.asarray(np.minimum(k, counter_count - k))


def azimuthal_angle(rec: EventRecord, cls: EventClass, cfg: GeometryConfig) -> float:
    """Angle between the triggered counters in radians, folded to [0, pi]."""
    if cls.tag is EventTag.REJECTED:
        raise ValueError("rejected events have no azimuthal angle")
    steps = folded_steps(
        rec.counter_a,
        rec.counter_b,
        is_backward(cls.tag, cls.reconstructed_theta),
        cfg.counter_count,
    )
    return float(np.deg2rad(int(steps) * cfg.counter_azimuth_step))


def folded_angles_deg(cfg: GeometryConfig) -> List[float]:
    """Distinct folded counter separations, e.g. 0, 22.5, ..., 180."""
    return [k * cfg.counter_azimuth_step for k in range(cfg.counter_count // 2 + 1)]


def backward_mask(classified: pd.DataFrame) -> npt.NDArray[np.bool_]:
    tag = classified["tag"].to_numpy()
    theta = classified["reconstructed_theta"].to_numpy(dtype=np.float64)
    return np.asarray((tag == EventTag.BACKSCATTER.value) | (np.nan_to_num(theta, nan=0.0) > 0.5 * np.pi))
