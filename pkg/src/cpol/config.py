"""Run configuration (one JSON document) and process settings read from the
environment."""
import json
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple
from typing import Union

from pydantic import BaseModel
from pydantic import BaseSettings
from pydantic import Extra
from pydantic import ValidationError
from pydantic import conint
from pydantic import confloat
from pydantic import root_validator
from pydantic import validator

from cpol.enums import FitMethod
from cpol.enums import GeometryMode
from cpol.enums import OutputFormat
from cpol.enums import PrescatterArm
from cpol.errors import ConfigError
from cpol.physics import ELECTRON_MASS_KEV


DEFAULT_SEED = 20240611


class _Strict(BaseModel):
    class Config:
        extra = Extra.forbid
        use_enum_values = False


class SourceConfig(_Strict):
    """Back-to-back pair emitter along +z (photon a) and -z (photon b)."""

    energy_kev: confloat(gt=0) = ELECTRON_MASS_KEV  # type: ignore[valid-type]
    pairs: conint(ge=0) = 100_000  # type: ignore[valid-type]
    seed: conint(ge=0, lt=2**64) = DEFAULT_SEED  # type: ignore[valid-type]
    chunk_size: conint(gt=0) = 65_536  # type: ignore[valid-type]


class GeometryConfig(_Strict):
    """Polarimeter arms.

    Physical dimensions are not modelled; the realistic mode is a set of
    acceptance windows and resolutions. ``nai_resolution_at_511`` and
    ``main_resolution_at_511`` are relative sigmas at 511 keV scaling as
    1/sqrt(E); neither value comes from a measured detector.
    ``main_scatter_theta_accept`` is (center, halfwidth) in degrees, tuned by
    :func:`cpol.montecarlo.tune_main_acceptance` so that the unscattered arm
    has a mean analyzing power of 0.661.
    """

    mode: GeometryMode = GeometryMode.IDEAL
    prescatter_arm: PrescatterArm = PrescatterArm.RANDOM
    prescatter_interaction_prob: confloat(ge=0, le=1) = 0.3  # type: ignore[valid-type]
    counter_count: conint(gt=0) = 16  # type: ignore[valid-type]
    counter_azimuth_step: confloat(gt=0) = 22.5  # type: ignore[valid-type]
    counter_half_width_deg: confloat(gt=0) = 5.0  # type: ignore[valid-type]
    main_scatter_theta_accept: Tuple[float, float] = (90.0, 7.5)
    gagg_resolution_coeff: confloat(ge=0) = 0.05  # type: ignore[valid-type]
    gagg_noise_kev: confloat(ge=0) = 2.0  # type: ignore[valid-type]
    nai_resolution_at_511: confloat(ge=0) = 0.10  # type: ignore[valid-type]
    main_resolution_at_511: confloat(ge=0) = 0.01  # type: ignore[valid-type]
    prescatter_forward_accept_deg: confloat(ge=0, le=180) = 40.0  # type: ignore[valid-type]
    prescatter_backward_accept_deg: confloat(ge=0, le=180) = 160.0  # type: ignore[valid-type]
    forced_prescatter_theta_deg: Optional[confloat(ge=0, le=180)] = None  # type: ignore[valid-type]

    @validator("main_scatter_theta_accept")
    def window_not_empty(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        center, half = v
        if half <= 0 or center - half >= 180 or center + half <= 0:
            raise ValueError(f"acceptance window {v} is empty")
        return v

    @root_validator(skip_on_failure=True)
    def ring_closes(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        total = values["counter_count"] * values["counter_azimuth_step"]
        if abs(total - 360.0) > 1e-9:
            raise ValueError(f"counter_count x counter_azimuth_step = {total}, not 360")
        if 2 * values["counter_half_width_deg"] > values["counter_azimuth_step"]:
            raise ValueError("counters overlap: counter_half_width_deg exceeds half the step")
        return values


class BinningConfig(_Strict):
    noise_threshold_kev: confloat(gt=0) = 10.0  # type: ignore[valid-type]
    forward_edges_deg: Optional[List[float]] = None
    forward_max_deg: confloat(gt=0, le=180) = 35.0  # type: ignore[valid-type]
    forward_bin_count: conint(gt=0) = 5  # type: ignore[valid-type]
    backscatter_window_deg: Optional[Tuple[float, float]] = (160.0, 180.0)

    @validator("forward_edges_deg")
    def edges_ascending(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None:
            if len(v) < 2 or any(b <= a for a, b in zip(v, v[1:])):
                raise ValueError("forward edges must be at least two strictly ascending angles")
        return v

    @validator("backscatter_window_deg")
    def window_ordered(cls, v: Optional[Tuple[float, float]]) -> Optional[Tuple[float, float]]:
        if v is not None and not 0 <= v[0] < v[1] <= 180:
            raise ValueError(f"backscatter window {v} is empty")
        return v


class AnalysisConfig(_Strict):
    method: FitMethod = FitMethod.CHSH
    min_events: conint(ge=0) = 100  # type: ignore[valid-type]
    polarimeter_theta_window_deg: Optional[Tuple[float, float]] = None


class OutputConfig(_Strict):
    path: str = "events.jsonl"
    format: OutputFormat = OutputFormat.JSONL


class RunConfig(_Strict):
    source: SourceConfig = SourceConfig()
    geometry: GeometryConfig = GeometryConfig()
    binning: BinningConfig = BinningConfig()
    analysis: AnalysisConfig = AnalysisConfig()
    output: OutputConfig = OutputConfig()

    def effective(self) -> Dict[str, Any]:
        """Fully resolved configuration as plain JSON types."""
        return json.loads(self.json())

    def provenance(self) -> Dict[str, Any]:
        """Effective configuration minus the output path, which names the
        file rather than describing its content."""
        payload = self.effective()
        payload["output"].pop("path", None)
        return payload


def _field_path(error: Dict[str, Any]) -> str:
    return ".".join(str(part) for part in error["loc"] if part != "__root__") or "<root>"


def parse_run_config(payload: Union[Dict[str, Any], str, Path]) -> RunConfig:
    """Validate a run configuration from a dict or a JSON file path.

    Raises:
        ConfigError: on unknown keys or invalid values, with the field path
    """
    if isinstance(payload, (str, Path)):
        try:
            payload = json.loads(Path(payload).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError("<root>", f"invalid JSON: {e}") from e
    try:
        return RunConfig.parse_obj(payload)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(_field_path(first), first["msg"]) from e


class CpolSettings(BaseSettings):
    """Process-level settings, e.g. ``CPOL_LOGGING_ON=true``."""

    logging_on: bool = False
    log_level: str = "INFO"
    output_dir: str = "output"
    workers: int = 1
    verify_seed: int = DEFAULT_SEED

    class Config:
        env_prefix = "CPOL_"
        env_nested_delimiter = "__"
