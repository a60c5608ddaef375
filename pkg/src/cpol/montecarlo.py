"""Event generator for classically correlated photon pairs.

Pairs are processed in fixed-size chunks. Chunk ``i`` draws all of its
variates from :class:`RngStream` ``(seed, i)``, so the generated events depend
on the run configuration only, never on the number of worker processes.

Within a chunk every stage owns a child stream (source, pre-scatter, main
scatter of each arm, detector response). Changing what one stage does leaves
the variates of the others untouched.
"""
import enum
import functools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from dataclasses import field
from typing import Dict
from typing import Iterator
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
import numpy.typing as npt
import pandas as pd
from numpy.polynomial.hermite_e import hermegauss
from scipy.optimize import brentq

from cpol import physics
from cpol.config import GeometryConfig
from cpol.config import SourceConfig
from cpol.entanglement import _gauss_legendre
from cpol.enums import Arm
from cpol.enums import GeometryMode
from cpol.enums import PrescatterArm
from cpol.events import EventRecord
from cpol.events import empty_event_frame
from cpol.physics import Energy
from cpol.physics import LinearPolarization
from cpol.physics import PhotonState


LOGGER = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

TARGET_MEAN_ANALYZING_POWER = 0.661
SAMPLER_ENVELOPE = 2.0


class Stage(enum.IntEnum):
    SOURCE = 0
    PRESCATTER = 1
    MAIN_A = 2
    MAIN_B = 3
    DETECTOR = 4


@dataclass
class RngStream:
    """Counter-based random stream for one chunk.

    ``(seed, stream_id)`` selects a PCG64 state through
    :class:`numpy.random.SeedSequence`; each :class:`Stage` gets its own
    generator, created on first use and advanced by every draw after that.
    """

    seed: int
    stream_id: int
    _generators: Dict[int, np.random.Generator] = field(default_factory=dict, init=False, repr=False)

    def generator(self, stage: Stage = Stage.SOURCE) -> np.random.Generator:
        if stage not in self._generators:
            seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, int(stage)))
            self._generators[stage] = np.random.Generator(np.random.PCG64(seq))
        return self._generators[stage]


@dataclass(frozen=True)
class PairTruth:
    polarization_azimuth: float
    prescatter_theta: Optional[float] = None
    prescatter_phi: Optional[float] = None


@dataclass(frozen=True)
class PairSample:
    photon_a: PhotonState
    photon_b: PhotonState
    truth: PairTruth
    event_id: int = 0


@dataclass
class SimulationStats:
    pairs: int = 0
    sampler_draws: int = 0
    sampler_accepted: int = 0
    lost: int = 0
    prescattered_a: int = 0
    prescattered_b: int = 0

    def merge(self, other: "SimulationStats") -> None:
        self.pairs += other.pairs
        self.sampler_draws += other.sampler_draws
        self.sampler_accepted += other.sampler_accepted
        self.lost += other.lost
        self.prescattered_a += other.prescattered_a
        self.prescattered_b += other.prescattered_b

    @property
    def acceptance(self) -> float:
        return self.sampler_accepted / self.sampler_draws if self.sampler_draws else 0.0

    @property
    def loss_fraction(self) -> float:
        return self.lost / self.pairs if self.pairs else 0.0


@dataclass(frozen=True)
class ChunkResult:
    chunk_id: int
    events: pd.DataFrame
    stats: SimulationStats


@dataclass
class PhotonBatch:
    """Photons of one arm for every pair of a chunk, one row per pair."""

    energy: FloatArray
    direction: FloatArray
    reference: FloatArray
    pol_angle: FloatArray
    pol_degree: FloatArray

    def __len__(self) -> int:
        return len(self.energy)

    def subset(self, mask: npt.NDArray[np.bool_]) -> "PhotonBatch":
        return PhotonBatch(
            energy=self.energy[mask],
            direction=self.direction[mask],
            reference=self.reference[mask],
            pol_angle=self.pol_angle[mask],
            pol_degree=self.pol_degree[mask],
        )

    def assign(self, mask: npt.NDArray[np.bool_], other: "PhotonBatch") -> None:
        self.energy[mask] = other.energy
        self.direction[mask] = other.direction
        self.reference[mask] = other.reference
        self.pol_angle[mask] = other.pol_angle
        self.pol_degree[mask] = other.pol_degree

    @classmethod
    def from_state(cls, photon: PhotonState) -> "PhotonBatch":
        return cls(
            energy=np.array([photon.energy]),
            direction=photon.direction[None, :].copy(),
            reference=photon.reference[None, :].copy(),
            pol_angle=np.array([photon.polarization.angle]),
            pol_degree=np.array([photon.polarization.degree]),
        )

    def state(self, i: int) -> PhotonState:
        return PhotonState(
            energy=float(self.energy[i]),
            direction=self.direction[i].copy(),
            polarization=LinearPolarization(angle=float(self.pol_angle[i]), degree=float(self.pol_degree[i])),
            reference=self.reference[i].copy(),
        )


def _source_batch(energy: Energy, n: int, rng: RngStream) -> Tuple[PhotonBatch, PhotonBatch, FloatArray]:
    """Photon a along +z with basis (x, y), photon b along -z with basis (x, -y).

    psi is the lab azimuth of b's polarization; a is polarized at psi + 90 deg.
    In b's own basis the lab azimuth psi reads as -psi.
    """
    psi = rng.generator(Stage.SOURCE).uniform(0.0, np.pi, n)
    x_axis = np.tile([1.0, 0.0, 0.0], (n, 1))
    a = PhotonBatch(
        energy=np.full(n, float(energy)),
        direction=np.tile([0.0, 0.0, 1.0], (n, 1)),
        reference=x_axis.copy(),
        pol_angle=np.mod(psi + 0.5 * np.pi, np.pi),
        pol_degree=np.ones(n),
    )
    b = PhotonBatch(
        energy=np.full(n, float(energy)),
        direction=np.tile([0.0, 0.0, -1.0], (n, 1)),
        reference=x_axis.copy(),
        pol_angle=np.mod(-psi, np.pi),
        pol_degree=np.ones(n),
    )
    return a, b, psi


def _sample_angles(
    batch: PhotonBatch,
    gen: np.random.Generator,
    forced_theta: Optional[float] = None,
) -> Tuple[FloatArray, FloatArray, int]:
    """Rejection sampling of (theta, phi) from the polarized Klein-Nishina weight.

    cos(theta) and phi are drawn uniformly, which supplies the sin(theta)
    Jacobian. ``(E_f/E_i)**2 (gamma - sin^2 (1 + P cos 2 phi))`` never exceeds
    2, which is the envelope. With a forced theta only phi is sampled, against
    the maximum over phi at that angle.

    Returns:
        theta, phi and the number of proposals drawn.
    """
    n = len(batch)
    theta = np.empty(n)
    phi = np.empty(n)
    pending = np.arange(n)
    draws = 0
    while pending.size:
        m = pending.size
        draws += m
        e = batch.energy[pending]
        if forced_theta is None:
            t = np.arccos(gen.uniform(-1.0, 1.0, m))
        else:
            t = np.full(m, float(forced_theta))
        ph = gen.uniform(0.0, 2.0 * np.pi, m)
        u = gen.random(m)
        gamma, sin2 = physics._gamma_sin2(e, t)
        p = batch.pol_degree[pending]
        weight = gamma - sin2 * (1.0 + p * np.cos(2.0 * (ph - batch.pol_angle[pending])))
        if forced_theta is None:
            ratio = np.asarray(physics.scattered_energy(e, t)) / e
            accept = u * SAMPLER_ENVELOPE < ratio**2 * weight
        else:
            accept = u * (gamma - sin2 * (1.0 - p)) <= weight
        done = pending[accept]
        theta[done] = t[accept]
        phi[done] = ph[accept]
        pending = pending[~accept]
    return theta, phi, draws


def _apply_scatter(batch: PhotonBatch, theta: FloatArray, phi: FloatArray) -> PhotonBatch:
    """Rotate each photon through theta in the plane at azimuth phi.

    The basis is carried along by the same rotation; polarization follows
    the Stokes transfer in the scattering-plane basis.
    """
    d = batch.direction
    e1 = batch.reference
    e2 = np.cross(d, e1)
    cp, sp = np.cos(phi)[:, None], np.sin(phi)[:, None]
    ct, st = np.cos(theta)[:, None], np.sin(theta)[:, None]
    e_par = cp * e1 + sp * e2
    e_perp = cp * e2 - sp * e1
    d_new = ct * d + st * e_par
    e_par_new = -st * d + ct * e_par
    e1_new = cp * e_par_new - sp * e_perp

    chi = batch.pol_angle - phi
    q = batch.pol_degree * np.cos(2.0 * chi)
    u = batch.pol_degree * np.sin(2.0 * chi)
    intensity, q_out, u_out = (np.asarray(v) for v in physics.stokes_transfer(batch.energy, theta, q, u))
    degree = np.clip(np.hypot(q_out, u_out) / intensity, 0.0, 1.0)
    angle = np.mod(0.5 * np.arctan2(u_out, q_out) + phi, np.pi)
    return PhotonBatch(
        energy=np.asarray(physics.scattered_energy(batch.energy, theta), dtype=np.float64),
        direction=d_new,
        reference=e1_new,
        pol_angle=angle,
        pol_degree=degree,
    )


def _counters(
    lab_azimuth: FloatArray,
    cfg: GeometryConfig,
    half_width_deg: Optional[float],
) -> Tuple[npt.NDArray[np.int64], npt.NDArray[np.bool_]]:
    """Counter index and hit flag for scattering azimuths in the lab.

    Without a half width every azimuth lands in its nearest sector.
    """
    step = np.deg2rad(cfg.counter_azimuth_step)
    nearest = np.rint(lab_azimuth / step)
    index = np.mod(nearest, cfg.counter_count).astype(np.int64)
    if half_width_deg is None:
        return index, np.ones(len(index), dtype=bool)
    offset = np.abs(lab_azimuth - nearest * step)
    return index, offset <= np.deg2rad(half_width_deg)


def _arm_azimuth(phi: FloatArray, pre_theta: FloatArray, pre_phi: FloatArray) -> FloatArray:
    """Main-scatter azimuth in the frame the counters of the arm read.

    A photon sent backward by its pre-scatter is read in the frame of a photon
    travelling the other way along the arm: the carried basis turned by twice
    the pre-scatter azimuth plus pi. At 180 degrees this is the reversed arm
    frame exactly.
    """
    backward = np.nan_to_num(pre_theta, nan=0.0) > 0.5 * np.pi
    turned = np.mod(phi - 2.0 * np.nan_to_num(pre_phi, nan=0.0) + np.pi, 2.0 * np.pi)
    return np.asarray(np.where(backward, turned, phi))


def _relative_sigma(resolution_at_511: float, energy: FloatArray) -> FloatArray:
    return np.asarray(resolution_at_511 * np.sqrt(511.0 / np.maximum(energy, 1e-9)))


class _ChunkTransport:
    """Per-chunk state shared by the ideal and realistic transport paths."""

    def __init__(self, cfg: GeometryConfig, rng: RngStream) -> None:
        self.cfg = cfg
        self.rng = rng
        self.stats = SimulationStats()

    def _forced_theta(self) -> Optional[float]:
        if self.cfg.forced_prescatter_theta_deg is None:
            return None
        return float(np.deg2rad(self.cfg.forced_prescatter_theta_deg))

    def _prescatter(
        self, batch: PhotonBatch, mask: npt.NDArray[np.bool_]
    ) -> Tuple[FloatArray, FloatArray, FloatArray]:
        """Scatter the masked photons in place; returns (deposit, theta, phi)."""
        n = len(batch)
        deposit = np.zeros(n)
        theta = np.full(n, np.nan)
        phi = np.full(n, np.nan)
        if not mask.any():
            return deposit, theta, phi
        sub = batch.subset(mask)
        t, ph, draws = _sample_angles(sub, self.rng.generator(Stage.PRESCATTER), self._forced_theta())
        self.stats.sampler_draws += draws
        self.stats.sampler_accepted += len(sub)
        out = _apply_scatter(sub, t, ph)
        deposit[mask] = sub.energy - out.energy
        theta[mask] = t
        phi[mask] = ph
        batch.assign(mask, out)
        return deposit, theta, phi

    def _main(self, batch: PhotonBatch, stage: Stage) -> Tuple[FloatArray, FloatArray, FloatArray]:
        theta, phi, draws = _sample_angles(batch, self.rng.generator(stage))
        self.stats.sampler_draws += draws
        self.stats.sampler_accepted += len(batch)
        e_out = np.asarray(physics.scattered_energy(batch.energy, theta), dtype=np.float64)
        return theta, phi, e_out

    def _interactions(self, n: int, realistic: bool) -> Tuple[npt.NDArray[np.bool_], npt.NDArray[np.bool_]]:
        gen = self.rng.generator(Stage.PRESCATTER)
        p = self.cfg.prescatter_interaction_prob
        u_a, u_b, coin = gen.random(n), gen.random(n), gen.random(n)
        arm = self.cfg.prescatter_arm
        if realistic:
            int_a = (u_a < p) & (arm in (PrescatterArm.A, PrescatterArm.RANDOM))
            int_b = (u_b < p) & (arm in (PrescatterArm.B, PrescatterArm.RANDOM))
            return int_a, int_b
        interacts = u_a < p
        if arm is PrescatterArm.NONE:
            interacts = np.zeros(n, dtype=bool)
        if arm is PrescatterArm.RANDOM:
            pick_a = coin < 0.5
        else:
            pick_a = np.full(n, arm is PrescatterArm.A)
        return interacts & pick_a, interacts & ~pick_a

    def run(self, a: PhotonBatch, b: PhotonBatch, first_id: int) -> pd.DataFrame:
        n = len(a)
        realistic = self.cfg.mode is GeometryMode.REALISTIC
        self.stats.pairs += n
        int_a, int_b = self._interactions(n, realistic)
        de_pre_a, pre_theta_a, pre_phi_a = self._prescatter(a, int_a)
        de_pre_b, pre_theta_b, pre_phi_b = self._prescatter(b, int_b)
        self.stats.prescattered_a += int(int_a.sum())
        self.stats.prescattered_b += int(int_b.sum())

        theta_a, phi_a, e_out_a = self._main(a, Stage.MAIN_A)
        theta_b, phi_b, e_out_b = self._main(b, Stage.MAIN_B)
        e_main_a = a.energy - e_out_a
        e_main_b = b.energy - e_out_b

        half_width = self.cfg.counter_half_width_deg if realistic else None
        counter_a, hit_a = _counters(_arm_azimuth(phi_a, pre_theta_a, pre_phi_a), self.cfg, half_width)
        counter_b, hit_b = _counters(-_arm_azimuth(phi_b, pre_theta_b, pre_phi_b), self.cfg, half_width)
        lost = ~(hit_a & hit_b)

        if realistic:
            lost |= ~self._main_accepted(theta_a) | ~self._main_accepted(theta_b)
            lost |= ~self._prescatter_accepted(pre_theta_a) | ~self._prescatter_accepted(pre_theta_b)
            de_pre_a = self._smear_gagg(a.energy + de_pre_a, de_pre_a, pre_theta_a)
            de_pre_b = self._smear_gagg(b.energy + de_pre_b, de_pre_b, pre_theta_b)
            e_main_a = self._smear(e_main_a, self.cfg.main_resolution_at_511)
            e_main_b = self._smear(e_main_b, self.cfg.main_resolution_at_511)
            e_out_a = self._smear(e_out_a, self.cfg.nai_resolution_at_511)
            e_out_b = self._smear(e_out_b, self.cfg.nai_resolution_at_511)
        self.stats.lost += int(lost.sum())

        which = np.where(int_a & int_b, Arm.BOTH, np.where(int_a, Arm.A, np.where(int_b, Arm.B, Arm.NONE)))
        frame = empty_event_frame(n)
        frame["event_id"] = np.arange(first_id, first_id + n, dtype=np.int64)
        frame["de_pre_a"] = de_pre_a
        frame["de_pre_b"] = de_pre_b
        frame["e_main_a"] = e_main_a
        frame["e_main_b"] = e_main_b
        frame["counter_a"] = np.where(lost, -1, counter_a)
        frame["counter_b"] = np.where(lost, -1, counter_b)
        frame["e_counter_a"] = e_out_a
        frame["e_counter_b"] = e_out_b
        frame["lost"] = lost
        frame["truth_which_arm"] = which.astype(np.int64)
        frame["truth_prescatter_theta"] = np.where(int_a, pre_theta_a, pre_theta_b)
        frame["truth_prescatter_phi"] = np.where(int_a, pre_phi_a, pre_phi_b)
        frame["truth_theta_a"] = theta_a
        frame["truth_theta_b"] = theta_b
        return frame

    def _main_accepted(self, theta: FloatArray) -> npt.NDArray[np.bool_]:
        center, half = self.cfg.main_scatter_theta_accept
        return np.asarray(np.abs(np.rad2deg(theta) - center) <= half)

    def _prescatter_accepted(self, theta: FloatArray) -> npt.NDArray[np.bool_]:
        deg = np.rad2deg(theta)
        ok = (deg <= self.cfg.prescatter_forward_accept_deg) | (deg >= self.cfg.prescatter_backward_accept_deg)
        return np.asarray(np.isnan(theta) | ok)

    def _smear(self, energy: FloatArray, resolution_at_511: float) -> FloatArray:
        gen = self.rng.generator(Stage.DETECTOR)
        z = gen.standard_normal(len(energy))
        return np.maximum(energy * (1.0 + _relative_sigma(resolution_at_511, energy) * z), 0.0)

    def _smear_gagg(self, e_in: FloatArray, deposit: FloatArray, theta: FloatArray) -> FloatArray:
        """GAGG deposit with the angular resolution applied in theta.

        Pass-through photons leave electronic noise only.
        """
        gen = self.rng.generator(Stage.DETECTOR)
        z = gen.standard_normal(len(deposit))
        noise = np.abs(gen.normal(0.0, self.cfg.gagg_noise_kev, len(deposit))) if self.cfg.gagg_noise_kev else 0.0
        interacted = ~np.isnan(theta)
        safe_theta = np.where(interacted, theta, 0.0)
        safe_deposit = np.where(interacted & (deposit > 0), deposit, physics.GAGG_REFERENCE_KEV)
        sigma = safe_theta * np.asarray(physics.angle_resolution(safe_deposit, self.cfg.gagg_resolution_coeff))
        smeared_theta = np.clip(safe_theta + sigma * z, 0.0, np.pi)
        smeared = np.asarray(physics.energy_deposit(e_in, smeared_theta), dtype=np.float64)
        return np.where(interacted, smeared, noise)


def chunk_bounds(pairs: int, chunk_size: int) -> List[Tuple[int, int]]:
    return [(start, min(start + chunk_size, pairs)) for start in range(0, pairs, chunk_size)]


def simulate_chunk(src: SourceConfig, cfg: GeometryConfig, chunk_id: int) -> ChunkResult:
    start, stop = chunk_bounds(src.pairs, src.chunk_size)[chunk_id]
    rng = RngStream(seed=src.seed, stream_id=chunk_id)
    a, b, _ = _source_batch(src.energy_kev, stop - start, rng)
    transport = _ChunkTransport(cfg, rng)
    events = transport.run(a, b, start)
    return ChunkResult(chunk_id=chunk_id, events=events, stats=transport.stats)


def run_simulation(src: SourceConfig, cfg: GeometryConfig, workers: int = 1) -> Iterator[ChunkResult]:
    """Yield chunk results in chunk order.

    Chunks are independent; with ``workers > 1`` they are computed in a
    process pool and merged by chunk index.
    """
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    ids = range(len(chunk_bounds(src.pairs, src.chunk_size)))
    job = functools.partial(simulate_chunk, src, cfg)
    total = SimulationStats()
    if workers == 1 or len(ids) <= 1:
        results: Iterator[ChunkResult] = map(job, ids)
        for result in results:
            total.merge(result.stats)
            yield result
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(job, ids):
                total.merge(result.stats)
                yield result
    LOGGER.info(
        "Simulated %d pairs: sampler acceptance %.4f, lost %d (%.4f), pre-scattered a=%d b=%d",
        total.pairs,
        total.acceptance,
        total.lost,
        total.loss_fraction,
        total.prescattered_a,
        total.prescattered_b,
    )


def generate_pair(src: SourceConfig, rng: RngStream, event_id: int = 0) -> PairSample:
    a, b, psi = _source_batch(src.energy_kev, 1, rng)
    return PairSample(
        photon_a=a.state(0),
        photon_b=b.state(0),
        truth=PairTruth(polarization_azimuth=float(psi[0])),
        event_id=event_id,
    )


def apply_scatter(photon: PhotonState, theta: float, phi: float) -> PhotonState:
    out = _apply_scatter(PhotonBatch.from_state(photon), np.array([theta]), np.array([phi]))
    return out.state(0)


def sample_compton(
    photon: PhotonState, rng: RngStream, stage: Stage = Stage.MAIN_A
) -> Tuple[float, float, PhotonState]:
    batch = PhotonBatch.from_state(photon)
    theta, phi, _ = _sample_angles(batch, rng.generator(stage))
    out = _apply_scatter(batch, theta, phi)
    return float(theta[0]), float(phi[0]), out.state(0)


def sample_compton_batch(
    photon: PhotonState, count: int, rng: RngStream, stage: Stage = Stage.MAIN_A
) -> Tuple[FloatArray, FloatArray]:
    """``count`` independent (theta, phi) draws for copies of one photon."""
    one = PhotonBatch.from_state(photon)
    batch = PhotonBatch(
        energy=np.repeat(one.energy, count),
        direction=np.repeat(one.direction, count, axis=0),
        reference=np.repeat(one.reference, count, axis=0),
        pol_angle=np.repeat(one.pol_angle, count),
        pol_degree=np.repeat(one.pol_degree, count),
    )
    theta, phi, draws = _sample_angles(batch, rng.generator(stage))
    LOGGER.debug("Sampler acceptance %.4f over %d proposals", count / draws if draws else 0.0, draws)
    return theta, phi


def _transport_single(pair: PairSample, cfg: GeometryConfig, rng: RngStream) -> EventRecord:
    transport = _ChunkTransport(cfg, rng)
    frame = transport.run(PhotonBatch.from_state(pair.photon_a), PhotonBatch.from_state(pair.photon_b), pair.event_id)
    return EventRecord.from_row(frame.iloc[0])


def transport_ideal(pair: PairSample, cfg: GeometryConfig, rng: RngStream) -> EventRecord:
    if cfg.mode is not GeometryMode.IDEAL:
        raise ValueError("transport_ideal needs geometry mode 'ideal'")
    return _transport_single(pair, cfg, rng)


def transport_realistic(pair: PairSample, cfg: GeometryConfig, rng: RngStream) -> EventRecord:
    if cfg.mode is not GeometryMode.REALISTIC:
        raise ValueError("transport_realistic needs geometry mode 'realistic'")
    return _transport_single(pair, cfg, rng)


def expected_mean_analyzing_power(
    half_width_deg: float,
    center_deg: float = 90.0,
    e_in: Energy = physics.ELECTRON_MASS_KEV,
    main_resolution_at_511: float = 0.01,
    nodes: int = 96,
    smearing_nodes: int = 24,
) -> float:
    """Mean analyzing power seen by an unscattered arm behind the main
    scatterer acceptance window.

    Scattering angles are weighted by the Klein-Nishina theta density and
    the analyzing power is computed from the smeared main-scatterer deposit,
    as the analysis does with measured energies.
    """
    low = np.deg2rad(max(center_deg - half_width_deg, 0.0))
    high = np.deg2rad(min(center_deg + half_width_deg, 180.0))
    theta, w = _gauss_legendre(nodes, float(low), float(high))
    density = np.asarray(physics.klein_nishina_theta_pdf(e_in, theta))
    deposit = np.asarray(physics.energy_deposit(e_in, theta))
    z, wz = hermegauss(smearing_nodes)
    wz = wz / np.sqrt(2.0 * np.pi)
    sigma = _relative_sigma(main_resolution_at_511, deposit)
    measured = deposit[:, None] * (1.0 + sigma[:, None] * z[None, :])
    power = np.asarray(physics.analyzing_power_from_energies(e_in, e_in - measured))
    smeared = power @ wz
    return float(np.dot(w, density * smeared) / np.dot(w, density))


def tune_main_acceptance(
    target: float = TARGET_MEAN_ANALYZING_POWER,
    center_deg: float = 90.0,
    e_in: Energy = physics.ELECTRON_MASS_KEV,
    main_resolution_at_511: float = 0.01,
    bracket: Tuple[float, float] = (0.5, 30.0),
) -> float:
    """Half width in degrees of the main-scatterer window giving ``target``."""

    def excess(half_width: float) -> float:
        return expected_mean_analyzing_power(half_width, center_deg, e_in, main_resolution_at_511) - target

    half_width = float(brentq(excess, *bracket, xtol=1e-6))
    LOGGER.info("Main scatterer half width %.4f deg gives mean analyzing power %.4f", half_width, target)
    return half_width
