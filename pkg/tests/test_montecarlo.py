"""Test cases for the montecarlo module."""
from typing import Any
from typing import Dict
from typing import Optional
from typing import Tuple

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from cpol import analysis
from cpol import entanglement
from cpol import montecarlo
from cpol import physics
from cpol.config import BinningConfig
from cpol.config import GeometryConfig
from cpol.config import SourceConfig
from cpol.enums import Arm
from cpol.enums import EventTag
from cpol.enums import FitMethod
from cpol.enums import GeometryMode
from cpol.enums import PrescatterArm
from cpol.events import MEASURED_COLUMNS
from cpol.events import BinningScheme
from cpol.events import classify_frame
from cpol.montecarlo import RngStream
from cpol.montecarlo import Stage
from cpol.oracles import sampler_theta_marginal
from cpol.physics import LinearPolarization
from cpol.physics import PhotonState


M_E = physics.ELECTRON_MASS_KEV


def _simulate(
    pairs: int, seed: int = 11, workers: int = 1, chunk_size: int = 65_536, **geometry: Any
) -> pd.DataFrame:
    src = SourceConfig(pairs=pairs, seed=seed, chunk_size=chunk_size)
    cfg = GeometryConfig(**geometry)
    frames = [chunk.events for chunk in montecarlo.run_simulation(src, cfg, workers)]
    return pd.concat(frames, ignore_index=True)


def _streamed_curve(
    pairs: int,
    scheme: BinningScheme,
    method: FitMethod = FitMethod.CHSH,
    polarimeter_window_deg: Optional[Tuple[float, float]] = None,
    energy_kev: float = M_E,
    seed: int = 11,
    workers: int = 4,
    **geometry: Any,
) -> analysis.AnalysisResult:
    """Concurrence curve of a run fed chunk by chunk, without holding the whole stream."""
    src = SourceConfig(pairs=pairs, seed=seed, chunk_size=250_000, energy_kev=energy_kev)
    cfg = GeometryConfig(**geometry)
    chunks = (chunk.events for chunk in montecarlo.run_simulation(src, cfg, workers))
    return analysis.concurrence_curve_chunks(chunks, scheme, method, cfg, polarimeter_window_deg=polarimeter_window_deg)


def _photon(angle: float = 0.0, energy: float = M_E) -> PhotonState:
    return PhotonState(energy=energy, direction=np.array([0.0, 0.0, 1.0]), polarization=LinearPolarization(angle))


def test_rng_stream_is_reproducible() -> None:
    """It returns the same variates for the same (seed, stream, stage)."""
    first = RngStream(5, 2).generator(Stage.MAIN_A).random(4)
    second = RngStream(5, 2).generator(Stage.MAIN_A).random(4)
    np.testing.assert_array_equal(first, second)
    assert not np.array_equal(first, RngStream(5, 3).generator(Stage.MAIN_A).random(4))
    assert not np.array_equal(first, RngStream(5, 2).generator(Stage.MAIN_B).random(4))


def test_generate_pair_geometry() -> None:
    """It emits back-to-back photons with perpendicular polarizations."""
    rng = RngStream(1, 0)
    for event_id in range(20):
        pair = montecarlo.generate_pair(SourceConfig(), rng, event_id)
        assert pair.photon_a.energy == pair.photon_b.energy == M_E
        assert np.dot(pair.photon_a.direction, pair.photon_b.direction) == pytest.approx(-1.0)
        assert np.dot(pair.photon_a.polarization_vector, pair.photon_b.polarization_vector) == pytest.approx(
            0.0, abs=1e-12
        )
        assert 0.0 <= pair.truth.polarization_azimuth < np.pi


def test_polarization_azimuth_is_uniform() -> None:
    """It draws the pair polarization uniformly on [0, pi)."""
    _, _, psi = montecarlo._source_batch(M_E, 200_000, RngStream(3, 0))
    counts, _ = np.histogram(psi, bins=36, range=(0.0, np.pi))
    assert stats.chisquare(counts).pvalue > 0.01


def test_scatter_at_right_angle_halves_energy() -> None:
    """It leaves 255.5 keV after 90 degrees."""
    out = montecarlo.apply_scatter(_photon(), 0.5 * np.pi, 0.0)
    assert out.energy == pytest.approx(255.5, abs=1e-12)
    np.testing.assert_allclose(out.direction, [1.0, 0.0, 0.0], atol=1e-12)


def test_forward_scatter_is_identity() -> None:
    """It changes nothing at theta = 0."""
    photon = PhotonState(
        energy=M_E, direction=np.array([0.0, 0.0, 1.0]), polarization=LinearPolarization(0.7, degree=0.9)
    )
    out = montecarlo.apply_scatter(photon, 0.0, 1.3)
    assert out.energy == photon.energy
    np.testing.assert_allclose(out.direction, photon.direction, atol=1e-15)
    np.testing.assert_allclose(out.reference, photon.reference, atol=1e-15)
    assert out.polarization.angle == pytest.approx(0.7, abs=1e-12)
    assert out.polarization.degree == pytest.approx(0.9, abs=1e-12)


def test_scatter_keeps_basis_orthonormal() -> None:
    """It carries a right-handed transverse basis along."""
    out = montecarlo.apply_scatter(_photon(0.2), 1.1, 2.4)
    assert np.dot(out.direction, out.reference) == pytest.approx(0.0, abs=1e-12)
    assert np.linalg.norm(out.reference) == pytest.approx(1.0)


def test_sample_compton() -> None:
    """It returns an angle pair and the matching outgoing photon."""
    theta, phi, out = montecarlo.sample_compton(_photon(), RngStream(4, 0))
    assert 0.0 <= theta <= np.pi
    assert 0.0 <= phi < 2.0 * np.pi
    assert out.energy == pytest.approx(physics.scattered_energy(M_E, theta))


def test_sampler_prefers_perpendicular_azimuth() -> None:
    """It scatters least often in the polarization plane."""
    angle = np.pi / 12 + 2 * np.pi / 6
    _, phi = montecarlo.sample_compton_batch(_photon(angle), 200_000, RngStream(8, 0))
    counts, _ = np.histogram(np.mod(phi, np.pi), bins=6, range=(0.0, np.pi))
    assert int(np.argmin(counts)) == 2


def test_sampler_contrast_is_analyzing_power() -> None:
    """It modulates the azimuth near 90 degrees with contrast 2/3."""
    theta, phi = montecarlo.sample_compton_batch(_photon(0.4), 1_000_000, RngStream(9, 0))
    window = np.abs(np.rad2deg(theta) - 90.0) <= 1.0
    cos2 = np.cos(2.0 * (phi[window] - 0.4))
    contrast = -2.0 * cos2.mean()
    sigma = 2.0 * cos2.std(ddof=1) / np.sqrt(window.sum())
    assert contrast == pytest.approx(2.0 / 3.0, abs=4 * sigma)


def test_sampler_theta_marginal() -> None:
    """It follows the Klein-Nishina theta density at three energies."""
    passed, detail = sampler_theta_marginal(21)
    assert passed, detail


def test_forced_prescatter_angle_only_samples_azimuth() -> None:
    """It puts every pre-scatter at the forced angle."""
    frame = _simulate(
        2000,
        mode=GeometryMode.IDEAL,
        prescatter_arm=PrescatterArm.A,
        prescatter_interaction_prob=1.0,
        forced_prescatter_theta_deg=60.0,
    )
    np.testing.assert_allclose(frame["truth_prescatter_theta"], np.deg2rad(60.0))
    np.testing.assert_allclose(frame["de_pre_a"], physics.energy_deposit(M_E, np.deg2rad(60.0)))
    assert (frame["de_pre_b"] == 0).all()


def test_forward_forced_prescatter_matches_no_prescatter() -> None:
    """It yields the no-pre-scatter record when the forced angle is zero."""
    common: Dict[str, Any] = dict(mode=GeometryMode.IDEAL, prescatter_interaction_prob=1.0)
    forced = _simulate(3000, prescatter_arm=PrescatterArm.A, forced_prescatter_theta_deg=0.0, **common)
    plain = _simulate(3000, prescatter_arm=PrescatterArm.NONE, **common)
    for column in ("counter_a", "counter_b", "event_id", "lost"):
        np.testing.assert_array_equal(forced[column], plain[column])
    for column in ("de_pre_a", "de_pre_b", "e_main_a", "e_main_b", "e_counter_a", "e_counter_b"):
        np.testing.assert_allclose(forced[column], plain[column], atol=1e-9)


def test_energy_is_conserved_in_ideal_mode() -> None:
    """It accounts for every keV before smearing."""
    frame = _simulate(5000, prescatter_arm=PrescatterArm.RANDOM, prescatter_interaction_prob=0.5)
    total_a = frame["de_pre_a"] + frame["e_main_a"] + frame["e_counter_a"]
    total_b = frame["de_pre_b"] + frame["e_main_b"] + frame["e_counter_b"]
    np.testing.assert_allclose(total_a, M_E, atol=1e-9)
    np.testing.assert_allclose(total_b, M_E, atol=1e-9)


def test_ideal_mode_loses_nothing() -> None:
    """It assigns every photon to a counter."""
    frame = _simulate(3000)
    assert not frame["lost"].any()
    assert frame["counter_a"].between(0, 15).all()
    assert frame["counter_b"].between(0, 15).all()


def test_output_independent_of_workers() -> None:
    """It produces the same events with one or two worker processes."""
    one = _simulate(6000, chunk_size=1000, workers=1, prescatter_interaction_prob=0.5)
    two = _simulate(6000, chunk_size=1000, workers=2, prescatter_interaction_prob=0.5)
    pd.testing.assert_frame_equal(one, two)


def test_different_seeds_differ() -> None:
    """It draws different events for different seeds."""
    assert not _simulate(500, seed=1).equals(_simulate(500, seed=2))


def test_event_ids_follow_chunks() -> None:
    """It numbers events 0..pairs-1 across chunks."""
    frame = _simulate(2500, chunk_size=1000)
    np.testing.assert_array_equal(frame["event_id"], np.arange(2500))
    assert montecarlo.chunk_bounds(2500, 1000) == [(0, 1000), (1000, 2000), (2000, 2500)]


def test_run_simulation_requires_a_worker() -> None:
    """It refuses zero workers."""
    with pytest.raises(ValueError):
        list(montecarlo.run_simulation(SourceConfig(pairs=1), GeometryConfig(), workers=0))


def test_transport_checks_mode() -> None:
    """It refuses a geometry of the other mode."""
    pair = montecarlo.generate_pair(SourceConfig(), RngStream(0, 0))
    with pytest.raises(ValueError):
        montecarlo.transport_ideal(pair, GeometryConfig(mode=GeometryMode.REALISTIC), RngStream(0, 0))
    with pytest.raises(ValueError):
        montecarlo.transport_realistic(pair, GeometryConfig(mode=GeometryMode.IDEAL), RngStream(0, 0))


def test_transport_single_pair() -> None:
    """It returns one record with exact energies in ideal mode."""
    rng = RngStream(6, 0)
    pair = montecarlo.generate_pair(SourceConfig(), rng, event_id=42)
    rec = montecarlo.transport_ideal(pair, GeometryConfig(prescatter_arm=PrescatterArm.NONE), rng)
    assert rec.event_id == 42
    assert rec.de_pre_a == rec.de_pre_b == 0.0
    assert rec.e_main_a + rec.e_counter_a == pytest.approx(M_E)
    assert rec.truth is not None and rec.truth.theta_a is not None


def test_transport_realistic_single_pairs() -> None:
    """It loses every pair whose main scatters miss the acceptance window."""
    cfg = GeometryConfig(mode=GeometryMode.REALISTIC, prescatter_interaction_prob=0.0)
    center, half = cfg.main_scatter_theta_accept
    rng = RngStream(8, 0)
    for event_id in range(200):
        pair = montecarlo.generate_pair(SourceConfig(), rng, event_id=event_id)
        rec = montecarlo.transport_realistic(pair, cfg, rng)
        assert rec.event_id == event_id
        assert rec.truth is not None and rec.truth.which_arm is Arm.NONE
        assert rec.de_pre_a >= 0.0 and rec.de_pre_b >= 0.0
        inside = all(abs(np.rad2deg(t) - center) <= half for t in (rec.truth.theta_a, rec.truth.theta_b))
        if not inside:
            assert rec.lost
        if rec.lost:
            assert rec.counter_a == rec.counter_b == -1
        else:
            assert 0 <= rec.counter_a < cfg.counter_count and 0 <= rec.counter_b < cfg.counter_count


def test_realistic_without_prescatter_is_all_direct() -> None:
    """It classifies every surviving event as Direct when nothing pre-scatters."""
    frame = _simulate(50_000, mode=GeometryMode.REALISTIC, prescatter_interaction_prob=0.0)
    classified = classify_frame(frame, BinningScheme(10.0, (0.2, 0.6)))
    kept = classified[~classified["lost"]]
    assert len(kept) > 0
    assert (kept["tag"] == EventTag.DIRECT.value).all()
    assert (classified.loc[classified["lost"], "counter_a"] == -1).all()


def test_gagg_smearing_matches_resolution() -> None:
    """It smears the pre-scatter angle with the GAGG relative resolution."""
    frame = _simulate(
        20_000, mode=GeometryMode.REALISTIC, prescatter_arm=PrescatterArm.A, prescatter_interaction_prob=1.0
    )
    truth = frame["truth_prescatter_theta"].to_numpy()
    forward = (truth > np.deg2rad(15.0)) & (truth < np.deg2rad(35.0))
    true_theta = truth[forward]
    measured = np.asarray(physics.theta_from_energy_deposit(frame["de_pre_a"].to_numpy()[forward]))
    expected = np.asarray(physics.angle_resolution(physics.energy_deposit(M_E, true_theta)))
    pull = (measured - true_theta) / (true_theta * expected)
    assert np.std(pull) == pytest.approx(1.0, rel=0.2)


def test_expected_mean_analyzing_power() -> None:
    """It gives 0.661 for the default main-scatterer window."""
    value = montecarlo.expected_mean_analyzing_power(GeometryConfig().main_scatter_theta_accept[1])
    assert value == pytest.approx(0.661, abs=0.005)


def test_tune_main_acceptance() -> None:
    """It finds a half width near the shipped default."""
    half_width = montecarlo.tune_main_acceptance()
    assert half_width == pytest.approx(7.5, abs=1.0)
    assert montecarlo.expected_mean_analyzing_power(half_width) == pytest.approx(0.661, abs=1e-5)


@pytest.mark.slow
def test_realistic_mean_analyzing_power() -> None:
    """It reproduces 0.661 for the unscattered arm behind the default window."""
    frame = _simulate(500_000, mode=GeometryMode.REALISTIC, prescatter_interaction_prob=0.0)
    classified = classify_frame(frame, BinningScheme(10.0, (0.2, 0.6)))
    direct = classified[classified["tag"] == EventTag.DIRECT.value]
    assert len(direct) > 200
    assert analysis.mean_analyzing_power(direct, Arm.B) == pytest.approx(0.661, abs=0.01)
    peak = np.median(direct["e_counter_b"])
    assert peak == pytest.approx(255.5, rel=0.05)


@pytest.mark.slow
def test_classical_direct_pairs_give_half() -> None:
    """It gives 2C = 1 for unscattered classical pairs."""
    frame = _simulate(200_000, prescatter_arm=PrescatterArm.NONE)
    scheme = BinningScheme(10.0, (0.2, 0.6), backscatter_window=None)
    result = analysis.concurrence_curve(frame, scheme, FitMethod.DIRECT, GeometryConfig())
    (point,) = [p for p in result.points if p.label == "Direct"]
    assert point.nu.nu > 0
    assert 2 * point.c == pytest.approx(1.0, abs=4 * 2 * point.sigma_c)


@pytest.mark.slow
def test_classical_pairs_at_right_angle_analyzers() -> None:
    """It gives nu = 2/9 with both polarimeters within half a degree of 90 degrees."""
    scheme = BinningScheme(10.0, (0.2, 0.6), backscatter_window=None)
    result = _streamed_curve(
        10_000_000,
        scheme,
        FitMethod.DIRECT,
        polarimeter_window_deg=(90.0, 0.5),
        prescatter_arm=PrescatterArm.NONE,
    )
    (point,) = result.points
    assert point.events > 100
    expected = entanglement.visibility_classical(M_E, 0.5 * np.pi, M_E, 0.5 * np.pi)
    assert point.nu.nu == pytest.approx(expected, abs=3 * point.nu.sigma_nu)


@pytest.mark.slow
@pytest.mark.parametrize("energy_kev", [0.1 * M_E, M_E, 3.0 * M_E])
def test_classical_curve_is_half_the_entangled_one(energy_kev: float) -> None:
    """It gives 2C = C(E, theta) in ten pre-scatter bins from 5 to 175 degrees."""
    edges = np.deg2rad(np.linspace(5.0, 175.0, 11))
    scheme = BinningScheme(1e-3, tuple(edges), backscatter_window=None, source_energy_kev=energy_kev)
    result = _streamed_curve(
        1_000_000,
        scheme,
        energy_kev=energy_kev,
        prescatter_arm=PrescatterArm.A,
        prescatter_interaction_prob=1.0,
    )
    points = {p.label: p for p in result.points}
    pulls = []
    for k in range(10):
        point = points[f"PreScattered_{k}"]
        assert edges[k] < point.theta_mean <= edges[k + 1]
        expected = entanglement.concurrence_qft(energy_kev, point.theta_mean)
        pulls.append((2 * point.c - expected) / (2 * point.sigma_c))
    pulls_abs = np.abs(pulls)
    assert np.all(pulls_abs < 4.0), pulls
    assert np.sum(pulls_abs > 3.0) <= 1, pulls


@pytest.mark.slow
def test_realistic_default_binning_gives_six_points() -> None:
    """It yields Direct, five forward bins and Backscatter with the default layout."""
    scheme = BinningScheme.from_config(BinningConfig())
    result = _streamed_curve(
        4_000_000,
        scheme,
        mode=GeometryMode.REALISTIC,
        prescatter_interaction_prob=0.5,
    )
    labels = [p.label for p in result.points]
    assert labels == ["Direct"] + [f"PreScattered_{k}" for k in range(5)] + ["Backscatter"]
    assert all(np.isfinite(p.c) and p.sigma_c > 0 for p in result.points)
    direct = result.points[0]
    assert direct.mean_a_b == pytest.approx(0.661, abs=0.01)
    assert 2 * direct.c == pytest.approx(1.0, abs=3 * 2 * direct.sigma_c)


@pytest.mark.slow
@pytest.mark.parametrize(
    "theta_deg, edges_deg, window_deg, label",
    [
        (60.0, (50.0, 70.0), None, "PreScattered_0"),
        (170.0, (20.0, 35.0), (160.0, 180.0), "Backscatter"),
    ],
)
def test_prescattered_classical_pairs_follow_half_concurrence(
    theta_deg: float, edges_deg: Any, window_deg: Any, label: str
) -> None:
    """It gives 2C = C(m_e, theta) for pairs with one photon pre-scattered."""
    frame = _simulate(
        300_000,
        prescatter_arm=PrescatterArm.A,
        prescatter_interaction_prob=1.0,
        forced_prescatter_theta_deg=theta_deg,
    )
    window = None if window_deg is None else tuple(np.deg2rad(window_deg))
    scheme = BinningScheme(1.0, tuple(np.deg2rad(edges_deg)), backscatter_window=window)
    result = analysis.concurrence_curve(frame, scheme, FitMethod.CHSH, GeometryConfig())
    (point,) = [p for p in result.points if p.label == label]
    expected = entanglement.concurrence_qft(M_E, np.deg2rad(theta_deg))
    assert np.rad2deg(point.theta_mean) == pytest.approx(theta_deg, abs=1e-6)
    assert 2 * point.c == pytest.approx(expected, abs=4 * 2 * point.sigma_c)


def test_classification_reads_measured_columns_only() -> None:
    """It ignores the truth block."""
    frame = _simulate(2000, prescatter_interaction_prob=0.5)
    scheme = BinningScheme(10.0, (0.2, 0.6))
    scrambled = frame.copy()
    scrambled["truth_prescatter_theta"] = 0.0
    scrambled["truth_which_arm"] = 3
    pd.testing.assert_frame_equal(
        classify_frame(frame, scheme)[["tag", "theta_bin"]],
        classify_frame(scrambled, scheme)[["tag", "theta_bin"]],
    )
    assert set(MEASURED_COLUMNS) <= set(frame.columns)
