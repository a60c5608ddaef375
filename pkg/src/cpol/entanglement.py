"""Theory curves for the entanglement of a photon pair after one photon scatters.

Besides the closed forms, this module integrates the three-Compton
probability numerically so that the factorization
``nu = C(E_i, theta) A(E_ai, theta_a) A(E_bi, theta_b)`` can be checked
against quadrature rather than assumed.
"""
import functools
import logging
from dataclasses import dataclass
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
import numpy.typing as npt
from scipy.special import roots_legendre

from cpol import physics
from cpol.enums import ScatterDirection
from cpol.errors import QuadratureError
from cpol.physics import Energy
from cpol.physics import FloatOrArray


LOGGER = logging.getLogger(__name__)

QUADRATURE_NODES = 256
QUADRATURE_TOLERANCE = 1e-10
PROJECTION_POINTS = 64


@dataclass(frozen=True)
class ConcurrenceCurve:
    e_in: Energy
    samples: List[Tuple[float, float]]


@dataclass(frozen=True)
class ThreeComptonConfig:
    """Pre-scatter of photon a through theta, then one scatter per polarimeter.

    ``e_bi`` defaults to ``e_in``: both photons of the pair start with the
    same energy.
    """

    e_in: Energy
    theta: float
    theta_a: float
    theta_b: float
    e_bi: Optional[Energy] = None

    @property
    def e_b(self) -> Energy:
        return self.e_in if self.e_bi is None else self.e_bi

    @property
    def e_ai(self) -> Energy:
        return float(physics.scattered_energy(self.e_in, self.theta))

    @property
    def e_af(self) -> Energy:
        return float(physics.scattered_energy(self.e_ai, self.theta_a))

    @property
    def e_bf(self) -> Energy:
        return float(physics.scattered_energy(self.e_b, self.theta_b))

    @property
    def gamma(self) -> float:
        return float(physics.gamma_factor(self.e_in, self.e_ai))

    @property
    def gamma_a(self) -> float:
        return float(physics.gamma_factor(self.e_ai, self.e_af))

    @property
    def gamma_b(self) -> float:
        return float(physics.gamma_factor(self.e_b, self.e_bf))

    @property
    def a_term(self) -> float:
        """Angle-only part of the three-Compton probability."""
        return (
            (self.gamma_b - np.sin(self.theta_b) ** 2)
            * (self.gamma - np.sin(self.theta) ** 2)
            * (self.gamma_a - np.sin(self.theta_a) ** 2)
        )

    @property
    def b_term(self) -> float:
        return float(2.0 * np.sin(self.theta_b) ** 2 * np.sin(self.theta_a) ** 2)


def concurrence_qft(e_in: npt.ArrayLike, theta: npt.ArrayLike) -> FloatOrArray:
    gamma, sin2 = physics._gamma_sin2(e_in, theta)
    value = (1.0 + np.abs(np.cos(theta))) ** 2 / (2.0 * (gamma - sin2))
    return float(value) if np.ndim(value) == 0 else value


def limiting_concurrence(theta: npt.ArrayLike) -> FloatOrArray:
    """Low-energy limit of concurrence_qft, where gamma -> 2."""
    value = (1.0 + np.abs(np.cos(theta))) ** 2 / (2.0 * (2.0 - np.sin(theta) ** 2))
    return float(value) if np.ndim(value) == 0 else value


def concurrence_pure_model(e_in: Energy, theta: float) -> float:
    """Concurrence of the pure state obtained by applying the H/V transition
    probabilities to one photon of the pair."""
    probs = physics.transition_probabilities(e_in, theta)
    p_hh = 1.0 - probs.p_h_to_v
    p_vv = 1.0 - probs.p_v_to_h
    return float(abs(np.sqrt(p_hh * p_vv) - np.sqrt(probs.p_h_to_v * probs.p_v_to_h)))


def qft_concurrence_curve(e_in: Energy, thetas: npt.ArrayLike) -> ConcurrenceCurve:
    grid = np.asarray(thetas, dtype=np.float64)
    values = np.atleast_1d(concurrence_qft(e_in, grid))
    return ConcurrenceCurve(e_in=e_in, samples=[(float(t), float(c)) for t, c in zip(grid, values)])


def visibility_entangled(e_ai: Energy, theta_a: float, e_bi: Energy, theta_b: float) -> float:
    return float(physics.analyzing_power(e_ai, theta_a)) * float(physics.analyzing_power(e_bi, theta_b))


def visibility_classical(e_ai: Energy, theta_a: float, e_bi: Energy, theta_b: float) -> float:
    return 0.5 * visibility_entangled(e_ai, theta_a, e_bi, theta_b)


@functools.lru_cache(maxsize=16)
def _gauss_legendre(nodes: int, low: float, high: float) -> Tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    x, w = roots_legendre(nodes)
    half = 0.5 * (high - low)
    return low + half * (x + 1.0), half * w


def classical_integrals(
    theta_a: float,
    theta_b: float,
    e_ai: Energy,
    e_bi: Energy,
    nodes: int = QUADRATURE_NODES,
) -> Tuple[float, float]:
    """(P_perp, P_par) for classically correlated photons, by quadrature over
    the polarization azimuth."""
    gamma_a, sin2_a = physics._gamma_sin2(e_ai, theta_a)
    gamma_b, sin2_b = physics._gamma_sin2(e_bi, theta_b)
    phi, w = _gauss_legendre(nodes, 0.0, 2.0 * np.pi)
    p_a = gamma_a - 2.0 * sin2_a * np.cos(phi) ** 2
    p_perp = float(np.dot(w, p_a * (gamma_b - 2.0 * sin2_b * np.cos(phi) ** 2)) / np.pi)
    p_par = float(np.dot(w, p_a * (gamma_b - 2.0 * sin2_b * np.sin(phi) ** 2)) / np.pi)
    return p_perp, p_par


def _c_term(phi_b: npt.ArrayLike, phi_a: npt.ArrayLike, cos_theta: float) -> FloatOrArray:
    value = np.cos(2 * phi_b) * np.cos(2 * phi_a) - cos_theta * np.sin(2 * phi_b) * np.sin(2 * phi_a)
    return float(value) if np.ndim(value) == 0 else value


def _d_term(b_term: float, sin2_theta: float, phi_b: npt.ArrayLike, phi_a: npt.ArrayLike) -> FloatOrArray:
    value = 0.5 * b_term * sin2_theta * np.cos(2 * phi_b) * np.cos(2 * phi_a)
    return float(value) if np.ndim(value) == 0 else value


def three_compton_probability(cfg: ThreeComptonConfig, phi_a: npt.ArrayLike, phi_b: npt.ArrayLike) -> FloatOrArray:
    """Three-Compton probability of a maximally entangled pair, up to
    angle-independent factors.

    Terms linear in cos(2 phi_a) or cos(2 phi_b) alone are left out: they
    vanish under the azimuthal integration of correlation_R, so the result
    is only meaningful inside that integral, not as a differential cross
    section.
    """
    value = (
        cfg.a_term
        - cfg.b_term * np.asarray(_c_term(phi_b, phi_a, float(np.cos(cfg.theta))))
        + np.asarray(_d_term(cfg.b_term, float(np.sin(cfg.theta) ** 2), phi_b, phi_a))
    )
    return float(value) if np.ndim(value) == 0 else value


def default_direction(theta: float) -> ScatterDirection:
    return ScatterDirection.FORWARD if theta <= 0.5 * np.pi else ScatterDirection.BACKWARD


def _integrate_R(
    cfg: ThreeComptonConfig,
    phi: npt.NDArray[np.float64],
    direction: ScatterDirection,
    nodes: int,
) -> npt.NDArray[np.float64]:
    phi_b, w = _gauss_legendre(nodes, 0.0, np.pi)
    grid_phi = phi[:, None]
    if direction is ScatterDirection.FORWARD:
        phi_a = grid_phi - phi_b[None, :]
    else:
        phi_a = phi_b[None, :] - grid_phi
    p = np.asarray(three_compton_probability(cfg, phi_a, np.broadcast_to(phi_b, phi_a.shape)))
    return np.asarray(p @ w / np.pi)


def correlation_R(
    cfg: ThreeComptonConfig,
    phi: npt.ArrayLike,
    direction: Optional[ScatterDirection] = None,
    nodes: int = QUADRATURE_NODES,
) -> FloatOrArray:
    """Correlation between the final scattering planes at relative azimuth phi.

    Composite Gauss-Legendre over phi_b in [0, pi], checked against the rule
    with twice the nodes.
    """
    if direction is None:
        direction = default_direction(cfg.theta)
    grid = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    coarse = _integrate_R(cfg, grid, direction, nodes)
    fine = _integrate_R(cfg, grid, direction, 2 * nodes)
    achieved = float(np.max(np.abs(fine - coarse)))
    if achieved > QUADRATURE_TOLERANCE:
        raise QuadratureError("correlation_R did not converge", achieved)
    return float(fine[0]) if np.ndim(phi) == 0 else fine


def nu_from_R(cfg: ThreeComptonConfig, direction: Optional[ScatterDirection] = None) -> float:
    """Visibility from R(0) and R(pi/2), R being A - K cos(2 phi)."""
    r0, r90 = np.asarray(correlation_R(cfg, [0.0, 0.5 * np.pi], direction))
    return float((r90 - r0) / (r90 + r0))


def nu_by_projection(
    cfg: ThreeComptonConfig,
    direction: Optional[ScatterDirection] = None,
    points: int = PROJECTION_POINTS,
) -> float:
    """Visibility from the discrete cos(2 phi) projection of R."""
    phi = np.arange(points) * (2.0 * np.pi / points)
    r = np.asarray(correlation_R(cfg, phi, direction))
    offset = r.mean()
    amplitude = -2.0 * np.mean(r * np.cos(2.0 * phi))
    return float(amplitude / offset)


def nu_closed_form(cfg: ThreeComptonConfig) -> float:
    sin2 = np.sin(cfg.theta) ** 2
    bracket = 1.0 + abs(np.cos(cfg.theta)) - 0.5 * sin2
    return float(cfg.b_term / (2.0 * cfg.a_term) * bracket)


def factorized_visibility(cfg: ThreeComptonConfig) -> float:
    return (
        float(concurrence_qft(cfg.e_in, cfg.theta))
        * float(physics.analyzing_power(cfg.e_ai, cfg.theta_a))
        * float(physics.analyzing_power(cfg.e_b, cfg.theta_b))
    )


def factorization_residual(cfg: ThreeComptonConfig) -> float:
    return abs(nu_from_R(cfg) - factorized_visibility(cfg))


def random_configs(
    count: int,
    seed: int,
    energy_range: Tuple[float, float] = (0.05, 5.0),
    angle_margin: float = 1e-3,
) -> List[ThreeComptonConfig]:
    """Random three-Compton configurations, energies in units of m_e."""
    rng = np.random.default_rng(seed)
    lo, hi = angle_margin, np.pi - angle_margin
    return [
        ThreeComptonConfig(
            e_in=float(rng.uniform(*energy_range)) * physics.ELECTRON_MASS_KEV,
            theta=float(rng.uniform(lo, hi)),
            theta_a=float(rng.uniform(lo, hi)),
            theta_b=float(rng.uniform(lo, hi)),
        )
        for _ in range(count)
    ]


def chsh_s_curve(phi: npt.ArrayLike, nu: float) -> FloatOrArray:
    value = nu * (np.cos(6 * np.asarray(phi)) - 3 * np.cos(2 * np.asarray(phi)))
    return float(value) if np.ndim(value) == 0 else value
