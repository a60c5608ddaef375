"""Self-checks of the analytic results, run by ``compton-polarimetry verify``.

Every oracle recomputes a quantity along two independent routes, e.g.
quadrature against closed form, and reports the largest disagreement.
Constants such as the electron mass are read when an oracle runs.
"""
import logging
from dataclasses import dataclass
from typing import Callable
from typing import List
from typing import Tuple

import numpy as np
import numpy.typing as npt
from scipy import stats
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import minimize_scalar

from cpol import entanglement
from cpol import physics
from cpol.config import DEFAULT_SEED
from cpol.errors import QuadratureError
from cpol.montecarlo import RngStream
from cpol.montecarlo import sample_compton_batch
from cpol.physics import LinearPolarization
from cpol.physics import PhotonState


LOGGER = logging.getLogger(__name__)

FACTORIZATION_TOLERANCE = 1e-9
IDENTITY_TOLERANCE = 1e-12
INTEGRAL_TOLERANCE = 1e-10
SAMPLER_DRAWS = 50_000
SAMPLER_MIN_PVALUE = 1e-3


@dataclass(frozen=True)
class OracleOutcome:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class Oracle:
    name: str
    check: Callable[[int], Tuple[bool, str]]

    def run(self, seed: int) -> OracleOutcome:
        try:
            passed, detail = self.check(seed)
        except QuadratureError as e:
            passed, detail = False, str(e)
        LOGGER.info("%s %s: %s", "PASS" if passed else "FAIL", self.name, detail)
        return OracleOutcome(self.name, passed, detail)


def _energies(count: int = 20) -> npt.NDArray[np.float64]:
    return np.geomspace(0.05, 5.0, count) * physics.ELECTRON_MASS_KEV


def analyzing_power_ratio(seed: int) -> Tuple[bool, str]:
    """A from its closed form against the asymmetry of the Klein-Nishina weight."""
    theta = np.linspace(0.01, np.pi - 0.01, 37)
    pol = LinearPolarization(angle=0.0)
    worst = 0.0
    for e in _energies(5):
        parallel = np.asarray(physics.klein_nishina_weight(e, theta, 0.0, pol))
        perpendicular = np.asarray(physics.klein_nishina_weight(e, theta, 0.5 * np.pi, pol))
        ratio = (perpendicular - parallel) / (perpendicular + parallel)
        worst = max(worst, float(np.max(np.abs(ratio - np.asarray(physics.analyzing_power(e, theta))))))
    return worst < IDENTITY_TOLERANCE, f"max deviation {worst:.2e}"


def transition_limits(seed: int) -> Tuple[bool, str]:
    """Both transition probabilities vanish for forward scattering and in the
    low-energy limit, and agree at 180 degrees."""
    worst = 0.0
    for e in _energies():
        forward = physics.transition_probabilities(e, 0.0)
        back = physics.transition_probabilities(e, np.pi)
        worst = max(worst, abs(forward.p_v_to_h), abs(forward.p_h_to_v), abs(back.p_v_to_h - back.p_h_to_v))
    soft = physics.transition_probabilities(1e-6 * physics.ELECTRON_MASS_KEV, 0.5 * np.pi)
    worst = max(worst, abs(soft.p_v_to_h), abs(soft.p_h_to_v))
    return worst < 1e-8, f"max deviation {worst:.2e}"


def concurrence_endpoints(seed: int) -> Tuple[bool, str]:
    worst = 0.0
    for e in _energies():
        gamma_back = float(physics.gamma_factor(e, physics.backscatter_energy(e)))
        for c in (entanglement.concurrence_qft(e, 0.0), entanglement.concurrence_pure_model(e, 0.0)):
            worst = max(worst, abs(float(c) - 1.0))
        for c in (entanglement.concurrence_qft(e, np.pi), entanglement.concurrence_pure_model(e, np.pi)):
            worst = max(worst, abs(float(c) - 2.0 / gamma_back))
    at_rest = float(entanglement.concurrence_qft(physics.ELECTRON_MASS_KEV, np.pi))
    worst = max(worst, abs(at_rest - 0.6))
    return worst < IDENTITY_TOLERANCE, f"max deviation {worst:.2e}, C(m_e, 180 deg) = {at_rest:.12f}"


def analyzing_power_maximum(seed: int) -> Tuple[bool, str]:
    e = physics.ELECTRON_MASS_KEV
    res = minimize_scalar(
        lambda t: -float(physics.analyzing_power(e, t)),
        bounds=(np.deg2rad(60.0), np.deg2rad(100.0)),
        method="bounded",
        options={"xatol": 1e-10},
    )
    argmax = float(np.rad2deg(res.x))
    peak = -float(res.fun)
    at_90 = float(physics.analyzing_power(e, 0.5 * np.pi))
    passed = abs(argmax - 82.0) <= 0.5 and abs(peak - 0.69) <= 0.005 and abs(at_90 - 2.0 / 3.0) < IDENTITY_TOLERANCE
    return passed, f"max A = {peak:.4f} at {argmax:.3f} deg, A(90 deg) = {at_90:.12f}"


def factorization_grid(seed: int) -> Tuple[bool, str]:
    """Quadrature visibility against C A_a A_b and against the closed form."""
    worst_factor = 0.0
    worst_closed = 0.0
    for cfg in entanglement.random_configs(100, seed):
        nu = entanglement.nu_from_R(cfg)
        worst_factor = max(worst_factor, abs(nu - entanglement.factorized_visibility(cfg)))
        worst_closed = max(worst_closed, abs(nu - entanglement.nu_closed_form(cfg)))
    passed = worst_factor < FACTORIZATION_TOLERANCE and worst_closed < FACTORIZATION_TOLERANCE
    return passed, f"max residual {worst_factor:.2e} (factorized), {worst_closed:.2e} (closed form)"


def classical_closed_form(seed: int) -> Tuple[bool, str]:
    """Quadrature of the classical-pair integrals against their closed forms."""
    grid = np.linspace(0.1, np.pi - 0.1, 10)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for theta_a, theta_b in zip(grid, rng.permutation(grid)):
        e_a, e_b = (float(x) * physics.ELECTRON_MASS_KEV for x in rng.uniform(0.1, 3.0, 2))
        p_perp, p_par = entanglement.classical_integrals(theta_a, theta_b, e_a, e_b)
        gamma_a, sin2_a = physics._gamma_sin2(e_a, theta_a)
        gamma_b, sin2_b = physics._gamma_sin2(e_b, theta_b)
        diff = 2.0 * sin2_a * sin2_b
        total = 4.0 * (gamma_a - sin2_a) * (gamma_b - sin2_b)
        worst = max(worst, abs((p_perp - p_par) - diff), abs((p_perp + p_par) - total))
        nu = (p_perp - p_par) / (p_perp + p_par)
        worst = max(worst, abs(nu - entanglement.visibility_classical(e_a, theta_a, e_b, theta_b)))
    return worst < INTEGRAL_TOLERANCE, f"max deviation {worst:.2e}"


def sampler_theta_marginal(seed: int) -> Tuple[bool, str]:
    """Kolmogorov-Smirnov test of sampled angles against the Klein-Nishina density."""
    pvalues = []
    for k, scale in enumerate((0.1, 1.0, 3.0)):
        e = scale * physics.ELECTRON_MASS_KEV
        photon = PhotonState(energy=e, direction=np.array([0.0, 0.0, 1.0]), polarization=LinearPolarization(0.0))
        theta, _ = sample_compton_batch(photon, SAMPLER_DRAWS, RngStream(seed, k))
        grid = np.linspace(0.0, np.pi, 20001)
        cdf = cumulative_trapezoid(np.asarray(physics.klein_nishina_theta_pdf(e, grid)), grid, initial=0.0)
        cdf /= cdf[-1]
        pvalues.append(float(stats.kstest(theta, lambda t: np.interp(t, grid, cdf)).pvalue))
    worst = min(pvalues)
    return worst > SAMPLER_MIN_PVALUE, "KS p-values " + ", ".join(f"{p:.3f}" for p in pvalues)


ORACLES: List[Oracle] = [
    Oracle("analyzing-power-ratio", analyzing_power_ratio),
    Oracle("transition-limits", transition_limits),
    Oracle("concurrence-endpoints", concurrence_endpoints),
    Oracle("analyzing-power-maximum", analyzing_power_maximum),
    Oracle("factorization", factorization_grid),
    Oracle("classical-closed-form", classical_closed_form),
    Oracle("sampler-theta-marginal", sampler_theta_marginal),
]


def run_oracles(seed: int = DEFAULT_SEED) -> List[OracleOutcome]:
    return [oracle.run(seed) for oracle in ORACLES]
