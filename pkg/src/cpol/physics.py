"""Compton kinematics, polarized Klein-Nishina weights and polarization transfer.

Energies are in keV and angles in radians. All weights omit the constant
``r_e**2 / 2``: every consumer forms ratios or feeds a normalized sampler.

Functions accept scalars or numpy arrays and broadcast like numpy ufuncs.
Circular polarization is not tracked; the initial states this package
handles carry only linear polarization.
"""
from dataclasses import dataclass
from dataclasses import field
from typing import Optional
from typing import Tuple
from typing import Union

import numpy as np
import numpy.typing as npt

from cpol.errors import InvalidDepositError
from cpol.errors import KinematicsError


ELECTRON_MASS_KEV = 511.0
GAGG_REFERENCE_KEV = 30.0
ANGLE_TOLERANCE = 1e-12

Energy = float
FloatOrArray = Union[float, npt.NDArray[np.float64]]


def _as_float(value: npt.ArrayLike) -> FloatOrArray:
    arr = np.asarray(value, dtype=np.float64)
    return float(arr) if arr.ndim == 0 else arr


@dataclass(frozen=True)
class LinearPolarization:
    """Linear polarization about the propagation axis.

    ``angle`` is measured from the first transverse basis vector toward the
    second and is kept in [0, pi). ``degree`` is in [0, 1].
    """

    angle: float
    degree: float = 1.0

    def __post_init__(self) -> None:
        if not -ANGLE_TOLERANCE <= self.degree <= 1.0 + ANGLE_TOLERANCE:
            raise ValueError(f"polarization degree {self.degree} outside [0, 1]")
        object.__setattr__(self, "degree", float(min(max(self.degree, 0.0), 1.0)))
        angle = float(np.mod(self.angle, np.pi))
        if np.pi - angle < ANGLE_TOLERANCE:
            angle = 0.0
        object.__setattr__(self, "angle", angle)

    @property
    def stokes(self) -> Tuple[float, float]:
        """Normalized (Q, U) in the photon's own transverse basis."""
        return (
            self.degree * float(np.cos(2 * self.angle)),
            self.degree * float(np.sin(2 * self.angle)),
        )


def transverse_basis(direction: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Canonical first basis vector perpendicular to direction.

    The lab x axis projected onto the transverse plane, or y when the
    photon travels along x.
    """
    d = np.asarray(direction, dtype=np.float64)
    seed = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = seed - np.dot(seed, d) * d
    return e1 / np.linalg.norm(e1)


@dataclass(frozen=True)
class PhotonState:
    """A photon in flight.

    The transverse basis is ``(reference, direction x reference)``; it is
    right-handed about ``direction``.
    """

    energy: Energy
    direction: npt.NDArray[np.float64]
    polarization: LinearPolarization
    reference: npt.NDArray[np.float64] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        d = np.asarray(self.direction, dtype=np.float64)
        norm = np.linalg.norm(d)
        if norm == 0.0:
            raise ValueError("photon direction must be non-zero")
        d = d / norm
        object.__setattr__(self, "direction", d)
        ref = transverse_basis(d) if self.reference is None else np.asarray(self.reference, dtype=np.float64)
        ref = ref - np.dot(ref, d) * d
        object.__setattr__(self, "reference", ref / np.linalg.norm(ref))
        if self.energy <= 0:
            raise KinematicsError(f"photon energy must be positive, got {self.energy}")

    @property
    def second_axis(self) -> npt.NDArray[np.float64]:
        return np.cross(self.direction, self.reference)

    @property
    def polarization_vector(self) -> npt.NDArray[np.float64]:
        a = self.polarization.angle
        return np.cos(a) * self.reference + np.sin(a) * self.second_axis


@dataclass(frozen=True)
class ScatterKinematics:
    e_in: Energy
    e_out: Energy
    theta: float
    gamma: float

    @classmethod
    def from_angle(cls, e_in: Energy, theta: float) -> "ScatterKinematics":
        e_out = float(scattered_energy(e_in, theta))
        return cls(e_in=e_in, e_out=e_out, theta=theta, gamma=float(gamma_factor(e_in, e_out)))


@dataclass(frozen=True)
class TransitionProbabilities:
    p_v_to_h: float
    p_h_to_v: float


def scattered_energy(e_in: npt.ArrayLike, theta: npt.ArrayLike) -> FloatOrArray:
    """Photon energy after scattering through theta."""
    e = np.asarray(e_in, dtype=np.float64)
    return _as_float(e / (1.0 + (e / ELECTRON_MASS_KEV) * (1.0 - np.cos(theta))))


def backscatter_energy(e_in: npt.ArrayLike) -> FloatOrArray:
    """Lowest reachable scattered energy, at theta = pi."""
    e = np.asarray(e_in, dtype=np.float64)
    return _as_float(e / (1.0 + 2.0 * e / ELECTRON_MASS_KEV))


def max_energy_deposit(e_in: Optional[Energy] = None) -> float:
    e = ELECTRON_MASS_KEV if e_in is None else e_in
    return float(e - backscatter_energy(e))


def gamma_factor(e_in: npt.ArrayLike, e_out: npt.ArrayLike) -> FloatOrArray:
    """gamma = E_f/E_i + E_i/E_f for a kinematically reachable pair."""
    ei = np.asarray(e_in, dtype=np.float64)
    ef = np.asarray(e_out, dtype=np.float64)
    slack = 1e-12 * ei
    if np.any(ef > ei + slack) or np.any(ef < np.asarray(backscatter_energy(ei)) - slack):
        raise KinematicsError(f"energy pair ({e_in}, {e_out}) keV is not reachable by Compton scattering")
    r = ef / ei
    return _as_float(r + 1.0 / r)


def _gamma_sin2(e_in: npt.ArrayLike, theta: npt.ArrayLike) -> Tuple[FloatOrArray, FloatOrArray]:
    e = np.asarray(e_in, dtype=np.float64)
    cos_t = np.cos(theta)
    r = 1.0 / (1.0 + (e / ELECTRON_MASS_KEV) * (1.0 - cos_t))
    return r + 1.0 / r, 1.0 - cos_t**2


def klein_nishina_weight(
    e_in: npt.ArrayLike,
    theta: npt.ArrayLike,
    phi: npt.ArrayLike,
    pol: LinearPolarization,
) -> FloatOrArray:
    """Unnormalized polarized Klein-Nishina weight.

    ``phi`` is the azimuth of the scattering plane in the photon's transverse
    basis. At full polarization this is ``(E_f/E_i)**2 (gamma - 2 sin^2 cos^2)``
    with the cosine taken between scattering plane and polarization plane.
    """
    gamma, sin2 = _gamma_sin2(e_in, theta)
    ratio = np.asarray(scattered_energy(e_in, theta)) / np.asarray(e_in, dtype=np.float64)
    modulation = 1.0 + pol.degree * np.cos(2.0 * (np.asarray(phi) - pol.angle))
    return _as_float(ratio**2 * (gamma - sin2 * modulation))


def klein_nishina_theta_pdf(e_in: npt.ArrayLike, theta: npt.ArrayLike) -> FloatOrArray:
    """Azimuth-integrated density in theta, up to a constant, including sin(theta)."""
    gamma, sin2 = _gamma_sin2(e_in, theta)
    ratio = np.asarray(scattered_energy(e_in, theta)) / np.asarray(e_in, dtype=np.float64)
    return _as_float(ratio**2 * (gamma - sin2) * np.sin(theta))


def analyzing_power(e_in: npt.ArrayLike, theta: npt.ArrayLike) -> FloatOrArray:
    gamma, sin2 = _gamma_sin2(e_in, theta)
    return _as_float(sin2 / (gamma - sin2))


def analyzing_power_from_energies(e_in: npt.ArrayLike, e_out: npt.ArrayLike) -> FloatOrArray:
    """Analyzing power from a measured (E_i, E_f) pair.

    Measured energies outside the reachable range are clipped onto it.
    """
    ei = np.asarray(e_in, dtype=np.float64)
    ef = np.clip(np.asarray(e_out, dtype=np.float64), backscatter_energy(ei), ei)
    cos_t = np.clip(1.0 + ELECTRON_MASS_KEV / ei - ELECTRON_MASS_KEV / ef, -1.0, 1.0)
    sin2 = 1.0 - cos_t**2
    gamma = ef / ei + ei / ef
    return _as_float(sin2 / (gamma - sin2))


def transition_probabilities(e_in: Energy, theta: float) -> TransitionProbabilities:
    gamma, sin2 = _gamma_sin2(e_in, theta)
    return TransitionProbabilities(
        p_v_to_h=float((gamma - 2.0) / (2.0 * gamma)),
        p_h_to_v=float((gamma - 2.0) / (2.0 * (gamma - sin2))),
    )


def stokes_transfer(
    e_in: npt.ArrayLike,
    theta: npt.ArrayLike,
    q: npt.ArrayLike,
    u: npt.ArrayLike,
) -> Tuple[FloatOrArray, FloatOrArray, FloatOrArray]:
    """Unnormalized (I, Q, U) of the scattered photon.

    Input and output Stokes parameters refer to the scattering-plane basis:
    first axis in the plane, second axis along its normal, ``Q = I_par - I_perp``.
    The output basis is the input one rotated about the plane normal by theta.
    Overall factor ``(E_f/E_i)**2`` is omitted.
    """
    gamma, sin2 = _gamma_sin2(e_in, theta)
    cos_t = np.cos(theta)
    q_in = np.asarray(q, dtype=np.float64)
    u_in = np.asarray(u, dtype=np.float64)
    intensity = gamma - sin2 - sin2 * q_in
    q_out = -sin2 + (1.0 + cos_t**2) * q_in
    u_out = 2.0 * cos_t * u_in
    return _as_float(intensity), _as_float(q_out), _as_float(u_out)


def scatter_polarization(
    pol_in: LinearPolarization,
    theta: float,
    phi: float,
    e_in: Energy,
) -> LinearPolarization:
    """Polarization of the scattered photon.

    The result is expressed in the photon's basis carried along by the
    scattering rotation, so theta = 0 returns the input unchanged.
    """
    chi = pol_in.angle - phi
    q = pol_in.degree * np.cos(2.0 * chi)
    u = pol_in.degree * np.sin(2.0 * chi)
    intensity, q_out, u_out = stokes_transfer(e_in, theta, q, u)
    degree = float(np.hypot(q_out, u_out) / intensity)
    chi_out = 0.5 * float(np.arctan2(u_out, q_out))
    return LinearPolarization(angle=chi_out + phi, degree=min(degree, 1.0))


def theta_from_energy_deposit(delta_e: npt.ArrayLike, e_in: Optional[Energy] = None) -> FloatOrArray:
    """Scattering angle from the energy left in the scatterer.

    For e_in = m_e this is ``cos(theta) = (m_e - 2 dE) / (m_e - dE)``.
    """
    e = ELECTRON_MASS_KEV if e_in is None else float(e_in)
    de = np.asarray(delta_e, dtype=np.float64)
    de_max = max_energy_deposit(e)
    if np.any(de < 0.0) or np.any(de > de_max * (1.0 + 1e-12)):
        raise InvalidDepositError(f"deposit {delta_e} keV outside [0, {de_max:.6g}] keV for {e} keV photons")
    e_out = np.maximum(e - de, backscatter_energy(e))
    cos_t = np.clip(1.0 + ELECTRON_MASS_KEV / e - ELECTRON_MASS_KEV / e_out, -1.0, 1.0)
    return _as_float(np.arccos(cos_t))


def energy_deposit(e_in: npt.ArrayLike, theta: npt.ArrayLike) -> FloatOrArray:
    """Energy given to the recoil electron."""
    return _as_float(np.asarray(e_in, dtype=np.float64) - np.asarray(scattered_energy(e_in, theta)))


def angle_resolution(e_gagg: npt.ArrayLike, coeff: float = 0.05) -> FloatOrArray:
    """Relative angular resolution d(theta)/theta of the GAGG pre-scatterer."""
    e = np.asarray(e_gagg, dtype=np.float64)
    return _as_float(coeff / np.sqrt(e / GAGG_REFERENCE_KEV))


def theta_from_energies(e_in: npt.ArrayLike, e_out: npt.ArrayLike) -> FloatOrArray:
    """Scattering angle from measured energies before and after, clipped to [0, pi]."""
    ei = np.asarray(e_in, dtype=np.float64)
    ef = np.maximum(np.asarray(e_out, dtype=np.float64), 1e-12)
    cos_t = np.clip(1.0 + ELECTRON_MASS_KEV / ei - ELECTRON_MASS_KEV / ef, -1.0, 1.0)
    return _as_float(np.arccos(cos_t))
