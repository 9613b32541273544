"""Desfase del láser reflejado, su inversión a momento y el ruido homodino.

    φ = -(12/π) · [n cosθ/(n²-1)] · [p²/(MħΓ)] · [I_sat/I_ev] · [λ²/κ] · ρ_in · G

Todo el factor salvo p²·ρ_in es el prefactor K de ``phase_prefactor``;
con Δ > 0 y G ≥ 1, K < 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.constants import hbar, pi

from .errores import DegenerateDensityError, ParametroInvalidoError, UnphysicalPhaseError
from .mirror import MirrorParams, decay_kappa, evanescent_intensity, saturation_intensity


@dataclass(frozen=True)
class PhaseShiftInput:
    momentum_max: float
    atomic_density: float
    mirror: MirrorParams

    def __post_init__(self) -> None:
        if not self.momentum_max >= 0:
            raise ParametroInvalidoError("p debe ser ≥ 0", campo="momentum_max")
        if not self.atomic_density >= 0:
            raise ParametroInvalidoError("ρ_in debe ser ≥ 0", campo="atomic_density")


@dataclass(frozen=True)
class PhaseMeasurement:
    phi_true: float
    phi_observed: float
    noise_sigma: float
    seed: Optional[int]

    def __post_init__(self) -> None:
        if not self.noise_sigma >= 0:
            raise ParametroInvalidoError("noise_sigma debe ser ≥ 0", campo="noise_sigma")


def phase_prefactor(mirror: MirrorParams) -> float:
    """K tal que φ = K·p²·ρ_in; unidades (kg·m/s)^-2·m³."""
    n, th = mirror.refractive_index, mirror.incidence_angle
    i_sat = saturation_intensity(mirror.linewidth, mirror.wavelength_laser)
    return (
        -(12.0 / pi)
        * (n * math.cos(th) / (n * n - 1.0))
        / (mirror.atom_mass * hbar * mirror.linewidth)
        * (i_sat / evanescent_intensity(mirror))
        * (mirror.wavelength_laser**2 / decay_kappa(mirror))
        * mirror.enhancement_gain
    )


def phase_shift(entrada: PhaseShiftInput) -> float:
    """φ en rad. Exactamente 0 para p = 0."""
    if entrada.momentum_max == 0 or entrada.atomic_density == 0:
        return 0.0
    return phase_prefactor(entrada.mirror) * entrada.momentum_max**2 * entrada.atomic_density


def invert_momentum(phi_observed: float, rho_in: float, mirror: MirrorParams) -> float:
    """p = √(φ/(K·ρ_in)).

    Raises:
        DegenerateDensityError: ρ_in = 0.
        UnphysicalPhaseError: φ con signo opuesto a K.
    """
    if rho_in == 0:
        raise DegenerateDensityError("ρ_in = 0: el desfase no se puede invertir")
    if rho_in < 0:
        raise ParametroInvalidoError("ρ_in debe ser ≥ 0", campo="atomic_density")
    if phi_observed == 0:
        return 0.0
    cociente = phi_observed / (phase_prefactor(mirror) * rho_in)
    if cociente < 0:
        raise UnphysicalPhaseError(f"φ = {phi_observed:.6e} rad tiene el signo opuesto al prefactor")
    return math.sqrt(cociente)


def infer_momenta(phi_observed, rho_in: float, mirror: MirrorParams) -> np.ndarray:
    """Inversión vectorizada para series ruidosas.

    Las fases con signo opuesto al prefactor (solo posibles por ruido) se
    recortan a p = 0.
    """
    if rho_in <= 0:
        raise DegenerateDensityError("ρ_in = 0: el desfase no se puede invertir")
    cociente = np.asarray(phi_observed, dtype=float) / (phase_prefactor(mirror) * rho_in)
    return np.sqrt(np.clip(cociente, 0.0, None))


def single_atom_density(mirror: MirrorParams, spot_area: float) -> float:
    """ρ_in de un átomo: 1/(área del spot × 1/2κ)."""
    if not spot_area > 0:
        raise ParametroInvalidoError("el área del spot debe ser positiva", campo="spot_area")
    return 2.0 * decay_kappa(mirror) / spot_area


def cloud_phase_shift(mirror: MirrorParams, rho_in: float, momenta) -> float:
    """Nube de átomos independientes: contribuciones sumadas linealmente, K·ρ_in·⟨p²⟩."""
    p = np.asarray(momenta, dtype=float)
    if p.size == 0:
        return 0.0
    return phase_prefactor(mirror) * rho_in * float(np.mean(p**2))


def observe_many(phi_true, noise_sigma: float, rng: np.random.Generator) -> np.ndarray:
    """φ_obs = φ_true + N(0, σ²) sobre un arreglo. Con σ = 0 no consume el generador."""
    phi = np.asarray(phi_true, dtype=float)
    if noise_sigma < 0:
        raise ParametroInvalidoError("noise_sigma debe ser ≥ 0", campo="noise_sigma")
    if noise_sigma == 0:
        return phi.copy()
    return phi + rng.normal(0.0, noise_sigma, size=phi.shape)


def observe(phi_true: float, noise_sigma: float, seed: Optional[int]) -> PhaseMeasurement:
    """Una medición homodina, determinista por semilla."""
    observado = float(observe_many(np.array([phi_true]), noise_sigma, np.random.default_rng(seed))[0])
    return PhaseMeasurement(phi_true=phi_true, phi_observed=observado, noise_sigma=noise_sigma, seed=seed)
