"""Espejo atómico de onda evanescente.

Decaimiento κ, intensidades, potencial resultante (dipolar + van der Waals
+ gravedad), análisis de barrera y rebotes clásicos.

U₀ no está fijado por la propuesta experimental; se adopta el potencial
dipolar estándar de dos niveles con desintonía grande,

    U₀ = ħΓ²/(8Δ) · I_ev/I_sat,

que es un resultado importado de la física de trampas ópticas dipolares.

Internamente el rebote se integra en variables adimensionales
x = κz, q = p/√(2MU₀), donde la energía es q² + u(x) con
u(x) = exp(-2x) - c/x³ + γx, c = C₃κ³/U₀ y γ = Mg/(κU₀).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy.constants import c as LIGHT_SPEED
from scipy.constants import hbar, pi
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from .config import (
    BARRIER_GRID,
    BOUNCE_RTOL,
    BOUNCE_START_KAPPA,
    COHERENT_DETUNING_RATIO,
    DEFAULT_DETUNING_OVER_GAMMA,
    DEFAULT_IEV_OVER_ISAT,
    DEFAULT_INCIDENCE_ANGLE,
    DEFAULT_REFRACTIVE_INDEX,
    ENERGY_DRIFT_MAX,
    MIN_START_KAPPA,
    RB87_D2_LINEWIDTH,
    RB87_D2_WAVELENGTH,
    RB87_MASS,
)
from .errores import (
    CaptureError,
    NoTotalInternalReflectionError,
    OutOfDomainError,
    ParametroInvalidoError,
    PrecisionError,
    StiffnessError,
    SurfaceCollisionError,
)
from .logger import configurar_logger

logger = configurar_logger(__name__)


# =============================================================================
# PARÁMETROS
# =============================================================================
@dataclass(frozen=True)
class MirrorParams:
    """Parámetros del espejo y del átomo (SI; ángulos en rad, Γ y Δ en rad/s)."""

    wavelength_laser: float
    refractive_index: float
    incidence_angle: float
    intensity_incident: float
    linewidth: float
    detuning: float
    atom_mass: float
    vdw_coefficient: float = 0.0
    gravity: float = 0.0
    enhancement_gain: float = 1.0

    def __post_init__(self) -> None:
        for nombre, valor in vars(self).items():
            if isinstance(valor, bool) or not isinstance(valor, (int, float)) or not math.isfinite(valor):
                raise ParametroInvalidoError(f"debe ser numérico y finito: {valor!r}", campo=nombre)
        reglas = [
            ("wavelength_laser", self.wavelength_laser > 0, "> 0"),
            ("refractive_index", self.refractive_index > 1, "> 1"),
            ("incidence_angle", 0 < self.incidence_angle < pi / 2, "en (0, π/2)"),
            ("intensity_incident", self.intensity_incident > 0, "> 0"),
            ("linewidth", self.linewidth > 0, "> 0"),
            ("detuning", self.detuning > 0, "> 0 (espejo repulsivo)"),
            ("atom_mass", self.atom_mass > 0, "> 0"),
            ("vdw_coefficient", self.vdw_coefficient >= 0, "≥ 0"),
            ("gravity", self.gravity >= 0, "≥ 0"),
            ("enhancement_gain", self.enhancement_gain >= 1, "≥ 1"),
        ]
        for nombre, ok, regla in reglas:
            if not ok:
                raise ParametroInvalidoError(f"debe ser {regla}: {getattr(self, nombre)!r}", campo=nombre)

    @classmethod
    def rb87_reference(
        cls,
        iev_over_isat: float = DEFAULT_IEV_OVER_ISAT,
        detuning_over_gamma: float = DEFAULT_DETUNING_OVER_GAMMA,
        refractive_index: float = DEFAULT_REFRACTIVE_INDEX,
        incidence_angle: float = DEFAULT_INCIDENCE_ANGLE,
        **extras: float,
    ) -> "MirrorParams":
        """Rb-87 en la línea D2 con I_L elegida para fijar I_ev/I_sat."""
        n, th = refractive_index, incidence_angle
        i_sat = saturation_intensity(RB87_D2_LINEWIDTH, RB87_D2_WAVELENGTH)
        i_l = iev_over_isat * i_sat * (n * n - 1.0) / (4.0 * n * math.cos(th) ** 2)
        return cls(
            wavelength_laser=RB87_D2_WAVELENGTH,
            refractive_index=n,
            incidence_angle=th,
            intensity_incident=i_l,
            linewidth=RB87_D2_LINEWIDTH,
            detuning=detuning_over_gamma * RB87_D2_LINEWIDTH,
            atom_mass=RB87_MASS,
            **extras,
        )


# =============================================================================
# ÓPTICA
# =============================================================================
def critical_angle(refractive_index: float) -> float:
    if not refractive_index > 1:
        raise ParametroInvalidoError("n debe ser > 1", campo="refractive_index")
    return math.asin(1.0 / refractive_index)


def _verificar_tir(params: MirrorParams) -> None:
    theta_c = critical_angle(params.refractive_index)
    if params.incidence_angle <= theta_c:
        raise NoTotalInternalReflectionError(
            f"θ = {params.incidence_angle:.6f} rad ≤ ángulo crítico {theta_c:.6f} rad"
        )


def decay_kappa(params: MirrorParams) -> float:
    """κ = (2π/λ)·√(n² sin²θ - 1), en 1/m."""
    _verificar_tir(params)
    n, th = params.refractive_index, params.incidence_angle
    return 2.0 * pi / params.wavelength_laser * math.sqrt(n * n * math.sin(th) ** 2 - 1.0)


def decay_length(params: MirrorParams) -> float:
    return 1.0 / decay_kappa(params)


def evanescent_intensity(params: MirrorParams) -> float:
    """I_ev = 4n cos²θ · I_L/(n² - 1), polarización TE."""
    _verificar_tir(params)
    n, th = params.refractive_index, params.incidence_angle
    return 4.0 * n * math.cos(th) ** 2 * params.intensity_incident / (n * n - 1.0)


def saturation_intensity(linewidth: float, wavelength: float) -> float:
    """I_sat = 2π²ħΓc/(3λ³), en W/m²."""
    if not (linewidth > 0 and wavelength > 0):
        raise ParametroInvalidoError("Γ y λ deben ser positivos", campo="linewidth")
    return 2.0 * pi**2 * hbar * linewidth * LIGHT_SPEED / (3.0 * wavelength**3)


def surface_potential(params: MirrorParams) -> float:
    """U₀ = ħΓ²/(8Δ) · I_ev/I_sat, en J."""
    i_sat = saturation_intensity(params.linewidth, params.wavelength_laser)
    return hbar * params.linewidth**2 / (8.0 * params.detuning) * evanescent_intensity(params) / i_sat


def coherent_regime(params: MirrorParams) -> bool:
    """True si |Δ|/Γ ≥ 100 (emisión espontánea despreciable)."""
    return abs(params.detuning) / params.linewidth >= COHERENT_DETUNING_RATIO


# =============================================================================
# POTENCIAL
# =============================================================================
@dataclass(frozen=True)
class _Adimensional:
    kappa: float
    u0: float
    c: float
    gamma: float

    @classmethod
    def de(cls, params: MirrorParams) -> "_Adimensional":
        kappa = decay_kappa(params)
        u0 = surface_potential(params)
        return cls(
            kappa=kappa,
            u0=u0,
            c=params.vdw_coefficient * kappa**3 / u0,
            gamma=params.atom_mass * params.gravity / (kappa * u0),
        )

    def u(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-2.0 * x) - self.c / x**3 + self.gamma * x

    def du(self, x):
        return -2.0 * np.exp(-2.0 * x) + 3.0 * self.c / x**4 + self.gamma


def resultant_potential(params: MirrorParams, z):
    """U(z) = U₀·exp(-2κz) - C₃/z³ + M·g·z, en J.

    Raises:
        OutOfDomainError: si algún z ≤ 0.
    """
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr <= 0):
        raise OutOfDomainError("el potencial solo está definido para z > 0")
    if not coherent_regime(params):
        logger.warning(
            "[ESPEJO] |Δ|/Γ = %.1f < %.0f: régimen no coherente",
            abs(params.detuning) / params.linewidth, COHERENT_DETUNING_RATIO,
        )
    a = _Adimensional.de(params)
    valor = a.u0 * a.u(a.kappa * z_arr)
    return float(valor) if np.ndim(valor) == 0 else valor


class BarrierKind(str, enum.Enum):
    INTERIOR = "interior"   # máximo local en z > 0
    SURFACE = "surface"     # U decrece desde la superficie: altura U₀
    NONE = "none"           # van der Waals domina, no hay barrera


@dataclass(frozen=True)
class PotentialProfile:
    z: np.ndarray
    U: np.ndarray
    barrier_z: Optional[float]
    barrier_height: Optional[float]
    kind: BarrierKind

    @property
    def has_barrier(self) -> bool:
        return self.kind is not BarrierKind.NONE

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"z": self.z, "U": self.U})


def _barrera_adimensional(a: _Adimensional):
    """(x_max, u_max, tipo) del primer máximo de u en (0, 10).

    Con c pequeño el máximo queda cerca de x ≈ (1.5c)^(1/4), así que la malla
    arranca un orden de magnitud por debajo.
    """
    inicio = 1e-9 if a.c == 0 else min(1e-9, 0.1 * (1.5 * a.c) ** 0.25)
    x = np.geomspace(inicio, 10.0, BARRIER_GRID)
    u = a.u(x)
    interiores = np.flatnonzero((u[1:-1] > u[:-2]) & (u[1:-1] >= u[2:])) + 1
    if len(interiores):
        i = interiores[0]
        res = minimize_scalar(
            lambda v: -float(a.u(v)),
            bounds=(x[i - 1], x[i + 1]),
            method="bounded",
            options={"xatol": min(1e-13, 1e-4 * x[i - 1])},
        )
        return float(res.x), -float(res.fun), BarrierKind.INTERIOR
    if a.c == 0:
        return 0.0, 1.0, BarrierKind.SURFACE
    return None, None, BarrierKind.NONE


def potential_profile(params: MirrorParams, z=None) -> PotentialProfile:
    """Perfil U(z) sobre una malla (por defecto geométrica en (1e-3/κ, 10/κ))."""
    a = _Adimensional.de(params)
    if z is None:
        z = np.geomspace(1e-3, 10.0, 2001) / a.kappa
    z = np.asarray(z, dtype=float)
    if np.any(np.diff(z) <= 0):
        raise ParametroInvalidoError("la malla z debe ser estrictamente creciente", campo="z")
    U = resultant_potential(params, z)
    x_b, u_b, tipo = _barrera_adimensional(a)
    return PotentialProfile(
        z=z,
        U=np.atleast_1d(U),
        barrier_z=None if x_b is None else x_b / a.kappa,
        barrier_height=None if u_b is None else u_b * a.u0,
        kind=tipo,
    )


def barrier_analysis(params: MirrorParams) -> PotentialProfile:
    """Máximo local de U en (0, 10/κ) por maximización acotada.

    Sin van der Waals el potencial decrece desde la superficie y la barrera
    efectiva es U₀ en z → 0 (tipo SURFACE). Si van der Waals domina en todo
    el rango se devuelve tipo NONE, que no es un error.
    """
    perfil = potential_profile(params)
    logger.debug(
        "[BARRERA] tipo=%s z=%s altura=%s", perfil.kind.value, perfil.barrier_z, perfil.barrier_height
    )
    return perfil


def max_reflectable_momentum(params: MirrorParams, z_start: Optional[float] = None) -> float:
    """|p| máximo que el espejo refleja para un átomo que parte de ``z_start``."""
    a = _Adimensional.de(params)
    x_b, u_b, tipo = _barrera_adimensional(a)
    if tipo is BarrierKind.NONE:
        raise CaptureError("van der Waals domina: ningún átomo se refleja")
    x_s = BOUNCE_START_KAPPA if z_start is None else z_start * a.kappa
    margen = u_b - float(a.u(x_s))
    return math.sqrt(2.0 * params.atom_mass * a.u0 * max(margen, 0.0))


# =============================================================================
# REBOTE
# =============================================================================
@dataclass(frozen=True)
class BounceResult:
    """Trayectoria en z de un rebote y momento de salida.

    Attributes:
        times, z, p: Pasos aceptados del integrador (s, m, kg·m/s).
        p_out: Momento normal al volver a z_start (positivo: se aleja).
        z_turn: Punto de retorno (m).
        energy_drift: max |E(t) - E(0)|/|E(0)| sobre los pasos aceptados.
    """

    times: np.ndarray
    z: np.ndarray
    p: np.ndarray
    p_out: float
    z_turn: float
    energy_drift: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.times, "z": self.z, "p": self.p})


def _evento(fn, direccion: int):
    fn.terminal = True
    fn.direction = direccion
    return fn


def bounce(params: MirrorParams, p_in: float, z_start: Optional[float] = None) -> BounceResult:
    """Integra M·z̈ = -dU/dz desde z_start hasta que el átomo vuelve a z_start.

    ``p_in`` es el momento normal (negativo hacia la pared). Con g > 0 y
    p_in = 0 el átomo cae, rebota y el rebote termina en su ápice.

    Raises:
        OutOfDomainError: p_in > 0 o z_start dentro de la región evanescente.
        CaptureError: no hay barrera.
        SurfaceCollisionError: energía total ≥ altura de la barrera.
        PrecisionError: la energía deriva más de ENERGY_DRIFT_MAX.
    """
    a = _Adimensional.de(params)
    z_start = BOUNCE_START_KAPPA / a.kappa if z_start is None else float(z_start)
    x_s = z_start * a.kappa
    if x_s < MIN_START_KAPPA:
        raise OutOfDomainError(f"z_start·κ = {x_s:.3g} < {MIN_START_KAPPA}: dentro de la onda evanescente")
    if p_in > 0:
        raise OutOfDomainError("p_in debe apuntar hacia la pared (p_in ≤ 0)")

    escala_p = math.sqrt(2.0 * params.atom_mass * a.u0)
    escala_t = params.atom_mass / (a.kappa * escala_p)
    q_in = p_in / escala_p

    if q_in == 0 and a.gamma == 0:
        return BounceResult(
            times=np.array([0.0]), z=np.array([z_start]), p=np.array([0.0]),
            p_out=0.0, z_turn=z_start, energy_drift=0.0,
        )

    x_b, u_b, tipo = _barrera_adimensional(a)
    if tipo is BarrierKind.NONE:
        raise CaptureError("van der Waals domina: el átomo es capturado por la superficie")
    e0 = q_in**2 + float(a.u(x_s))
    if e0 >= u_b:
        raise SurfaceCollisionError(
            f"energía {e0 * a.u0:.4e} J ≥ barrera {u_b * a.u0:.4e} J: el átomo no se refleja"
        )

    def dinamica(tau, y):
        return [y[1], -0.5 * a.du(y[0])]

    vuelo = x_s / abs(q_in) if q_in else math.sqrt(4.0 * x_s / a.gamma)
    horizonte = 10.0 * vuelo + 100.0
    opciones = dict(method="DOP853", rtol=BOUNCE_RTOL, atol=1e-14, dense_output=False)

    retorno_q = _evento(lambda tau, y: y[1], +1)
    fase1 = solve_ivp(dinamica, (0.0, horizonte), [x_s, q_in], events=retorno_q, **opciones)
    if fase1.status != 1:
        raise StiffnessError(f"no se alcanzó el punto de retorno: {fase1.message}")
    x_turn = float(fase1.y_events[0][0][0])

    regreso = _evento(lambda tau, y: y[0] - x_s, +1)
    apice = _evento(lambda tau, y: y[1], -1)
    tau_turn = float(fase1.t_events[0][0])
    fase2 = solve_ivp(
        dinamica, (tau_turn, tau_turn + horizonte), [x_turn, 0.0], events=[regreso, apice], **opciones
    )
    if fase2.status != 1:
        raise StiffnessError(f"el átomo no volvió a z_start: {fase2.message}")

    final = fase2.y_events[0][0] if len(fase2.t_events[0]) else fase2.y_events[1][0]
    # el último paso de cada fase es su evento terminal
    tau = np.concatenate([fase1.t, fase2.t[1:]])
    x = np.concatenate([fase1.y[0], fase2.y[0][1:]])
    q = np.concatenate([fase1.y[1], fase2.y[1][1:]])

    energia = q**2 + a.u(x)
    deriva = float(np.max(np.abs(energia - e0)) / abs(e0)) if e0 else 0.0
    if deriva > ENERGY_DRIFT_MAX:
        raise PrecisionError(f"deriva de energía {deriva:.3e} > {ENERGY_DRIFT_MAX:.0e} en el rebote")

    return BounceResult(
        times=tau * escala_t,
        z=x / a.kappa,
        p=q * escala_p,
        p_out=float(final[1]) * escala_p,
        z_turn=x_turn / a.kappa,
        energy_drift=deriva,
    )
