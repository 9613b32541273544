"""Pozo 'infinito' rectangular en 3D.

Autoestados, energías y descomposición polar Ψ = R·exp(iS/ħ) de un pozo de
lados L_x, L_y, L_z con una esquina en el origen, más el campo de momento de
deBroglie-Bohm ∇S para autoestados y superposiciones.

Convenciones:
    - Las funciones "escalares" (``eval_psi``, ``grad_S``) reciben un
      ``Position3`` y exigen interior estricto.
    - Las funciones ``*_array`` reciben arreglos ``(N, 3)`` y aceptan la caja
      cerrada (Ψ = 0 en las paredes); son las que usa pilotwave.
    - ∇S se calcula como ħ·Im(∇Ψ/Ψ) desde el campo complejo con derivadas
      analíticas; nunca desde S desenvuelto.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Tuple, Union

import numpy as np
from scipy.constants import hbar, pi
from scipy.integrate import cumulative_trapezoid

from .config import NODE_THRESHOLD
from .errores import NodeSingularityError, OutOfDomainError, ParametroInvalidoError

NORM_TOLERANCE = 1e-12


# =============================================================================
# TIPOS DE DOMINIO
# =============================================================================
@dataclass(frozen=True)
class WellGeometry:
    """Lados del pozo (m) y masa de la partícula (kg).

    La misma masa sirve para las energías del pozo y para el desfase del espejo.
    """

    side_x: float
    side_y: float
    side_z: float
    mass: float

    def __post_init__(self) -> None:
        for nombre in ("side_x", "side_y", "side_z", "mass"):
            valor = getattr(self, nombre)
            if isinstance(valor, bool) or not isinstance(valor, (int, float)):
                raise ParametroInvalidoError(f"debe ser numérico: {valor!r}", campo=nombre)
            if not (math.isfinite(valor) and valor > 0):
                raise ParametroInvalidoError(f"debe ser positivo y finito: {valor!r}", campo=nombre)

    @classmethod
    def cubic(cls, side: float, mass: float) -> "WellGeometry":
        return cls(side, side, side, mass)

    @property
    def lados(self) -> np.ndarray:
        return np.array([self.side_x, self.side_y, self.side_z], dtype=float)

    @property
    def volumen(self) -> float:
        return self.side_x * self.side_y * self.side_z


@dataclass(frozen=True)
class ModeIndex:
    n_x: int
    n_y: int
    n_z: int

    def __post_init__(self) -> None:
        for nombre in ("n_x", "n_y", "n_z"):
            valor = getattr(self, nombre)
            if isinstance(valor, bool) or not isinstance(valor, (int, np.integer)) or valor < 1:
                raise ParametroInvalidoError(f"índice de modo debe ser entero ≥ 1: {valor!r}", campo=nombre)

    def as_tuple(self) -> Tuple[int, int, int]:
        return (int(self.n_x), int(self.n_y), int(self.n_z))

    def __getitem__(self, eje: int) -> int:
        return self.as_tuple()[eje]


ModoLike = Union[ModeIndex, Tuple[int, int, int]]


def _como_modo(modo: ModoLike) -> ModeIndex:
    return modo if isinstance(modo, ModeIndex) else ModeIndex(*modo)


@dataclass(frozen=True)
class QuantumState:
    """Autoestado o superposición normalizada de autoestados del pozo.

    Attributes:
        terms: Pares (ModeIndex, coeficiente complejo) sin modos repetidos y
            con Σ|c|² = 1 dentro de 1e-12.
    """

    terms: Tuple[Tuple[ModeIndex, complex], ...]

    def __post_init__(self) -> None:
        terminos = tuple((_como_modo(m), complex(c)) for m, c in self.terms)
        if not terminos:
            raise ParametroInvalidoError("el estado necesita al menos un término", campo="terms")
        modos = [m for m, _ in terminos]
        if len(set(modos)) != len(modos):
            raise ParametroInvalidoError("modos repetidos en la superposición", campo="terms")
        norma = sum(abs(c) ** 2 for _, c in terminos)
        if abs(norma - 1.0) > NORM_TOLERANCE:
            raise ParametroInvalidoError(f"Σ|c|² = {norma!r} ≠ 1", campo="terms")
        object.__setattr__(self, "terms", terminos)

    @classmethod
    def eigen(cls, modo: ModoLike, coeficiente: complex = 1.0) -> "QuantumState":
        c = complex(coeficiente)
        if c == 0:
            raise ParametroInvalidoError("coeficiente nulo", campo="terms")
        return cls(((_como_modo(modo), c / abs(c)),))

    @classmethod
    def superposition(cls, pares: Iterable[Tuple[ModoLike, complex]]) -> "QuantumState":
        """Construye una superposición normalizando los coeficientes dados."""
        pares = [(_como_modo(m), complex(c)) for m, c in pares]
        norma = math.sqrt(sum(abs(c) ** 2 for _, c in pares))
        if norma == 0:
            raise ParametroInvalidoError("coeficientes todos nulos", campo="terms")
        return cls(tuple((m, c / norma) for m, c in pares))

    @property
    def is_eigenmode(self) -> bool:
        return len(self.terms) == 1

    @property
    def modos(self) -> np.ndarray:
        return np.array([m.as_tuple() for m, _ in self.terms], dtype=float)

    @property
    def coeficientes(self) -> np.ndarray:
        return np.array([c for _, c in self.terms], dtype=complex)


@dataclass(frozen=True)
class Position3:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class WaveSample:
    """Ψ en un punto: amplitud R ≥ 0 (m^-3/2), fase S (J·s) y valor complejo."""

    amplitude_R: float
    phase_S: float
    value: complex


# =============================================================================
# ENERGÍAS
# =============================================================================
def energy(geom: WellGeometry, mode: ModoLike) -> float:
    """Energía del modo: [(n_x/L_x)² + (n_y/L_y)² + (n_z/L_z)²]·π²ħ²/2m."""
    n = np.array(_como_modo(mode).as_tuple(), dtype=float)
    return float(np.sum((n / geom.lados) ** 2) * pi**2 * hbar**2 / (2 * geom.mass))


def _energias(geom: WellGeometry, state: QuantumState) -> np.ndarray:
    return np.sum((state.modos / geom.lados) ** 2, axis=1) * pi**2 * hbar**2 / (2 * geom.mass)


def peak_amplitude(geom: WellGeometry, state: QuantumState) -> float:
    """Cota Σ|c_k|·√(8/V) de |Ψ|; referencia del umbral de nodo."""
    return float(np.sum(np.abs(state.coeficientes)) * math.sqrt(8.0 / geom.volumen))


# =============================================================================
# EVALUACIÓN VECTORIAL
# =============================================================================
def _como_puntos(puntos) -> np.ndarray:
    if isinstance(puntos, Position3):
        return puntos.as_array()[None, :]
    arr = np.asarray(puntos, dtype=float)
    return arr.reshape(-1, 3)


def _verificar_caja(geom: WellGeometry, puntos: np.ndarray, estricto: bool) -> None:
    L = geom.lados
    if estricto:
        dentro = np.all((puntos > 0) & (puntos < L), axis=1)
    else:
        dentro = np.all((puntos >= 0) & (puntos <= L), axis=1)
    if not np.all(dentro):
        malo = puntos[~dentro][0]
        zona = "el interior estricto" if estricto else "la caja"
        raise OutOfDomainError(f"posición {malo.tolist()} fuera de {zona} {L.tolist()}")


def _evaluar(geom: WellGeometry, state: QuantumState, puntos: np.ndarray, t: float, derivadas: bool):
    """Ψ (N,) y, si se pide, ∇Ψ (N, 3) por regla del producto sobre los senos."""
    k = state.modos * pi / geom.lados                     # (K, 3)
    arg = k[:, None, :] * puntos[None, :, :]              # (K, N, 3)
    senos = np.sin(arg)
    fases = state.coeficientes * np.exp(-1j * _energias(geom, state) * t / hbar)
    norma = math.sqrt(8.0 / geom.volumen)

    psi = norma * (fases @ senos.prod(axis=2))
    if not derivadas:
        return psi, None

    cosenos = np.cos(arg)
    grad = np.empty(puntos.shape, dtype=complex)
    for eje in range(3):
        otros = [j for j in range(3) if j != eje]
        d = k[:, eje, None] * cosenos[:, :, eje] * senos[:, :, otros[0]] * senos[:, :, otros[1]]
        grad[:, eje] = norma * (fases @ d)
    return psi, grad


def psi_array(geom: WellGeometry, state: QuantumState, puntos, t: float) -> np.ndarray:
    """Ψ complejo en N puntos de la caja cerrada."""
    pts = _como_puntos(puntos)
    _verificar_caja(geom, pts, estricto=False)
    return _evaluar(geom, state, pts, t, derivadas=False)[0]


def density_array(geom: WellGeometry, state: QuantumState, puntos, t: float) -> np.ndarray:
    return np.abs(psi_array(geom, state, puntos, t)) ** 2


def grad_s_array(
    geom: WellGeometry,
    state: QuantumState,
    puntos,
    t: float,
    *,
    verificar_nodos: bool = True,
) -> np.ndarray:
    """∇S = ħ·Im(∇Ψ/Ψ) en N puntos, en kg·m/s.

    Con ``verificar_nodos=False`` los puntos bajo el umbral devuelven cero en
    lugar de lanzar; lo usa el lado derecho de la EDO, donde la aproximación
    a nodos la vigila un evento terminal.
    """
    pts = _como_puntos(puntos)
    if state.is_eigenmode:
        if verificar_nodos:
            _verificar_nodos(geom, state, pts, t)
        return np.zeros(pts.shape)

    psi, grad = _evaluar(geom, state, pts, t, derivadas=True)
    amplitud = np.abs(psi)
    umbral = NODE_THRESHOLD * peak_amplitude(geom, state)
    bajo = amplitud < umbral
    if verificar_nodos and np.any(bajo):
        raise NodeSingularityError(
            f"R = {amplitud[bajo][0]:.3e} bajo el umbral de nodo {umbral:.3e} en {pts[bajo][0].tolist()}"
        )
    seguro = np.where(bajo, 1.0, psi)
    momento = hbar * np.imag(grad / seguro[:, None])
    momento[bajo] = 0.0
    return momento


def _verificar_nodos(geom: WellGeometry, state: QuantumState, pts: np.ndarray, t: float) -> None:
    amplitud = np.abs(_evaluar(geom, state, pts, t, derivadas=False)[0])
    umbral = NODE_THRESHOLD * peak_amplitude(geom, state)
    if np.any(amplitud < umbral):
        raise NodeSingularityError(f"R = {amplitud.min():.3e} bajo el umbral de nodo {umbral:.3e}")


# =============================================================================
# API ESCALAR
# =============================================================================
def wave_value(geom: WellGeometry, state: QuantumState, pos: Position3, t: float) -> complex:
    """Ψ en la caja cerrada: cero exacto en las seis paredes."""
    return complex(psi_array(geom, state, pos, t)[0])


def eval_psi(geom: WellGeometry, state: QuantumState, pos: Position3, t: float) -> WaveSample:
    """Ψ en forma polar en un punto interior.

    Para un autoestado S = -E·t + ħ·arg(c), con un salto de πħ donde el
    producto de senos es negativo, de modo que R ≥ 0. Para superposiciones
    S se mide relativo a la fase dinámica del primer término, lo que la hace
    continua en t lejos de los nodos.

    Raises:
        OutOfDomainError: si la posición no está estrictamente dentro.
    """
    pts = _como_puntos(pos)
    _verificar_caja(geom, pts, estricto=True)
    valor = complex(_evaluar(geom, state, pts, t, derivadas=False)[0][0])
    amplitud = abs(valor)

    modo, c = state.terms[0]
    e_ref = energy(geom, modo)
    if state.is_eigenmode:
        senos = np.sin(np.array(modo.as_tuple()) * pi * pts[0] / geom.lados)
        salto = pi * hbar if np.prod(senos) < 0 else 0.0
        fase = -e_ref * t + hbar * math.atan2(c.imag, c.real) + salto
    else:
        relativo = valor * np.exp(1j * e_ref * t / hbar)
        fase = -e_ref * t + hbar * math.atan2(relativo.imag, relativo.real)
    return WaveSample(amplitude_R=amplitud, phase_S=fase, value=valor)


def grad_S(geom: WellGeometry, state: QuantumState, pos: Position3, t: float) -> np.ndarray:
    """Momento de deBroglie-Bohm p = ∇S en un punto interior.

    Es el vector cero exacto para cualquier autoestado.

    Raises:
        OutOfDomainError: posición fuera del interior estricto.
        NodeSingularityError: R < 1e-9 × amplitud pico.
    """
    pts = _como_puntos(pos)
    _verificar_caja(geom, pts, estricto=True)
    return grad_s_array(geom, state, pts, t)[0]


# =============================================================================
# MUESTREO Y MARGINALES DE |Ψ|²
# =============================================================================
def sample_positions(
    geom: WellGeometry,
    state: QuantumState,
    n: int,
    rng: np.random.Generator,
    t: float = 0.0,
) -> np.ndarray:
    """n posiciones con densidad |Ψ(t)|² por rechazo bajo la cota pico²."""
    L = geom.lados
    cota = peak_amplitude(geom, state) ** 2
    aceptadas = []
    faltan = n
    tasa = 0.1
    while faltan > 0:
        m = max(1024, int(1.5 * faltan / tasa))
        pts = rng.uniform(0.0, 1.0, size=(m, 3)) * L
        dens = np.abs(_evaluar(geom, state, pts, t, derivadas=False)[0]) ** 2
        ok = rng.uniform(0.0, cota, size=m) < dens
        tasa = max(ok.mean(), 1e-3)
        aceptadas.append(pts[ok][:faltan])
        faltan -= len(aceptadas[-1])
    return np.concatenate(aceptadas, axis=0)


def position_marginal(
    geom: WellGeometry,
    state: QuantumState,
    eje: int,
    t: float,
    x: np.ndarray,
) -> np.ndarray:
    """Densidad marginal de |Ψ(t)|² sobre un eje (las otras dos coordenadas integradas).

    Por ortonormalidad solo interfieren los términos que comparten los índices
    de los otros dos ejes.
    """
    L = geom.lados[eje]
    modos = state.modos
    a = state.coeficientes * np.exp(-1j * _energias(geom, state) * t / hbar)
    otros = [j for j in range(3) if j != eje]
    mismos = np.all(modos[:, None, otros] == modos[None, :, otros], axis=2)
    acople = np.conj(a)[:, None] * a[None, :] * mismos
    f = math.sqrt(2.0 / L) * np.sin(np.outer(modos[:, eje], np.asarray(x, dtype=float)) * pi / L)
    return np.real(np.einsum("jk,jg,kg->g", acople, f, f))


def position_marginal_cdf(geom: WellGeometry, state: QuantumState, eje: int, t: float, puntos: int = 4097):
    """CDF de la marginal de posición como función vectorizada (para KS)."""
    x = np.linspace(0.0, geom.lados[eje], puntos)
    cdf = cumulative_trapezoid(position_marginal(geom, state, eje, t, x), x, initial=0.0)
    cdf /= cdf[-1]
    return lambda v: np.interp(v, x, cdf)
