"""Predicción de OQT en el espacio de momentos.

Densidad analítica en momento (separable: producto de tres factores 1D),
integración de probabilidades sobre cajas de momento, muestreo por CDF
inversa tabulada y un oráculo independiente por transformada discreta de
Fourier de la autofunción en posición.

Internamente todo se evalúa en la variable adimensional u = p·L/ħ; el factor
1D en esas unidades es

    f_n(u) = 2n²π·[1 - (-1)^n cos u] / [(nπ)² - u²]²

y solo depende de n, por lo que las tablas de CDF se cachean por n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.constants import hbar, pi
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .config import (
    MIN_POINTS_PER_PERIOD,
    QUAD_EPSABS,
    QUAD_EPSREL,
    SINGULAR_WINDOW,
    TABLE_KNOTS,
    TABLE_RANGE_PI,
)
from .errores import AccuracyError, ParametroInvalidoError, ResolutionError
from .logger import configurar_logger
from .wellqm import ModeIndex, ModoLike, WellGeometry, _como_modo

logger = configurar_logger(__name__)

EJES = ("x", "y", "z")


# =============================================================================
# TIPOS
# =============================================================================
@dataclass(frozen=True)
class MomentumVector:
    p_x: float
    p_y: float
    p_z: float

    def __post_init__(self) -> None:
        for nombre in ("p_x", "p_y", "p_z"):
            if not math.isfinite(getattr(self, nombre)):
                raise ParametroInvalidoError("componente de momento no finita", campo=nombre)

    def as_array(self) -> np.ndarray:
        return np.array([self.p_x, self.p_y, self.p_z], dtype=float)


@dataclass(frozen=True)
class MomentumBox:
    """Caja de momentos [lo, hi] por eje (kg·m/s). Admite límites ±inf."""

    lo: Tuple[float, float, float]
    hi: Tuple[float, float, float]

    def __post_init__(self) -> None:
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ParametroInvalidoError("la caja necesita tres límites por lado", campo="box")
        if any(a > b for a, b in zip(lo, hi)):
            raise ParametroInvalidoError(f"lo > hi en la caja {lo} / {hi}", campo="box")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_vectors(cls, lo: MomentumVector, hi: MomentumVector) -> "MomentumBox":
        return cls(tuple(lo.as_array()), tuple(hi.as_array()))

    @classmethod
    def full(cls) -> "MomentumBox":
        return cls((-math.inf,) * 3, (math.inf,) * 3)

    def con_eje(self, eje: int, lo: float, hi: float) -> "MomentumBox":
        """Copia de la caja con el eje ``eje`` restringido a [lo, hi]."""
        nlo, nhi = list(self.lo), list(self.hi)
        nlo[eje], nhi[eje] = lo, hi
        return MomentumBox(tuple(nlo), tuple(nhi))


# =============================================================================
# DENSIDAD
# =============================================================================
def _factor_u(n: int, u) -> np.ndarray:
    """Factor 1D de |φ(p)|² en unidades de u = pL/ħ.

    Cerca de |u| = nπ la forma 0/0 se sustituye por su serie de segundo
    orden en δ = |u| - nπ.
    """
    u = np.asarray(u, dtype=float)
    a = n * pi
    b = 2.0 * a
    signo = -1.0 if n % 2 else 1.0
    delta = np.abs(u) - a
    cerca = np.abs(delta) < SINGULAR_WINDOW
    with np.errstate(divide="ignore", invalid="ignore"):
        directo = 2.0 * n * n * pi * (1.0 - signo * np.cos(u)) / (a * a - u * u) ** 2
    serie = 2.0 * n * n * pi / (b * b) * (
        0.5 - delta / b + 1.5 * delta**2 / (b * b) - delta**2 / 24.0
    )
    return np.where(cerca, serie, directo)


def _u(geom: WellGeometry, eje: int, p) -> np.ndarray:
    return np.asarray(p, dtype=float) * geom.lados[eje] / hbar


def marginal_density(geom: WellGeometry, mode: ModoLike, eje: int, p) -> np.ndarray:
    """Factor 1D de |φ(p)|² sobre el eje ``eje`` en (kg·m/s)^-1."""
    n = _como_modo(mode)[eje]
    return geom.lados[eje] / hbar * _factor_u(n, _u(geom, eje, p))


def phi_sq(geom: WellGeometry, mode: ModoLike, p: Union[MomentumVector, np.ndarray]) -> Union[float, np.ndarray]:
    """|φ(p)|² en (kg·m/s)^-3.

    Acepta un ``MomentumVector`` o un arreglo ``(..., 3)``.
    """
    arr = p.as_array() if isinstance(p, MomentumVector) else np.asarray(p, dtype=float)
    valor = (
        marginal_density(geom, mode, 0, arr[..., 0])
        * marginal_density(geom, mode, 1, arr[..., 1])
        * marginal_density(geom, mode, 2, arr[..., 2])
    )
    return float(valor) if np.ndim(valor) == 0 else valor


# =============================================================================
# INTEGRACIÓN
# =============================================================================
def _quad_pieza(n: int, a: float, b: float) -> Tuple[float, float]:
    valor, error = quad(
        lambda u: float(_factor_u(n, u)), a, b,
        epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=500,
    )
    return valor, error


def _prob_u(n: int, a: float, b: float) -> Tuple[float, float]:
    """∫_a^b f_n(u) du con su error estimado.

    El núcleo [-U, U] se parte en múltiplos de π (cada pieza es suave y sin
    cambios de signo en la oscilación); las colas, si las hay, van a quad
    directamente.
    """
    if a >= b:
        return 0.0, 0.0
    U = TABLE_RANGE_PI * pi
    total = error = 0.0

    if a < -U:
        v, e = _quad_pieza(n, a, min(b, -U))
        total, error = total + v, error + e
    if b > U:
        v, e = _quad_pieza(n, max(a, U), b)
        total, error = total + v, error + e

    lo, hi = max(a, -U), min(b, U)
    if lo < hi:
        ks = np.arange(math.ceil(lo / pi), math.floor(hi / pi) + 1) * pi
        bordes = np.unique(np.concatenate([[lo], ks[(ks > lo) & (ks < hi)], [hi]]))
        for x0, x1 in zip(bordes[:-1], bordes[1:]):
            v, e = _quad_pieza(n, float(x0), float(x1))
            total, error = total + v, error + e
    return total, error


def integrate_prob(
    geom: WellGeometry,
    mode: ModoLike,
    box: MomentumBox,
    tolerancia: float = 1e-9,
) -> float:
    """P(p ∈ box) = ∭|φ(p)|² dp por cuadratura adaptativa eje a eje.

    Raises:
        AccuracyError: si el error estimado supera ``tolerancia``.
    """
    modo = _como_modo(mode)
    prob, error = 1.0, 0.0
    for eje in range(3):
        escala = geom.lados[eje] / hbar
        v, e = _prob_u(modo[eje], box.lo[eje] * escala, box.hi[eje] * escala)
        prob *= v
        error += e
    if error > tolerancia:
        raise AccuracyError("cuadratura de |φ(p)|² sin converger", estimacion=prob, error=error)
    return min(max(prob, 0.0), 1.0)


def momentum_table(geom: WellGeometry, mode: ModoLike, eje: int, bordes) -> pd.DataFrame:
    """Probabilidad de cada intervalo de p_eje (ejes restantes sin restringir)."""
    bordes = np.asarray(bordes, dtype=float)
    filas = []
    for lo, hi in zip(bordes[:-1], bordes[1:]):
        caja = MomentumBox.full().con_eje(eje, lo, hi)
        filas.append({"p_lo": lo, "p_hi": hi, "probability": integrate_prob(geom, mode, caja)})
    return pd.DataFrame(filas, columns=["p_lo", "p_hi", "probability"])


# =============================================================================
# TABLAS DE CDF Y MUESTREO
# =============================================================================
@dataclass(frozen=True)
class _TablaMarginal:
    u: np.ndarray
    cdf: np.ndarray
    directa: PchipInterpolator
    inversa: PchipInterpolator


@lru_cache(maxsize=64)
def _tabla(n: int) -> _TablaMarginal:
    """CDF de f_n sobre ±TABLE_RANGE_PI·π con Gauss-Legendre de 8 nodos por segmento."""
    U = TABLE_RANGE_PI * pi
    u = np.linspace(-U, U, TABLE_KNOTS)
    x, w = np.polynomial.legendre.leggauss(8)
    medio = 0.5 * (u[:-1] + u[1:])
    semi = 0.5 * (u[1:] - u[:-1])
    nodos = medio[:, None] + semi[:, None] * x[None, :]
    segmentos = (semi[:, None] * w[None, :] * _factor_u(n, nodos)).sum(axis=1)
    cdf = np.concatenate([[0.0], np.cumsum(segmentos)])
    logger.debug("[TABLA n=%d] Masa en ±%dπ: %.12f", n, TABLE_RANGE_PI, cdf[-1])
    cdf /= cdf[-1]

    # los ceros aislados de f_n pueden dejar incrementos bajo la resolución de punto flotante
    estricto = np.concatenate([[True], np.diff(cdf) > 0])
    return _TablaMarginal(
        u=u,
        cdf=cdf,
        directa=PchipInterpolator(u, cdf),
        inversa=PchipInterpolator(cdf[estricto], u[estricto]),
    )


def marginal_cdf(geom: WellGeometry, mode: ModoLike, eje: int, p) -> np.ndarray:
    """CDF tabulada de p_eje."""
    tabla = _tabla(_como_modo(mode)[eje])
    u = np.clip(_u(geom, eje, p), tabla.u[0], tabla.u[-1])
    return np.clip(tabla.directa(u), 0.0, 1.0)


def marginal_ppf(geom: WellGeometry, mode: ModoLike, eje: int, q) -> np.ndarray:
    """Inversa de ``marginal_cdf``: cuantiles de p_eje."""
    tabla = _tabla(_como_modo(mode)[eje])
    return tabla.inversa(np.clip(np.asarray(q, dtype=float), 0.0, 1.0)) * hbar / geom.lados[eje]


def sample_momenta(geom: WellGeometry, mode: ModoLike, n: int, rng: np.random.Generator) -> np.ndarray:
    """n momentos ``(n, 3)``; cada eje se muestrea de forma independiente."""
    q = rng.random((n, 3))
    return np.column_stack([marginal_ppf(geom, mode, eje, q[:, eje]) for eje in range(3)])


def sample_momentum(geom: WellGeometry, mode: ModoLike, seed: Optional[int]) -> MomentumVector:
    """Un momento según la regla de Born; determinista para una semilla fija."""
    p = sample_momenta(geom, mode, 1, np.random.default_rng(seed))[0]
    return MomentumVector(*p)


# =============================================================================
# ORÁCULO DE FOURIER
# =============================================================================
@dataclass(frozen=True)
class FourierGrid:
    """Malla del oráculo: muestras por lado del pozo y factor de relleno con ceros."""

    samples_per_side: int = 4096
    padding: int = 8

    def __post_init__(self) -> None:
        if self.samples_per_side < 2 or self.padding < 2:
            raise ParametroInvalidoError("malla de Fourier demasiado pequeña", campo="grid")


@dataclass(frozen=True)
class OracleDensity:
    """Densidad del oráculo, separable: una malla de momentos y un factor por eje.

    Attributes:
        momenta: Momentos de cada eje (kg·m/s), ordenados.
        factors: Densidad 1D normalizada en su malla.
        parseval: Σ|φ|²Δp por eje antes de normalizar (≈ 1).
    """

    momenta: Tuple[np.ndarray, np.ndarray, np.ndarray]
    factors: Tuple[np.ndarray, np.ndarray, np.ndarray]
    parseval: Tuple[float, float, float]

    def spacing(self, eje: int) -> float:
        return float(self.momenta[eje][1] - self.momenta[eje][0])

    def total(self) -> float:
        return float(np.prod([f.sum() * self.spacing(e) for e, f in enumerate(self.factors)]))

    def density(self, ix, iy, iz) -> np.ndarray:
        return self.factors[0][ix] * self.factors[1][iy] * self.factors[2][iz]


def _oraculo_eje(L: float, n: int, malla: FourierGrid) -> Tuple[np.ndarray, np.ndarray, float]:
    N = malla.samples_per_side
    if 2.0 * N / n < MIN_POINTS_PER_PERIOD:
        raise ResolutionError(
            f"{2.0 * N / n:.1f} puntos por periodo del seno (mínimo {MIN_POINTS_PER_PERIOD}) para n={n}"
        )
    h = L / N
    x = np.arange(N + 1) * h                       # incluye ambas paredes, donde ψ = 0
    psi = math.sqrt(2.0 / L) * np.sin(n * pi * x / L)
    M = N * malla.padding
    F = np.fft.fft(psi, n=M)
    p = 2.0 * pi * hbar * np.fft.fftfreq(M, d=h)
    dens = (h**2 / (2.0 * pi * hbar)) * np.abs(F) ** 2
    dp = 2.0 * pi * hbar / (M * h)
    parseval = float(dens.sum() * dp)
    return np.fft.fftshift(p), np.fft.fftshift(dens / parseval), parseval


def fourier_oracle(geom: WellGeometry, mode: ModoLike, grid: FourierGrid = FourierGrid()) -> OracleDensity:
    """|φ(p)|² por FFT de la autofunción en posición, eje por eje.

    Raises:
        ResolutionError: si hay menos de 16 muestras por periodo del seno.
    """
    modo = _como_modo(mode)
    ejes = [_oraculo_eje(geom.lados[e], modo[e], grid) for e in range(3)]
    return OracleDensity(
        momenta=tuple(e[0] for e in ejes),
        factors=tuple(e[1] for e in ejes),
        parseval=tuple(e[2] for e in ejes),
    )
