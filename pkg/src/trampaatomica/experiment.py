"""Motor Monte Carlo de discriminación OQT / deBB.

Flujo de una corrida:

    simulate_run  → serie de fases por rebote (con átomos perdidos marcados)
    hypothesis_test
        ├── zero_signal_test    (¿hay señal? contra deBB estacionario)
        ├── distribution_test   (¿los momentos siguen la marginal del modo? contra OQT)
        └── required_bounces    (potencia: rebotes necesarios para el objetivo)

Regla de decisión con umbral α:

    rechaza estacionario | rechaza OQT | veredicto
    ---------------------+-------------+------------------------
            sí           |     no      | favors-OQT
            sí           |     sí      | favors-deBB-disturbed
            no           |     sí      | favors-deBB-stationary
            no           |     no      | inconclusive

Toda la aleatoriedad sale de ``semillas``: cada réplica tiene su propio
flujo derivado de (semilla, flujo, índice), por lo que los resultados no
dependen del número de hilos.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats
from scipy.special import logsumexp

from .config import (
    DEFAULT_ALPHA,
    DEFAULT_NULL_REPLICATES,
    DEFAULT_POWER_LEVEL,
    DEFAULT_POWER_REPLICATES,
    DEFAULT_SPOT_AREA,
    DEFAULT_TARGET_SIGMA,
    EXACT_POWER_BUDGET,
    LR_KERNEL_FRACTION,
    LR_QUANTILE_NODES,
    LR_SCALE_POINTS,
    MAX_REQUIRED_BOUNCES,
    PILOT_SAMPLES,
)
from .errores import CaptureError, NoDataError, ParametroInvalidoError
from .logger import configurar_logger
from .mirror import BarrierKind, MirrorParams, barrier_analysis, max_reflectable_momentum
from .momentum import marginal_cdf, marginal_ppf, sample_momenta
from .paralelo import ejecutar_en_paralelo
from .phaseshift import (
    PhaseMeasurement,
    infer_momenta,
    observe_many,
    phase_prefactor,
    single_atom_density,
)
from .semillas import (
    FLUJO_NULO,
    FLUJO_PILOTO,
    FLUJO_POTENCIA,
    FLUJO_REBOTES,
    FLUJO_RUIDO,
    generador,
    semilla_derivada,
)
from .wellqm import ModeIndex, ModoLike, QuantumState, WellGeometry, _como_modo, sample_positions

logger = configurar_logger(__name__)

ETIQUETAS_PARED = np.array(["x-", "x+", "y-", "y+", "z-", "z+"])
ESCALAS_LR = np.union1d(np.geomspace(0.05, 3.0, LR_SCALE_POINTS), [1.0])


# =============================================================================
# TEORÍAS
# =============================================================================
class TheoryVariant(str, enum.Enum):
    OQT = "oqt"
    DEBB_STATIONARY = "debb-stationary"
    DEBB_DISTURBED = "debb-disturbed"


class Verdict(str, enum.Enum):
    FAVORS_OQT = "favors-OQT"
    FAVORS_DEBB_STATIONARY = "favors-deBB-stationary"
    FAVORS_DEBB_DISTURBED = "favors-deBB-disturbed"
    INCONCLUSIVE = "inconclusive"


class SpeedDistribution(Protocol):
    """Distribución 1D de |p| normal a la pared, normalizada y muestreable."""

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray: ...

    def cdf(self, p) -> np.ndarray: ...


@dataclass(frozen=True)
class ScaledMarginal:
    """|p| = escala × |p_eje| con p_eje según la marginal en momento del modo."""

    geometry: WellGeometry
    mode: ModeIndex
    scale: float = 0.5
    axis: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", _como_modo(self.mode))
        if not self.scale > 0:
            raise ParametroInvalidoError("la escala debe ser positiva", campo="scale")
        if self.axis not in (0, 1, 2):
            raise ParametroInvalidoError("eje debe ser 0, 1 o 2", campo="axis")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.scale * np.abs(marginal_ppf(self.geometry, self.mode, self.axis, rng.random(n)))

    def cdf(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.clip(2.0 * marginal_cdf(self.geometry, self.mode, self.axis, p / self.scale) - 1.0, 0.0, 1.0)


@dataclass(frozen=True)
class TabulatedSpeedDistribution:
    """Histograma de |p|: uniforme dentro de cada intervalo de ``edges``."""

    edges: Tuple[float, ...]
    weights: Tuple[float, ...]

    def __post_init__(self) -> None:
        bordes = np.asarray(self.edges, dtype=float)
        pesos = np.asarray(self.weights, dtype=float)
        if len(bordes) < 2 or len(pesos) != len(bordes) - 1:
            raise ParametroInvalidoError("se necesitan k+1 bordes para k pesos", campo="weights")
        if bordes[0] < 0 or np.any(np.diff(bordes) <= 0):
            raise ParametroInvalidoError("bordes deben ser ≥ 0 y estrictamente crecientes", campo="edges")
        if np.any(pesos < 0) or pesos.sum() <= 0:
            raise ParametroInvalidoError("pesos deben ser ≥ 0 con suma positiva", campo="weights")
        object.__setattr__(self, "edges", tuple(bordes))
        object.__setattr__(self, "weights", tuple(pesos / pesos.sum()))

    @property
    def _acumulada(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.weights)])

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.interp(rng.random(n), self._acumulada, self.edges)

    def cdf(self, p) -> np.ndarray:
        return np.interp(np.asarray(p, dtype=float), self.edges, self._acumulada)


@dataclass(frozen=True)
class TheoryModel:
    variant: TheoryVariant
    distribution: Optional[SpeedDistribution] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", TheoryVariant(self.variant))
        if (self.variant is TheoryVariant.DEBB_DISTURBED) != (self.distribution is not None):
            raise ParametroInvalidoError(
                "solo la variante perturbada lleva distribución de velocidades", campo="distribution"
            )

    @classmethod
    def oqt(cls) -> "TheoryModel":
        return cls(TheoryVariant.OQT)

    @classmethod
    def stationary(cls) -> "TheoryModel":
        return cls(TheoryVariant.DEBB_STATIONARY)

    @classmethod
    def disturbed(cls, geometry: WellGeometry, mode: ModoLike, scale: float = 0.5, axis: int = 0) -> "TheoryModel":
        """Átomo acelerado: marginal en momento escalada."""
        return cls(TheoryVariant.DEBB_DISTURBED, ScaledMarginal(geometry, _como_modo(mode), scale, axis))

    @classmethod
    def custom(cls, distribution: SpeedDistribution) -> "TheoryModel":
        return cls(TheoryVariant.DEBB_DISTURBED, distribution)


# =============================================================================
# CONFIGURACIÓN
# =============================================================================
@dataclass(frozen=True)
class ExperimentConfig:
    """Parámetros de una campaña de rebotes.

    ``rho_in`` es opcional: sin él se usa la densidad de un átomo,
    2κ/spot_area. ``z_start`` (m) es la altura de partida de cada rebote;
    por defecto 10/κ.
    """

    geometry: WellGeometry
    mode: ModeIndex
    mirror: MirrorParams
    noise_sigma: float
    n_bounces: int
    seed: int
    rho_in: Optional[float] = None
    target_sigma: float = DEFAULT_TARGET_SIGMA
    alpha: float = DEFAULT_ALPHA
    null_replicates: int = DEFAULT_NULL_REPLICATES
    power_replicates: int = DEFAULT_POWER_REPLICATES
    power_level: float = DEFAULT_POWER_LEVEL
    wall_selection: str = "x"
    spot_area: float = DEFAULT_SPOT_AREA
    z_start: Optional[float] = None
    max_workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", _como_modo(self.mode))
        reglas = [
            ("noise_sigma", self.noise_sigma >= 0, "≥ 0"),
            ("n_bounces", isinstance(self.n_bounces, int) and self.n_bounces >= 1, "entero ≥ 1"),
            ("seed", isinstance(self.seed, int) and self.seed >= 0, "entero ≥ 0"),
            ("rho_in", self.rho_in is None or self.rho_in > 0, "> 0"),
            ("target_sigma", self.target_sigma > 0, "> 0"),
            ("alpha", 0 < self.alpha < 1, "en (0, 1)"),
            ("null_replicates", self.null_replicates >= 2, "≥ 2"),
            ("power_replicates", self.power_replicates >= 1, "≥ 1"),
            ("power_level", 0 < self.power_level < 1, "en (0, 1)"),
            ("wall_selection", self.wall_selection in ("x", "3d"), "'x' o '3d'"),
            ("spot_area", self.spot_area > 0, "> 0"),
            ("z_start", self.z_start is None or self.z_start > 0, "> 0"),
            ("max_workers", self.max_workers >= 1, "≥ 1"),
        ]
        for nombre, ok, regla in reglas:
            if not ok:
                raise ParametroInvalidoError(f"debe ser {regla}: {getattr(self, nombre)!r}", campo=nombre)

    def replace(self, **cambios) -> "ExperimentConfig":
        return dataclasses.replace(self, **cambios)

    @cached_property
    def densidad(self) -> float:
        return self.rho_in if self.rho_in is not None else single_atom_density(self.mirror, self.spot_area)

    @cached_property
    def escala_fase(self) -> float:
        """K·ρ_in: φ = escala_fase · p²."""
        return phase_prefactor(self.mirror) * self.densidad

    @cached_property
    def p_max(self) -> float:
        """|p| máximo reflejable; 0 si van der Waals elimina la barrera."""
        if barrier_analysis(self.mirror).kind is BarrierKind.NONE:
            logger.warning("[ESPEJO] sin barrera: todo átomo con p > 0 se pierde")
            return 0.0
        return max_reflectable_momentum(self.mirror, self.z_start)


# =============================================================================
# SIMULACIÓN
# =============================================================================
@dataclass(frozen=True)
class BounceSeries:
    """Serie de rebotes. Los átomos perdidos llevan φ = NaN."""

    variant: TheoryVariant
    wall: np.ndarray
    p_normal: np.ndarray
    phi_true: np.ndarray
    phi_observed: np.ndarray
    lost: np.ndarray
    noise_sigma: float
    seed: int

    def __len__(self) -> int:
        return len(self.phi_observed)

    @property
    def observed(self) -> np.ndarray:
        return self.phi_observed[~self.lost]

    @property
    def n_lost(self) -> int:
        return int(self.lost.sum())

    def measurements(self) -> List[PhaseMeasurement]:
        return [
            PhaseMeasurement(float(v), float(o), self.noise_sigma, self.seed)
            for v, o in zip(self.phi_true[~self.lost], self.observed)
        ]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "bounce": np.arange(len(self)),
            "wall": self.wall,
            "p_normal": self.p_normal,
            "phi_true": self.phi_true,
            "phi_observed": self.phi_observed,
            "lost": self.lost.astype(int),
        })


def _primera_pared(geom: WellGeometry, posiciones: np.ndarray, momentos: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Pared alcanzada primero desde cada posición con velocidad p/M; devuelve (etiqueta, |p_normal|)."""
    L = geom.lados
    positivo = momentos > 0
    distancia = np.where(positivo, L - posiciones, posiciones)
    with np.errstate(divide="ignore"):
        tiempo = np.where(momentos != 0, distancia / np.abs(momentos), np.inf)
    eje = np.argmin(tiempo, axis=1)
    filas = np.arange(len(eje))
    etiqueta = ETIQUETAS_PARED[2 * eje + positivo[filas, eje]]
    return etiqueta, np.abs(momentos[filas, eje])


def simulate_run(
    config: ExperimentConfig,
    model: TheoryModel,
    n_bounces: Optional[int] = None,
    seed: Optional[int] = None,
) -> BounceSeries:
    """Genera una serie de rebotes bajo ``model``; determinista por semilla.

    Los momentos de rebote y el ruido salen de flujos distintos, de modo que
    la serie de momentos no cambia al variar ``noise_sigma``. Bajo OQT y
    deBB perturbado, un átomo con |p| sobre el máximo reflejable se registra
    como perdido; sin barrera eso incluye a todo átomo en movimiento.
    """
    n = config.n_bounces if n_bounces is None else int(n_bounces)
    seed = config.seed if seed is None else int(seed)
    if n < 1:
        raise ParametroInvalidoError("n_bounces debe ser ≥ 1", campo="n_bounces")
    rng_rebotes = generador(seed, FLUJO_REBOTES)
    rng_ruido = generador(seed, FLUJO_RUIDO)
    geom, modo = config.geometry, config.mode
    tres_d = config.wall_selection == "3d"

    if model.variant is TheoryVariant.OQT:
        if tres_d:
            posiciones = sample_positions(geom, QuantumState.eigen(modo), n, rng_rebotes)
            pared, p_normal = _primera_pared(geom, posiciones, sample_momenta(geom, modo, n, rng_rebotes))
        else:
            p_normal = np.abs(sample_momenta(geom, modo, n, rng_rebotes)[:, 0])
            pared = np.full(n, "x")
    elif model.variant is TheoryVariant.DEBB_STATIONARY:
        p_normal = np.zeros(n)
        pared = np.full(n, "x" if not tres_d else "none")
    elif tres_d:
        # cada eje con |p| de la distribución y signo al azar; la pared es la primera alcanzada
        posiciones = sample_positions(geom, QuantumState.eigen(modo), n, rng_rebotes)
        rapidez = np.asarray(model.distribution.sample(rng_rebotes, 3 * n), dtype=float).reshape(n, 3)
        signos = rng_rebotes.choice([-1.0, 1.0], size=(n, 3))
        pared, p_normal = _primera_pared(geom, posiciones, signos * rapidez)
    else:
        p_normal = np.asarray(model.distribution.sample(rng_rebotes, n), dtype=float)
        pared = np.full(n, "x")

    perdido = p_normal > config.p_max
    phi_true = config.escala_fase * p_normal**2
    phi_obs = observe_many(np.where(perdido, 0.0, phi_true), config.noise_sigma, rng_ruido)
    phi_true = np.where(perdido, np.nan, phi_true)
    phi_obs = np.where(perdido, np.nan, phi_obs)
    if perdido.any():
        logger.debug("[SIMULACIÓN %s] %d/%d átomos perdidos", model.variant.value, perdido.sum(), n)

    return BounceSeries(
        variant=model.variant,
        wall=pared,
        p_normal=p_normal,
        phi_true=phi_true,
        phi_observed=phi_obs,
        lost=perdido,
        noise_sigma=config.noise_sigma,
        seed=seed,
    )


# =============================================================================
# DISTRIBUCIÓN DE REFERENCIA (OQT, CONDICIONADA A NO PERDERSE)
# =============================================================================
@dataclass(frozen=True)
class _ReferenciaMomento:
    nodos: np.ndarray                 # cuantiles centrales de |p_normal|
    _cdf_x: Optional[Tuple[WellGeometry, ModeIndex, float]] = None
    _muestra: Optional[np.ndarray] = None

    def cdf(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self._cdf_x is not None:
            geom, modo, g_max = self._cdf_x
            return np.clip((2.0 * marginal_cdf(geom, modo, 0, p) - 1.0) / g_max, 0.0, 1.0)
        return np.searchsorted(self._muestra, p, side="right") / len(self._muestra)

    @property
    def media_p2(self) -> float:
        return float(np.mean(self.nodos**2))


@lru_cache(maxsize=32)
def _referencia(config: ExperimentConfig, niveles: int) -> _ReferenciaMomento:
    """|p_normal| bajo OQT sin átomos perdidos.

    Con la pared x es exacta (marginal tabulada, truncada en p_max). Con
    selección 3D se estima de una muestra piloto.
    """
    if config.p_max == 0:
        raise CaptureError("sin barrera en el espejo: bajo OQT no se refleja ningún átomo")
    q = (np.arange(niveles) + 0.5) / niveles
    if config.wall_selection == "x":
        geom, modo = config.geometry, config.mode
        g_max = float(2.0 * marginal_cdf(geom, modo, 0, config.p_max) - 1.0)
        nodos = np.abs(marginal_ppf(geom, modo, 0, 0.5 + 0.5 * q * g_max))
        return _ReferenciaMomento(nodos=nodos, _cdf_x=(geom, modo, g_max))
    piloto = simulate_run(
        config, TheoryModel.oqt(), PILOT_SAMPLES, semilla_derivada(config.seed, FLUJO_PILOTO)
    )
    muestra = np.sort(piloto.p_normal[~piloto.lost])
    return _ReferenciaMomento(nodos=np.quantile(muestra, q), _muestra=muestra)


def mean_oqt_phase(config: ExperimentConfig) -> float:
    """E[φ_true] bajo OQT sobre los átomos reflejados (rad, con el signo de K)."""
    return config.escala_fase * _referencia(config, 8192).media_p2


# =============================================================================
# PRUEBAS
# =============================================================================
@dataclass(frozen=True)
class ZeroSignalResult:
    statistic: float
    p_value: float
    sigma_level: float
    mean_phi: float
    n: int


@dataclass(frozen=True)
class DistributionTestResult:
    lr_statistic: float
    p_value: float
    p_value_mc: float
    best_scale: float
    ks_statistic: float
    ks_p_value: float
    null_replicates: int
    chi2_scale: float
    chi2_dof: float


def _observadas(series: BounceSeries) -> np.ndarray:
    fases = series.observed
    if len(fases) == 0:
        raise NoDataError(f"serie sin observaciones: {len(series)} átomos perdidos")
    return fases


def zero_signal_test(series: BounceSeries, config: ExperimentConfig) -> ZeroSignalResult:
    """Prueba z unilateral de la media de φ contra 0 con σ conocida.

    La alternativa apunta en el signo del prefactor del desfase. Con σ = 0
    cualquier fase no nula en esa dirección rechaza con p = 0.
    """
    fases = _observadas(series)
    n = len(fases)
    media = float(np.mean(fases))
    signo = math.copysign(1.0, config.escala_fase)
    sigma = series.noise_sigma

    if sigma == 0:
        if signo * media > 0:
            z, p = math.inf, 0.0
        else:
            z, p = 0.0, 1.0
    else:
        z = signo * media / (sigma / math.sqrt(n))
        p = float(stats.norm.sf(z))
    nivel = float(stats.norm.isf(p)) if 0 < p < 1 else (math.inf if p == 0 else -math.inf)
    return ZeroSignalResult(statistic=z, p_value=p, sigma_level=nivel, mean_phi=media, n=n)


def _ancho_nucleo(config: ExperimentConfig, sigma: float, ref: _ReferenciaMomento) -> float:
    return max(sigma, LR_KERNEL_FRACTION * abs(config.escala_fase) * ref.media_p2)


def _log_verosimilitudes(fases: np.ndarray, medias: np.ndarray, ancho: float) -> np.ndarray:
    """log L(s) de una mezcla gaussiana equiponderada con medias s²·medias, por escala."""
    salida = np.empty(len(ESCALAS_LR))
    for i, s in enumerate(ESCALAS_LR):
        z = (fases[:, None] - s * s * medias[None, :]) / ancho
        salida[i] = float(np.sum(logsumexp(-0.5 * z * z, axis=1)))
    return salida - len(fases) * (math.log(len(medias)) + math.log(ancho * math.sqrt(2.0 * math.pi)))


def _razon_verosimilitud(fases: np.ndarray, medias: np.ndarray, ancho: float) -> Tuple[float, float]:
    """(2·[max_s log L(s) - log L(1)], s óptima)."""
    ll = _log_verosimilitudes(fases, medias, ancho)
    uno = int(np.flatnonzero(ESCALAS_LR == 1.0)[0])
    mejor = int(np.argmax(ll))
    return max(0.0, 2.0 * float(ll[mejor] - ll[uno])), float(ESCALAS_LR[mejor])


def distribution_test(series: BounceSeries, config: ExperimentConfig) -> DistributionTestResult:
    """Bondad de ajuste de los momentos inferidos contra la marginal en momento del modo.

    El estadístico es una razón de verosimilitudes en el espacio de fases:
    OQT (escala 1) contra la familia de marginales escaladas. Su nula se
    calibra con réplicas OQT de la misma longitud y el valor p sale de una
    χ² escalada ajustada por momentos a esas réplicas, lo que permite
    resolver α muy por debajo de 1/réplicas. Se reporta además el valor p
    Monte Carlo directo y el estadístico KS de los momentos inferidos.
    """
    fases = _observadas(series)
    ref = _referencia(config, LR_QUANTILE_NODES)
    medias = config.escala_fase * ref.nodos**2
    ancho = _ancho_nucleo(config, series.noise_sigma, ref)
    lr, escala = _razon_verosimilitud(fases, medias, ancho)

    def replica(indice: int) -> float:
        nula = simulate_run(
            config, TheoryModel.oqt(), len(series), semilla_derivada(series.seed, FLUJO_NULO, indice)
        )
        if len(nula.observed) == 0:
            return 0.0
        return _razon_verosimilitud(nula.observed, medias, ancho)[0]

    R = config.null_replicates
    nulas = np.array(ejecutar_en_paralelo(
        replica, list(range(R)),
        max_workers=config.max_workers, logger=logger, contexto=f"NULO LR n={len(series)}",
    ))

    p_mc = (1.0 + float(np.sum(nulas >= lr))) / (R + 1.0)
    media, var = float(nulas.mean()), float(nulas.var(ddof=1))
    if media > 0 and var > 0:
        a, nu = var / (2.0 * media), 2.0 * media**2 / var
        p = float(stats.chi2.sf(lr / a, nu))
    else:
        a, nu, p = math.nan, math.nan, p_mc

    ks = stats.kstest(infer_momenta(fases, config.densidad, config.mirror), ref.cdf)
    logger.debug("[DISTRIBUCIÓN] LR=%.4g p=%.3g p_mc=%.3g KS=%.4f", lr, p, p_mc, ks.statistic)
    return DistributionTestResult(
        lr_statistic=lr, p_value=p, p_value_mc=p_mc, best_scale=escala,
        ks_statistic=float(ks.statistic), ks_p_value=float(ks.pvalue),
        null_replicates=R, chi2_scale=a, chi2_dof=nu,
    )


def decide(zero: ZeroSignalResult, distribucion: DistributionTestResult, alpha: float) -> Verdict:
    rechaza_estacionario = zero.p_value < alpha
    rechaza_oqt = distribucion.p_value < alpha
    if rechaza_estacionario and not rechaza_oqt:
        return Verdict.FAVORS_OQT
    if rechaza_estacionario and rechaza_oqt:
        return Verdict.FAVORS_DEBB_DISTURBED
    if rechaza_oqt:
        return Verdict.FAVORS_DEBB_STATIONARY
    return Verdict.INCONCLUSIVE


# =============================================================================
# POTENCIA
# =============================================================================
@dataclass(frozen=True)
class BouncesEstimate:
    """Resultado de ``required_bounces``; ``n`` es None si no es alcanzable."""

    n: Optional[int]
    achievable: bool
    power: float
    method: str


@dataclass(frozen=True)
class _ResumenPiloto:
    media: float
    varianza: float
    fraccion_perdida: float


@lru_cache(maxsize=32)
def _piloto_fases(config: ExperimentConfig) -> _ResumenPiloto:
    serie = simulate_run(
        config, TheoryModel.oqt(), PILOT_SAMPLES, semilla_derivada(config.seed, FLUJO_PILOTO, 1)
    )
    fases = serie.phi_true[~serie.lost]
    return _ResumenPiloto(float(fases.mean()), float(fases.var()), serie.n_lost / len(serie))


def _potencia_clt(config: ExperimentConfig, n: int, target_sigma: float) -> float:
    """Potencia aproximada de la prueba z a n rebotes por teorema central del límite."""
    piloto = _piloto_fases(config)
    n_obs = n * (1.0 - piloto.fraccion_perdida)
    sigma = config.noise_sigma
    if sigma == 0:
        return 1.0 if piloto.media != 0 and n_obs >= 1 else 0.0
    centro = abs(piloto.media) * math.sqrt(n_obs) / sigma
    dispersion = math.sqrt(piloto.varianza + sigma**2) / sigma
    return float(stats.norm.cdf((centro - target_sigma) / dispersion))


def _potencia(config: ExperimentConfig, n: int, target_sigma: float) -> Tuple[float, str]:
    """Fracción de réplicas OQT de largo n que alcanzan ``target_sigma``.

    Cada réplica r usa la misma semilla para todo n, así las curvas de
    potencia comparten números aleatorios entre tamaños.
    """
    R = config.power_replicates
    if n * R > EXACT_POWER_BUDGET:
        return _potencia_clt(config, n, target_sigma), "clt"
    umbral = float(stats.norm.sf(target_sigma))
    modelo = TheoryModel.oqt()

    def replica(indice: int) -> bool:
        serie = simulate_run(config, modelo, n, semilla_derivada(config.seed, FLUJO_POTENCIA, indice))
        if len(serie.observed) == 0:
            return False
        return zero_signal_test(serie, config).p_value <= umbral

    exitos = ejecutar_en_paralelo(
        replica, list(range(R)),
        max_workers=config.max_workers, logger=logger, contexto=f"POTENCIA n={n}",
    )
    return float(np.mean(exitos)), "mc"


def required_bounces(config: ExperimentConfig, target_sigma: Optional[float] = None) -> BouncesEstimate:
    """Menor n con potencia ≥ power_level contra el nulo estacionario.

    Búsqueda por duplicación y luego bisección hasta 1% de resolución
    relativa. Sobre MAX_REQUIRED_BOUNCES se declara no alcanzable.
    """
    objetivo = config.target_sigma if target_sigma is None else target_sigma
    nivel = config.power_level

    potencia, metodo = _potencia(config, 1, objetivo)
    if potencia >= nivel:
        return BouncesEstimate(1, True, potencia, metodo)

    bajo, alto = 1, 2
    while True:
        if alto > MAX_REQUIRED_BOUNCES:
            logger.warning("[POTENCIA] %.1fσ no alcanzable con ≤ %d rebotes", objetivo, MAX_REQUIRED_BOUNCES)
            return BouncesEstimate(None, False, potencia, metodo)
        potencia, metodo = _potencia(config, alto, objetivo)
        logger.debug("[POTENCIA] n=%d potencia=%.3f (%s)", alto, potencia, metodo)
        if potencia >= nivel:
            break
        bajo, alto = alto, alto * 2

    mejor = (potencia, metodo)
    while alto - bajo > max(1, alto // 100):
        medio = (bajo + alto) // 2
        pm, mm = _potencia(config, medio, objetivo)
        if pm >= nivel:
            alto, mejor = medio, (pm, mm)
        else:
            bajo = medio
    logger.info("[POTENCIA] %.1fσ con potencia %.2f: n = %d", objetivo, nivel, alto)
    return BouncesEstimate(alto, True, mejor[0], mejor[1])


def power_curve(config: ExperimentConfig, ns: Sequence[int], target_sigma: Optional[float] = None) -> pd.DataFrame:
    objetivo = config.target_sigma if target_sigma is None else target_sigma
    filas = []
    for n in ns:
        potencia, metodo = _potencia(config, int(n), objetivo)
        filas.append({"n": int(n), "power": potencia, "method": metodo})
    return pd.DataFrame(filas, columns=["n", "power", "method"])


# =============================================================================
# REPORTE
# =============================================================================
def _json_float(v: Optional[float]) -> Optional[float]:
    return float(v) if v is not None and math.isfinite(v) else None


@dataclass(frozen=True)
class DiscriminationReport:
    variant: TheoryVariant
    seed: int
    n_bounces: int
    n_lost: int
    phi_observed: np.ndarray
    inferred_momenta: np.ndarray
    zero_signal: ZeroSignalResult
    distribution: DistributionTestResult
    required_bounces: Optional[BouncesEstimate]
    verdict: Verdict
    alpha: float

    def to_dict(self) -> Dict[str, object]:
        """Resumen serializable; las series completas van al CSV."""
        zero = {k: _json_float(v) if isinstance(v, float) else v for k, v in vars(self.zero_signal).items()}
        dist = {k: _json_float(v) if isinstance(v, float) else v for k, v in vars(self.distribution).items()}
        return {
            "variant": self.variant.value,
            "seed": self.seed,
            "n_bounces": self.n_bounces,
            "n_lost": self.n_lost,
            "alpha": self.alpha,
            "verdict": self.verdict.value,
            "zero_signal": zero,
            "distribution": dist,
            "required_bounces": None if self.required_bounces is None else {
                "n": self.required_bounces.n,
                "achievable": self.required_bounces.achievable,
                "power": self.required_bounces.power,
                "method": self.required_bounces.method,
            },
            "mean_inferred_momentum": _json_float(float(np.mean(self.inferred_momenta))),
        }


def hypothesis_test(
    series: BounceSeries,
    config: ExperimentConfig,
    *,
    incluir_potencia: bool = True,
) -> DiscriminationReport:
    """Prueba de señal nula, prueba de distribución y veredicto.

    Raises:
        NoDataError: todos los rebotes de la serie son átomos perdidos.
    """
    fases = _observadas(series)
    zero = zero_signal_test(series, config)
    distribucion = distribution_test(series, config)
    veredicto = decide(zero, distribucion, config.alpha)
    requeridos = required_bounces(config) if incluir_potencia else None
    logger.info(
        "[VEREDICTO] %s (p_cero=%.3g, p_dist=%.3g, n=%d, perdidos=%d)",
        veredicto.value, zero.p_value, distribucion.p_value, len(series), series.n_lost,
    )
    return DiscriminationReport(
        variant=series.variant,
        seed=series.seed,
        n_bounces=len(series),
        n_lost=series.n_lost,
        phi_observed=fases,
        inferred_momenta=infer_momenta(fases, config.densidad, config.mirror),
        zero_signal=zero,
        distribution=distribucion,
        required_bounces=requeridos,
        verdict=veredicto,
        alpha=config.alpha,
    )
