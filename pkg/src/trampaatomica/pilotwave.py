"""Trayectorias de deBroglie-Bohm en el pozo y diagnósticos de ensamble.

La ley de guía es dx/dt = ∇S/m. Para un autoestado ∇S ≡ 0 y la
partícula está en reposo; la dinámica solo aparece en superposiciones.

Política de nodos: si R/amplitud_pico cae bajo NODE_APPROACH_THRESHOLD la
integración se aborta con ``NodeApproachError``; no se regulariza el campo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.constants import hbar, pi
from scipy.integrate import solve_ivp

from .config import (
    ENSEMBLE_CHUNK,
    MAX_NODE_FAILURE_FRACTION,
    NODE_APPROACH_THRESHOLD,
    RELAXATION_BINS,
)
from .errores import (
    EnsembleQualityError,
    NodeApproachError,
    NodeSingularityError,
    OutOfDomainError,
    ParametroInvalidoError,
    StiffnessError,
)
from .logger import configurar_logger
from .paralelo import ejecutar_en_paralelo
from .semillas import FLUJO_ENSAMBLE, generador
from .wellqm import (
    Position3,
    QuantumState,
    WellGeometry,
    _energias,
    _evaluar,
    grad_S,
    grad_s_array,
    peak_amplitude,
    sample_positions,
)

logger = configurar_logger(__name__)

COLUMNAS_TRAYECTORIA = ["t", "x", "y", "z", "vx", "vy", "vz"]


# =============================================================================
# TIPOS
# =============================================================================
@dataclass(frozen=True)
class Trajectory:
    """Trayectoria muestreada en los pasos aceptados del integrador.

    ``times`` es estrictamente monótono en el sentido de la integración
    (decreciente cuando t1 < t0); ``end`` es siempre el estado en t1.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.times)
        if n == 0 or self.positions.shape != (n, 3) or self.velocities.shape != (n, 3):
            raise ParametroInvalidoError("trayectoria con largos inconsistentes", campo="trajectory")
        if n > 1:
            dt = np.diff(self.times)
            if not (np.all(dt > 0) or np.all(dt < 0)):
                raise ParametroInvalidoError("tiempos no monótonos", campo="trajectory")

    @property
    def end(self) -> Position3:
        return Position3(*self.positions[-1])

    def to_frame(self) -> pd.DataFrame:
        datos = np.column_stack([self.times, self.positions, self.velocities])
        return pd.DataFrame(datos, columns=COLUMNAS_TRAYECTORIA)


@dataclass(frozen=True)
class Ensemble:
    """Ensamble de partículas de peso uniforme.

    Attributes:
        positions: Arreglo ``(N, 3)`` en metros.
        discarded: Índices (del ensamble de entrada) que se perdieron por
            aproximación a nodos o por fallo del integrador durante la última
            evolución.
    """

    positions: np.ndarray
    discarded: Tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        if len(pos) < 1:
            raise ParametroInvalidoError("ensamble vacío", campo="ensemble")
        object.__setattr__(self, "positions", pos)

    @classmethod
    def from_positions(cls, particles: Sequence[Position3]) -> "Ensemble":
        return cls(np.array([p.as_array() for p in particles]))

    @property
    def particles(self) -> List[Position3]:
        return [Position3(*p) for p in self.positions]

    def __len__(self) -> int:
        return len(self.positions)

    def to_frame(self, geom: WellGeometry, state: QuantumState, t: float) -> pd.DataFrame:
        """Instantánea (t, x, y, z, vx, vy, vz); la velocidad es ∇S/m en t."""
        v = grad_s_array(geom, state, self.positions, t, verificar_nodos=False) / geom.mass
        datos = np.column_stack([np.full(len(self), t), self.positions, v])
        return pd.DataFrame(datos, columns=COLUMNAS_TRAYECTORIA)


# =============================================================================
# INTEGRACIÓN
# =============================================================================
def _verificar_en_caja(geom: WellGeometry, pos: np.ndarray) -> None:
    L = geom.lados
    if np.any(pos <= 0) or np.any(pos >= L):
        raise OutOfDomainError(f"la trayectoria salió del pozo: {pos.reshape(-1, 3)[0].tolist()}")


def _bajo_umbral_de_nodo(geom: WellGeometry, state: QuantumState, puntos: np.ndarray, t: float) -> np.ndarray:
    """Máscara de puntos que ya empiezan bajo NODE_APPROACH_THRESHOLD; el evento solo ve cruces."""
    psi = _evaluar(geom, state, puntos.reshape(-1, 3), t, derivadas=False)[0]
    return np.abs(psi) / peak_amplitude(geom, state) < NODE_APPROACH_THRESHOLD


def _integrar_bloque(
    geom: WellGeometry,
    state: QuantumState,
    inicio: np.ndarray,
    t0: float,
    t1: float,
    tol: float,
):
    """Integra k partículas como un solo sistema de 3k ecuaciones.

    El evento de nodo vigila la menor amplitud del bloque; al dispararse
    termina la integración de todo el bloque.
    """
    k = len(inicio)
    pico = peak_amplitude(geom, state)
    masa = geom.mass

    def derivada(t, y):
        return (grad_s_array(geom, state, y.reshape(k, 3), t, verificar_nodos=False) / masa).ravel()

    def cerca_de_nodo(t, y):
        psi = _evaluar(geom, state, y.reshape(k, 3), t, derivadas=False)[0]
        return float(np.min(np.abs(psi))) / pico - NODE_APPROACH_THRESHOLD

    cerca_de_nodo.terminal = True
    cerca_de_nodo.direction = -1

    return solve_ivp(
        derivada,
        (t0, t1),
        inicio.ravel(),
        method="RK45",
        rtol=tol,
        atol=tol * float(geom.lados.min()),
        events=cerca_de_nodo,
    )


def integrate_trajectory(
    geom: WellGeometry,
    state: QuantumState,
    start: Position3,
    t0: float,
    t1: float,
    tol: float = 1e-8,
) -> Trajectory:
    """Integra dx/dt = ∇S/m de t0 a t1 con Runge-Kutta 4(5) adaptativo.

    Para autoestados devuelve la trayectoria estática exacta sin llamar al
    integrador.

    Raises:
        OutOfDomainError: inicio fuera del interior estricto.
        NodeSingularityError: inicio sobre un nodo.
        NodeApproachError: la trayectoria se acercó a un nodo o ya partió
            bajo el umbral de aproximación.
        StiffnessError: el paso del integrador colapsó.
    """
    if not tol > 0:
        raise ParametroInvalidoError("tol debe ser positiva", campo="tol")
    inicio = start.as_array()
    grad_S(geom, state, start, t0)  # valida interior y nodo

    if state.is_eigenmode or t1 == t0:
        tiempos = np.array([t0] if t1 == t0 else [t0, t1], dtype=float)
        pos = np.repeat(inicio[None, :], len(tiempos), axis=0)
        return Trajectory(tiempos, pos, np.zeros_like(pos))

    if _bajo_umbral_de_nodo(geom, state, inicio, t0)[0]:
        raise NodeApproachError(
            f"el inicio ya está junto a un nodo en t={t0:.6e} s", ultimo_t=t0, ultima_posicion=start
        )

    sol = _integrar_bloque(geom, state, inicio[None, :], t0, t1, tol)
    if sol.status == 1:
        ultimo_t = float(sol.t_events[0][0])
        ultima = Position3(*sol.y_events[0][0])
        raise NodeApproachError(
            f"aproximación a nodo en t={ultimo_t:.6e} s", ultimo_t=ultimo_t, ultima_posicion=ultima
        )
    if sol.status == -1:
        raise StiffnessError(f"integración fallida: {sol.message}")

    pos = sol.y.T
    _verificar_en_caja(geom, pos)
    vel = np.vstack([grad_s_array(geom, state, p, t, verificar_nodos=False) for p, t in zip(pos, sol.t)])
    return Trajectory(sol.t.copy(), pos, vel / geom.mass)


def _evolucionar_bloque(args) -> Tuple[np.ndarray, List[int]]:
    """Evoluciona un bloque; si el bloque choca con un nodo o falla repite partícula a partícula."""
    geom, state, bloque, t0, t1, tol = args
    sol = None
    if not np.any(_bajo_umbral_de_nodo(geom, state, bloque, t0)):
        sol = _integrar_bloque(geom, state, bloque, t0, t1, tol)
    if sol is not None and sol.status == 0:
        final = sol.y[:, -1].reshape(-1, 3)
        _verificar_en_caja(geom, final)
        return final, []

    finales, fallidas = [], []
    for i, p in enumerate(bloque):
        try:
            finales.append(integrate_trajectory(geom, state, Position3(*p), t0, t1, tol).positions[-1])
        except (NodeApproachError, NodeSingularityError, StiffnessError) as exc:
            logger.debug("[ENSAMBLE] partícula %d descartada: %s", i, exc)
            fallidas.append(i)
    return np.array(finales).reshape(-1, 3), fallidas


def evolve_ensemble(
    geom: WellGeometry,
    state: QuantumState,
    ensemble: Ensemble,
    t0: float,
    t1: float,
    tol: float = 1e-8,
    *,
    max_workers: int = 1,
) -> Ensemble:
    """Avanza cada partícula con la ley de guía.

    Las partículas se integran en bloques fijos de ENSEMBLE_CHUNK, de modo
    que el resultado no depende de ``max_workers``. Las que se acercan a un
    nodo o cuyo paso colapsa se descartan y quedan listadas en ``discarded``.

    Raises:
        EnsembleQualityError: más del 1% de las partículas falló.
    """
    if state.is_eigenmode or t1 == t0:
        return Ensemble(ensemble.positions.copy())

    pos = ensemble.positions
    total = len(pos)
    inicios = list(range(0, total, ENSEMBLE_CHUNK))
    tareas = [(geom, state, pos[i:i + ENSEMBLE_CHUNK], t0, t1, tol) for i in inicios]
    resultados = ejecutar_en_paralelo(
        _evolucionar_bloque, tareas,
        max_workers=max_workers, logger=logger, contexto=f"ENSAMBLE n={total}",
    )

    finales, descartadas = [], []
    for inicio, (final, fallidas) in zip(inicios, resultados):
        finales.append(final)
        descartadas.extend(inicio + i for i in fallidas)

    if descartadas:
        logger.warning("[ENSAMBLE] %d/%d partículas descartadas por nodos", len(descartadas), total)
    if len(descartadas) > MAX_NODE_FAILURE_FRACTION * total:
        raise EnsembleQualityError(
            f"{len(descartadas)} de {total} partículas se acercaron a un nodo",
            fallidas=len(descartadas), total=total,
        )
    return Ensemble(np.concatenate(finales, axis=0), discarded=tuple(descartadas))


# =============================================================================
# ENSAMBLES Y DIAGNÓSTICOS
# =============================================================================
def sample_equilibrium(
    geom: WellGeometry,
    state: QuantumState,
    n: int,
    seed: int,
    t: float = 0.0,
) -> Ensemble:
    """Ensamble en equilibrio cuántico: n posiciones con densidad |Ψ(t)|²."""
    if n < 1:
        raise ParametroInvalidoError("n debe ser ≥ 1", campo="n")
    return Ensemble(sample_positions(geom, state, n, generador(seed, FLUJO_ENSAMBLE), t))


def beat_period(geom: WellGeometry, state: QuantumState) -> float:
    """Periodo 2πħ/|E₂ - E₁| de una superposición de dos modos."""
    if len(state.terms) != 2:
        raise ParametroInvalidoError("el periodo de batido requiere exactamente dos modos", campo="state")
    e1, e2 = _energias(geom, state)
    if math.isclose(e1, e2, rel_tol=1e-12):
        raise ParametroInvalidoError("modos degenerados: no hay batido", campo="state")
    return 2.0 * pi * hbar / abs(e2 - e1)


def _probabilidades_celda(
    geom: WellGeometry,
    state: QuantumState,
    t: float,
    bins: Tuple[int, int, int],
) -> np.ndarray:
    """∫|Ψ(t)|² en cada celda con Gauss-Legendre de 8 nodos por eje."""
    x, w = np.polynomial.legendre.leggauss(8)
    nodos, pesos = [], []
    for eje, b in enumerate(bins):
        bordes = np.linspace(0.0, geom.lados[eje], b + 1)
        semi = 0.5 * np.diff(bordes)
        medio = 0.5 * (bordes[:-1] + bordes[1:])
        nodos.append((medio[:, None] + semi[:, None] * x[None, :]).ravel())
        pesos.append((semi[:, None] * w[None, :]).ravel())
    malla = np.stack(np.meshgrid(*nodos, indexing="ij"), axis=-1).reshape(-1, 3)
    dens = np.abs(_evaluar(geom, state, malla, t, derivadas=False)[0]) ** 2
    dens = dens.reshape(len(nodos[0]), len(nodos[1]), len(nodos[2]))
    ponderada = dens * pesos[0][:, None, None] * pesos[1][None, :, None] * pesos[2][None, None, :]
    bx, by, bz = bins
    return ponderada.reshape(bx, 8, by, 8, bz, 8).sum(axis=(1, 3, 5))


def relaxation_metric(
    geom: WellGeometry,
    state: QuantumState,
    ensemble: Ensemble,
    t: float,
    bins: Optional[Tuple[int, int, int]] = None,
) -> float:
    """Distancia L1 de grano grueso entre el ensamble y |Ψ(t)|², en [0, 2]."""
    if len(ensemble) < 100:
        raise ParametroInvalidoError(
            f"se necesitan al menos 100 partículas (hay {len(ensemble)})", campo="ensemble"
        )
    bins = tuple(bins or RELAXATION_BINS)
    rango = [(0.0, float(L)) for L in geom.lados]
    conteo, _ = np.histogramdd(ensemble.positions, bins=bins, range=rango)
    empirica = conteo / len(ensemble)
    teorica = _probabilidades_celda(geom, state, t, bins)
    teorica /= teorica.sum()
    valor = float(np.abs(empirica - teorica).sum())
    logger.debug("[RELAJACIÓN] L1 = %.4f (n=%d, celdas=%s)", valor, len(ensemble), bins)
    return min(valor, 2.0)
