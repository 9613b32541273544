"""Jerarquía de errores del paquete.

Cada familia lleva su código de salida para la CLI:

    ConfigError        → 2
    DominioFisicoError → 3
    PrecisionError     → 4

Cualquier otra excepción termina la CLI con código 1.
"""

from __future__ import annotations

from typing import Any, Optional


class ErrorTrampa(Exception):
    """Base de todos los errores controlados del proyecto."""

    codigo_salida = 1


# =============================================================================
# CONFIGURACIÓN
# =============================================================================
class ConfigError(ErrorTrampa):
    """Archivo de configuración mal formado o con campos inválidos.

    Args:
        mensaje: Descripción del problema.
        campo: Ruta con puntos del campo afectado (ej. ``mirror.detuning``).
        linea: Línea del archivo donde aparece el campo, si se pudo ubicar.
    """

    codigo_salida = 2

    def __init__(self, mensaje: str, campo: Optional[str] = None, linea: Optional[int] = None):
        self.campo = campo
        self.linea = linea
        prefijo = ""
        if campo:
            prefijo += f"[{campo}] "
        if linea:
            prefijo += f"(línea {linea}) "
        super().__init__(prefijo + mensaje)


class ParametroInvalidoError(ConfigError, ValueError):
    """Un registro de dominio viola sus invariantes de tipo."""


# =============================================================================
# DOMINIO FÍSICO
# =============================================================================
class DominioFisicoError(ErrorTrampa):
    codigo_salida = 3


class OutOfDomainError(DominioFisicoError):
    """Posición fuera del pozo (o sobre la pared cuando se exige interior)."""


class NodeSingularityError(DominioFisicoError):
    """Amplitud bajo el umbral de nodo: ∇S no está definido."""


class NodeApproachError(DominioFisicoError):
    """La trayectoria se acercó a un nodo; conserva el último estado válido."""

    def __init__(self, mensaje: str, ultimo_t: float, ultima_posicion: Any):
        self.ultimo_t = ultimo_t
        self.ultima_posicion = ultima_posicion
        super().__init__(mensaje)


class NoTotalInternalReflectionError(DominioFisicoError):
    """Ángulo de incidencia bajo el ángulo crítico: no hay onda evanescente."""


class SurfaceCollisionError(DominioFisicoError):
    """Energía cinética igual o mayor que la barrera: el átomo no se refleja."""


class CaptureError(DominioFisicoError):
    """Van der Waals domina en todo el rango: no hay barrera que refleje."""


class UnphysicalPhaseError(DominioFisicoError):
    """Fase observada con signo opuesto al prefactor del desfase."""


class DegenerateDensityError(DominioFisicoError):
    """Densidad atómica nula: el desfase no se puede invertir."""


class EnsembleQualityError(DominioFisicoError):
    """Demasiadas partículas del ensamble fallaron al integrarse."""

    def __init__(self, mensaje: str, fallidas: int, total: int):
        self.fallidas = fallidas
        self.total = total
        super().__init__(mensaje)


class NoDataError(DominioFisicoError):
    """Serie sin observaciones válidas (todos los átomos perdidos)."""


# =============================================================================
# PRECISIÓN NUMÉRICA
# =============================================================================
class PrecisionError(ErrorTrampa):
    codigo_salida = 4


class AccuracyError(PrecisionError):
    """La cuadratura no alcanzó la tolerancia pedida.

    Attributes:
        estimacion: Valor alcanzado.
        error: Estimación del error absoluto.
    """

    def __init__(self, mensaje: str, estimacion: float, error: float):
        self.estimacion = estimacion
        self.error = error
        super().__init__(f"{mensaje} (estimación={estimacion!r}, error={error!r})")


class ResolutionError(PrecisionError):
    """Malla insuficiente para el oráculo de Fourier."""


class StiffnessError(PrecisionError):
    """El integrador adaptativo redujo el paso por debajo de la resolución."""
