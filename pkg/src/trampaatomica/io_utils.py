"""
Utilidades de entrada/salida (CSV y JSON).

Cada archivo emitido lleva una cabecera con la versión del esquema, el
SHA-256 de la configuración y la semilla:

    # trampaatomica 0.1.0
    # schema: series v1
    # config_sha256: 3f7a...
    # seed: 12345

En CSV la cabecera va como líneas de comentario antes de los nombres de
columna (léase con ``pd.read_csv(..., comment="#")``); en JSON como la
clave ``_header``. Los flotantes se escriben con 17 dígitos significativos
para que la ida y vuelta sea exacta, y nada depende del reloj: la misma
configuración y semilla producen archivos idénticos byte a byte.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from . import __version__
from .logger import configurar_logger

logger = configurar_logger(__name__)

# Versiones de los esquemas de columnas (documentados en README.md).
ESQUEMAS = {
    "levels": 1,
    "pdf_bins": 1,
    "pdf_density": 1,
    "sample": 1,
    "bounce": 1,
    "potential": 1,
    "series": 1,
    "power_curve": 1,
    "trajectory": 1,
    "ensemble": 1,
    "phase": 1,
    "simulate": 1,
    "report": 1,
}


def _cabecera(esquema: str, config_sha256: str, seed: Optional[int]) -> Dict[str, Any]:
    return {
        "generator": f"trampaatomica {__version__}",
        "schema": f"{esquema} v{ESQUEMAS.get(esquema, 1)}",
        "config_sha256": config_sha256,
        "seed": seed,
    }


def guardar_csv(
    df: pd.DataFrame,
    ruta: Path,
    *,
    esquema: str,
    config_sha256: str,
    seed: Optional[int],
) -> Path:
    """Escribe ``df`` con la cabecera de trazabilidad."""
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    cab = _cabecera(esquema, config_sha256, seed)

    with open(ruta, "w", encoding="utf-8", newline="") as f:
        f.write(f"# {cab['generator']}\n")
        f.write(f"# schema: {cab['schema']}\n")
        f.write(f"# config_sha256: {config_sha256}\n")
        f.write(f"# seed: {seed}\n")
        df.to_csv(f, index=False, float_format="%.17g", lineterminator="\n")

    logger.debug("[%s] CSV generado (%d filas, %d cols).", ruta.name, df.shape[0], df.shape[1])
    return ruta


def _a_json(valor: Any) -> Any:
    """Convierte tipos numpy y flotantes no finitos a valores JSON estándar."""
    if isinstance(valor, dict):
        return {str(k): _a_json(v) for k, v in valor.items()}
    if isinstance(valor, (list, tuple)):
        return [_a_json(v) for v in valor]
    if isinstance(valor, np.ndarray):
        return [_a_json(v) for v in valor.tolist()]
    if isinstance(valor, (np.integer,)):
        return int(valor)
    if isinstance(valor, (float, np.floating)):
        return float(valor) if math.isfinite(valor) else None
    if isinstance(valor, np.bool_):
        return bool(valor)
    return valor


def guardar_json(
    datos: Dict[str, Any],
    ruta: Path,
    *,
    esquema: str,
    config_sha256: str,
    seed: Optional[int],
) -> Path:
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    contenido = {"_header": _cabecera(esquema, config_sha256, seed), **_a_json(datos)}
    with open(ruta, "w", encoding="utf-8", newline="") as f:
        json.dump(contenido, f, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
        f.write("\n")
    return ruta


def guardar_texto(texto: str, ruta: Path) -> Path:
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    with open(ruta, "w", encoding="utf-8", newline="") as f:
        f.write(texto)
    return ruta


def leer_csv(ruta: Path) -> pd.DataFrame:
    return pd.read_csv(ruta, comment="#", float_precision="round_trip")


def leer_cabecera(ruta: Path) -> Dict[str, str]:
    """Pares clave/valor de las líneas ``# clave: valor`` iniciales de un CSV."""
    salida: Dict[str, str] = {}
    with open(ruta, encoding="utf-8") as f:
        for linea in f:
            if not linea.startswith("#"):
                break
            if ":" in linea:
                clave, valor = linea[1:].split(":", 1)
                salida[clave.strip()] = valor.strip()
    return salida
