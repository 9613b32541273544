"""Archivo de configuración de corridas (JSON estricto).

Cada sección del archivo refleja un tipo del dominio. Todas son opcionales;
lo que falta se completa con los valores por defecto de ``config.py``. Una
clave desconocida, en cualquier nivel, es un ``ConfigError`` con la ruta del
campo y la línea donde aparece.

La configuración normalizada (con todos los valores por defecto y la
semilla efectiva) se vuelve a emitir como ``config_echo.json``; su SHA-256
canónico identifica la corrida en la cabecera de cada archivo de salida.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from scipy.constants import hbar, pi

from .config import (
    DEFAULT_ALPHA,
    DEFAULT_DETUNING_OVER_GAMMA,
    DEFAULT_INCIDENCE_ANGLE,
    DEFAULT_NULL_REPLICATES,
    DEFAULT_POWER_LEVEL,
    DEFAULT_POWER_REPLICATES,
    DEFAULT_REFRACTIVE_INDEX,
    DEFAULT_SIDE,
    DEFAULT_SPOT_AREA,
    DEFAULT_TARGET_SIGMA,
    RB87_D2_LINEWIDTH,
    RB87_D2_WAVELENGTH,
    RB87_MASS,
    RELAXATION_BINS,
)
from .errores import ConfigError
from .experiment import ExperimentConfig, TheoryModel, TheoryVariant, mean_oqt_phase
from .mirror import MirrorParams
from .wellqm import ModeIndex, QuantumState, WellGeometry

_I_L_DEFECTO = MirrorParams.rb87_reference().intensity_incident

# Sección → campo → (tipo, valor por defecto). Tipos: float, int, str, bool,
# "float?" / "int?" (admiten null), "modo" ([n_x, n_y, n_z]), "vector3?",
# "terminos?" (lista de {mode, re, im}), "lista_int".
ESQUEMA: Dict[str, Dict[str, Tuple[Any, Any]]] = {
    "geometry": {
        "side_x": (float, DEFAULT_SIDE),
        "side_y": (float, DEFAULT_SIDE),
        "side_z": (float, DEFAULT_SIDE),
        "mass": (float, RB87_MASS),
    },
    "state": {
        "mode": ("modo", [1, 1, 1]),
        "terms": ("terminos?", None),
    },
    "mirror": {
        "wavelength_laser": (float, RB87_D2_WAVELENGTH),
        "refractive_index": (float, DEFAULT_REFRACTIVE_INDEX),
        "incidence_angle": (float, DEFAULT_INCIDENCE_ANGLE),
        "intensity_incident": (float, _I_L_DEFECTO),
        "linewidth": (float, RB87_D2_LINEWIDTH),
        "detuning": (float, DEFAULT_DETUNING_OVER_GAMMA * RB87_D2_LINEWIDTH),
        "vdw_coefficient": (float, 0.0),
        "gravity": (float, 0.0),
        "enhancement_gain": (float, 1.0),
    },
    "phase": {
        "rho_in": ("float?", None),
        "spot_area": (float, DEFAULT_SPOT_AREA),
        "momentum": ("float?", None),
    },
    "experiment": {
        "theory": (str, TheoryVariant.OQT.value),
        "disturbed_scale": (float, 0.5),
        "noise_sigma": (float, 0.0),
        "noise_sigma_relative": ("float?", None),
        "n_bounces": (int, 1000),
        "seed": (int, 0),
        "target_sigma": (float, DEFAULT_TARGET_SIGMA),
        "alpha": (float, DEFAULT_ALPHA),
        "null_replicates": (int, DEFAULT_NULL_REPLICATES),
        "power_replicates": (int, DEFAULT_POWER_REPLICATES),
        "power_level": (float, DEFAULT_POWER_LEVEL),
        "wall_selection": (str, "x"),
        "z_start": ("float?", None),
        "power": (bool, True),
        "power_ns": ("lista_int", []),
    },
    "pilotwave": {
        "t0": (float, 0.0),
        "t1": ("float?", None),
        "tol": (float, 1e-8),
        "start": ("vector3?", None),
        "n_particles": (int, 10_000),
        "bins": ("lista_int", list(RELAXATION_BINS)),
    },
    "bounce": {
        "p_in": ("float?", None),
        "energy_fraction": (float, 0.5),
        "z_start": ("float?", None),
    },
    "levels": {
        "n_from": (int, 1),
        "n_to": (int, 3),
    },
    "pdf": {
        "axis": (int, 0),
        "n_bins": (int, 64),
        "range_units": (float, 8.0),
    },
    "sample": {
        "n": (int, 1000),
    },
    "output": {
        "dir": ("str?", None),
    },
}


# =============================================================================
# VALIDACIÓN
# =============================================================================
def _linea_de(texto: Optional[str], seccion: str, clave: Optional[str] = None) -> Optional[int]:
    """Línea (1-based) donde aparece la clave dentro de su sección, si se ubica."""
    if not texto:
        return None
    lineas = texto.splitlines()
    inicio = next((i for i, l in enumerate(lineas) if f'"{seccion}"' in l), None)
    if inicio is None:
        return None
    if clave is None:
        return inicio + 1
    return next((i + 1 for i in range(inicio, len(lineas)) if f'"{clave}"' in lineas[i]), inicio + 1)


def _es_numero(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _validar_valor(tipo: Any, valor: Any) -> Any:
    """Devuelve el valor normalizado o lanza ValueError con el motivo."""
    opcional = isinstance(tipo, str) and tipo.endswith("?")
    if opcional and valor is None:
        return None
    base = tipo[:-1] if opcional else tipo

    if base in (float, "float"):
        if not _es_numero(valor):
            raise ValueError(f"se esperaba un número, llegó {valor!r}")
        return float(valor)
    if base in (int, "int"):
        if isinstance(valor, bool) or not isinstance(valor, int):
            raise ValueError(f"se esperaba un entero, llegó {valor!r}")
        return int(valor)
    if base in (str, "str"):
        if not isinstance(valor, str):
            raise ValueError(f"se esperaba texto, llegó {valor!r}")
        return valor
    if base is bool:
        if not isinstance(valor, bool):
            raise ValueError(f"se esperaba true/false, llegó {valor!r}")
        return valor
    if base == "modo":
        if not (isinstance(valor, list) and len(valor) == 3 and all(isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in valor)):
            raise ValueError(f"se esperaba [n_x, n_y, n_z] con enteros ≥ 1, llegó {valor!r}")
        return list(valor)
    if base == "vector3":
        if not (isinstance(valor, list) and len(valor) == 3 and all(_es_numero(v) for v in valor)):
            raise ValueError(f"se esperaba [x, y, z], llegó {valor!r}")
        return [float(v) for v in valor]
    if base == "lista_int":
        if not (isinstance(valor, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in valor)):
            raise ValueError(f"se esperaba una lista de enteros, llegó {valor!r}")
        return list(valor)
    if base == "terminos":
        if not (isinstance(valor, list) and valor):
            raise ValueError("se esperaba una lista no vacía de términos")
        salida = []
        for t in valor:
            if not isinstance(t, dict) or set(t) - {"mode", "re", "im"} or "mode" not in t:
                raise ValueError(f"término inválido {t!r}: claves permitidas mode, re, im")
            salida.append({
                "mode": _validar_valor("modo", t["mode"]),
                "re": _validar_valor(float, t.get("re", 0.0)),
                "im": _validar_valor(float, t.get("im", 0.0)),
            })
        return salida
    raise ValueError(f"tipo de esquema desconocido {tipo!r}")


def normalizar(datos: Dict[str, Any], texto: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
    """Aplica el esquema: rechaza claves desconocidas y completa valores por defecto."""
    if not isinstance(datos, dict):
        raise ConfigError("la raíz del archivo debe ser un objeto JSON", linea=1)
    desconocidas = sorted(set(datos) - set(ESQUEMA))
    if desconocidas:
        raise ConfigError(f"sección desconocida {desconocidas[0]!r}", campo=desconocidas[0],
                          linea=_linea_de(texto, desconocidas[0]))

    salida: Dict[str, Dict[str, Any]] = {}
    for seccion, campos in ESQUEMA.items():
        dada = datos.get(seccion, {})
        if not isinstance(dada, dict):
            raise ConfigError("la sección debe ser un objeto", campo=seccion, linea=_linea_de(texto, seccion))
        extra = sorted(set(dada) - set(campos))
        if extra:
            raise ConfigError(f"clave desconocida {extra[0]!r}", campo=f"{seccion}.{extra[0]}",
                              linea=_linea_de(texto, seccion, extra[0]))
        salida[seccion] = {}
        for campo, (tipo, defecto) in campos.items():
            valor = dada.get(campo, copy.deepcopy(defecto))
            try:
                salida[seccion][campo] = _validar_valor(tipo, valor)
            except ValueError as e:
                raise ConfigError(str(e), campo=f"{seccion}.{campo}", linea=_linea_de(texto, seccion, campo)) from None
    return salida


# =============================================================================
# RUNCONFIG
# =============================================================================
@dataclass(frozen=True)
class RunConfig:
    """Configuración normalizada y sus constructores de tipos del dominio."""

    datos: Dict[str, Dict[str, Any]]

    def seccion(self, nombre: str) -> Dict[str, Any]:
        return self.datos[nombre]

    # --- serialización ---
    def to_json(self) -> str:
        return json.dumps(self.datos, sort_keys=True, indent=2, allow_nan=False) + "\n"

    @property
    def sha256(self) -> str:
        canonico = json.dumps(self.datos, sort_keys=True, separators=(",", ":"), allow_nan=False)
        return hashlib.sha256(canonico.encode("utf-8")).hexdigest()

    @property
    def seed(self) -> int:
        return self.datos["experiment"]["seed"]

    def con_semilla(self, seed: Optional[int]) -> "RunConfig":
        """Aplica ``--seed``; la semilla efectiva queda en el eco."""
        if seed is None:
            return self
        if seed < 0:
            raise ConfigError("la semilla debe ser ≥ 0", campo="experiment.seed")
        datos = copy.deepcopy(self.datos)
        datos["experiment"]["seed"] = int(seed)
        return RunConfig(datos)

    # --- tipos del dominio (los errores de invariantes se reportan con su sección) ---
    def _construir(self, seccion: str, fabrica, *args, **kwargs):
        try:
            return fabrica(*args, **kwargs)
        except ConfigError as e:
            if e.campo and "." not in e.campo:
                raise ConfigError(str(e).split("] ", 1)[-1], campo=f"{seccion}.{e.campo}") from None
            raise

    def geometry(self) -> WellGeometry:
        return self._construir("geometry", WellGeometry, **self.datos["geometry"])

    def mode(self) -> ModeIndex:
        return self._construir("state", ModeIndex, *self.datos["state"]["mode"])

    def state(self) -> QuantumState:
        terminos = self.datos["state"]["terms"]
        if terminos is None:
            return QuantumState.eigen(self.mode())
        pares = [(tuple(t["mode"]), complex(t["re"], t["im"])) for t in terminos]
        return self._construir("state", QuantumState.superposition, pares)

    def mirror(self) -> MirrorParams:
        return self._construir("mirror", MirrorParams, atom_mass=self.datos["geometry"]["mass"], **self.datos["mirror"])

    def theory(self) -> TheoryModel:
        exp = self.datos["experiment"]
        try:
            variante = TheoryVariant(exp["theory"])
        except ValueError:
            opciones = ", ".join(v.value for v in TheoryVariant)
            raise ConfigError(f"teoría desconocida {exp['theory']!r} (opciones: {opciones})",
                              campo="experiment.theory") from None
        if variante is TheoryVariant.DEBB_DISTURBED:
            return self._construir("experiment", TheoryModel.disturbed, self.geometry(), self.mode(), exp["disturbed_scale"])
        return TheoryModel(variante)

    def experiment(self, max_workers: int = 1) -> ExperimentConfig:
        """ExperimentConfig; con ``noise_sigma_relative`` el ruido se fija como fracción de |φ_OQT| medio."""
        exp = self.datos["experiment"]
        fase = self.datos["phase"]
        if exp["noise_sigma_relative"] is not None and exp["noise_sigma"] != 0:
            raise ConfigError("noise_sigma y noise_sigma_relative son excluyentes",
                              campo="experiment.noise_sigma_relative")
        config = self._construir(
            "experiment", ExperimentConfig,
            geometry=self.geometry(),
            mode=self.mode(),
            mirror=self.mirror(),
            noise_sigma=exp["noise_sigma"],
            n_bounces=exp["n_bounces"],
            seed=exp["seed"],
            rho_in=fase["rho_in"],
            target_sigma=exp["target_sigma"],
            alpha=exp["alpha"],
            null_replicates=exp["null_replicates"],
            power_replicates=exp["power_replicates"],
            power_level=exp["power_level"],
            wall_selection=exp["wall_selection"],
            spot_area=fase["spot_area"],
            z_start=exp["z_start"],
            max_workers=max(1, int(max_workers)),
        )
        if exp["noise_sigma_relative"] is not None:
            if exp["noise_sigma_relative"] < 0:
                raise ConfigError("debe ser ≥ 0", campo="experiment.noise_sigma_relative")
            config = config.replace(noise_sigma=exp["noise_sigma_relative"] * abs(mean_oqt_phase(config)))
        return config

    def phase_momentum(self) -> float:
        """p para ``phase``: el configurado o la escala ħπ/L_x del modo fundamental."""
        p = self.datos["phase"]["momentum"]
        return p if p is not None else hbar * pi / self.datos["geometry"]["side_x"]


def desde_dict(datos: Dict[str, Any], texto: Optional[str] = None) -> RunConfig:
    return RunConfig(normalizar(datos, texto))


def cargar_config(ruta: Optional[Path]) -> RunConfig:
    """Lee y valida el archivo; sin ruta devuelve la configuración por defecto."""
    if ruta is None:
        return desde_dict({})
    ruta = Path(ruta)
    try:
        texto = ruta.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"no se pudo leer {ruta}: {e.strerror}") from None
    try:
        datos = json.loads(texto)
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON mal formado: {e.msg} (columna {e.colno})", linea=e.lineno) from None
    return desde_dict(datos, texto)
