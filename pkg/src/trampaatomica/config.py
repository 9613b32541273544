"""
Configuración global del proyecto trampaatomica.

Centraliza rutas de salida, variables de entorno y los valores por defecto
de los parámetros físicos (Rb-87 en un pozo cúbico de 1 µm frente a un
espejo evanescente de 780 nm). Los valores numéricos de las tolerancias
viven aquí para que los módulos de física no tengan constantes mágicas.
"""

import os
from pathlib import Path

from scipy.constants import atomic_mass, pi

# --- RESOLUCIÓN DE RUTAS ---
# Ubicación de este archivo: src/trampaatomica/config.py
_CURRENT_FILE = Path(__file__).resolve()

# PROJECT_ROOT: raíz del repositorio (dos niveles sobre el paquete).
PROJECT_ROOT = _CURRENT_FILE.parents[2]

# DATA_DIR: carpeta por defecto de todos los artefactos generados.
DATA_DIR = PROJECT_ROOT / "data"

# --- VARIABLES DE ENTORNO ---
ENV_OUT_DIR = "TRAMPA_OUT_DIR"
ENV_LOG_LEVEL = "TRAMPA_LOG_LEVEL"


def directorio_salida(cli: "str | None" = None, archivo: "str | None" = None) -> Path:
    """Resuelve el directorio de salida: CLI > entorno > archivo de config > DATA_DIR."""
    for candidato in (cli, os.getenv(ENV_OUT_DIR), archivo):
        if candidato:
            return Path(candidato)
    return DATA_DIR


# --- ÁTOMO DE REFERENCIA (Rb-87, línea D2) ---
RB87_MASS = 86.909180520 * atomic_mass      # kg
RB87_D2_WAVELENGTH = 780e-9                 # m (780.241 nm redondeado)
RB87_D2_LINEWIDTH = 2 * pi * 6.07e6         # rad/s

# --- POZO ---
DEFAULT_SIDE = 1e-6                         # m

# --- ESPEJO ---
DEFAULT_REFRACTIVE_INDEX = 1.5
DEFAULT_INCIDENCE_ANGLE = pi / 3            # rad
DEFAULT_DETUNING_OVER_GAMMA = 1e3
DEFAULT_IEV_OVER_ISAT = 100.0
DEFAULT_SPOT_AREA = (100e-6) ** 2           # m²

# Umbral |Δ|/Γ por debajo del cual se advierte que no hay óptica atómica coherente.
COHERENT_DETUNING_RATIO = 100.0

# --- NUMÉRICOS ---
NODE_THRESHOLD = 1e-9                       # fracción de la amplitud pico
NODE_APPROACH_THRESHOLD = 1e-6              # evento terminal de aproximación a nodo
SINGULAR_WINDOW = 1e-4                      # |pL/ħ - nπ| para la serie del factor en momento
TABLE_KNOTS = 16384
TABLE_RANGE_PI = 200                        # tabla sobre ±200·πħ/L
QUAD_EPSREL = 1e-8
QUAD_EPSABS = 1e-14
MIN_POINTS_PER_PERIOD = 16
RELAXATION_BINS = (8, 8, 8)
MAX_NODE_FAILURE_FRACTION = 0.01
ENSEMBLE_CHUNK = 256
BOUNCE_START_KAPPA = 10.0                   # z_start·κ por defecto
MIN_START_KAPPA = 3.0
BOUNCE_RTOL = 1e-12
ENERGY_DRIFT_MAX = 1e-8
BARRIER_GRID = 4096

# --- EXPERIMENTO ---
DEFAULT_ALPHA = 2.87e-7                     # 5σ unilateral
DEFAULT_TARGET_SIGMA = 5.0
DEFAULT_NULL_REPLICATES = 10_000
DEFAULT_POWER_REPLICATES = 200
DEFAULT_POWER_LEVEL = 0.95
MAX_REQUIRED_BOUNCES = 10_000_000
EXACT_POWER_BUDGET = 20_000_000             # rebotes simulados por evaluación de potencia
LR_QUANTILE_NODES = 64
LR_SCALE_POINTS = 24                        # escalas de la alternativa, más la escala 1
LR_KERNEL_FRACTION = 0.05                   # ancho mínimo del núcleo, en unidades de |φ_OQT| medio
PILOT_SAMPLES = 200_000
