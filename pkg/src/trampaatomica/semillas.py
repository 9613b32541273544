"""Derivación reproducible de flujos aleatorios.

Toda la aleatoriedad del paquete sale de ``generador(semilla, *claves)``:
la misma semilla y las mismas claves producen la misma secuencia, sin importar
el orden de ejecución de los hilos.
"""

from __future__ import annotations

import numpy as np

# Claves de flujo; fijas para que el contrato de determinismo sobreviva a refactorizaciones.
FLUJO_REBOTES = 1
FLUJO_RUIDO = 2
FLUJO_NULO = 3
FLUJO_POTENCIA = 4
FLUJO_ENSAMBLE = 5
FLUJO_MUESTREO = 6
FLUJO_PILOTO = 7


def generador(semilla: int, *claves: int) -> np.random.Generator:
    """Generador independiente para ``(semilla, claves...)``."""
    ss = np.random.SeedSequence(entropy=int(semilla), spawn_key=tuple(int(c) for c in claves))
    return np.random.default_rng(ss)


def semilla_derivada(semilla: int, *claves: int) -> int:
    """Entero de 64 bits derivado de ``(semilla, claves...)``, para sub-corridas."""
    ss = np.random.SeedSequence(entropy=int(semilla), spawn_key=tuple(int(c) for c in claves))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
