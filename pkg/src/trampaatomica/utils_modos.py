"""Expansión de rangos de modos del pozo.

El usuario expresa una intención ("todos los modos con n ≤ 3") y este módulo
la traduce a la lista concreta de índices que consumen los módulos de física.
"""

from __future__ import annotations

from itertools import product
from typing import List, Tuple


def modos_hasta(n_max: int) -> List[Tuple[int, int, int]]:
    """Todos los (n_x, n_y, n_z) con 1 ≤ n_i ≤ n_max. Vacío si n_max < 1."""
    if n_max < 1:
        return []
    return list(product(range(1, n_max + 1), repeat=3))


def modos_de_rango(desde: int, hasta: int) -> List[Tuple[int, int, int]]:
    """Modos cuyo mayor índice está en [desde, hasta]."""
    return [m for m in modos_hasta(hasta) if max(m) >= desde]
