"""Motor de ejecución concurrente para tareas independientes.

Centraliza el patrón Master-Worker del proyecto: réplicas Monte Carlo,
bloques de partículas de un ensamble y barridos de parámetros se despachan a
un ``ThreadPoolExecutor``. NumPy/SciPy liberan el GIL en las operaciones
vectoriales, por lo que los hilos rinden con bloques grandes.

Reglas:
    - Los resultados vuelven en el orden de entrada, no en el de llegada.
    - La aleatoriedad nunca depende del hilo: cada tarea recibe su propia
      semilla derivada de su índice (ver ``semillas.py``).
    - Un fallo en una tarea no tumba el pool cuando ``tolerar_fallos=True``:
      la excepción queda en su posición del resultado.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, List, Sequence, TypeVar, Union

T = TypeVar("T")
R = TypeVar("R")


def ejecutar_en_paralelo(
    tarea: Callable[[T], R],
    argumentos: Sequence[T],
    *,
    max_workers: int = 1,
    logger: logging.Logger,
    contexto: str,
    tolerar_fallos: bool = False,
) -> List[Union[R, Exception]]:
    """Aplica ``tarea`` a cada argumento y devuelve los resultados en orden.

    Args:
        tarea: Función pura de un argumento.
        argumentos: Entradas; su orden fija el orden de la salida.
        max_workers: Hilos simultáneos. Con 1 se ejecuta en el hilo actual.
        logger: Logger del módulo llamador.
        contexto: Etiqueta para los mensajes (ej. 'NULO LR n=1000').
        tolerar_fallos: Si es True, las excepciones se devuelven en su
            posición; si es False, se relanza la primera (por índice).

    Returns:
        Lista de resultados (o excepciones) alineada con ``argumentos``.
    """
    total = len(argumentos)
    resultados: List[Union[R, Exception, None]] = [None] * total

    if max_workers <= 1 or total <= 1:
        for i, arg in enumerate(argumentos):
            try:
                resultados[i] = tarea(arg)
            except Exception as e:
                if not tolerar_fallos:
                    raise
                resultados[i] = e
    else:
        logger.debug("[%s] Despachando %d tareas (%d hilos)", contexto, total, max_workers)
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            futuros = {executor.submit(tarea, arg): i for i, arg in enumerate(argumentos)}
            for futuro in as_completed(futuros):
                i = futuros[futuro]
                try:
                    resultados[i] = futuro.result()
                except Exception as e:
                    resultados[i] = e

        if not tolerar_fallos:
            for r in resultados:
                if isinstance(r, Exception):
                    raise r

    fallos = sum(isinstance(r, Exception) for r in resultados)
    logger.debug("[%s] Finalizado. Cobertura: %d/%d tareas.", contexto, total - fallos, total)
    return resultados  # type: ignore[return-value]
