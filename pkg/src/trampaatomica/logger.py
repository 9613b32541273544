"""
Configuración central de logging del proyecto.
"""

import logging
import os
import sys

from .config import ENV_LOG_LEVEL


def configurar_logger(nombre: str = "trampaatomica", nivel: "str | None" = None) -> logging.Logger:
    """Devuelve un logger con un único handler hacia stderr.

    stdout queda libre para el resumen legible de la CLI.
    """
    logger = logging.getLogger(nombre)

    nivel = nivel or os.getenv(ENV_LOG_LEVEL)
    if nivel:
        logger.setLevel(nivel.upper())

    if logger.handlers:
        return logger  # evita duplicar handlers

    if not nivel:
        logger.setLevel(logging.INFO)

    handler = logging.StreamHandler(sys.stderr)
    formatter = logging.Formatter(
        fmt="%(asctime)s | %(levelname)s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )

    handler.setFormatter(formatter)
    logger.addHandler(handler)

    return logger


def fijar_nivel(nivel: str) -> None:
    """Aplica un nivel a todos los loggers del paquete ya creados."""
    for nombre, obj in logging.Logger.manager.loggerDict.items():
        if nombre.startswith("trampaatomica") and isinstance(obj, logging.Logger):
            obj.setLevel(nivel.upper())
