from __future__ import annotations

"""
CLI del proyecto trampaatomica.

Interfaz de línea de comandos: lee un archivo de configuración JSON, delega
en los módulos de física y escribe los artefactos (CSV/JSON) en el
directorio de salida. No contiene lógica de física.

────────────────────────────────────────────────────────────────────
SUBCOMANDOS
────────────────────────────────────────────────────────────────────
- levels        Energías del pozo para un rango de modos          → levels.csv
- pdf           Probabilidades de p_eje por intervalos            → pdf_bins.csv, pdf_density.csv
- sample        Momentos muestreados por la regla de Born         → sample.csv
- bounce        Rebote clásico en el espejo evanescente           → bounce.csv, potential.csv, bounce.json
- phase         Desfase del láser para un momento                 → phase.json
- simulate      Serie de rebotes bajo una teoría                  → series.csv, simulate.json
- discriminate  Serie + pruebas + veredicto + potencia            → series.csv, report.json
- trajectory    Trayectoria de deBroglie-Bohm                     → trajectory.csv
- ensemble      Ensamble en equilibrio evolucionado + relajación  → ensemble_t0.csv, ensemble_t1.csv, ensemble.json

Todos escriben además config_echo.json (configuración normalizada).

────────────────────────────────────────────────────────────────────
PRECEDENCIAS
────────────────────────────────────────────────────────────────────
- Directorio de salida: --out > $TRAMPA_OUT_DIR > output.dir > data/
- Semilla:              --seed > experiment.seed

────────────────────────────────────────────────────────────────────
CÓDIGOS DE SALIDA
────────────────────────────────────────────────────────────────────
0 éxito | 1 error inesperado | 2 configuración | 3 dominio físico | 4 precisión numérica

────────────────────────────────────────────────────────────────────
EJEMPLOS DE USO
────────────────────────────────────────────────────────────────────
trampasim levels --config corrida.json
trampasim pdf --config corrida.json --out resultados/
trampasim discriminate --config corrida.json --seed 7 --threads 8
TRAMPA_OUT_DIR=/tmp/salida trampasim simulate --log-level DEBUG
"""

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from scipy.constants import h as PLANCK_H
from scipy.constants import hbar, pi
from scipy.stats import kstest

from . import __version__
from .config import directorio_salida
from .errores import ErrorTrampa
from .experiment import hypothesis_test, mean_oqt_phase, power_curve, simulate_run
from .io_utils import guardar_csv, guardar_json, guardar_texto
from .logger import configurar_logger, fijar_nivel
from .mirror import (
    barrier_analysis,
    bounce,
    coherent_regime,
    decay_kappa,
    evanescent_intensity,
    max_reflectable_momentum,
    saturation_intensity,
    surface_potential,
)
from .momentum import (
    MomentumBox,
    fourier_oracle,
    integrate_prob,
    marginal_density,
    momentum_table,
    sample_momenta,
)
from .phaseshift import (
    PhaseShiftInput,
    invert_momentum,
    observe,
    phase_prefactor,
    phase_shift,
    single_atom_density,
)
from .pilotwave import (
    beat_period,
    evolve_ensemble,
    integrate_trajectory,
    relaxation_metric,
    sample_equilibrium,
)
from .run_config import RunConfig, cargar_config
from .semillas import FLUJO_MUESTREO, FLUJO_RUIDO, generador, semilla_derivada
from .utils_modos import modos_de_rango
from .wellqm import Position3, energy, position_marginal_cdf

logger = configurar_logger(__name__)


@dataclass(frozen=True)
class Contexto:
    rc: RunConfig
    out: Path
    threads: int

    def csv(self, df: pd.DataFrame, nombre: str, esquema: str) -> Path:
        return guardar_csv(df, self.out / nombre, esquema=esquema, config_sha256=self.rc.sha256, seed=self.rc.seed)

    def json(self, datos: Dict, nombre: str, esquema: str) -> Path:
        return guardar_json(datos, self.out / nombre, esquema=esquema, config_sha256=self.rc.sha256, seed=self.rc.seed)


def imprimir_separador(titulo: str, threads: int) -> None:
    """Banner visual del resumen."""
    print(f"\n{'='*80}")
    print(f"▶ {titulo}")
    print(f"▶ CONFIGURACIÓN: {threads} hilos concurrentes (si aplica)")
    print(f"{'='*80}")


# =============================================================================
# SUBCOMANDOS
# =============================================================================
def cmd_levels(ctx: Contexto) -> List[str]:
    geom = ctx.rc.geometry()
    sec = ctx.rc.seccion("levels")
    filas = [
        {"n_x": m[0], "n_y": m[1], "n_z": m[2], "energy_J": energy(geom, m), "energy_Hz": energy(geom, m) / PLANCK_H}
        for m in modos_de_rango(sec["n_from"], sec["n_to"])
    ]
    df = pd.DataFrame(filas, columns=["n_x", "n_y", "n_z", "energy_J", "energy_Hz"])
    df = df.sort_values(["energy_J", "n_x", "n_y", "n_z"], kind="mergesort").reset_index(drop=True)
    ctx.csv(df, "levels.csv", "levels")
    if df.empty:
        return ["Rango de modos vacío: 0 niveles."]
    return [f"{len(df)} niveles; E mínima {df.energy_J.iloc[0]:.6e} J ({df.energy_Hz.iloc[0]:.4f} Hz)"]


def cmd_pdf(ctx: Contexto) -> List[str]:
    geom, modo = ctx.rc.geometry(), ctx.rc.mode()
    sec = ctx.rc.seccion("pdf")
    eje = sec["axis"]
    escala = hbar * pi / geom.lados[eje]
    bordes = np.linspace(-sec["range_units"], sec["range_units"], sec["n_bins"] + 1) * escala

    tabla = momentum_table(geom, modo, eje, bordes)
    total = integrate_prob(geom, modo, MomentumBox.full())
    tabla = pd.concat(
        [tabla, pd.DataFrame([{"p_lo": -np.inf, "p_hi": np.inf, "probability": total}])],
        ignore_index=True,
    )
    ctx.csv(tabla, "pdf_bins.csv", "pdf_bins")

    p = np.linspace(bordes[0], bordes[-1], 2001)
    oraculo = fourier_oracle(geom, modo)
    densidad = pd.DataFrame({
        "p": p,
        "density": marginal_density(geom, modo, eje, p),
        "density_fourier": np.interp(p, oraculo.momenta[eje], oraculo.factors[eje]),
    })
    ctx.csv(densidad, "pdf_density.csv", "pdf_density")
    return [
        f"Normalización ∭|φ|² = {total:.9f}",
        f"P(|p_{'xyz'[eje]}| ≤ {sec['range_units']:g}·πħ/L) = {tabla.probability.iloc[:-1].sum():.6f}",
    ]


def cmd_sample(ctx: Contexto) -> List[str]:
    geom, modo = ctx.rc.geometry(), ctx.rc.mode()
    n = ctx.rc.seccion("sample")["n"]
    p = sample_momenta(geom, modo, n, generador(ctx.rc.seed, FLUJO_MUESTREO))
    ctx.csv(pd.DataFrame(p, columns=["p_x", "p_y", "p_z"]), "sample.csv", "sample")
    return [f"{n} momentos muestreados; ⟨p_x²⟩^½ = {np.sqrt(np.mean(p[:, 0] ** 2)):.6e} kg·m/s"]


def cmd_bounce(ctx: Contexto) -> List[str]:
    espejo = ctx.rc.mirror()
    sec = ctx.rc.seccion("bounce")
    perfil = barrier_analysis(espejo)
    ctx.csv(perfil.to_frame(), "potential.csv", "potential")

    p_in = sec["p_in"]
    if p_in is None:
        p_in = -np.sqrt(sec["energy_fraction"]) * max_reflectable_momentum(espejo, sec["z_start"])
    resultado = bounce(espejo, p_in, sec["z_start"])
    ctx.csv(resultado.to_frame(), "bounce.csv", "bounce")
    ctx.json({
        "p_in": p_in,
        "p_out": resultado.p_out,
        "z_turn": resultado.z_turn,
        "energy_drift": resultado.energy_drift,
        "barrier_kind": perfil.kind.value,
        "barrier_z": perfil.barrier_z,
        "barrier_height": perfil.barrier_height,
    }, "bounce.json", "bounce")
    return [
        f"Barrera {perfil.kind.value}: altura {perfil.barrier_height:.6e} J",
        f"p_in = {p_in:.6e} → p_out = {resultado.p_out:.6e} kg·m/s; z_turn = {resultado.z_turn:.6e} m",
    ]


def cmd_phase(ctx: Contexto) -> List[str]:
    espejo = ctx.rc.mirror()
    fase = ctx.rc.seccion("phase")
    rho = fase["rho_in"] if fase["rho_in"] is not None else single_atom_density(espejo, fase["spot_area"])
    p = ctx.rc.phase_momentum()
    phi = phase_shift(PhaseShiftInput(p, rho, espejo))
    medicion = observe(phi, ctx.rc.seccion("experiment")["noise_sigma"],
                       semilla_derivada(ctx.rc.seed, FLUJO_RUIDO))
    ctx.json({
        "momentum": p,
        "rho_in": rho,
        "phi": phi,
        "phi_observed": medicion.phi_observed,
        "noise_sigma": medicion.noise_sigma,
        "prefactor": phase_prefactor(espejo),
        "momentum_inverted": invert_momentum(phi, rho, espejo),
        "kappa": decay_kappa(espejo),
        "intensity_evanescent": evanescent_intensity(espejo),
        "intensity_saturation": saturation_intensity(espejo.linewidth, espejo.wavelength_laser),
        "surface_potential": surface_potential(espejo),
        "coherent_regime": coherent_regime(espejo),
    }, "phase.json", "phase")
    return [f"φ = {phi:.6e} rad para p = {p:.6e} kg·m/s, ρ_in = {rho:.6e} m⁻³"]


def cmd_simulate(ctx: Contexto) -> List[str]:
    config = ctx.rc.experiment(ctx.threads)
    modelo = ctx.rc.theory()
    serie = simulate_run(config, modelo)
    ctx.csv(serie.to_frame(), "series.csv", "series")
    media = float(np.mean(serie.observed)) if len(serie.observed) else float("nan")
    ctx.json({
        "variant": modelo.variant.value,
        "n_bounces": len(serie),
        "n_lost": serie.n_lost,
        "noise_sigma": config.noise_sigma,
        "mean_phi_observed": media,
        "mean_phi_oqt": mean_oqt_phase(config),
    }, "simulate.json", "simulate")
    return [f"{modelo.variant.value}: {len(serie)} rebotes, {serie.n_lost} perdidos, ⟨φ⟩ = {media:.6e} rad"]


def cmd_discriminate(ctx: Contexto) -> List[str]:
    config = ctx.rc.experiment(ctx.threads)
    exp = ctx.rc.seccion("experiment")
    serie = simulate_run(config, ctx.rc.theory())
    ctx.csv(serie.to_frame(), "series.csv", "series")
    reporte = hypothesis_test(serie, config, incluir_potencia=exp["power"])
    ctx.json(reporte.to_dict(), "report.json", "report")
    if exp["power_ns"]:
        ctx.csv(power_curve(config, exp["power_ns"]), "power_curve.csv", "power_curve")

    lineas = [
        f"Veredicto: {reporte.verdict.value}",
        f"Señal nula: p = {reporte.zero_signal.p_value:.3e} ({reporte.zero_signal.sigma_level:.2f}σ)",
        f"Distribución (LR): p = {reporte.distribution.p_value:.3e}; KS = {reporte.distribution.ks_statistic:.4f}",
    ]
    if reporte.required_bounces is not None:
        n = reporte.required_bounces.n
        lineas.append(f"Rebotes requeridos ({config.target_sigma:g}σ): {n if n is not None else 'no alcanzable'}")
    return lineas


def _inicio_y_tiempos(ctx: Contexto):
    geom, estado = ctx.rc.geometry(), ctx.rc.state()
    sec = ctx.rc.seccion("pilotwave")
    t0, t1 = sec["t0"], sec["t1"]
    if t1 is None:
        periodo = beat_period(geom, estado) if len(estado.terms) == 2 else 2 * pi * hbar / energy(geom, estado.terms[0][0])
        t1 = t0 + periodo
    inicio = sec["start"] or [0.37 * geom.side_x, 0.5 * geom.side_y, 0.5 * geom.side_z]
    return geom, estado, sec, Position3(*inicio), t0, t1


def cmd_trajectory(ctx: Contexto) -> List[str]:
    geom, estado, sec, inicio, t0, t1 = _inicio_y_tiempos(ctx)
    tray = integrate_trajectory(geom, estado, inicio, t0, t1, sec["tol"])
    ctx.csv(tray.to_frame(), "trajectory.csv", "trajectory")
    desplazamiento = float(np.linalg.norm(tray.positions[-1] - tray.positions[0]))
    return [f"{len(tray.times)} pasos; desplazamiento neto {desplazamiento:.6e} m"]


def cmd_ensemble(ctx: Contexto) -> List[str]:
    geom, estado, sec, _, t0, t1 = _inicio_y_tiempos(ctx)
    bins = tuple(sec["bins"])
    inicial = sample_equilibrium(geom, estado, sec["n_particles"], ctx.rc.seed, t0)
    final = evolve_ensemble(geom, estado, inicial, t0, t1, sec["tol"], max_workers=ctx.threads)
    ctx.csv(inicial.to_frame(geom, estado, t0), "ensemble_t0.csv", "ensemble")
    ctx.csv(final.to_frame(geom, estado, t1), "ensemble_t1.csv", "ensemble")

    ks = [float(kstest(final.positions[:, e], position_marginal_cdf(geom, estado, e, t1)).statistic) for e in range(3)]
    datos = {
        "t0": t0,
        "t1": t1,
        "n_particles": len(inicial),
        "discarded": list(final.discarded),
        "relaxation_t0": relaxation_metric(geom, estado, inicial, t0, bins),
        "relaxation_t1": relaxation_metric(geom, estado, final, t1, bins),
        "ks_marginals_t1": ks,
    }
    ctx.json(datos, "ensemble.json", "ensemble")
    return [
        f"L1(t0) = {datos['relaxation_t0']:.4f}, L1(t1) = {datos['relaxation_t1']:.4f}",
        f"KS marginales en t1: {', '.join(f'{v:.4f}' for v in ks)}; descartadas {len(final.discarded)}",
    ]


COMANDOS: Dict[str, Callable[[Contexto], List[str]]] = {
    "levels": cmd_levels,
    "pdf": cmd_pdf,
    "sample": cmd_sample,
    "bounce": cmd_bounce,
    "phase": cmd_phase,
    "simulate": cmd_simulate,
    "discriminate": cmd_discriminate,
    "trajectory": cmd_trajectory,
    "ensemble": cmd_ensemble,
}


# =============================================================================
# ENTRADA
# =============================================================================
def construir_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trampasim",
        description="Simulador de la trampa de espejos evanescentes: OQT frente a deBroglie-Bohm",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("comando", choices=list(COMANDOS), help="Subcomando a ejecutar.")
    parser.add_argument("--config", type=Path, default=None, help="Archivo JSON de configuración.")
    parser.add_argument("--out", default=None, help="Directorio de salida.")
    parser.add_argument("--seed", type=int, default=None, help="Semilla (sobrescribe experiment.seed).")
    parser.add_argument("--threads", type=int, default=1, help="Hilos concurrentes.")
    parser.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = construir_parser().parse_args(argv)
    if args.log_level:
        fijar_nivel(args.log_level)

    try:
        rc = cargar_config(args.config).con_semilla(args.seed)
        out = directorio_salida(args.out, rc.seccion("output")["dir"])
        ctx = Contexto(rc=rc, out=out, threads=max(1, args.threads))
        guardar_texto(rc.to_json(), out / "config_echo.json")

        imprimir_separador(f"{args.comando.upper()} | SEMILLA: {rc.seed}", ctx.threads)
        for linea in COMANDOS[args.comando](ctx):
            print(linea)
        print(f"Artefactos en {out}")
        return 0

    except ErrorTrampa as e:
        logger.error("[%s] %s: %s", args.comando.upper(), type(e).__name__, e)
        return e.codigo_salida
    except Exception as e:
        logger.exception("[%s] Error inesperado: %s", args.comando.upper(), e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
