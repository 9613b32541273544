import json

import numpy as np
import pytest

from trampaatomica import __version__, cli
from trampaatomica.errores import ResolutionError
from trampaatomica.io_utils import leer_cabecera, leer_csv

ESTACIONARIO = {
    "experiment": {
        "theory": "debb-stationary",
        "noise_sigma": 0.0,
        "n_bounces": 500,
        "null_replicates": 20,
        "power": False,
        "seed": 4,
    }
}

SUPERPOSICION = {
    "state": {"terms": [{"mode": [1, 1, 1], "re": 1.0}, {"mode": [2, 1, 1], "im": 1.0}]},
    "pilotwave": {"n_particles": 300, "bins": [2, 2, 2]},
}


def _config(tmp_path, datos, nombre="corrida.json"):
    ruta = tmp_path / nombre
    ruta.write_text(json.dumps(datos, indent=2), encoding="utf-8")
    return str(ruta)


def _correr(tmp_path, comando, datos=None, *extra, salida="salida"):
    argv = [comando, "--out", str(tmp_path / salida), *extra]
    if datos is not None:
        argv += ["--config", _config(tmp_path, datos)]
    return cli.main(argv)


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_comando_desconocido():
    with pytest.raises(SystemExit) as info:
        cli.main(["teletransportar"])
    assert info.value.code == 2


def test_niveles_y_eco_de_configuracion(tmp_path):
    assert _correr(tmp_path, "levels", {"levels": {"n_to": 2}}) == 0
    salida = tmp_path / "salida"
    df = leer_csv(salida / "levels.csv")
    assert list(df.columns) == ["n_x", "n_y", "n_z", "energy_J", "energy_Hz"]
    assert len(df) == 8
    assert df.energy_J.is_monotonic_increasing
    eco = json.loads((salida / "config_echo.json").read_text(encoding="utf-8"))
    assert eco["levels"]["n_to"] == 2
    cabecera = leer_cabecera(salida / "levels.csv")
    assert cabecera["schema"] == "levels v1"
    assert cabecera["seed"] == "0"


def test_rango_de_niveles_vacio(tmp_path):
    assert _correr(tmp_path, "levels", {"levels": {"n_from": 4, "n_to": 3}}) == 0
    df = leer_csv(tmp_path / "salida" / "levels.csv")
    assert df.empty
    assert list(df.columns) == ["n_x", "n_y", "n_z", "energy_J", "energy_Hz"]


def test_pdf_incluye_la_normalizacion(tmp_path):
    assert _correr(tmp_path, "pdf", {"pdf": {"n_bins": 16, "range_units": 4.0}}) == 0
    bins = leer_csv(tmp_path / "salida" / "pdf_bins.csv")
    assert len(bins) == 17
    total = bins.iloc[-1]
    assert np.isneginf(total.p_lo) and np.isposinf(total.p_hi)
    assert total.probability == pytest.approx(1.0, abs=1e-6)
    assert bins.probability.iloc[:-1].sum() < 1.0
    densidad = leer_csv(tmp_path / "salida" / "pdf_density.csv")
    assert list(densidad.columns) == ["p", "density", "density_fourier"]


def test_salidas_identicas_byte_a_byte(tmp_path):
    datos = {"experiment": {"n_bounces": 200, "noise_sigma_relative": 0.2}}
    for salida in ("a", "b"):
        assert _correr(tmp_path, "simulate", datos, "--seed", "9", salida=salida) == 0
    for nombre in ("series.csv", "simulate.json", "config_echo.json"):
        assert (tmp_path / "a" / nombre).read_bytes() == (tmp_path / "b" / nombre).read_bytes()


def test_semilla_cambia_la_serie(tmp_path):
    datos = {"experiment": {"n_bounces": 50}}
    _correr(tmp_path, "simulate", datos, "--seed", "1", salida="a")
    _correr(tmp_path, "simulate", datos, "--seed", "2", salida="b")
    a = leer_csv(tmp_path / "a" / "series.csv")
    b = leer_csv(tmp_path / "b" / "series.csv")
    assert not a.p_normal.equals(b.p_normal)
    assert leer_cabecera(tmp_path / "b" / "series.csv")["seed"] == "2"


def test_muestreo(tmp_path):
    assert _correr(tmp_path, "sample", {"sample": {"n": 100}}) == 0
    df = leer_csv(tmp_path / "salida" / "sample.csv")
    assert df.shape == (100, 3)


def test_fase(tmp_path):
    assert _correr(tmp_path, "phase", {"phase": {"rho_in": 1e16}}) == 0
    datos = json.loads((tmp_path / "salida" / "phase.json").read_text(encoding="utf-8"))
    assert datos["phi"] == pytest.approx(-3.9477e-9, rel=1e-3)
    assert datos["momentum_inverted"] == pytest.approx(datos["momentum"], rel=1e-12)
    assert datos["_header"]["schema"] == "phase v1"


def test_rebote(tmp_path):
    assert _correr(tmp_path, "bounce", {"bounce": {"energy_fraction": 0.25}}) == 0
    resumen = json.loads((tmp_path / "salida" / "bounce.json").read_text(encoding="utf-8"))
    assert resumen["p_out"] == pytest.approx(-resumen["p_in"], rel=1e-6)
    assert resumen["barrier_kind"] == "surface"
    assert list(leer_csv(tmp_path / "salida" / "potential.csv").columns) == ["z", "U"]


def test_discriminacion_estacionaria(tmp_path):
    assert _correr(tmp_path, "discriminate", ESTACIONARIO) == 0
    reporte = json.loads((tmp_path / "salida" / "report.json").read_text(encoding="utf-8"))
    assert reporte["verdict"] == "favors-deBB-stationary"
    assert reporte["required_bounces"] is None
    assert reporte["zero_signal"]["p_value"] == 1.0


def test_curva_de_potencia_opcional(tmp_path):
    datos = {"experiment": {**ESTACIONARIO["experiment"], "power_ns": [1, 4], "power_replicates": 10}}
    assert _correr(tmp_path, "discriminate", datos) == 0
    curva = leer_csv(tmp_path / "salida" / "power_curve.csv")
    assert curva.n.tolist() == [1, 4]


def test_trayectoria_y_ensamble(tmp_path):
    assert _correr(tmp_path, "trajectory", SUPERPOSICION) == 0
    tray = leer_csv(tmp_path / "salida" / "trajectory.csv")
    assert list(tray.columns) == ["t", "x", "y", "z", "vx", "vy", "vz"]
    assert tray.x.iloc[-1] != tray.x.iloc[0]

    assert _correr(tmp_path, "ensemble", SUPERPOSICION, "--threads", "2") == 0
    resumen = json.loads((tmp_path / "salida" / "ensemble.json").read_text(encoding="utf-8"))
    assert resumen["n_particles"] == 300
    assert 0.0 <= resumen["relaxation_t1"] <= 2.0
    assert len(resumen["ks_marginals_t1"]) == 3
    assert all(0.0 < ks < 0.15 for ks in resumen["ks_marginals_t1"])
    assert len(leer_csv(tmp_path / "salida" / "ensemble_t1.csv")) == 300 - len(resumen["discarded"])


# =============================================================================
# CÓDIGOS DE SALIDA
# =============================================================================
def test_error_de_configuracion(tmp_path, caplog):
    assert _correr(tmp_path, "levels", {"levels": {"hasta": 3}}) == 2
    assert "levels.hasta" in caplog.text


def test_error_de_dominio_fisico(tmp_path):
    assert _correr(tmp_path, "bounce", {"bounce": {"p_in": 1e-30}}) == 3
    sin_reflexion = {"mirror": {"incidence_angle": 0.5}}
    assert _correr(tmp_path, "phase", sin_reflexion) == 3


def test_error_de_precision(tmp_path, monkeypatch):
    def falla(ctx):
        raise ResolutionError("malla insuficiente")

    monkeypatch.setitem(cli.COMANDOS, "pdf", falla)
    assert _correr(tmp_path, "pdf") == 4


def test_error_inesperado(tmp_path, monkeypatch):
    def falla(ctx):
        raise RuntimeError("boom")

    monkeypatch.setitem(cli.COMANDOS, "levels", falla)
    assert _correr(tmp_path, "levels") == 1


def test_directorio_desde_entorno(tmp_path, monkeypatch):
    monkeypatch.setenv("TRAMPA_OUT_DIR", str(tmp_path / "entorno"))
    assert cli.main(["levels", "--config", _config(tmp_path, {"levels": {"n_to": 1}})]) == 0
    assert (tmp_path / "entorno" / "levels.csv").exists()
