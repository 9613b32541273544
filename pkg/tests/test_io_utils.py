import json

import numpy as np
import pandas as pd
import pytest

from trampaatomica import __version__
from trampaatomica.io_utils import ESQUEMAS, guardar_csv, guardar_json, leer_cabecera, leer_csv

SHA = "ab" * 32


def test_csv_con_cabecera(tmp_path):
    df = pd.DataFrame({"p": [0.1, 1.0 / 3.0, -np.inf], "n": [1, 2, 3]})
    ruta = guardar_csv(df, tmp_path / "sub" / "datos.csv", esquema="series", config_sha256=SHA, seed=12)
    lineas = ruta.read_text(encoding="utf-8").splitlines()
    assert lineas[:4] == [
        f"# trampaatomica {__version__}",
        "# schema: series v1",
        f"# config_sha256: {SHA}",
        "# seed: 12",
    ]
    assert lineas[4] == "p,n"
    assert leer_cabecera(ruta) == {"schema": "series v1", "config_sha256": SHA, "seed": "12"}


def test_csv_conserva_los_flotantes(tmp_path):
    valores = np.random.default_rng(0).normal(size=50) * 1e-28
    ruta = guardar_csv(pd.DataFrame({"p": valores}), tmp_path / "p.csv", esquema="sample", config_sha256=SHA, seed=0)
    assert np.array_equal(leer_csv(ruta).p.to_numpy(), valores)


def test_json_con_cabecera_y_no_finitos(tmp_path):
    datos = {"a": np.float64(1.5), "b": np.int64(3), "c": np.array([1.0, np.nan]), "d": np.bool_(True), "e": np.inf}
    ruta = guardar_json(datos, tmp_path / "r.json", esquema="report", config_sha256=SHA, seed=None)
    leido = json.loads(ruta.read_text(encoding="utf-8"))
    assert leido["_header"] == {
        "generator": f"trampaatomica {__version__}",
        "schema": "report v1",
        "config_sha256": SHA,
        "seed": None,
    }
    assert leido["a"] == 1.5 and leido["b"] == 3 and leido["d"] is True
    assert leido["c"] == [1.0, None]
    assert leido["e"] is None


@pytest.mark.parametrize("esquema", sorted(ESQUEMAS))
def test_esquemas_versionados(esquema):
    assert ESQUEMAS[esquema] >= 1
