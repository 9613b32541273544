import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import hbar, pi
from scipy.stats import kstest

from trampaatomica.errores import AccuracyError, ParametroInvalidoError, ResolutionError
from trampaatomica.momentum import (
    FourierGrid,
    MomentumBox,
    MomentumVector,
    _factor_u,
    fourier_oracle,
    integrate_prob,
    marginal_cdf,
    marginal_density,
    momentum_table,
    phi_sq,
    sample_momenta,
    sample_momentum,
)

MODOS_ORACULO = [(1, 1, 1), (2, 1, 1), (3, 2, 1)]


def _factor_exacto(n: int, u: float, digitos: int = 50) -> float:
    """Factor 1D con aritmética de precisión extendida."""
    u = sp.Float(u, digitos)
    valor = 2 * n * n * sp.pi * (1 - (-1) ** n * sp.cos(u)) / ((n * sp.pi) ** 2 - u**2) ** 2
    return float(valor.evalf(digitos))


# =============================================================================
# DENSIDAD
# =============================================================================
@pytest.mark.parametrize("n", [1, 2, 3, 7])
def test_limite_en_el_punto_singular(n):
    assert float(_factor_u(n, n * pi)) == pytest.approx(1.0 / (4.0 * pi), rel=1e-14)
    assert float(_factor_u(n, -n * pi)) == pytest.approx(1.0 / (4.0 * pi), rel=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("delta", [1e-6, -1e-6, 9.9e-5, -9.9e-5, 1.01e-4, 3e-3])
def test_continuidad_alrededor_del_punto_singular(n, delta):
    u = n * pi + delta
    assert float(_factor_u(n, u)) == pytest.approx(_factor_exacto(n, u), rel=1e-4)


@pytest.mark.parametrize("u", [0.0, 0.3, 2.5, 17.0, 101.3])
def test_factor_fuera_de_singularidades_contra_precision_extendida(u):
    for n in (1, 2, 5):
        assert float(_factor_u(n, u)) == pytest.approx(_factor_exacto(n, u), rel=1e-10, abs=1e-300)


@settings(max_examples=50, deadline=None)
@given(p=st.tuples(*[st.floats(-40.0, 40.0)] * 3), modo=st.tuples(*[st.integers(1, 4)] * 3))
def test_phi_sq_par_y_no_negativa(geom, p, modo):
    escala = hbar * pi / geom.side_x
    v = np.array(p) * escala
    assert phi_sq(geom, modo, v) >= 0
    assert phi_sq(geom, modo, -v) == pytest.approx(phi_sq(geom, modo, v), rel=1e-12)


def test_phi_sq_acepta_vector_y_arreglo(geom):
    v = MomentumVector(1e-28, -2e-28, 0.5e-28)
    esperado = np.prod([marginal_density(geom, (2, 1, 1), e, v.as_array()[e]) for e in range(3)])
    assert phi_sq(geom, (2, 1, 1), v) == pytest.approx(esperado, rel=1e-14)
    assert phi_sq(geom, (2, 1, 1), np.array([v.as_array()] * 4)).shape == (4,)


def test_momento_no_finito_rechazado():
    with pytest.raises(ParametroInvalidoError):
        MomentumVector(math.nan, 0.0, 0.0)


# =============================================================================
# INTEGRACIÓN
# =============================================================================
@pytest.mark.parametrize("modo", MODOS_ORACULO)
def test_normalizacion_total(geom_rect, modo):
    assert integrate_prob(geom_rect, modo, MomentumBox.full()) == pytest.approx(1.0, abs=1e-6)


def test_semiespacio_por_paridad(geom):
    caja = MomentumBox.full().con_eje(0, 0.0, math.inf)
    assert integrate_prob(geom, (1, 1, 1), caja) == pytest.approx(0.5, abs=1e-6)


def test_caja_degenerada_tiene_probabilidad_cero(geom):
    caja = MomentumBox.full().con_eje(1, 2e-28, 2e-28)
    assert integrate_prob(geom, (1, 1, 1), caja) == 0.0


def test_caja_invertida_rechazada():
    with pytest.raises(ParametroInvalidoError):
        MomentumBox((1.0, 0.0, 0.0), (0.0, 1.0, 1.0))


def test_tolerancia_inalcanzable_reporta_la_estimacion(geom):
    with pytest.raises(AccuracyError) as info:
        integrate_prob(geom, (1, 1, 1), MomentumBox.full(), tolerancia=1e-30)
    assert info.value.estimacion == pytest.approx(1.0, abs=1e-6)


def test_tabla_de_intervalos_suma_con_las_colas(geom):
    escala = hbar * pi / geom.side_x
    bordes = np.linspace(-6, 6, 25) * escala
    tabla = momentum_table(geom, (2, 1, 1), 0, bordes)
    assert list(tabla.columns) == ["p_lo", "p_hi", "probability"]
    colas = 2 * integrate_prob(geom, (2, 1, 1), MomentumBox.full().con_eje(0, bordes[-1], math.inf))
    assert tabla.probability.sum() + colas == pytest.approx(1.0, abs=1e-6)


def test_cdf_tabulada_contra_cuadratura(geom):
    escala = hbar * pi / geom.side_x
    for u in (-5.0, -1.0, 0.0, 0.4, 2.0, 9.0):
        caja = MomentumBox.full().con_eje(0, -math.inf, u * escala)
        assert float(marginal_cdf(geom, (3, 2, 1), 0, u * escala)) == pytest.approx(
            integrate_prob(geom, (3, 2, 1), caja), abs=1e-5
        )


# =============================================================================
# MUESTREO
# =============================================================================
def test_muestreo_contra_cdf(geom, rng):
    p = sample_momenta(geom, (2, 1, 1), 100_000, rng)
    assert p.shape == (100_000, 3)
    for eje in range(3):
        ks = kstest(p[:, eje], lambda v, e=eje: marginal_cdf(geom, (2, 1, 1), e, v))
        assert ks.statistic < 0.01


def test_muestra_determinista_por_semilla(geom):
    assert sample_momentum(geom, (1, 1, 1), 42) == sample_momentum(geom, (1, 1, 1), 42)
    assert sample_momentum(geom, (1, 1, 1), 42) != sample_momentum(geom, (1, 1, 1), 43)


# =============================================================================
# ORÁCULO DE FOURIER
# =============================================================================
@pytest.mark.parametrize("modo", MODOS_ORACULO)
def test_oraculo_coincide_con_la_densidad_analitica(geom_rect, modo):
    oraculo = fourier_oracle(geom_rect, modo)
    for eje in range(3):
        p = oraculo.momenta[eje]
        u = p * geom_rect.lados[eje] / hbar
        analitica = marginal_density(geom_rect, modo, eje, p)
        mascara = (np.abs(u) < 20 * pi) & (analitica > 1e-6 * analitica.max())
        np.testing.assert_allclose(oraculo.factors[eje][mascara], analitica[mascara], rtol=1e-3)


@pytest.mark.parametrize("modo", MODOS_ORACULO)
def test_oraculo_parseval(geom, modo):
    oraculo = fourier_oracle(geom, modo)
    assert oraculo.total() == pytest.approx(1.0, abs=1e-3)
    for valor in oraculo.parseval:
        assert valor == pytest.approx(1.0, abs=1e-3)


def test_oraculo_se_anula_en_cero_para_modo_par(geom):
    oraculo = fourier_oracle(geom, (2, 1, 1))
    cero = int(np.argmin(np.abs(oraculo.momenta[0])))
    assert oraculo.momenta[0][cero] == 0.0
    assert oraculo.factors[0][cero] < 1e-6 * oraculo.factors[0].max()


def test_oraculo_con_malla_insuficiente(geom):
    with pytest.raises(ResolutionError):
        fourier_oracle(geom, (3, 1, 1), FourierGrid(samples_per_side=16))
