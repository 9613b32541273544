import math
from itertools import product

import numpy as np
import pytest
import sympy as sp
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.constants import hbar, pi
from scipy.integrate import trapezoid
from scipy.stats import kstest

from trampaatomica.config import RB87_MASS
from trampaatomica.errores import NodeSingularityError, OutOfDomainError, ParametroInvalidoError
from trampaatomica.wellqm import (
    ModeIndex,
    Position3,
    QuantumState,
    WellGeometry,
    density_array,
    energy,
    eval_psi,
    grad_S,
    peak_amplitude,
    position_marginal,
    position_marginal_cdf,
    sample_positions,
    wave_value,
)

modos = st.tuples(*[st.integers(1, 3)] * 3)
coeficientes = st.complex_numbers(min_magnitude=0.1, max_magnitude=2.0, allow_nan=False, allow_infinity=False)


@st.composite
def estados(draw, max_terminos=3):
    elegidos = draw(st.lists(modos, min_size=1, max_size=max_terminos, unique=True))
    return QuantumState.superposition([(m, draw(coeficientes)) for m in elegidos])


def _interior(geom, u):
    return Position3(*(np.asarray(u) * geom.lados))


# =============================================================================
# ENERGÍAS
# =============================================================================
def test_energia_modo_fundamental_contra_expresion_simbolica(geom):
    n, L, m, h = sp.symbols("n L m hbar", positive=True)
    por_eje = (n / L) ** 2 * sp.pi**2 * h**2 / (2 * m)
    esperado = 3 * float(por_eje.subs({n: 1, L: 1e-6, m: RB87_MASS, h: hbar}))
    assert energy(geom, (1, 1, 1)) == pytest.approx(esperado, rel=1e-14)


def test_caja_no_cubica_separa_degeneracion(geom_rect, geom):
    assert energy(geom_rect, (2, 1, 1)) != energy(geom_rect, (1, 2, 1))
    assert energy(geom, (2, 1, 1)) == pytest.approx(energy(geom, (1, 2, 1)), rel=1e-15)


def test_energia_crece_con_el_indice(geom):
    assert energy(geom, (1, 1, 1)) < energy(geom, (2, 1, 1)) < energy(geom, (2, 2, 1))


# =============================================================================
# TIPOS
# =============================================================================
@pytest.mark.parametrize("lados", [(0.0, 1e-6, 1e-6), (1e-6, -1.0, 1e-6), (1e-6, 1e-6, math.inf)])
def test_geometria_invalida(lados):
    with pytest.raises(ParametroInvalidoError):
        WellGeometry(*lados, RB87_MASS)


@pytest.mark.parametrize("indices", [(0, 1, 1), (1, -2, 1), (1, 1, True)])
def test_modo_invalido(indices):
    with pytest.raises(ParametroInvalidoError):
        ModeIndex(*indices)


def test_estado_rechaza_norma_y_repetidos():
    with pytest.raises(ParametroInvalidoError):
        QuantumState((((1, 1, 1), 0.5),))
    with pytest.raises(ParametroInvalidoError):
        QuantumState.superposition([((1, 1, 1), 1.0), ((1, 1, 1), 1.0)])
    with pytest.raises(ParametroInvalidoError):
        QuantumState.superposition([((1, 1, 1), 0.0)])


def test_superposicion_normaliza():
    estado = QuantumState.superposition([((1, 1, 1), 3.0), ((2, 1, 1), 4.0j)])
    assert np.sum(np.abs(estado.coeficientes) ** 2) == pytest.approx(1.0, abs=1e-15)
    assert not estado.is_eigenmode


# =============================================================================
# FUNCIÓN DE ONDA
# =============================================================================
@settings(max_examples=40, deadline=None)
@given(estado=estados(), u=st.tuples(*[st.floats(0.01, 0.99)] * 3), t=st.floats(0.0, 1e-3))
def test_forma_polar_reconstruye_el_valor(estado, u, t):
    geom = WellGeometry.cubic(1e-6, RB87_MASS)
    muestra = eval_psi(geom, estado, _interior(geom, u), t)
    if muestra.amplitude_R > 1e-6 * peak_amplitude(geom, estado):
        reconstruido = muestra.amplitude_R * np.exp(1j * muestra.phase_S / hbar)
        assert abs(reconstruido - muestra.value) <= 1e-10 * abs(muestra.value)
    assert muestra.amplitude_R >= 0


def test_autoestado_fase_con_salto_de_signo(geom):
    estado = QuantumState.eigen((2, 1, 1))
    izquierda = eval_psi(geom, estado, _interior(geom, (0.25, 0.5, 0.5)), 0.0)
    derecha = eval_psi(geom, estado, _interior(geom, (0.75, 0.5, 0.5)), 0.0)
    assert derecha.phase_S - izquierda.phase_S == pytest.approx(pi * hbar)
    assert izquierda.amplitude_R == pytest.approx(derecha.amplitude_R)


def test_se_anula_en_las_seis_caras(geom, superposicion, rng):
    interior = np.abs(density_array(geom, superposicion, rng.uniform(0, 1, (2000, 3)) * geom.lados, 0.3e-3))
    maximo = math.sqrt(interior.max())
    for eje in range(3):
        for borde in (0.0, geom.lados[eje]):
            for _ in range(10):
                p = rng.uniform(0, 1, 3) * geom.lados
                p[eje] = borde
                assert abs(wave_value(geom, superposicion, Position3(*p), 0.3e-3)) < 1e-12 * maximo


def test_eval_psi_exige_interior_estricto(geom, superposicion):
    with pytest.raises(OutOfDomainError):
        eval_psi(geom, superposicion, Position3(0.0, 0.5e-6, 0.5e-6), 0.0)
    with pytest.raises(OutOfDomainError):
        eval_psi(geom, superposicion, Position3(0.5e-6, 1.2e-6, 0.5e-6), 0.0)


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(estado=estados(), t=st.floats(0.0, 5e-3))
def test_normalizacion_por_cuadratura(estado, t):
    geom = WellGeometry(1e-6, 1.3e-6, 0.8e-6, RB87_MASS)
    x, w = np.polynomial.legendre.leggauss(40)
    nodos = [0.5 * L * (x + 1) for L in geom.lados]
    pesos = [0.5 * L * w for L in geom.lados]
    malla = np.stack(np.meshgrid(*nodos, indexing="ij"), axis=-1).reshape(-1, 3)
    dens = density_array(geom, estado, malla, t).reshape(40, 40, 40)
    total = np.einsum("ijk,i,j,k->", dens, *pesos)
    assert total == pytest.approx(1.0, abs=1e-6)


# =============================================================================
# MOMENTO DE deBROGLIE-BOHM
# =============================================================================
@pytest.mark.parametrize("modo", list(product(range(1, 4), repeat=3)))
def test_grad_s_nulo_exacto_en_autoestados(geom, modo):
    estado = QuantumState.eigen(modo, 1j)
    puntos = sample_positions(geom, estado, 1000, np.random.default_rng(sum(modo)))
    for t in (0.0, 1.7e-3):
        for punto in puntos:
            assert np.array_equal(grad_S(geom, estado, Position3(*punto), t), np.zeros(3))


def test_grad_s_contra_diferencias_finitas(geom):
    estado = QuantumState.superposition([((1, 1, 1), 1.0), ((2, 1, 1), 0.7j), ((1, 2, 1), 0.4 - 0.3j)])
    pos = np.array([0.37, 0.41, 0.55]) * geom.lados
    t = 0.4e-3
    h = 1e-5 * geom.side_x
    numerico = np.empty(3)
    for eje in range(3):
        d = np.zeros(3)
        d[eje] = h
        adelante = wave_value(geom, estado, Position3(*(pos + d)), t)
        atras = wave_value(geom, estado, Position3(*(pos - d)), t)
        numerico[eje] = hbar * np.angle(adelante / atras) / (2 * h)
    analitico = grad_S(geom, estado, Position3(*pos), t)
    np.testing.assert_allclose(analitico, numerico, rtol=1e-6, atol=1e-6 * np.linalg.norm(analitico))


def test_grad_s_rechaza_nodos(geom):
    with pytest.raises(NodeSingularityError):
        grad_S(geom, QuantumState.eigen((2, 1, 1)), _interior(geom, (0.5, 0.3, 0.3)), 0.0)


# =============================================================================
# MUESTREO Y MARGINALES
# =============================================================================
def test_marginal_de_posicion_normalizada(geom, superposicion):
    x = np.linspace(0, geom.side_x, 20001)
    area = trapezoid(position_marginal(geom, superposicion, 0, 0.2e-3, x), x)
    assert area == pytest.approx(1.0, abs=1e-6)


def test_muestreo_sigue_la_marginal(geom, superposicion, rng):
    pts = sample_positions(geom, superposicion, 20000, rng, t=0.1e-3)
    assert pts.shape == (20000, 3)
    assert np.all((pts > 0) & (pts < geom.lados))
    for eje in range(3):
        ks = kstest(pts[:, eje], position_marginal_cdf(geom, superposicion, eje, 0.1e-3))
        assert ks.statistic < 0.02
