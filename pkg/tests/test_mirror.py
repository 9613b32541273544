import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import hbar

from trampaatomica.config import RB87_D2_LINEWIDTH, RB87_D2_WAVELENGTH
from trampaatomica import mirror
from trampaatomica.errores import (
    CaptureError,
    NoTotalInternalReflectionError,
    OutOfDomainError,
    ParametroInvalidoError,
    PrecisionError,
    SurfaceCollisionError,
)
from trampaatomica.mirror import (
    BarrierKind,
    MirrorParams,
    barrier_analysis,
    bounce,
    coherent_regime,
    critical_angle,
    decay_kappa,
    decay_length,
    evanescent_intensity,
    max_reflectable_momentum,
    potential_profile,
    resultant_potential,
    saturation_intensity,
    surface_potential,
)


def _con_vdw(espejo: MirrorParams, c: float) -> MirrorParams:
    """Mismo espejo con C₃ elegido para que C₃κ³/U₀ = c."""
    kappa, u0 = decay_kappa(espejo), surface_potential(espejo)
    return MirrorParams(**{**vars(espejo), "vdw_coefficient": c * u0 / kappa**3})


def _con(espejo: MirrorParams, **cambios) -> MirrorParams:
    return MirrorParams(**{**vars(espejo), **cambios})


# =============================================================================
# ÓPTICA
# =============================================================================
def test_valores_de_referencia_rb87(espejo):
    assert critical_angle(1.5) == pytest.approx(0.729728, rel=1e-5)
    assert decay_kappa(espejo) == pytest.approx(6.679e6, rel=1e-3)
    assert decay_length(espejo) == pytest.approx(1.0 / decay_kappa(espejo), rel=1e-15)
    assert evanescent_intensity(espejo) == pytest.approx(1.2 * espejo.intensity_incident, rel=1e-12)
    assert saturation_intensity(RB87_D2_LINEWIDTH, RB87_D2_WAVELENGTH) == pytest.approx(16.7, rel=5e-3)
    i_sat = saturation_intensity(espejo.linewidth, espejo.wavelength_laser)
    assert evanescent_intensity(espejo) / i_sat == pytest.approx(100.0, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    n=st.floats(1.05, 2.5),
    fraccion=st.floats(0.01, 0.99),
    lam=st.floats(400e-9, 1100e-9),
    i_l=st.floats(1.0, 1e4),
)
def test_optica_contra_formulas_a_mano(n, fraccion, lam, i_l):
    theta_c = math.asin(1 / n)
    theta = theta_c + fraccion * (math.pi / 2 - theta_c)
    espejo = MirrorParams(lam, n, theta, i_l, RB87_D2_LINEWIDTH, 1e3 * RB87_D2_LINEWIDTH, 1.443e-25)
    kappa = 2 * math.pi / lam * math.sqrt((n * math.sin(theta)) ** 2 - 1)
    i_ev = 4 * n * math.cos(theta) ** 2 * i_l / (n**2 - 1)
    assert decay_kappa(espejo) == pytest.approx(kappa, rel=1e-12)
    assert evanescent_intensity(espejo) == pytest.approx(i_ev, rel=1e-12)


def test_sin_reflexion_total(espejo):
    with pytest.raises(NoTotalInternalReflectionError):
        decay_kappa(_con(espejo, incidence_angle=0.5))
    with pytest.raises(NoTotalInternalReflectionError):
        evanescent_intensity(_con(espejo, incidence_angle=critical_angle(1.5)))


def test_angulo_limite_da_intensidad_finita(espejo):
    theta_c = critical_angle(1.5)
    limite = _con(espejo, incidence_angle=theta_c + 1e-9)
    esperado = 4 * 1.5 * math.cos(theta_c) ** 2 * espejo.intensity_incident / (1.5**2 - 1)
    assert evanescent_intensity(limite) == pytest.approx(esperado, rel=1e-8)
    assert decay_kappa(limite) > 0


@pytest.mark.parametrize(
    "cambios",
    [{"refractive_index": 1.0}, {"detuning": -1.0}, {"enhancement_gain": 0.5}, {"wavelength_laser": math.nan}],
)
def test_parametros_invalidos(espejo, cambios):
    with pytest.raises(ParametroInvalidoError):
        _con(espejo, **cambios)


def test_regimen_coherente(espejo, caplog):
    assert coherent_regime(espejo)
    cerca = _con(espejo, detuning=10 * espejo.linewidth)
    assert not coherent_regime(cerca)
    with caplog.at_level(logging.WARNING):
        resultant_potential(cerca, 1e-7)
    assert "no coherente" in caplog.text


# =============================================================================
# POTENCIAL Y BARRERA
# =============================================================================
def test_potencial_exponencial_puro(espejo):
    kappa, u0 = decay_kappa(espejo), surface_potential(espejo)
    z = np.array([0.1, 1.0, 3.0]) / kappa
    np.testing.assert_allclose(resultant_potential(espejo, z), u0 * np.exp(-2 * kappa * z), rtol=1e-14)
    with pytest.raises(OutOfDomainError):
        resultant_potential(espejo, 0.0)


def test_barrera_de_superficie_sin_van_der_waals(espejo):
    perfil = barrier_analysis(espejo)
    assert perfil.kind is BarrierKind.SURFACE
    assert perfil.has_barrier
    assert perfil.barrier_height == pytest.approx(surface_potential(espejo), rel=1e-14)
    con_gravedad = barrier_analysis(_con(espejo, gravity=9.81))
    assert con_gravedad.kind is BarrierKind.SURFACE


@pytest.mark.parametrize("c", [1e-4, 1e-3, 3e-3, 1e-2])
def test_barrera_interior_contra_barrido_denso(espejo, c):
    params = _con_vdw(espejo, c)
    perfil = barrier_analysis(params)
    assert perfil.kind is BarrierKind.INTERIOR
    kappa = decay_kappa(params)
    z = np.geomspace(1e-4, 10.0, 1_000_000) / kappa
    U = resultant_potential(params, z)
    i = int(np.argmax(U))
    assert perfil.barrier_height == pytest.approx(U[i], rel=1e-3)
    assert perfil.barrier_z == pytest.approx(z[i], rel=1e-2)


def test_van_der_waals_reduce_la_barrera(espejo):
    alturas = [barrier_analysis(_con_vdw(espejo, c)).barrier_height for c in (0.0, 1e-4, 1e-3, 3e-3, 1e-2, 3e-2)]
    assert all(a > b for a, b in zip(alturas, alturas[1:]))


@pytest.mark.parametrize("c", [1e-40, 1e-30, 1e-20])
def test_van_der_waals_minimo_conserva_la_barrera(espejo, c):
    perfil = barrier_analysis(_con_vdw(espejo, c))
    assert perfil.kind is BarrierKind.INTERIOR
    assert perfil.barrier_z == pytest.approx((1.5 * c) ** 0.25 / decay_kappa(espejo), rel=1e-2)
    assert perfil.barrier_height == pytest.approx(surface_potential(espejo), rel=1e-4)
    assert max_reflectable_momentum(_con_vdw(espejo, c)) == pytest.approx(max_reflectable_momentum(espejo), rel=1e-4)


def test_altura_de_barrera_no_crece_con_van_der_waals(espejo):
    cs = [0.0, 1e-50, 1e-40, 1e-30, 1e-20, 1e-10, 1e-4, 1e-2]
    alturas = [barrier_analysis(_con_vdw(espejo, c)).barrier_height for c in cs]
    assert None not in alturas
    assert all(a >= b for a, b in zip(alturas, alturas[1:]))


def test_sin_barrera_cuando_domina_van_der_waals(espejo):
    params = _con_vdw(espejo, 10.0)
    perfil = barrier_analysis(params)
    assert perfil.kind is BarrierKind.NONE
    assert perfil.barrier_height is None and perfil.barrier_z is None
    with pytest.raises(CaptureError):
        max_reflectable_momentum(params)
    with pytest.raises(CaptureError):
        bounce(params, -1e-30)


def test_perfil_en_malla_propia(espejo):
    z = np.linspace(0.1, 5.0, 50) / decay_kappa(espejo)
    df = potential_profile(espejo, z).to_frame()
    assert list(df.columns) == ["z", "U"]
    assert len(df) == 50
    with pytest.raises(ParametroInvalidoError):
        potential_profile(espejo, z[::-1])


def test_momento_maximo_reflejable(espejo):
    u0 = surface_potential(espejo)
    esperado = math.sqrt(2 * espejo.atom_mass * u0 * (1 - math.exp(-20.0)))
    assert max_reflectable_momentum(espejo) == pytest.approx(esperado, rel=1e-12)


# =============================================================================
# REBOTES
# =============================================================================
def test_punto_de_retorno_analitico(espejo):
    kappa, u0, M = decay_kappa(espejo), surface_potential(espejo), espejo.atom_mass
    p_in = -math.sqrt(M * u0)  # la mitad de la barrera
    r = bounce(espejo, p_in)
    assert r.z_turn == pytest.approx(math.log(2 * M * u0 / p_in**2) / (2 * kappa), rel=1e-6)
    assert r.p_out == pytest.approx(-p_in, rel=1e-6)
    assert r.energy_drift < 1e-8
    assert np.all(np.diff(r.times) > 0)
    assert r.z.min() == pytest.approx(r.z_turn, rel=1e-9)
    assert list(r.to_frame().columns) == ["t", "z", "p"]


def test_energia_en_el_retorno(espejo):
    espejo_vdw = _con_vdw(espejo, 1e-3)
    barrera = barrier_analysis(espejo_vdw).barrier_height
    M = espejo.atom_mass
    p_in = -math.sqrt(2 * M * 0.3 * barrera)
    r = bounce(espejo_vdw, p_in)
    energia = p_in**2 / (2 * M) + float(resultant_potential(espejo_vdw, 10 / decay_kappa(espejo_vdw)))
    assert float(resultant_potential(espejo_vdw, r.z_turn)) == pytest.approx(energia, rel=1e-6)
    assert r.p_out == pytest.approx(-p_in, rel=1e-6)


def _rebotes_elasticos(espejo, n, semilla):
    rng = np.random.default_rng(semilla)
    p_max = max_reflectable_momentum(espejo)
    for fraccion in rng.uniform(0.01, 0.98, n):
        p_in = -math.sqrt(fraccion) * p_max
        r = bounce(espejo, p_in)
        assert r.p_out > 0
        assert abs(r.p_out) == pytest.approx(abs(p_in), rel=1e-6)
        assert r.energy_drift < 1e-8


def test_rebotes_elasticos(espejo):
    _rebotes_elasticos(espejo, 50, 1)


@pytest.mark.slow
def test_mil_rebotes_elasticos(espejo):
    _rebotes_elasticos(espejo, 1000, 2)


def test_rebote_con_gravedad(espejo):
    params = _con(espejo, gravity=9.81)
    p_in = -0.5 * max_reflectable_momentum(params)
    r = bounce(params, p_in)
    assert r.p_out == pytest.approx(-p_in, rel=1e-6)
    assert r.energy_drift < 1e-8


def test_caida_libre_termina_en_el_apice(espejo):
    params = _con(espejo, gravity=9.81)
    r = bounce(params, 0.0)
    assert abs(r.p_out) < 1e-5 * max_reflectable_momentum(params)
    assert r.z[-1] == pytest.approx(10 / decay_kappa(params), rel=1e-6)
    assert r.energy_drift < 1e-8


def test_atomo_en_reposo_sin_gravedad(espejo):
    r = bounce(espejo, 0.0)
    assert r.p_out == 0.0
    assert len(r.times) == 1


def test_sobre_la_barrera(espejo):
    with pytest.raises(SurfaceCollisionError):
        bounce(espejo, -1.01 * max_reflectable_momentum(espejo))


def test_deriva_de_energia_es_error_de_precision(espejo, monkeypatch):
    monkeypatch.setattr(mirror, "ENERGY_DRIFT_MAX", 0.0)
    with pytest.raises(PrecisionError):
        bounce(espejo, -0.5 * max_reflectable_momentum(espejo))


def test_rebote_fuera_de_dominio(espejo):
    with pytest.raises(OutOfDomainError):
        bounce(espejo, 1e-30)
    with pytest.raises(OutOfDomainError):
        bounce(espejo, -1e-30, z_start=1.0 / decay_kappa(espejo))


def test_escala_de_unidades(espejo):
    # U₀ ≈ ħΓ·(I_ev/I_sat)/(8·Δ/Γ)
    esperado = hbar * espejo.linewidth * 100.0 / 8e3
    assert surface_potential(espejo) == pytest.approx(esperado, rel=1e-12)
