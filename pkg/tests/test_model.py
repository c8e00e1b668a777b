import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rabizigzag.bogoliubov import diagonalize
from rabizigzag.errors import DomainError, EvanescentMode
from rabizigzag.model import (
    ModelParams,
    analytic_bands,
    critical_coupling,
    crossing_ratio,
    dispersion,
    hopping_matrix,
    momentum_form,
    momentum_grid,
    realspace_np_form,
    triple_point,
)

HALF_PI = math.pi / 2


@pytest.mark.parametrize("kwargs", [
    {"omega": 0.0}, {"delta": -1.0}, {"j1": -0.1}, {"j2": -0.1}, {"g1": -0.2},
    {"theta": -math.pi}, {"theta": 4.0}, {"n_cavities": 4}, {"n_cavities": 7}, {"g1": math.nan},
])
def test_params_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        ModelParams(**kwargs)


def test_params_derived():
    p = ModelParams(omega=1.0, delta=50.0, g1=0.65, j1=0.0025, j2=0.05)
    assert p.g == pytest.approx(0.65 * math.sqrt(50.0))
    assert p.ratio == pytest.approx(0.05)
    assert p.with_ratio(0.8).j1 == pytest.approx(0.04)
    assert ModelParams(theta=math.pi).theta == math.pi


@pytest.mark.parametrize("n, expected", [
    (6, [-math.pi / 3, 0.0, math.pi / 3]),
    (8, [-math.pi / 4, 0.0, math.pi / 4, HALF_PI]),
])
def test_momentum_grid(n, expected):
    np.testing.assert_allclose(momentum_grid(n), expected, atol=1e-14)


def test_dispersion_examples():
    p = ModelParams(g1=0.0, j2=0.05, theta=0.0)
    assert dispersion(p, 0.0, 1) == pytest.approx(1.1, abs=1e-14)
    q = p.replace(theta=HALF_PI)
    assert dispersion(q, 0.0, 1) == pytest.approx(1.0, abs=1e-14)
    assert dispersion(q, 0.0, -1) == pytest.approx(1.0, abs=1e-14)
    r = ModelParams(g1=0.3, j2=0.05, theta=HALF_PI)
    assert dispersion(r, math.pi / 3, -1) == pytest.approx(0.733397, abs=1e-6)
    with pytest.raises(ValueError):
        dispersion(r, 0.0, 0)


@given(k=st.floats(-HALF_PI, HALF_PI), theta=st.floats(-3.1, 3.1), g1=st.floats(0, 0.5))
def test_dispersion_branch_sum(k, theta, g1):
    p = ModelParams(g1=g1, theta=theta)
    total = dispersion(p, k, 1) + dispersion(p, k, -1)
    assert total == pytest.approx(2 * (1 - 2 * g1**2), abs=1e-12)


def test_momentum_form_example():
    p = ModelParams(g1=0.3, j1=0.1, j2=0.05, theta=HALF_PI)
    f = momentum_form(p, 0.0)
    np.testing.assert_allclose(np.diag(f.matrix).real, 0.82, atol=1e-14)
    assert f.matrix[0, 1] == pytest.approx(-0.2)
    assert f.matrix[2, 3] == pytest.approx(-0.2)
    assert f.matrix[0, 2] == pytest.approx(-0.18)
    assert f.matrix[1, 3] == pytest.approx(-0.18)
    assert f.has_particle_hole_structure()


def test_momentum_form_decoupled_has_no_anomalous_block():
    f = momentum_form(ModelParams(g1=0.0, j1=0.1), 0.3)
    assert np.all(f.anomalous == 0)


@settings(max_examples=40, deadline=None)
@given(k_idx=st.integers(0, 3), theta=st.floats(-3.1, 3.1), g1=st.floats(0, 0.45),
       j1=st.floats(0, 0.2))
def test_momentum_form_structure(k_idx, theta, g1, j1):
    p = ModelParams(g1=g1, j1=j1, theta=theta, n_cavities=8)
    k = momentum_grid(8)[k_idx]
    f = momentum_form(p, k)
    assert f.is_hermitian()
    diag = np.diag(f.matrix).real
    np.testing.assert_allclose(diag[:2], [dispersion(p, k, 1), dispersion(p, k, -1)], atol=1e-14)
    # particle-hole symmetric exactly when the +k and -k frequencies agree
    if abs(math.sin(theta) * math.sin(2 * k)) < 1e-12:
        assert f.has_particle_hole_structure()


@pytest.mark.parametrize("theta", [0.0, 0.7, HALF_PI, -2.5])
def test_realspace_form_structure(theta):
    f = realspace_np_form(ModelParams(g1=0.3, j1=0.02, theta=theta))
    assert f.is_hermitian()
    assert f.has_particle_hole_structure()
    if theta == 0.0:
        assert np.all(f.matrix.imag == 0)


def test_realspace_form_decoupled_is_diagonal_per_cavity():
    f = realspace_np_form(ModelParams(g1=0.3, j1=0.0, j2=0.0))
    a, b = f.normal, f.anomalous
    assert np.allclose(a, np.diag(np.diag(a))) and np.allclose(b, np.diag(np.diag(b)))
    assert np.allclose(np.diag(a), np.diag(a)[0])


def test_hopping_matrix_nnn_phase():
    p = ModelParams(j1=0.0, j2=0.05, theta=0.4)
    h = hopping_matrix(p)
    # cavity 1 is odd: (-1)^1 = -1
    assert h[0, 2] == pytest.approx(0.05 * np.exp(0.4j))
    assert h[1, 3] == pytest.approx(-0.05 * np.exp(0.4j))
    assert h[4, 0] == pytest.approx(0.05 * np.exp(0.4j))


@pytest.mark.parametrize("n", [6, 8])
@pytest.mark.parametrize("theta", [HALF_PI, 0.3, -2.0, math.pi])
def test_realspace_spectrum_is_union_of_momentum_blocks(n, theta):
    p = ModelParams(g1=0.35, j1=0.03, j2=0.05, theta=theta, n_cavities=n)
    real = np.sort(diagonalize(realspace_np_form(p)).epsilons)
    blocks = np.sort(np.concatenate([diagonalize(momentum_form(p, k)).epsilons for k in momentum_grid(n)]))
    np.testing.assert_allclose(real, blocks, atol=1e-9)


def test_analytic_bands_examples():
    p = ModelParams(g1=0.3, j1=0.1, j2=0.05, theta=HALF_PI)
    plus, minus = analytic_bands(p, 0.0)
    assert plus == pytest.approx(math.sqrt(1.008) / 2, abs=1e-12)
    assert minus == pytest.approx(math.sqrt(0.352) / 2, abs=1e-12)
    free = ModelParams(g1=0.0, j1=0.0, j2=0.0, theta=HALF_PI)
    assert analytic_bands(free, 0.4) == pytest.approx((0.5, 0.5))


def test_analytic_bands_vanish_at_critical_coupling():
    p = ModelParams(j1=0.1, j2=0.05, theta=HALF_PI)
    for k in momentum_grid(6):
        gc = critical_coupling(p, k)
        assert analytic_bands(p.replace(g1=gc), k)[1] < 1e-7
        assert analytic_bands(p.replace(g1=gc), k)[1] ** 2 < 1e-10


def test_analytic_bands_errors():
    with pytest.raises(DomainError):
        analytic_bands(ModelParams(theta=0.5), 0.0)
    with pytest.raises(EvanescentMode):
        analytic_bands(ModelParams(g1=0.6, j1=0.1, theta=HALF_PI), 0.0)


def test_critical_coupling_examples():
    assert critical_coupling(ModelParams(j1=0.0, j2=0.0), 0.0) == pytest.approx(0.5)
    assert critical_coupling(ModelParams(j1=0.1, j2=0.05), 0.0) == pytest.approx(0.447214, abs=1e-6)
    assert critical_coupling(ModelParams(j1=0.0025, j2=0.05), math.pi / 3) == pytest.approx(0.497498, abs=1e-6)
    with pytest.raises(DomainError):
        critical_coupling(ModelParams(j1=0.6, j2=0.05), 0.0)


@given(k=st.floats(-HALF_PI, HALF_PI), j1=st.floats(0, 0.3))
def test_critical_coupling_even_in_k(k, j1):
    p = ModelParams(j1=j1)
    assert critical_coupling(p, k) == pytest.approx(critical_coupling(p, -k), rel=1e-14)


def test_triple_point():
    p = ModelParams(j2=0.05)
    r = triple_point(p)
    assert r == pytest.approx(0.148892, abs=1e-6)
    q = p.with_ratio(r)
    assert critical_coupling(q, 0.0) == pytest.approx(critical_coupling(q, math.pi / 3), abs=1e-10)
    assert triple_point(ModelParams(j2=1e-6)) == pytest.approx(3e-6, rel=1e-9)
    assert crossing_ratio(p, 0.0, math.pi / 3) == pytest.approx(r, abs=1e-10)
