import numpy as np
import pytest

from fluxevans import systems
from fluxevans.blocks import Partition
from fluxevans.model import (
    check_h1, check_h2, check_rh, classify, CHARACTERISTIC_TOL,
)
from fluxevans.errors import CharacteristicShockError


RNG = np.random.default_rng(20260825)


def _fd_jacobian(f, U, h=1e-6):
    n = len(U)
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        cols.append((f(U + e) - f(U - e)) / (2 * h))
    return np.column_stack(cols)


@pytest.mark.parametrize("name", ["burgers", "isentropic_lagrangian_1d",
                                  "isentropic_eulerian_2d"])
def test_jacobians_match_fluxes(name):
    spec = systems.get(name)
    m = spec.model
    U_minus, U_plus, _ = spec.default_shock
    for _ in range(3):
        t = RNG.uniform(0.1, 0.9)
        U = (1 - t) * U_minus + t * U_plus
        for j in range(m.d + 1):
            fd = _fd_jacobian(lambda V: m.f(j, V), U)
            assert np.allclose(m.A(j, U), fd, atol=1e-6)


def test_viscosity_derivative_tensor_lagrangian():
    m = systems.get("isentropic_lagrangian_1d").model
    U = np.array([0.7, -0.3])
    h = 1e-6
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (m.B(1, 1, U + e) - m.B(1, 1, U - e)) / (2 * h)
        assert np.allclose(m.dB(1, 1, U)[:, :, i], fd, atol=1e-7)


def test_partition_arithmetic():
    p = Partition(n=3, r=1)
    assert p.q == 2 and p.N == 5
    M = np.arange(9.0).reshape(3, 3)
    M11, M12, M21, M22 = p.split(M)
    assert M11.shape == (1, 1) and M22.shape == (2, 2)
    assert M11[0, 0] == 0.0 and M22[0, 0] == 4.0
    A = p.assemble([[None, None, None],
                    [None, np.eye(2), None],
                    [None, None, 2 * np.eye(2)]])
    assert A.shape == (5, 5)
    assert A[1, 1] == 1.0 and A[3, 3] == 2.0 and A[0, 0] == 0.0


def test_rankine_hugoniot_default_shocks():
    for name in ["burgers", "isentropic_lagrangian_1d",
                 "isentropic_eulerian_2d"]:
        spec = systems.get(name)
        U_minus, U_plus, _ = spec.default_shock
        assert check_rh(spec.model, U_minus, U_plus) < 1e-12


def test_noncharacteristic_determinants():
    # Burgers has an empty hyperbolic block
    spec = systems.get("burgers")
    assert check_h1(spec.model, spec.default_shock[0]) == 1.0
    # Lagrangian: the 1x1 hyperbolic block of A~1 is -s
    spec = systems.get("isentropic_lagrangian_1d")
    s_exp = -np.sqrt((0.5 ** (-5.0 / 3.0) - 1.0) / 0.5)
    assert spec.model.s == pytest.approx(s_exp, rel=1e-14)
    assert check_h1(spec.model, spec.default_shock[0]) == pytest.approx(-s_exp)
    # 2D Euler: the block is u1 - s = m / rho
    spec = systems.get("isentropic_eulerian_2d")
    m_flux = spec.params["m"]
    rho_minus = spec.params["rho_minus"]
    assert check_h1(spec.model, spec.default_shock[0]) == pytest.approx(
        m_flux / rho_minus)


def test_parabolicity_certificates():
    for name in ["burgers", "isentropic_lagrangian_1d",
                 "isentropic_eulerian_2d"]:
        spec = systems.get(name)
        for U in spec.default_shock[:2]:
            assert check_h2(spec.model, U) > 0.05


def test_classification_lax():
    for name in ["burgers", "isentropic_lagrangian_1d",
                 "isentropic_eulerian_2d"]:
        spec = systems.get(name)
        cls = classify(spec.model, *spec.default_shock[:2])
        assert cls.kind == "Lax"
        assert cls.i == spec.model.n + 1
        assert cls.compressivity(spec.model.n) == 2


def test_lagrangian_shock_frame_speeds():
    spec = systems.get("isentropic_lagrangian_1d")
    m = spec.model
    v = spec.params["v_minus"]
    c = np.sqrt(spec.params["a"] * spec.params["gamma"] * v ** (-8.0 / 3.0))
    got = np.sort(np.real(m.char_speeds(spec.default_shock[0])))
    assert np.allclose(got, np.sort([c - m.s, -c - m.s]), rtol=1e-12)


def test_characteristic_end_state_rejected():
    # a stationary Burgers state u = s makes the single speed vanish
    spec = systems.get("burgers", u_minus=1.0, u_plus=-1.0)
    m = spec.model   # s = 0
    with pytest.raises(CharacteristicShockError):
        classify(m, np.array([CHARACTERISTIC_TOL / 10]), np.array([-1.0]))


def test_registry():
    assert set(systems.names()) == {
        "burgers", "isentropic_lagrangian_1d", "isentropic_eulerian_2d",
        "lagrangian_rotated", "glancing_model"}
    with pytest.raises(KeyError):
        systems.get("nope")
    spec = systems.get("burgers", u_minus=2.0)
    assert spec.default_shock[2] == pytest.approx(0.5)
    assert systems.get("glancing_model").model is None
