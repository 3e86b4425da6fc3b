import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhdfem.errors import InvalidArgument, PoleError
from nhdfem.model import (IncidentWave, ManufacturedCase, PhysicalParams, drude_permittivity,
                          manufactured_case_unit_cube, nonlocal_permittivity, plane_wave_source)

# sixth-order central stencils
D1 = (np.array([-3, -2, -1, 1, 2, 3]), np.array([-1 / 60, 3 / 20, -3 / 4, 3 / 4, -3 / 20, 1 / 60]))
D2 = (np.arange(-3, 4), np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90]))


def partial(f, x, axis, h):
    e = np.zeros(3)
    e[axis] = h
    return sum(c * f(x + k * e) for k, c in zip(*D1)) / h


def hessian(f, x, h=5e-3):
    """(npts, comp, a, b) second derivatives of a vector field by finite differences."""
    out = np.zeros(f(x).shape + (3, 3), dtype=complex)
    for a in range(3):
        e = np.zeros(3)
        e[a] = h
        out[..., a, a] = sum(c * f(x + k * e) for k, c in zip(*D2)) / h ** 2
        for b in range(a + 1, 3):
            mixed = partial(lambda y: partial(f, y, b, h), x, a, h)
            out[..., a, b] = out[..., b, a] = mixed
    return out


def curl_curl(f, x):
    H = hessian(f, x)
    grad_div = np.einsum("pjij->pi", H)
    lap = np.einsum("piaa->pi", H)
    return grad_div - lap


def grad_div(f, x):
    return np.einsum("pjij->pi", hessian(f, x))


@pytest.fixture
def points():
    return np.random.default_rng(42).uniform(0.05, 0.95, (100, 3))


def test_volume_sources_against_finite_differences(points):
    case = ManufacturedCase()
    p = case.params
    w = p.omega
    f1 = curl_curl(case.E, points) / p.mu1 - w ** 2 * p.eps1 * case.E(points) - 1j * w * case.J(points)
    f2 = (w * (w + 1j * p.gamma) * case.J(points) + p.beta ** 2 * grad_div(case.J, points)
          - 1j * w * p.omega_p ** 2 * p.eps0 * case.E(points))
    np.testing.assert_allclose(case.f1(points), f1, atol=1e-10)
    np.testing.assert_allclose(case.f2(points), f2, atol=1e-10)


def test_derivatives_against_finite_differences(points):
    case = ManufacturedCase()
    h = 1e-3
    dE = np.stack([partial(case.E, points, a, h) for a in range(3)], axis=-1)  # [p, comp, axis]
    curl = np.stack([dE[:, 2, 1] - dE[:, 1, 2], dE[:, 0, 2] - dE[:, 2, 0], dE[:, 1, 0] - dE[:, 0, 1]], axis=1)
    np.testing.assert_allclose(case.curl_E(points), curl, atol=1e-10)
    div = sum(partial(case.J, points, a, h)[:, a] for a in range(3))
    np.testing.assert_allclose(case.div_J(points), div, atol=1e-10)


def test_worked_source_values(points):
    x, y, z = points.T
    f1 = ManufacturedCase.f1(points)
    np.testing.assert_allclose(f1, np.column_stack([-1j * np.sin(np.pi * x), -1j * np.sin(np.pi * y),
                                                    np.sin(np.pi * z)]), atol=1e-15)
    f2 = ManufacturedCase.f2(points)
    np.testing.assert_allclose(f2[:, 0], (1 + 1j - np.pi ** 2) * np.sin(np.pi * x) - 1j * np.exp(-1j * z),
                               atol=1e-14)


def _face_points(rng, n=100):
    """Random points on the six faces with their outward normals."""
    pts, normals = rng.uniform(0, 1, (n, 3)), np.zeros((n, 3))
    axis, side = rng.integers(0, 3, n), rng.integers(0, 2, n)
    pts[np.arange(n), axis] = side
    normals[np.arange(n), axis] = 2 * side - 1
    return pts, normals


def test_boundary_data_against_finite_differences():
    rng = np.random.default_rng(1)
    x, n = _face_points(rng)
    case = ManufacturedCase()
    h = 1e-3
    dE = np.stack([partial(case.E, x, a, h) for a in range(3)], axis=-1)
    curl = np.stack([dE[:, 2, 1] - dE[:, 1, 2], dE[:, 0, 2] - dE[:, 2, 0], dE[:, 1, 0] - dE[:, 0, 1]], axis=1)
    E = case.E(x)
    E_t = E - np.einsum("pi,pi->p", E, n)[:, None] * n
    np.testing.assert_allclose(case.g(x, n), np.cross(curl, n) - 1j * E_t, atol=1e-10)
    # the (n x E) x n form equals the tangential part
    np.testing.assert_allclose(np.cross(np.cross(n, E), n), E_t, atol=1e-15)


def test_boundary_value_on_top_face():
    x = np.array([[0.3, 0.7, 1.0], [0.9, 0.1, 1.0]])
    g = ManufacturedCase.g(x, [0, 0, 1])
    np.testing.assert_allclose(g, np.tile([-2j * np.exp(-1j), 0, 0], (2, 1)), atol=1e-15)


def test_current_has_zero_normal_trace():
    x, n = _face_points(np.random.default_rng(2))
    assert np.abs(np.einsum("pi,pi->p", ManufacturedCase.J(x), n)).max() < 1e-15


def test_manufactured_case_rejects_non_unit_parameters():
    assert manufactured_case_unit_cube().params == PhysicalParams()
    with pytest.raises(InvalidArgument):
        ManufacturedCase(PhysicalParams(gamma=0.5))


# ---------------------------------------------------------------- parameters
@pytest.mark.parametrize("bad", [dict(omega=0), dict(gamma=-1), dict(beta=-0.1), dict(mu1=0),
                                 dict(eps2=-1), dict(eps0=0), dict(omega_p=-1)])
def test_invalid_parameters(bad):
    with pytest.raises(InvalidArgument):
        PhysicalParams(**bad)


def test_scaled_silver_units():
    p = PhysicalParams.scaled_silver(0.5)
    k = 1e-9 / 299792458.0
    assert p.omega_p == pytest.approx(8.65e15 * k) and p.omega == pytest.approx(0.5 * p.omega_p)
    assert p.gamma == pytest.approx(8.65e13 * k) and p.beta == pytest.approx(8.29e5 / 299792458.0)


# ---------------------------------------------------------------- dispersion
def test_dispersion_worked_value():
    assert abs(nonlocal_permittivity(PhysicalParams(), 0.0) - (0.5 + 0.5j)) < 1e-14


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.0, 5), st.floats(0.0, 3), st.floats(0, 20))
def test_zero_beta_is_drude(omega, omega_p, gamma, k):
    p = PhysicalParams(omega=omega, omega_p=omega_p, gamma=gamma, beta=0.0)
    assert nonlocal_permittivity(p, k) == drude_permittivity(p)


def test_no_plasma_and_pole():
    p = PhysicalParams(omega_p=0.0, eps_inf=2.5)
    np.testing.assert_array_equal(nonlocal_permittivity(p, np.linspace(0, 5, 7)), 2.5)
    with pytest.raises(PoleError):
        nonlocal_permittivity(PhysicalParams(gamma=0.0, beta=1.0), 1.0)
    near = nonlocal_permittivity(PhysicalParams(gamma=0.0), [0.999, 1.001])
    assert near[0].real * near[1].real < 0  # sign change across the resonance


def test_high_frequency_limit():
    p = PhysicalParams(eps_inf=1.7, gamma=0.2, beta=0.5)
    assert abs(nonlocal_permittivity(p.replace(omega=1e6), 3.0) - 1.7) < 1e-11


# ---------------------------------------------------------------- plane wave
def test_incident_wave_maxwell_relation():
    wave = IncidentWave(omega=1.3, mu=1.2, eps=0.8, amplitude=0.7 - 0.2j)
    x = np.random.default_rng(3).uniform(-2, 2, (50, 3))
    h = 1e-3
    dE = np.stack([partial(wave.E, x, a, h) for a in range(3)], axis=-1)
    curl = np.stack([dE[:, 2, 1] - dE[:, 1, 2], dE[:, 0, 2] - dE[:, 2, 0], dE[:, 1, 0] - dE[:, 0, 1]], axis=1)
    np.testing.assert_allclose(curl, 1j * wave.omega * wave.mu * wave.H(x), atol=1e-12)
    # E = exp(i omega y) e_x: H is along z with magnitude 1/mu
    w = IncidentWave(omega=2.0, mu=1.5, eps=1 / 1.5)  # wavenumber equals omega
    H = w.H(x)
    assert np.abs(H[:, :2]).max() == 0
    np.testing.assert_allclose(np.abs(H[:, 2]), 1 / 1.5, rtol=1e-14)
    np.testing.assert_allclose(w.E(x)[:, 0], np.exp(2j * x[:, 1]), rtol=1e-14)


def test_incident_wave_validation():
    with pytest.raises(InvalidArgument):
        IncidentWave(direction=(1, 0, 0), polarization=(1, 1, 0))


def test_plane_wave_source_tangential_and_linear():
    rng = np.random.default_rng(4)
    n = rng.normal(size=(30, 3))
    n /= np.linalg.norm(n, axis=1)[:, None]
    x = 20 * n
    g = plane_wave_source(IncidentWave(omega=0.4))(x, n)
    assert np.abs(np.einsum("pi,pi->p", g, n)).max() < 1e-13
    zero = plane_wave_source(IncidentWave(omega=0.4, amplitude=0.0))(x, n)
    assert not np.any(zero)
