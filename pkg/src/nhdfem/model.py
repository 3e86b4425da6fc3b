"""Physical parameters, nonlocal dispersion, the manufactured test case and plane-wave data.

Time-harmonic convention: fields ~ exp(-i omega t).
"""
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import InvalidArgument, PoleError

# Reference values for silver-like NHD parameters (SI units)
OMEGA_P_SI = 8.65e15  # rad/s
GAMMA_SI = 8.65e13  # rad/s
BETA_SI = 8.29e5  # m/s
SPEED_OF_LIGHT = 299792458.0  # m/s


@dataclass(frozen=True)
class PhysicalParams:
    """Coefficients of the coupled Maxwell / hydrodynamic system.

    ``mu1, eps1`` apply inside the metal region, ``mu2, eps2`` outside.
    ``eps_inf`` is only used by :func:`nonlocal_permittivity`.
    """

    omega: float = 1.0
    omega_p: float = 1.0
    gamma: float = 1.0
    beta: float = 1.0
    eps0: float = 1.0
    mu1: float = 1.0
    mu2: float = 1.0
    eps1: float = 1.0
    eps2: float = 1.0
    eps_inf: float = 1.0

    def __post_init__(self):
        if not self.omega > 0:
            raise InvalidArgument("omega must be positive")
        if self.gamma < 0 or self.beta < 0 or self.omega_p < 0:
            raise InvalidArgument("gamma, beta and omega_p must be non-negative")
        if min(self.mu1, self.mu2, self.eps1, self.eps2) <= 0:
            raise InvalidArgument("mu and eps must be positive")
        if self.eps0 <= 0:
            raise InvalidArgument("eps0 must be positive")

    def replace(self, **changes):
        data = asdict(self)
        data.update(changes)
        return PhysicalParams(**data)

    def as_dict(self):
        return asdict(self)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def scaled_silver(cls, omega_over_omega_p, length_unit=1e-9, gamma=GAMMA_SI, beta=BETA_SI,
                      omega_p=OMEGA_P_SI):
        """Nondimensional parameters with lengths in ``length_unit`` and c = 1.

        Frequencies become wavenumbers omega*L/c, so vacuum has eps = mu = 1.
        """
        k = length_unit / SPEED_OF_LIGHT
        wp = omega_p * k
        return cls(omega=omega_over_omega_p * wp, omega_p=wp, gamma=gamma * k,
                   beta=beta / SPEED_OF_LIGHT, eps0=1.0)


def nonlocal_permittivity(params, k):
    """eps(omega, k) = eps_inf - omega_p^2 / (omega (omega + i gamma) - beta^2 k^2)."""
    w = params.omega
    denom = w * (w + 1j * params.gamma) - params.beta ** 2 * np.asarray(k, dtype=float) ** 2
    if np.any(np.abs(denom) < 1e-30):
        raise PoleError("dispersion relation evaluated at its pole")
    return params.eps_inf - params.omega_p ** 2 / denom


def drude_permittivity(params):
    w = params.omega
    return params.eps_inf - params.omega_p ** 2 / (w * (w + 1j * params.gamma))


# ------------------------------------------------------------------ manufactured
def _unit_params(params):
    p = params
    if not all(np.isclose(v, 1.0, rtol=0, atol=0) for v in
               (p.omega, p.omega_p, p.gamma, p.beta, p.eps0, p.mu1, p.mu2, p.eps1, p.eps2)):
        raise InvalidArgument("the manufactured case is defined for unit parameters only")


class ManufacturedCase:
    """Exact solution E = (exp(-iz), 0, 0), J = (sin pi x, sin pi y, i sin pi z) on (0,1)^3.

    Source closed forms (unit parameters; curl curl E = E and grad div J = -pi^2 J):

        f1 = curl curl E - E - i J           = -i J
        f2 = (1 + i) J + grad div J - i E    = (1 + i - pi^2) J - i E
        g  = (curl E) x n - i (n x E) x n
    """

    def __init__(self, params=None):
        _unit_params(params if params is not None else PhysicalParams())
        self.params = params if params is not None else PhysicalParams()

    @staticmethod
    def E(x):
        x = np.atleast_2d(x)
        out = np.zeros((len(x), 3), dtype=np.complex128)
        out[:, 0] = np.exp(-1j * x[:, 2])
        return out

    @staticmethod
    def curl_E(x):
        x = np.atleast_2d(x)
        out = np.zeros((len(x), 3), dtype=np.complex128)
        out[:, 1] = -1j * np.exp(-1j * x[:, 2])
        return out

    @staticmethod
    def J(x):
        x = np.atleast_2d(x)
        s = np.sin(np.pi * x)
        return np.column_stack([s[:, 0], s[:, 1], 1j * s[:, 2]]).astype(np.complex128)

    @staticmethod
    def div_J(x):
        x = np.atleast_2d(x)
        c = np.cos(np.pi * x)
        return np.pi * (c[:, 0] + c[:, 1] + 1j * c[:, 2])

    @classmethod
    def f1(cls, x):
        return -1j * cls.J(x)

    @classmethod
    def f2(cls, x):
        return (1 + 1j - np.pi ** 2) * cls.J(x) - 1j * cls.E(x)

    @classmethod
    def g(cls, x, n):
        """Boundary data; ``n`` is the outward unit normal, shape (3,) or (npts, 3)."""
        n = np.broadcast_to(np.asarray(n, dtype=float), np.atleast_2d(x).shape)
        e = cls.E(x)
        e_t = e - np.einsum("ij,ij->i", e, n)[:, None] * n
        return np.cross(cls.curl_E(x), n) - 1j * e_t


def manufactured_case_unit_cube(params=None):
    return ManufacturedCase(params)


# ------------------------------------------------------------------ plane wave
class IncidentWave:
    """E_inc = amplitude * polarization * exp(i k d.x), k = omega sqrt(mu eps)."""

    def __init__(self, direction=(0.0, 1.0, 0.0), polarization=(1.0, 0.0, 0.0), amplitude=1.0,
                 omega=1.0, mu=1.0, eps=1.0):
        d = np.asarray(direction, dtype=float)
        p = np.asarray(polarization, dtype=float)
        d = d / np.linalg.norm(d)
        p = p / np.linalg.norm(p)
        if abs(d @ p) > 1e-12:
            raise InvalidArgument("polarization must be orthogonal to the propagation direction")
        self.direction, self.polarization = d, p
        self.amplitude = complex(amplitude)
        self.omega, self.mu, self.eps = float(omega), float(mu), float(eps)
        self.k = self.omega * np.sqrt(self.mu * self.eps)

    def _phase(self, x):
        return np.exp(1j * self.k * (np.atleast_2d(x) @ self.direction))

    def E(self, x):
        return self.amplitude * self._phase(x)[:, None] * self.polarization

    def curl_E(self, x):
        # curl(p e^{ik d.x}) = i k (d x p) e^{ik d.x}
        return 1j * self.k * self.amplitude * self._phase(x)[:, None] * np.cross(self.direction, self.polarization)

    def H(self, x):
        """H = curl E / (i omega mu)."""
        return self.curl_E(x) / (1j * self.omega * self.mu)


def plane_wave_source(wave, params=None, boundary=None):
    """Silver-Mueller data g(x, n) = i omega (H_inc - n x E_inc) x n.

    ``params`` and ``boundary`` are accepted for interface symmetry; the
    wave carries its own omega and mu.
    """

    def g(x, n):
        n = np.broadcast_to(np.asarray(n, dtype=float), np.atleast_2d(x).shape)
        return 1j * wave.omega * np.cross(wave.H(x) - np.cross(n, wave.E(x)), n)

    return g
