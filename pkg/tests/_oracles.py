"""Independent reference computations shared by the test modules."""
import math

import numpy as np
from scipy import integrate

from topofano import em, quantization as q


def profile_sq(point, R, axis):
    return float(np.sum(em.g_vec(point, R, axis) ** 2))


def _cart(rad, th, ph):
    st = math.sin(th)
    return (rad * st * math.cos(ph), rad * st * math.sin(ph), rad * math.cos(th))


def exterior_integral(R, axis, epsrel=1e-12):
    """int_{r>R} |G|^2 d^3r with r = R/u mapping (R, inf) onto (0, 1]."""
    def f(ph, th, u):
        return profile_sq(_cart(R / u, th, ph), R, axis) * R**3 / u**4 * math.sin(th)

    return integrate.tplquad(f, 0, 1, 0, math.pi, 0, 2 * math.pi, epsabs=0, epsrel=epsrel)[0]


def quadrature_mode_volume(cfg, axis="x", epsrel=1e-11):
    """Total mode energy over the interior energy density at the centre, by 3D quadrature."""
    R = cfg.R
    S1 = q.dispersion_slope(cfg.hbar_Omega, cfg.ti)
    eps2 = cfg.env.epsilon_2

    def inner(ph, th, rad):
        return S1 * profile_sq(_cart(rad, th, ph), R, axis) * rad**2 * math.sin(th)

    opts = dict(epsabs=0, epsrel=epsrel)
    vin = integrate.tplquad(inner, 0, R, 0, math.pi, 0, 2 * math.pi, **opts)[0]
    vout = eps2 * exterior_integral(R, axis, epsrel)
    U0 = profile_sq((0.0, 0.0, 0.0), R, axis) * S1
    return (vin + vout) / U0


def lorentzian(w, center, gamma):
    """Im of 1/(w - center - i gamma/2): a single damped mode."""
    return (gamma / 2) / ((w - center) ** 2 + (gamma / 2) ** 2)
