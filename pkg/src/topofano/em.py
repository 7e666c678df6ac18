"""Quasistatic response of a TI sphere to a uniform magnetic field.

Fields are reported per unit ``c*B0``: the electric field as E/(c B0) and
the induced magnetic field as B/B0, so both are dimensionless in the
frequency domain.  Time-domain impulse fields carry one power of
frequency (fs^-1) because the impulse amplitude has units of T*s.
"""
from __future__ import annotations

import csv
import math
from typing import TYPE_CHECKING, Sequence, TextIO

import numpy as np

from .errors import SingularityError

if TYPE_CHECKING:
    from .model import Environment, TiMaterial

HBAR_EV_FS = 0.6582119569
_AXES = {"x": 0, "y": 1, "z": 2}


def axis_index(axis: int | str) -> int:
    if isinstance(axis, str):
        try:
            return _AXES[axis.lower()]
        except KeyError:
            raise ValueError(f"axis must be one of x, y, z; got {axis!r}") from None
    if axis not in (0, 1, 2):
        raise ValueError(f"axis index must be 0, 1 or 2; got {axis!r}")
    return int(axis)


def eta(alpha_tilde: float, epsilon_2: float) -> float:
    return 3.0 * alpha_tilde / (3.0 * (2.0 * epsilon_2 + 1.0) + 2.0 * alpha_tilde**2)


def omega0_squared(omega_e: float, epsilon_2: float, alpha_tilde: float) -> float:
    """omega_e^2 * eta/alpha_tilde, written so that alpha_tilde = 0 is finite."""
    return 3.0 * omega_e**2 / (3.0 * (2.0 * epsilon_2 + 1.0) + 2.0 * alpha_tilde**2)


def resonance_energy(omega_R: float, omega_e: float, epsilon_2: float, alpha_tilde: float) -> float:
    return math.sqrt(omega_R**2 + omega0_squared(omega_e, epsilon_2, alpha_tilde))


def mode_energy(ti: TiMaterial, env: Environment) -> float:
    """hbar*Omega of the localized dipolar mode (eV)."""
    return resonance_energy(ti.omega_R, ti.omega_e, env.epsilon_2, ti.alpha_tilde)


def epsilon1(omega, ti: TiMaterial):
    """Lorentz-oscillator permittivity of the TI."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("omega must be >= 0")
    den = ti.omega_R**2 - w * (w + 1j * ti.gamma_0)
    if np.any(den == 0):
        raise SingularityError(f"epsilon1 has an undamped pole at omega = omega_R = {ti.omega_R} eV")
    out = 1.0 + ti.omega_e**2 / den
    return out if out.ndim else complex(out)


def exact_polarization_coefficient(omega, ti: TiMaterial, env: Environment):
    """Signed prefactor of B0_i * G_i in the exact electric field, per unit c.

    Equals -3 a / (3(2 eps2 + eps1) + 2 a^2) with a = alpha_tilde.
    """
    eps1 = np.asarray(epsilon1(omega, ti))
    a = ti.alpha_tilde
    den = 3.0 * (2.0 * env.epsilon_2 + eps1) + 2.0 * a**2
    if a == 0:
        out = np.zeros_like(eps1, dtype=complex)
    else:
        if np.any(den == 0):
            raise SingularityError("vanishing denominator in the polarization coefficient")
        out = -3.0 * a / den
    return out if out.ndim else complex(out)


def lorentzian_coefficient(omega, ti: TiMaterial, env: Environment):
    """Near-resonance approximation -eta (omega0^2 / 2 Omega) / (omega - Omega + i gamma0/2)."""
    w = np.asarray(omega, dtype=float)
    Om = mode_energy(ti, env)
    w0sq = omega0_squared(ti.omega_e, env.epsilon_2, ti.alpha_tilde)
    out = -eta(ti.alpha_tilde, env.epsilon_2) * (w0sq / (2 * Om)) / (w - Om + 0.5j * ti.gamma_0)
    return out if out.ndim else complex(out)


def g_vec(point, R: float, axis: int | str) -> np.ndarray:
    """Spatial profile of the i-th dipolar mode.

    Uniform e_i inside the sphere, a point-dipole field outside.  Points on
    the surface (|r| == R) take the exterior branch.  ``point`` may be a
    single 3-vector or an array of shape (..., 3).
    """
    if R <= 0:
        raise ValueError("R must be > 0")
    i = axis_index(axis)
    p = np.asarray(point, dtype=float)
    e_i = np.zeros(3)
    e_i[i] = 1.0
    rad = np.linalg.norm(p, axis=-1, keepdims=True)
    outside = rad >= R
    safe = np.where(outside, rad, 1.0)
    e_r = p / safe
    dip = -(R / safe) ** 3 * (3.0 * e_r[..., i : i + 1] * e_r - e_i)
    return np.where(outside, dip, np.broadcast_to(e_i, p.shape))


def e_field_exact(point, omega: float, ti: TiMaterial, env: Environment, R: float,
                  B0_direction: int | str = "z") -> np.ndarray:
    """Exact quasistatic electric field per unit c*B0 (complex 3-vector)."""
    coef = exact_polarization_coefficient(omega, ti, env)
    return coef * g_vec(point, R, B0_direction)


def xi(point, R: float) -> np.ndarray:
    rad = np.linalg.norm(np.asarray(point, dtype=float), axis=-1, keepdims=True)
    return np.where(rad >= R, 1.0, -2.0)


def b_field_induced(point, omega: float, ti: TiMaterial, env: Environment, R: float,
                    B0_direction: int | str = "z") -> np.ndarray:
    """Induced (dipolar) magnetic field per unit B0, excluding the applied B0.

    Tied to the electric field by B = -(alpha_tilde/3) xi E with E per unit c*B0.
    """
    e = e_field_exact(point, omega, ti, env, R, B0_direction)
    return -(ti.alpha_tilde / 3.0) * xi(point, R) * e


def impulse_amplitude(ti: TiMaterial, env: Environment) -> float:
    """Lambda_i / (c B0) in fs^-1 for an impulse B0*delta(t)."""
    Om = mode_energy(ti, env)
    w0sq = omega0_squared(ti.omega_e, env.epsilon_2, ti.alpha_tilde)
    return -eta(ti.alpha_tilde, env.epsilon_2) * w0sq / (2.0 * Om) / HBAR_EV_FS


def e_field_impulse(point, t, ti: TiMaterial, env: Environment, R: float,
                    B0_direction: int | str = "z") -> np.ndarray:
    """Localized electric field after an impulse, per unit c*B0 (fs^-1).

    ``t`` is in fs and may be an array; the result then has shape
    t.shape + point.shape.  The oscillation uses Omega, not the damped
    frequency.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    Om = mode_energy(ti, env) / HBAR_EV_FS
    gam = ti.gamma_0 / HBAR_EV_FS
    amp = impulse_amplitude(ti, env) * np.sin(Om * t) * np.exp(-0.5 * gam * t)
    G = g_vec(point, R, B0_direction)
    return amp.reshape(t.shape + (1,) * G.ndim) * G


FIELD_COLUMNS = ["x_nm", "y_nm", "z_nm"] + [
    f"{f}{c}_{part}" for f in ("E", "B") for c in "xyz" for part in ("re", "im")
]


def grid_points(spec: Sequence[tuple[float, float, int]]) -> np.ndarray:
    """Row-major (x slowest, z fastest) points for ((x0,x1,nx), (y0,y1,ny), (z0,z1,nz))."""
    axes = [np.linspace(a, b, int(n)) for a, b, n in spec]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)


def field_map(points: np.ndarray, ti: TiMaterial, env: Environment, R: float,
              B0_direction: int | str = "z", omega: float | None = None,
              t: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """E and induced B at ``points`` either at a frequency or at a time after the impulse."""
    if (omega is None) == (t is None):
        raise ValueError("give exactly one of omega or t")
    if omega is not None:
        E = e_field_exact(points, omega, ti, env, R, B0_direction)
    else:
        E = e_field_impulse(points, t, ti, env, R, B0_direction).astype(complex)
    B = -(ti.alpha_tilde / 3.0) * xi(points, R) * E
    return E, B


def write_field_csv(stream: TextIO, points: np.ndarray, E: np.ndarray, B: np.ndarray) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(FIELD_COLUMNS)
    for p, e, b in zip(points, E, B):
        row = [f"{float(v):.17g}" for v in p]
        for vec in (e, b):
            for c in vec:
                row += [f"{c.real:.17g}", f"{c.imag:.17g}"]
        w.writerow(row)
