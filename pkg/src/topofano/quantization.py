"""Quantized localized mode: dispersion slope, mode volume and TI-QD coupling."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GeometryError, ParameterError, SingularityError
from .model import COULOMB_EV_NM, HybridConfig, Orientation, TiMaterial


@dataclass(frozen=True)
class ModeQuantities:
    hbar_Omega: float  # eV
    slope_inside: float  # d Re(w eps1)/dw at Omega
    U0: float
    V_m: float  # nm^3
    E0: float  # field per photon, eV/(e*nm)


@dataclass(frozen=True)
class CouplingResult:
    g: float  # eV, signed
    orientation: Orientation
    r: float  # nm

    def to_dict(self) -> dict:
        return {"g_eV": self.g, "orientation": self.orientation.value, "r_nm": self.r}


def dispersion_slope(omega: float, ti: TiMaterial) -> float:
    """d[omega * Re eps1(omega)]/d omega, evaluated analytically."""
    w = float(omega)
    u = ti.omega_R**2 - w**2
    den = u**2 + (w * ti.gamma_0) ** 2
    if den == 0 or (ti.gamma_0 == 0 and abs(u) < 1e-12 * ti.omega_R**2):
        raise SingularityError(f"dispersion slope evaluated at the undamped pole omega_R={ti.omega_R}")
    # omega*Re(eps1) = omega + omega_e^2 * omega*u/den
    num_d = (u - 2 * w**2) * den - w * u * (-4 * w * u + 2 * w * ti.gamma_0**2)
    return 1.0 + ti.omega_e**2 * num_d / den**2


def mode_volume(config: HybridConfig) -> tuple[float, float]:
    """Closed-form (V_m, U0).

    Interior contributes (4pi/3) R^3 S1, the dipolar exterior (8pi/3) R^3 eps2,
    and U0 = S1 because |G(0)| = 1.
    """
    Om = config.hbar_Omega
    S1 = dispersion_slope(Om, config.ti)
    if S1 <= 0:
        raise ParameterError(f"unphysical dispersion: d Re(w eps1)/dw = {S1} <= 0 at Omega")
    vol = 4.0 * math.pi / 3.0 * config.R**3
    V_m = vol * (S1 + 2.0 * config.env.epsilon_2) / S1
    return V_m, S1


def field_per_photon(hbar_Omega: float, V_m: float) -> float:
    """sqrt(hbar Omega / (2 eps0 V_m)) in eV/(e*nm); 1/eps0 = 4 pi k_e."""
    if V_m <= 0:
        raise ParameterError("mode volume must be > 0")
    return math.sqrt(hbar_Omega * 4.0 * math.pi * COULOMB_EV_NM / (2.0 * V_m))


def mode_quantities(config: HybridConfig) -> ModeQuantities:
    Om = config.hbar_Omega
    V_m, U0 = mode_volume(config)
    return ModeQuantities(hbar_Omega=Om, slope_inside=U0, U0=U0, V_m=V_m, E0=field_per_photon(Om, V_m))


def coupling_strength(config: HybridConfig, mode: ModeQuantities | None = None) -> CouplingResult:
    """Dipolar TI-QD coupling g(r); +2 prefactor for LC, -1 for TC."""
    if config.r <= config.R:
        raise GeometryError(f"r={config.r} must exceed R={config.R}")
    mode = mode or mode_quantities(config)
    scale = config.qd.dipole * mode.E0 / math.sqrt(mode.U0) * (config.R / config.r) ** 3
    return CouplingResult(g=config.orientation.prefactor * scale, orientation=config.orientation, r=config.r)


def coupling_report(config: HybridConfig) -> dict:
    mode = mode_quantities(config)
    c = coupling_strength(config, mode)
    return {
        "g_eV": c.g,
        "orientation": c.orientation.value,
        "r_nm": c.r,
        "Vm_nm3": mode.V_m,
        "U0": mode.U0,
        "E0": mode.E0,
    }
