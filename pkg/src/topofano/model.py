"""Parameter records, internal units and the TlBiSe2/CdSe preset.

Internal units: energies in eV (hbar = 1, so an energy also stands for an
angular frequency), lengths in nm, charges in e, dipoles in e*nm.
"""
from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

from scipy.optimize import brentq

from . import em
from .errors import CalibrationError, GeometryError, ParameterError, PhysicsWarning

HBAR_C_EV_NM = 197.3269804
COULOMB_EV_NM = 1.439964548  # e^2 / (4 pi eps0)
ELEMENTARY_CHARGE_C = 1.602176634e-19
HBAR_EV_FS = 0.6582119569  # hbar in eV*fs
FINE_STRUCTURE = 7.2973525693e-3

# Values quoted for the TlBiSe2 / CdSe / PMMA system.
PRESET_EPSILON1_STATIC = 4.0
PRESET_HBAR_OMEGA_EV = 2.0
PRESET_EPSILON_2 = 1.5
PRESET_GAMMA_R_EV = 1.5e-4
PRESET_GAMMA_S_EV = 6.5e-8
PRESET_DIPOLE_SI = 6.4e-28
PRESET_OCCUPATION = 0.2
PRESET_RADIUS_NM = 4.0
PRESET_DISTANCE_NM = 7.0
PRESET_METADATA = {
    "output_wavelength_nm": 620.0,  # recorded only; the closed-form spectrum does not use it
    "ti": "TlBiSe2",
    "qd": "CdSe",
    "host": "PMMA",
}


class Orientation(str, enum.Enum):
    LC = "LC"
    TC = "TC"

    @property
    def prefactor(self) -> float:
        return 2.0 if self is Orientation.LC else -1.0


class Convention(str, enum.Enum):
    """How eps1(0) relates to omega_e / omega_R."""

    AS_PRINTED = "AsPrinted"  # eps1(0) = 1 + omega_e/omega_R
    LORENTZ_SQUARED = "LorentzSquared"  # eps1(0) = 1 + (omega_e/omega_R)^2


def _warn(msg: str) -> None:
    warnings.warn(msg, PhysicsWarning, stacklevel=3)


def _require(cond: bool, msg: str, exc: type[Exception] = ParameterError) -> None:
    if not cond:
        raise exc(msg)


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


def is_odd_multiple_of_alpha(alpha_tilde: float, rtol: float = 1e-6) -> bool:
    m = alpha_tilde / FINE_STRUCTURE
    k = round(m)
    return k % 2 == 1 and abs(m - k) <= rtol * max(1.0, abs(m))


@dataclass(frozen=True)
class TiMaterial:
    omega_R: float
    omega_e: float
    gamma_0: float = 0.0
    alpha_tilde: float = FINE_STRUCTURE

    def __post_init__(self) -> None:
        _require(_finite(self.omega_R, self.omega_e, self.gamma_0, self.alpha_tilde),
                 "TiMaterial fields must be finite")
        _require(self.omega_R > 0, f"omega_R must be > 0, got {self.omega_R}")
        _require(self.omega_e >= 0, f"omega_e must be >= 0, got {self.omega_e}")
        _require(self.gamma_0 >= 0, f"gamma_0 must be >= 0, got {self.gamma_0}")
        _require(self.alpha_tilde >= 0, f"alpha_tilde must be >= 0, got {self.alpha_tilde}")
        _require(self.gamma_0 < self.omega_R, "gamma_0 must stay below omega_R")
        if self.gamma_0 > 0.1 * self.omega_R:
            _warn(f"gamma_0={self.gamma_0} eV exceeds 0.1*omega_R; the Lorentzian picture degrades")
        if not is_odd_multiple_of_alpha(self.alpha_tilde):
            _warn(f"alpha_tilde/alpha = {self.alpha_tilde / FINE_STRUCTURE:.6g} is not an odd "
                  "integer; not a physical gapped TI surface")

    def to_dict(self) -> dict[str, float]:
        return {
            "omega_R_eV": self.omega_R,
            "omega_e_eV": self.omega_e,
            "gamma_0_eV": self.gamma_0,
            "alpha_tilde": self.alpha_tilde,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> TiMaterial:
        _check_keys(d, {"omega_R_eV", "omega_e_eV", "gamma_0_eV", "alpha_tilde"}, "ti")
        return cls(omega_R=float(d["omega_R_eV"]), omega_e=float(d["omega_e_eV"]),
                   gamma_0=float(d.get("gamma_0_eV", 0.0)),
                   alpha_tilde=float(d.get("alpha_tilde", FINE_STRUCTURE)))


@dataclass(frozen=True)
class QuantumDot:
    omega_a: float
    dipole: float
    gamma_s: float = 0.0

    def __post_init__(self) -> None:
        _require(_finite(self.omega_a, self.dipole, self.gamma_s), "QuantumDot fields must be finite")
        _require(self.omega_a > 0, f"omega_a must be > 0, got {self.omega_a}")
        _require(self.dipole > 0, f"dipole must be > 0, got {self.dipole}")
        _require(self.gamma_s >= 0, f"gamma_s must be >= 0, got {self.gamma_s}")

    def to_dict(self) -> dict[str, float]:
        return {"omega_a_eV": self.omega_a, "dipole_e_nm": self.dipole, "gamma_s_eV": self.gamma_s}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> QuantumDot:
        _check_keys(d, {"omega_a_eV", "dipole_e_nm", "gamma_s_eV"}, "qd")
        return cls(omega_a=float(d["omega_a_eV"]), dipole=float(d["dipole_e_nm"]),
                   gamma_s=float(d.get("gamma_s_eV", 0.0)))


@dataclass(frozen=True)
class Environment:
    epsilon_2: float = PRESET_EPSILON_2

    def __post_init__(self) -> None:
        _require(_finite(self.epsilon_2) and self.epsilon_2 >= 1,
                 f"epsilon_2 must be >= 1, got {self.epsilon_2}")

    def to_dict(self) -> dict[str, float]:
        return {"epsilon_2": self.epsilon_2}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Environment:
        _check_keys(d, {"epsilon_2"}, "env")
        return cls(epsilon_2=float(d["epsilon_2"]))


@dataclass(frozen=True)
class HybridConfig:
    R: float
    r: float
    orientation: Orientation
    ti: TiMaterial
    qd: QuantumDot
    env: Environment = field(default_factory=Environment)

    def __post_init__(self) -> None:
        if not isinstance(self.orientation, Orientation):
            object.__setattr__(self, "orientation", Orientation(self.orientation))
        _require(_finite(self.R, self.r), "R and r must be finite", GeometryError)
        _require(self.R > 0, f"R must be > 0, got {self.R}", GeometryError)
        _require(self.r > self.R, f"QD must sit outside the sphere: r={self.r} <= R={self.R}",
                 GeometryError)
        if self.r < 2 * self.R:
            _warn(f"r={self.r} nm < 2R: the dipole approximation for the TI-QD coupling degrades")

    @property
    def hbar_Omega(self) -> float:
        """Localized-mode energy for this material and host."""
        return em.mode_energy(self.ti, self.env)

    def with_(self, **changes: Any) -> HybridConfig:
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "R_nm": self.R,
            "r_nm": self.r,
            "orientation": self.orientation.value,
            "ti": self.ti.to_dict(),
            "qd": self.qd.to_dict(),
            "env": self.env.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> HybridConfig:
        _check_keys(d, {"R_nm", "r_nm", "orientation", "ti", "qd", "env"}, "config")
        return cls(R=float(d["R_nm"]), r=float(d["r_nm"]), orientation=Orientation(d["orientation"]),
                   ti=TiMaterial.from_dict(d["ti"]), qd=QuantumDot.from_dict(d["qd"]),
                   env=Environment.from_dict(d.get("env", {"epsilon_2": PRESET_EPSILON_2})))


@dataclass(frozen=True)
class WideBand:
    """Flat reservoir coupling over an infinite band."""

    def to_dict(self) -> str:
        return "wide"


@dataclass(frozen=True)
class BandLimited:
    omega_min: float
    omega_max: float

    def __post_init__(self) -> None:
        _require(_finite(self.omega_min, self.omega_max) and self.omega_min < self.omega_max,
                 f"band requires omega_min < omega_max, got [{self.omega_min}, {self.omega_max}]")

    @property
    def width(self) -> float:
        return self.omega_max - self.omega_min

    def to_dict(self) -> dict[str, float]:
        return {"omega_min_eV": self.omega_min, "omega_max_eV": self.omega_max}


Band = WideBand | BandLimited


def _band_from(value: Any) -> Band:
    if value in (None, "wide", "WideBand"):
        return WideBand()
    if isinstance(value, Mapping):
        _check_keys(value, {"omega_min_eV", "omega_max_eV"}, "band")
        return BandLimited(float(value["omega_min_eV"]), float(value["omega_max_eV"]))
    raise ParameterError(f"unrecognized band specification {value!r}")


@dataclass(frozen=True)
class Reservoirs:
    gamma_r: float
    gamma_0: float = 0.0
    gamma_s: float = 0.0
    n: float = 0.0
    band: Band = field(default_factory=WideBand)

    def __post_init__(self) -> None:
        _require(_finite(self.gamma_r, self.gamma_0, self.gamma_s, self.n),
                 "Reservoirs fields must be finite")
        for name in ("gamma_r", "gamma_0", "gamma_s"):
            _require(getattr(self, name) >= 0, f"{name} must be >= 0")
        _require(0 <= self.n < 1, f"occupation n must lie in [0, 1), got {self.n}")
        if self.n >= 0.5:
            _warn(f"n={self.n} >= 0.5: the (1-2n) factor is non-positive and the spectrum may "
                  "lose positivity")

    @property
    def inversion(self) -> float:
        """The (1 - 2n) factor left by the mean-field truncation."""
        return 1.0 - 2.0 * self.n

    def with_(self, **changes: Any) -> Reservoirs:
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "gamma_r_eV": self.gamma_r,
            "gamma_0_eV": self.gamma_0,
            "gamma_s_eV": self.gamma_s,
            "n": self.n,
            "band": self.band.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Reservoirs:
        _check_keys(d, {"gamma_r_eV", "gamma_0_eV", "gamma_s_eV", "n", "band"}, "reservoirs")
        return cls(gamma_r=float(d["gamma_r_eV"]), gamma_0=float(d.get("gamma_0_eV", 0.0)),
                   gamma_s=float(d.get("gamma_s_eV", 0.0)), n=float(d.get("n", 0.0)),
                   band=_band_from(d.get("band")))


def _check_keys(d: Mapping[str, Any], allowed: set[str], where: str) -> None:
    if not isinstance(d, Mapping):
        raise ParameterError(f"{where}: expected a JSON object")
    unknown = set(d) - allowed
    if unknown:
        raise ParameterError(f"{where}: unknown keys {sorted(unknown)}; allowed {sorted(allowed)}")


def dump_json(cfg: HybridConfig, res: Reservoirs) -> str:
    return json.dumps({"config": cfg.to_dict(), "reservoirs": res.to_dict()}, indent=2)


def load_json(text: str) -> tuple[HybridConfig, Reservoirs]:
    doc = json.loads(text)
    _check_keys(doc, {"config", "reservoirs"}, "document")
    return HybridConfig.from_dict(doc["config"]), Reservoirs.from_dict(doc["reservoirs"])


def convert_dipole_si(d_si: float) -> float:
    """Dipole moment in C*m -> e*nm."""
    if not d_si >= 0:
        raise ParameterError(f"dipole moment must be >= 0, got {d_si}")
    return d_si / ELEMENTARY_CHARGE_C * 1e9


def calibrate_material(
    epsilon1_static: float,
    hbar_Omega_target: float,
    env: Environment,
    alpha_tilde: float = FINE_STRUCTURE,
    convention: Convention | str = Convention.AS_PRINTED,
    gamma_0: float = 0.0,
) -> TiMaterial:
    """Find (omega_R, omega_e) matching a static permittivity and a mode energy.

    The static permittivity fixes the ratio omega_e/omega_R; omega_R is then
    root-bracketed so that the localized-mode energy equals the target.
    """
    convention = Convention(convention)
    if not (math.isfinite(epsilon1_static) and epsilon1_static > 1):
        raise ParameterError(f"epsilon1_static must be > 1, got {epsilon1_static}")
    if not (math.isfinite(hbar_Omega_target) and hbar_Omega_target > 0):
        raise ParameterError(f"hbar_Omega_target must be > 0, got {hbar_Omega_target}")
    if alpha_tilde < 0:
        raise ParameterError("alpha_tilde must be >= 0")

    if convention is Convention.AS_PRINTED:
        ratio = epsilon1_static - 1.0
    else:
        ratio = math.sqrt(epsilon1_static - 1.0)

    def residual(omega_R: float) -> float:
        return em.resonance_energy(omega_R, ratio * omega_R, env.epsilon_2, alpha_tilde) - hbar_Omega_target

    lo, hi = hbar_Omega_target * 1e-9, hbar_Omega_target
    f_lo, f_hi = residual(lo), residual(hi)
    if not (f_lo < 0 <= f_hi):
        raise CalibrationError(
            f"no root in [{lo:.3g}, {hi:.3g}] eV: residuals {f_lo:.3g}, {f_hi:.3g}"
        )
    omega_R = hbar_Omega_target if f_hi == 0 else brentq(residual, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    if abs(residual(omega_R)) > 1e-10:
        raise CalibrationError(f"calibration residual {residual(omega_R):.3g} eV exceeds 1e-10 eV")
    return TiMaterial(omega_R=omega_R, omega_e=ratio * omega_R, gamma_0=gamma_0, alpha_tilde=alpha_tilde)


def preset_paper(
    omega_a: float = PRESET_HBAR_OMEGA_EV,
    r: float = PRESET_DISTANCE_NM,
    orientation: Orientation | str = Orientation.LC,
    convention: Convention | str = Convention.AS_PRINTED,
) -> tuple[HybridConfig, Reservoirs]:
    """TlBiSe2 sphere (R = 4 nm) in PMMA next to a CdSe dot."""
    env = Environment(PRESET_EPSILON_2)
    ti = calibrate_material(PRESET_EPSILON1_STATIC, PRESET_HBAR_OMEGA_EV, env, FINE_STRUCTURE, convention)
    qd = QuantumDot(omega_a=omega_a, dipole=convert_dipole_si(PRESET_DIPOLE_SI), gamma_s=PRESET_GAMMA_S_EV)
    cfg = HybridConfig(R=PRESET_RADIUS_NM, r=r, orientation=Orientation(orientation), ti=ti, qd=qd, env=env)
    res = Reservoirs(gamma_r=PRESET_GAMMA_R_EV, gamma_0=ti.gamma_0, gamma_s=qd.gamma_s,
                     n=PRESET_OCCUPATION, band=WideBand())
    return cfg, res


def params_snapshot(cfg: HybridConfig, res: Reservoirs, **extra: Any) -> dict[str, Any]:
    snap = {"config": cfg.to_dict(), "reservoirs": res.to_dict()}
    snap.update(extra)
    return snap


__all__ = [
    "HBAR_C_EV_NM", "COULOMB_EV_NM", "ELEMENTARY_CHARGE_C", "HBAR_EV_FS", "FINE_STRUCTURE",
    "Orientation", "Convention", "TiMaterial", "QuantumDot", "Environment", "HybridConfig",
    "WideBand", "BandLimited", "Reservoirs", "calibrate_material", "preset_paper",
    "convert_dipole_si", "dump_json", "load_json",
]
