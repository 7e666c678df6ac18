"""Closed-form absorption spectrum, reservoir self-energies and Fano features.

Sign convention: ``self_energy`` returns lambda_ij with +i*pi*T_i*T_j as in
the printed formula, and ``absorption`` is Im{D}^-1 with D the braced
expression.  ``green_function`` is the retarded form (lambda -> conj) and
is what the broadened / complex-frequency paths use; on the real axis
-Im G equals the printed absorption.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Sequence, TextIO

import numpy as np

from .errors import OutOfBandError, SingularityError
from .model import BandLimited, HybridConfig, Reservoirs, WideBand, params_snapshot
from .quantization import coupling_strength


@dataclass(frozen=True)
class SelfEnergy:
    lambda_11: Any
    lambda_22: Any
    lambda_33: Any
    lambda_13: Any
    lambda_31: Any


@dataclass
class SpectrumSeries:
    omega_grid: np.ndarray
    sigma: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.omega_grid = np.asarray(self.omega_grid, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.omega_grid.shape != self.sigma.shape or self.omega_grid.ndim != 1:
            raise ValueError("omega_grid and sigma must be 1-D arrays of equal length")

    def normalized(self) -> SpectrumSeries:
        peak = float(np.max(self.sigma))
        if not peak > 0:
            raise SingularityError("cannot normalize a spectrum with no positive values")
        params = dict(self.params)
        params["raw_peak"] = params.get("raw_peak", 1.0) * peak
        return SpectrumSeries(self.omega_grid, self.sigma / peak, params)

    def to_csv(self, stream: TextIO) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["omega_eV", "sigma_norm"])
        for x, y in zip(self.omega_grid, self.sigma):
            w.writerow([f"{x:.17g}", f"{y:.17g}"])


@dataclass
class FanoFeatures:
    peak_positions: list[float]
    peak_heights: list[float]
    peak_widths: list[float]
    peak_weights: list[float]
    dip_position: float | None
    dip_value: float | None
    peak_separation: float | None
    contrast: float | None

    @property
    def has_fano(self) -> bool:
        return self.dip_position is not None

    @property
    def main_peaks(self) -> list[int]:
        """Indices of the two largest peaks, in order of position."""
        order = np.argsort(self.peak_heights)[::-1][:2]
        return sorted(int(i) for i in order)

    @property
    def narrow_peak(self) -> int | None:
        if not self.peak_positions:
            return None
        idx = self.main_peaks
        return min(idx, key=lambda i: self.peak_widths[i])

    @property
    def narrow_prominence(self) -> float | None:
        """Spectral-weight fraction carried by the narrower of the two main peaks."""
        i = self.narrow_peak
        return None if i is None else self.peak_weights[i]

    def to_dict(self) -> dict:
        return {
            "peak_positions_eV": self.peak_positions,
            "peak_heights": self.peak_heights,
            "peak_widths_eV": self.peak_widths,
            "peak_weights": self.peak_weights,
            "dip_position_eV": self.dip_position,
            "dip_value": self.dip_value,
            "peak_separation_eV": self.peak_separation,
            "contrast": self.contrast,
            "has_fano": self.has_fano,
            "narrow_prominence": self.narrow_prominence,
        }


# -- self-energies -----------------------------------------------------------

def _rates(res: Reservoirs) -> tuple[float, float, float]:
    return res.gamma_r, res.gamma_0, res.gamma_s


def _band_log(omega, band: BandLimited):
    w = np.asarray(omega, dtype=float)
    if np.any((w <= band.omega_min) | (w >= band.omega_max)):
        raise OutOfBandError(f"omega outside the reservoir band ({band.omega_min}, {band.omega_max}) eV")
    return np.log(np.abs((w - band.omega_min) / (band.omega_max - w)))


def self_energy(omega, res: Reservoirs) -> SelfEnergy:
    """lambda_ij(omega) for flat couplings T_i = sqrt(gamma_i / 2pi)."""
    gr, g0, gs = _rates(res)
    imag = {
        "11": 0.5j * gr,
        "22": 0.5j * g0,
        "33": 0.5j * gs,
        "13": 0.5j * math.sqrt(gr * gs),
    }
    if isinstance(res.band, BandLimited):
        L = _band_log(omega, res.band) / (2.0 * math.pi)
        real = {"11": gr * L, "22": g0 * L, "33": gs * L, "13": math.sqrt(gr * gs) * L}
    else:
        zero = np.zeros_like(np.asarray(omega, dtype=float))
        real = {k: zero for k in imag}
    lam = {k: _scalar(real[k] + imag[k]) for k in imag}
    return SelfEnergy(lam["11"], lam["22"], lam["33"], lam["13"], lam["13"])


def retarded_self_energy(z, res: Reservoirs) -> SelfEnergy:
    """Sigma_ij(z) = int T_i T_j / (z - w') dw' for Im z > 0 (analytic continuation)."""
    z = np.asarray(z, dtype=complex)
    gr, g0, gs = _rates(res)
    if isinstance(res.band, BandLimited):
        base = np.log((z - res.band.omega_min) / (z - res.band.omega_max)) / (2.0 * math.pi)
    else:
        base = np.full(z.shape, -0.5j)  # -i pi T^2 with T^2 = gamma/2pi
    s = lambda gam: _scalar(gam * base)
    s13 = s(math.sqrt(gr * gs))
    return SelfEnergy(s(gr), s(g0), s(gs), s13, s13)


def _scalar(a):
    a = np.asarray(a)
    return complex(a) if a.ndim == 0 else a


# -- absorption --------------------------------------------------------------

def _qd_term(num, den):
    """num/den, with exact zeros where the QD is fully decoupled (num == 0)."""
    num = np.asarray(num, dtype=complex)
    den = np.asarray(den, dtype=complex)
    out = np.zeros(np.broadcast(num, den).shape, dtype=complex)
    nz = np.broadcast_to(num != 0, out.shape)
    if np.any(nz & np.broadcast_to(den == 0, out.shape)):
        raise SingularityError("QD denominator vanishes with nonzero coupling (all rates zero?)")
    np.divide(np.broadcast_to(num, out.shape), np.broadcast_to(den, out.shape), out=out, where=nz)
    return out


def braced_expression(omega, cfg: HybridConfig, res: Reservoirs, g: float):
    """D(omega) = omega - Omega - l11 - l22 - (1-2n)(g+l13)(g+l31)/(omega - omega_a - (1-2n) l33)."""
    w = np.asarray(omega, dtype=float)
    lam = self_energy(w, res)
    c = res.inversion
    Om, wa = cfg.hbar_Omega, cfg.qd.omega_a
    qd = _qd_term(c * (g + lam.lambda_13) * (g + lam.lambda_31), w - wa - c * lam.lambda_33)
    return w - Om - lam.lambda_11 - lam.lambda_22 - qd


def _resolvent(x, lam: SelfEnergy, cfg: HybridConfig, res: Reservoirs, g: float):
    """1/D written as q/(p*q - K) with p the bare TI term, q the QD denominator, K the cross term.

    Algebraically identical to the braced form but regular where q -> 0, where
    the QD term diverges and the response vanishes.
    """
    c = res.inversion
    p = x - cfg.hbar_Omega - lam.lambda_11 - lam.lambda_22
    qd = np.asarray(x - cfg.qd.omega_a - c * lam.lambda_33, dtype=complex)
    K = np.asarray(c * (g + lam.lambda_13) * (g + lam.lambda_31), dtype=complex)
    p, qd, K = np.broadcast_arrays(np.asarray(p, dtype=complex), qd, K)
    den = p * qd - K
    decoupled = (qd == 0) & (K == 0)
    den_eff = np.where(decoupled, p, den)
    # total cancellation in p*q - K means a real pole (e.g. a dark state of the shared bath)
    lost = ~decoupled & (np.abs(den) <= 8 * np.finfo(float).eps * (np.abs(p * qd) + np.abs(K)))
    if np.any(den_eff == 0) or np.any(lost):
        raise SingularityError("response evaluated at a real pole (all rates zero?)")
    num = np.where(decoupled, 1.0 + 0j, qd)
    return num / den_eff


def absorption(omega, cfg: HybridConfig, res: Reservoirs, g: float):
    """Unnormalized sigma(omega) = Im{D(omega)}^-1."""
    w = np.asarray(omega, dtype=float)
    out = _resolvent(w, self_energy(w, res), cfg, res, g).imag
    return float(out) if out.ndim == 0 else out


def green_function(z, cfg: HybridConfig, res: Reservoirs, g: float):
    """Retarded TI-mode Green function at complex frequency z (Im z >= 0)."""
    z = np.asarray(z, dtype=complex)
    return _scalar(_resolvent(z, retarded_self_energy(z, res), cfg, res, g))


def broadened_absorption(omega, cfg: HybridConfig, res: Reservoirs, g: float, broadening: float):
    """-Im G(omega + i*broadening); equals ``absorption`` as broadening -> 0+."""
    G = np.asarray(green_function(np.asarray(omega, dtype=float) + 1j * broadening, cfg, res, g))
    out = -G.imag
    return float(out) if out.ndim == 0 else out


def poles(cfg: HybridConfig, res: Reservoirs, g: float) -> np.ndarray:
    """Complex dressed-mode energies with self-energies frozen at Omega."""
    Om, wa, c = cfg.hbar_Omega, cfg.qd.omega_a, res.inversion
    w_ref = Om
    if isinstance(res.band, BandLimited) and not (res.band.omega_min < w_ref < res.band.omega_max):
        w_ref = 0.5 * (res.band.omega_min + res.band.omega_max)
    lam = retarded_self_energy(w_ref + 0j, res)
    A = Om + lam.lambda_11 + lam.lambda_22
    B = wa + c * lam.lambda_33
    return np.roots([1.0, -(A + B), A * B - c * (g + lam.lambda_13) * (g + lam.lambda_31)])


# -- grids and series ----------------------------------------------------------

DEFAULT_POINTS = 4001
DEFAULT_HALF_SPAN = 0.02


def default_grid(cfg: HybridConfig, res: Reservoirs, g: float, points: int = DEFAULT_POINTS) -> np.ndarray:
    """Uniform base grid covering both dressed modes, refined near each pole and near omega_a."""
    p = poles(cfg, res, g)
    centers = [cfg.hbar_Omega, cfg.qd.omega_a, *p.real]
    widths = np.abs(p.imag)
    pad = max(DEFAULT_HALF_SPAN, 50.0 * float(widths.max(initial=0.0)))
    lo, hi = min(centers) - pad, max(centers) + pad
    if isinstance(res.band, BandLimited):
        eps = 1e-9 * res.band.width
        lo, hi = max(lo, res.band.omega_min + eps), min(hi, res.band.omega_max - eps)
    parts = [np.linspace(lo, hi, points)]
    for pz, wdt in zip(p, widths):
        if wdt > 0:
            parts.append(_geometric_cluster(pz.real, wdt, hi - lo))
    qd_width = res.inversion * res.gamma_s
    if qd_width > 0:
        parts.append(cfg.qd.omega_a + np.linspace(-20.0, 20.0, 401) * qd_width)
    grid = np.unique(np.concatenate(parts))
    return grid[(grid >= lo) & (grid <= hi)]


def _geometric_cluster(center: float, width: float, span: float, per_side: int = 400) -> np.ndarray:
    """Offsets from 0.01*width out to ``span``, log-spaced so Lorentzian tails stay resolved."""
    if span <= 0.01 * width:
        return np.array([center])
    off = np.geomspace(0.01 * width, span, per_side)
    return center + np.concatenate([-off[::-1], [0.0], off])


def _local_extrema(y: np.ndarray) -> np.ndarray:
    s = np.sign(np.diff(y))
    return np.nonzero(s[:-1] * s[1:] < 0)[0] + 1


def refine_grid(grid: np.ndarray, func: Callable[[np.ndarray], np.ndarray], rounds: int = 3,
                points: int = 41) -> tuple[np.ndarray, np.ndarray]:
    """Densify ``grid`` around every sampled local extremum of ``func``."""
    x = np.asarray(grid, dtype=float)
    y = func(x)
    for _ in range(rounds):
        idx = _local_extrema(y)
        if idx.size == 0:
            break
        extra = [np.linspace(x[i - 1], x[i + 1], points) for i in idx]
        new = np.setdiff1d(np.unique(np.concatenate(extra)), x)
        if new.size == 0:
            break
        x_all = np.concatenate([x, new])
        y_all = np.concatenate([y, func(new)])
        order = np.argsort(x_all, kind="stable")
        x, y = x_all[order], y_all[order]
    return x, y


def resolve_g(cfg: HybridConfig, g_override: float | None) -> float:
    return coupling_strength(cfg).g if g_override is None else float(g_override)


def spectrum_series(grid, cfg: HybridConfig, res: Reservoirs, g_override: float | None = None,
                    broadening: float = 0.0) -> SpectrumSeries:
    """Normalized (max = 1) absorption series.

    ``grid=None`` builds the default grid and adaptively refines it around
    every local extremum, which is needed to resolve the QD feature.
    """
    g = resolve_g(cfg, g_override)
    if broadening > 0:
        func = lambda w: broadened_absorption(w, cfg, res, g, broadening)
    else:
        func = lambda w: absorption(w, cfg, res, g)
    if grid is None:
        x, y = refine_grid(default_grid(cfg, res, g), func)
    else:
        x = np.asarray(grid, dtype=float)
        if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("grid must be a strictly increasing 1-D array")
        y = np.asarray(func(x), dtype=float)
    params = params_snapshot(cfg, res, g_eV=g, hbar_Omega_eV=cfg.hbar_Omega, broadening_eV=broadening)
    return SpectrumSeries(x, y, params).normalized()


# -- features ------------------------------------------------------------------

def _parabola_vertex(x0, x1, x2, y0, y1, y2) -> tuple[float, float]:
    d0, d1 = x1 - x0, x2 - x1
    den = d0 * d1 * (d0 + d1)
    a = (d0 * (y2 - y1) - d1 * (y1 - y0)) / den
    b = ((y1 - y0) * d1**2 + (y2 - y1) * d0**2) / den  # slope at x1
    if a == 0:
        return x1, y1
    dx = -b / (2 * a)
    if not (x0 - x1 <= dx <= x2 - x1):
        return x1, y1
    return x1 + dx, y1 + b * dx + a * dx**2


def _stencil_extrema(x: np.ndarray, y: np.ndarray, kind: str) -> list[int]:
    out = []
    for i in range(1, len(y) - 1):
        if kind == "max" and y[i] > y[i - 1] and y[i] >= y[i + 1]:
            out.append(i)
        elif kind == "min" and y[i] < y[i - 1] and y[i] <= y[i + 1]:
            out.append(i)
    return out


def _fwhm(x, y, i, lo, hi) -> float:
    half = 0.5 * y[i]
    j = i
    while j > lo and y[j] > half:
        j -= 1
    left = x[j] if y[j] > half else x[j] + (half - y[j]) * (x[j + 1] - x[j]) / (y[j + 1] - y[j])
    k = i
    while k < hi and y[k] > half:
        k += 1
    right = x[k] if y[k] > half else x[k - 1] + (y[k - 1] - half) * (x[k] - x[k - 1]) / (y[k - 1] - y[k])
    return float(right - left)


def _merge_flat_maxima(y: np.ndarray, idx: list[int], tol: float) -> list[int]:
    out = [idx[0]]
    for i in idx[1:]:
        j = out[-1]
        floor = float(np.min(y[j:i + 1]))
        if floor >= (1.0 - tol) * min(y[i], y[j]):
            if y[i] > y[j]:
                out[-1] = i
        else:
            out.append(i)
    return out


def find_features(series: SpectrumSeries, rel_floor: float = 1e-9, merge_tol: float = 1e-6) -> FanoFeatures:
    """Peaks (3-point stencil, quadratic sub-grid refinement) and the dip between the two largest.

    Maxima below ``rel_floor`` of the global maximum are treated as noise, and
    neighbouring maxima whose separating minimum is within ``merge_tol``
    (relative) of the lower one are rounding ripples on a single peak.
    """
    x, y = series.omega_grid, series.sigma
    ymax = float(y.max())
    max_idx = [i for i in _stencil_extrema(x, y, "max") if y[i] >= rel_floor * ymax]
    if not max_idx:
        max_idx = [int(np.argmax(y))]
    max_idx = _merge_flat_maxima(y, max_idx, merge_tol)
    # basins: between successive peaks, split at the lowest sample
    bounds = [0]
    for a, b in zip(max_idx[:-1], max_idx[1:]):
        bounds.append(a + int(np.argmin(y[a:b + 1])))
    bounds.append(len(x) - 1)
    total = float(np.trapezoid(y, x))
    positions, heights, widths, weights = [], [], [], []
    for n, i in enumerate(max_idx):
        if 0 < i < len(x) - 1:
            px, py = _parabola_vertex(x[i - 1], x[i], x[i + 1], y[i - 1], y[i], y[i + 1])
        else:
            px, py = x[i], y[i]
        positions.append(float(px))
        heights.append(float(py))
        lo, hi = bounds[n], bounds[n + 1]
        widths.append(_fwhm(x, y, i, lo, hi))
        weights.append(float(np.trapezoid(y[lo:hi + 1], x[lo:hi + 1])) / total if total > 0 else 0.0)

    dip_pos = dip_val = sep = contrast = None
    if len(max_idx) >= 2:
        order = np.argsort(heights)[::-1][:2]
        a, b = sorted(max_idx[k] for k in order)
        mins = [j for j in _stencil_extrema(x, y, "min") if a < j < b]
        if mins:
            j = min(mins, key=lambda k: y[k])
            dip_pos, dip_val = _parabola_vertex(x[j - 1], x[j], x[j + 1], y[j - 1], y[j], y[j + 1])
            dip_val = max(float(dip_val), 0.0) if y[j] >= 0 else float(dip_val)
            dip_pos = float(dip_pos)
            contrast = dip_val / max(heights)
            sep = abs(positions[list(max_idx).index(b)] - positions[list(max_idx).index(a)])
    return FanoFeatures(positions, heights, widths, weights, dip_pos, dip_val, sep, contrast)


# -- sweeps --------------------------------------------------------------------

def _workers() -> int:
    try:
        return max(1, int(os.environ.get("TOPOFANO_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn: Callable, items: Sequence) -> list:
    n = _workers()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))  # map preserves input order


@dataclass
class SweepPoint:
    value: float
    g: float
    hbar_Omega: float
    series: SpectrumSeries
    features: FanoFeatures


def sweep_distance(r_list: Iterable[float], cfg: HybridConfig, res: Reservoirs, grid=None) -> list[SweepPoint]:
    r_list = [float(r) for r in r_list]
    if not r_list:
        raise ValueError("empty distance list")

    def one(r: float) -> SweepPoint:
        c = replace(cfg, r=r)
        s = spectrum_series(grid, c, res)
        return SweepPoint(r, s.params["g_eV"], c.hbar_Omega, s, find_features(s))

    return _map(one, r_list)


def prominence_trend(points: Sequence[SweepPoint]) -> dict:
    """Narrow-peak prominence along a sweep and whether it strictly decreases."""
    prom = [p.features.narrow_prominence for p in points]
    dec = all(a is not None and b is not None and a > b for a, b in zip(prom[:-1], prom[1:]))
    return {"values": [p.value for p in points], "prominence": prom, "strictly_decreasing": dec}


def sweep_alpha(alpha_list: Iterable[float], cfg: HybridConfig, res: Reservoirs, grid=None) -> list[SweepPoint]:
    """Vary alpha_tilde with omega_R and omega_e held at the given material's values."""
    alpha_list = [float(a) for a in alpha_list]
    if not alpha_list:
        raise ValueError("empty alpha list")

    def one(a: float) -> SweepPoint:
        c = replace(cfg, ti=replace(cfg.ti, alpha_tilde=a))
        s = spectrum_series(grid, c, res)
        return SweepPoint(a, s.params["g_eV"], c.hbar_Omega, s, find_features(s))

    return _map(one, alpha_list)


def sweep_coupling(g_grid, omega_grid, cfg: HybridConfig, res: Reservoirs, normalize: str = "column") -> np.ndarray:
    """sigma[i, j] at g_grid[i], omega_grid[j]; normalized per g column or globally."""
    g_grid = np.asarray(g_grid, dtype=float)
    w = np.asarray(omega_grid, dtype=float)
    if g_grid.size == 0 or w.size == 0:
        raise ValueError("empty coupling or energy grid")
    rows = _map(lambda g: np.asarray(absorption(w, cfg, res, g)), list(g_grid))
    M = np.vstack(rows)
    if normalize == "column":
        M = M / M.max(axis=1, keepdims=True)
    elif normalize == "global":
        M = M / M.max()
    elif normalize != "none":
        raise ValueError("normalize must be 'column', 'global' or 'none'")
    return M


def write_map_csv(stream: TextIO, g_grid, omega_grid, M: np.ndarray) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["omega_eV", "g_eV", "sigma_norm"])
    for i, g in enumerate(g_grid):
        for j, x in enumerate(omega_grid):
            w.writerow([f"{x:.17g}", f"{g:.17g}", f"{M[i, j]:.17g}"])
