import io
import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate

from topofano import preset_paper, quantization as q, spectrum as sp
from topofano.errors import OutOfBandError, SingularityError
from topofano.model import FINE_STRUCTURE, BandLimited, Orientation, Reservoirs, WideBand


def preset(**kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return preset_paper(**kw)


def g_of(cfg):
    return q.coupling_strength(cfg).g


# -- self-energies -------------------------------------------------------------------

def test_wide_band_values():
    res = Reservoirs(gamma_r=1.5e-4, gamma_0=2e-5, gamma_s=6.5e-8)
    lam = sp.self_energy(2.0, res)
    assert lam.lambda_11 == 7.5e-5j
    assert lam.lambda_22 == 1e-5j
    assert lam.lambda_33 == 0.5j * 6.5e-8
    assert lam.lambda_13 == lam.lambda_31 == 0.5j * math.sqrt(1.5e-4 * 6.5e-8)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0.1, 5))
def test_wide_band_invariants(gr, g0, gs, w):
    lam = sp.self_energy(w, Reservoirs(gamma_r=gr, gamma_0=g0, gamma_s=gs))
    for v in (lam.lambda_11, lam.lambda_22, lam.lambda_33, lam.lambda_13):
        assert v.real == 0 and v.imag >= 0
    assert lam.lambda_13 == lam.lambda_31


def test_band_center_has_no_shift():
    res = Reservoirs(gamma_r=1.5e-4, gamma_s=6.5e-8, band=BandLimited(1.5, 2.5))
    lam = sp.self_energy(2.0, res)
    assert lam.lambda_11.real == 0 and lam.lambda_13.real == 0
    assert lam.lambda_11.imag == 7.5e-5


def test_principal_value_against_quadrature():
    a, b, w, gr = 1.5, 2.5, 2.1, 1.5e-4
    res = Reservoirs(gamma_r=gr, band=BandLimited(a, b))
    T2 = gr / (2 * math.pi)
    # Cauchy-weighted quadrature: p.v. int f(x)/(x - w) dx
    pv = -T2 * integrate.quad(lambda x: 1.0, a, b, weight="cauchy", wvar=w)[0]
    # symmetric-interval subtraction: the part symmetric about w cancels exactly
    d = min(w - a, b - w)
    rest = integrate.quad(lambda x: 1.0 / (w - x), w + d, b, epsabs=0, epsrel=1e-13)[0] if b - w > d else \
        integrate.quad(lambda x: 1.0 / (w - x), a, w - d, epsabs=0, epsrel=1e-13)[0]
    sym = T2 * rest
    re = sp.self_energy(w, res).lambda_11.real
    assert abs(re - pv) <= 1e-8
    assert abs(re - sym) <= 1e-8
    assert re == pytest.approx(gr / (2 * math.pi) * math.log(0.6 / 0.4), rel=1e-14)


def test_out_of_band():
    res = Reservoirs(gamma_r=1e-4, band=BandLimited(1.5, 2.5))
    with pytest.raises(OutOfBandError):
        sp.self_energy(2.6, res)
    with pytest.raises(OutOfBandError):
        sp.self_energy(np.array([2.0, 1.5]), res)


def test_continuum_limit():
    w, s, gr = 2.0, 0.1, 1e-4
    vals = []
    for W in (1.0, 10.0, 100.0, 1000.0):
        res = Reservoirs(gamma_r=gr, band=BandLimited(w - W / 2 + s, w + W / 2 + s))
        vals.append(sp.self_energy(w, res).lambda_11.real * W)
    # shift ~ gamma * 4 s / (2 pi W): vanishes like 1/W, leaving the wide-band value
    assert vals[-1] == pytest.approx(-gr * 4 * s / (2 * math.pi), rel=1e-5)
    assert abs(vals[-1] / 1000) < abs(vals[0])


def test_retarded_form_is_conjugate_on_real_axis():
    res = Reservoirs(gamma_r=1e-4, gamma_s=1e-7, band=BandLimited(1.5, 2.5))
    lam = sp.self_energy(2.1, res)
    ret = sp.retarded_self_energy(2.1 + 1e-14j, res)
    assert ret.lambda_11 == pytest.approx(np.conj(lam.lambda_11), rel=1e-9)
    assert sp.retarded_self_energy(2.0 + 0j, Reservoirs(gamma_r=1e-4)).lambda_11 == -5e-5j


# -- absorption ---------------------------------------------------------------------

def lorentzian(w, Om, gam):
    return (gam / 2) / ((w - Om) ** 2 + (gam / 2) ** 2)


def test_decoupled_limit_is_lorentzian(cfg):
    res = Reservoirs(gamma_r=1.5e-4, gamma_0=3e-5, gamma_s=0.0, n=0.2)
    w = np.linspace(1.99, 2.01, 4001)
    s = sp.absorption(w, cfg, res, 0.0)
    ref = lorentzian(w, cfg.hbar_Omega, 1.8e-4)
    assert np.max(np.abs(s - ref) / ref) <= 1e-12


def test_half_occupation_removes_g(cfg):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = Reservoirs(gamma_r=1.5e-4, gamma_s=6.5e-8, n=0.5)
    w = np.linspace(1.9, 2.1, 2001)
    base = sp.absorption(w, cfg, res, 0.0)
    for g in (0.01, 0.1, -0.3):
        assert np.array_equal(sp.absorption(w, cfg, res, g), base)
    assert np.max(np.abs(base - lorentzian(w, cfg.hbar_Omega, 1.5e-4)) / base) <= 1e-12


def test_cross_term_is_a_square(cfg, res):
    lam = sp.self_energy(2.0, res)
    g = 0.1
    assert (g + lam.lambda_13) * (g + lam.lambda_31) == (g + lam.lambda_13) ** 2


def test_real_pole_raises(cfg):
    res = Reservoirs(gamma_r=0.0)
    with pytest.raises(SingularityError):
        sp.absorption(cfg.hbar_Omega, cfg, res, 0.0)


def test_dark_state_pole_raises(cfg, res):
    # decoupled dot resonant with the mode: one combination never sees the shared bath
    assert cfg.qd.omega_a == cfg.hbar_Omega
    with pytest.raises(SingularityError):
        sp.absorption(cfg.hbar_Omega, cfg, res, 0.0)
    assert sp.absorption(cfg.hbar_Omega + 1e-9, cfg, res, 0.0) > 0


def test_qd_pole_without_qd_rate_is_regular(cfg):
    res = Reservoirs(gamma_r=1.5e-4, gamma_s=0.0, n=0.2)
    assert sp.absorption(cfg.qd.omega_a, cfg, res, 0.1) == 0.0


def test_retarded_green_function_matches_absorption(cfg, res):
    g = g_of(cfg)
    w = np.linspace(1.9, 2.1, 501)
    a = sp.absorption(w, cfg, res, g)
    b = sp.broadened_absorption(w, cfg, res, g, 1e-13)
    assert np.allclose(a, b, rtol=1e-6)
    assert np.allclose(-np.imag(sp.green_function(w + 0j, cfg, res, g)), a, rtol=1e-12)


def test_antiresonance_deepens_as_qd_rate_vanishes(cfg):
    g = g_of(cfg)
    vals = []
    for gs in (1e-6, 1e-8, 1e-10):
        res = Reservoirs(gamma_r=1.5e-4, gamma_s=gs, n=0.2)
        vals.append(sp.absorption(cfg.qd.omega_a, cfg, res, g) / sp.absorption(1.9118, cfg, res, g))
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-3 * vals[0]  # sigma(omega_a) ~ gamma_s


@given(
    gr=st.floats(1e-7, 1e-2), g0=st.floats(0, 1e-2), gs=st.floats(0, 1e-4),
    n=st.floats(0, 0.499), g=st.floats(-0.3, 0.3), wa=st.floats(1.5, 2.5),
)
def test_positivity_property(cfg, gr, g0, gs, n, g, wa):
    # g = 0, omega_a = Omega, no ohmic loss: a dark state sits exactly on the real axis
    assume(not (g == 0 and wa == cfg.hbar_Omega and g0 == 0))
    c = replace(cfg, qd=replace(cfg.qd, omega_a=wa))
    res = Reservoirs(gamma_r=gr, gamma_0=g0, gamma_s=gs, n=n)
    w = np.linspace(1.5, 2.5, 2001)
    assert np.all(sp.absorption(w, c, res, g) >= 0)


# -- series and grids -------------------------------------------------------------------

def test_series_normalization(cfg, res):
    s = sp.spectrum_series(np.linspace(1.9, 2.1, 801), cfg, res)
    assert s.sigma.max() == 1.0
    again = s.normalized()
    assert np.array_equal(again.sigma, s.sigma)
    assert again.params["raw_peak"] == s.params["raw_peak"] > 0
    assert s.params["g_eV"] == pytest.approx(g_of(cfg), rel=1e-15)
    buf = io.StringIO()
    s.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "omega_eV,sigma_norm" and len(lines) == 802


def test_series_rejects_bad_grid(cfg, res):
    with pytest.raises(ValueError):
        sp.spectrum_series(np.array([2.0, 1.9]), cfg, res)


def test_default_grid_resolves_qd_feature(cfg, res):
    g = g_of(cfg)
    grid = sp.default_grid(cfg, res, g)
    assert np.all(np.diff(grid) > 0)
    width = res.inversion * res.gamma_s
    near = grid[np.abs(grid - cfg.qd.omega_a) <= 0.5 * width]
    assert near.size >= 8
    p = sp.poles(cfg, res, g)
    assert grid[0] < p.real.min() and grid[-1] > p.real.max()


def test_poles_match_two_mode_picture(cfg, res):
    g = g_of(cfg)
    p = np.sort(sp.poles(cfg, res, g).real)
    c = res.inversion
    split = math.sqrt(c) * g
    assert p == pytest.approx([2.0 - split, 2.0 + split], abs=1e-6)


# -- features -------------------------------------------------------------------------

def test_features_single_lorentzian():
    w = np.linspace(-1, 1, 2001)
    f = sp.find_features(sp.SpectrumSeries(w, lorentzian(w, 0.1, 0.05)).normalized())
    assert len(f.peak_positions) == 1 and not f.has_fano
    assert f.peak_positions[0] == pytest.approx(0.1, abs=1e-9)
    assert f.peak_widths[0] == pytest.approx(0.05, rel=1e-3)


def test_features_symmetric_pair():
    w = np.linspace(-1, 1, 2001)
    y = lorentzian(w, -0.3, 0.1) + lorentzian(w, 0.3, 0.1)
    f = sp.find_features(sp.SpectrumSeries(w, y).normalized())
    assert f.has_fano
    assert f.dip_position == pytest.approx(0.0, abs=1e-12)
    assert f.peak_separation == pytest.approx(0.6, abs=1e-3)
    assert f.peak_weights[0] == pytest.approx(f.peak_weights[1], rel=1e-9)


def test_features_asymmetric_pair_subgrid():
    w = np.linspace(-1, 1, 401)
    y = lorentzian(w, -0.2013, 0.08) + 0.5 * lorentzian(w, 0.3507, 0.08)
    f = sp.find_features(sp.SpectrumSeries(w, y).normalized())
    assert f.peak_positions[0] == pytest.approx(-0.2013, abs=5e-4)
    assert f.peak_positions[1] == pytest.approx(0.3507, abs=5e-4)


def test_preset_features(cfg, res):
    f = sp.find_features(sp.spectrum_series(None, cfg, res))
    assert len(f.peak_positions) == 2 and f.has_fano
    assert f.peak_positions[0] < f.dip_position < f.peak_positions[1]
    assert f.contrast < 1e-2
    # frozen: polaritons at 2 -+ sqrt(1-2n) g
    assert f.peak_separation == pytest.approx(0.176498, abs=2e-6)


def test_orientation_contrast():
    seps = {}
    for o in Orientation:
        cfg, res = preset(orientation=o)
        seps[o] = sp.find_features(sp.spectrum_series(None, cfg, res)).peak_separation
    assert seps[Orientation.LC] > seps[Orientation.TC]


def test_narrow_peak_weight_against_residues():
    for o in Orientation:
        for r in (7.0, 10.0):
            cfg, res = preset(omega_a=2.7, r=r, orientation=o)
            g = g_of(cfg)
            f = sp.find_features(sp.spectrum_series(None, cfg, res))
            p = sp.poles(cfg, res, g)
            lam = sp.retarded_self_energy(2.0 + 0j, res)
            B = cfg.qd.omega_a + res.inversion * lam.lambda_33
            Z = [(z - B) / (z - other) for z, other in zip(p, p[::-1])]
            i = int(np.argmin(np.abs(p.real - 2.7)))
            expected = Z[i].real / sum(z.real for z in Z)
            assert f.narrow_prominence == pytest.approx(expected, rel=1e-2)


# -- sweeps -------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def distance_sweeps():
    out = {}
    for o in Orientation:
        cfg, res = preset(omega_a=2.7, orientation=o)
        out[o] = sp.sweep_distance([7, 8, 9, 10], cfg, res)
    return out


def test_distance_sweep_coupling_scaling(distance_sweeps):
    pts = distance_sweeps[Orientation.LC]
    for p in pts:
        assert p.g * p.value**3 == pytest.approx(pts[0].g * 7.0**3, rel=1e-13)


def test_distance_sweep_prominence(distance_sweeps):
    for pts in distance_sweeps.values():
        trend = sp.prominence_trend(pts)
        assert trend["strictly_decreasing"]
        assert trend["prominence"][0] > trend["prominence"][-1]


def test_tc_prominence_decays_faster(distance_sweeps):
    ratio = {o: pts[-1].features.narrow_prominence / pts[0].features.narrow_prominence
             for o, pts in distance_sweeps.items()}
    assert ratio[Orientation.TC] < ratio[Orientation.LC]


def test_alpha_sweep_shifts_mode():
    cfg, res = preset(omega_a=2.7)
    pts = sp.sweep_alpha([FINE_STRUCTURE, 11 * FINE_STRUCTURE, 95 * FINE_STRUCTURE], cfg, res)
    Om = [p.hbar_Omega for p in pts]
    assert Om[0] > Om[1] > Om[2]
    assert Om[0] == pytest.approx(2.0, abs=1e-10)
    shift = Om[0] - Om[2]
    wR, we = cfg.ti.omega_R, cfg.ti.omega_e
    a = 95 * FINE_STRUCTURE
    assert shift == pytest.approx(2.0 - math.sqrt(wR**2 + we**2 * 3 / (12 + 2 * a * a)), rel=1e-12)
    assert shift > 1e-2  # a visible shift of about 52 meV
    for p in pts:
        assert p.features.peak_positions[0] < p.hbar_Omega + 0.02


def test_sweeps_reject_empty(cfg, res):
    with pytest.raises(ValueError):
        sp.sweep_distance([], cfg, res)
    with pytest.raises(ValueError):
        sp.sweep_alpha([], cfg, res)


def test_sweep_thread_determinism(monkeypatch):
    cfg, res = preset(omega_a=2.7)
    monkeypatch.setenv("TOPOFANO_THREADS", "1")
    a = sp.sweep_distance([7, 8, 9, 10], cfg, res)
    monkeypatch.setenv("TOPOFANO_THREADS", "4")
    b = sp.sweep_distance([7, 8, 9, 10], cfg, res)
    for x, y in zip(a, b):
        assert x.value == y.value and np.array_equal(x.series.sigma, y.series.sigma)


# -- coupling map ---------------------------------------------------------------------------

def test_coupling_map(cfg, res):
    w = np.linspace(1.85, 2.15, 3000)
    gs = np.array([0.0, 0.02, 0.04, 0.08])
    M = sp.sweep_coupling(gs, w, cfg, res)
    assert M.shape == (4, 3000)
    assert np.allclose(M.max(axis=1), 1.0) and M.max() <= 1.0
    dec = sp.absorption(w, cfg, res, 0.0)
    assert np.allclose(M[0], dec / dec.max(), rtol=1e-14)
    G = sp.sweep_coupling(gs, w, cfg, res, normalize="global")
    assert G.max() == 1.0
    with pytest.raises(ValueError):
        sp.sweep_coupling([], w, cfg, res)
    buf = io.StringIO()
    sp.write_map_csv(buf, gs, w, M)
    assert buf.getvalue().splitlines()[0] == "omega_eV,g_eV,sigma_norm"


def test_anticrossing_grows_linearly(cfg, res):
    def separation(g):
        s = sp.spectrum_series(None, cfg, res, g_override=g)
        return sp.find_features(s).peak_separation

    for g in (0.01, 0.05):
        assert separation(2 * g) / separation(g) == pytest.approx(2.0, rel=1e-4)
