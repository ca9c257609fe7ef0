import math

import numpy as np
import pytest

from depkde.kernel import gauss_deriv, kernel_functionals
from depkde.density import roughness_fhat2
from depkde.samplers import iid_sample, normal_target
from depkde.selectors import (
    ObjectiveEvaluationError,
    PilotFailureError,
    RootNotFoundError,
    SelectorConfig,
    S_functional,
    T_functional,
    bcv_objective,
    default_config,
    g_hat,
    mbcv_objective,
    minimize_objective,
    msj_objective,
    normal_scale_bandwidth,
    pilot_bandwidths,
    select,
    sj_objective,
    solve_the_equation,
)

PHI0 = (2 * math.pi) ** -0.5


# --- pilots -----------------------------------------------------------------

def test_pilot_formulas():
    # unit IQR by construction: quartiles of equally spaced 0..1
    n = 10_000
    y = np.linspace(-0.5, 1.5, n)  # IQR = 1
    p = pilot_bandwidths(y)
    assert p.iqr == pytest.approx(1.0, rel=1e-12)
    assert p.a == pytest.approx(0.920 * n ** (-1 / 7), rel=1e-12)
    assert p.b == pytest.approx(0.912 * n ** (-1 / 9), rel=1e-12)
    assert p.a == pytest.approx(0.2468, rel=1e-3)
    assert p.b == pytest.approx(0.3278, rel=1e-3)


def test_pilot_scale_equivariance():
    y = np.linspace(-1, 2, 500)
    p1 = pilot_bandwidths(y)
    p2 = pilot_bandwidths(3.0 * y)
    assert p2.a == pytest.approx(3.0 * p1.a, rel=1e-12)
    assert p2.b == pytest.approx(3.0 * p1.b, rel=1e-12)


def test_pilot_zero_iqr_errors():
    y = np.array([0.0] * 48 + [5.0, -5.0])
    with pytest.raises(PilotFailureError):
        pilot_bandwidths(y)


# --- S and T functionals ----------------------------------------------------

def test_S_hand_value():
    y = np.array([0.0, 1e-14])
    # four near-identical pairs: (1/(2*1*1)) * 4 * phi4(0) = 2 * 3 * phi(0)
    assert S_functional(y, 1.0) == pytest.approx(2 * 3 * PHI0, rel=1e-10)
    assert S_functional(y, 1.0) == pytest.approx(2.3936, rel=1e-3)


def test_T_hand_value():
    y = np.array([0.0, 1e-14])
    # -(1/2) * 4 * phi6(0) = 30 * phi(0)
    assert T_functional(y, 1.0) == pytest.approx(30 * PHI0, rel=1e-10)
    assert T_functional(y, 1.0) == pytest.approx(11.968, rel=1e-3)


def test_S_scale_equivariance():
    rng = np.random.default_rng(0)
    y = rng.normal(0, 1, 80)
    c = 2.0
    assert S_functional(c * y, c * 0.4) == pytest.approx(c**-5 * S_functional(y, 0.4), rel=1e-12)


def test_T_scale_equivariance():
    rng = np.random.default_rng(1)
    y = rng.normal(0, 1, 80)
    c = 2.0
    assert T_functional(c * y, c * 0.5) == pytest.approx(c**-7 * T_functional(y, 0.5), rel=1e-12)


def _direct_pair_sum(y, r, scale, include_diagonal):
    total = sum(gauss_deriv(r, (a - b) / scale) for a in y for b in y)
    if not include_diagonal:
        total -= y.size * gauss_deriv(r, 0.0)
    return total


@pytest.mark.parametrize("seed", range(10))
def test_S_T_binned_vs_direct(seed):
    rng = np.random.default_rng(200 + seed)
    n = int(rng.integers(300, 2001))
    y = rng.normal(0, 1, n)
    g = float(rng.uniform(0.2, 0.6))
    s_direct = S_functional(y, g, binned=False)
    s_binned = S_functional(y, g, binned=True)
    assert s_binned == pytest.approx(s_direct, rel=1e-3)
    b = float(rng.uniform(0.3, 0.7))
    t_direct = T_functional(y, b, binned=False)
    t_binned = T_functional(y, b, binned=True)
    assert t_binned == pytest.approx(t_direct, rel=1e-3)


def test_S_diagonal_flag():
    rng = np.random.default_rng(3)
    y = rng.normal(0, 1, 40)
    for include in (True, False):
        want = _direct_pair_sum(y, 4, 0.3, include) / (40 * 39 * 0.3**5)
        assert S_functional(y, 0.3, include_diagonal=include) == pytest.approx(want, rel=1e-12)
    assert S_functional(y, 0.3, True) != S_functional(y, 0.3, False)


def test_S_rejects_nonpositive_g():
    with pytest.raises(ValueError):
        S_functional([0.0, 1.0], 0.0)


# --- g_hat ------------------------------------------------------------------

def test_g_hat_power_law():
    rng = np.random.default_rng(4)
    y = rng.normal(0, 1, 200)
    p = pilot_bandwidths(y)
    assert g_hat(y, 2.0, p) / g_hat(y, 1.0, p) == pytest.approx(2 ** (5 / 7), rel=1e-12)


def test_g_hat_unit_ratio():
    # when S(a) == T(b) the prefactor is exactly 1.357
    rng = np.random.default_rng(5)
    y = rng.normal(0, 1, 200)
    p = pilot_bandwidths(y)
    s_a = S_functional(y, p.a)
    t_b = T_functional(y, p.b)
    assert g_hat(y, 1.0, p) == pytest.approx(1.357 * (s_a / t_b) ** (1 / 7), rel=1e-12)


def test_g_hat_deterministic():
    y = iid_sample(normal_target(), 2000, 12)
    p = pilot_bandwidths(y)
    assert g_hat(y, 0.3, p) == g_hat(y, 0.3, p)


# --- objectives -------------------------------------------------------------

def test_bcv_term_by_term():
    rng = np.random.default_rng(6)
    y = rng.normal(0, 1, 50)
    h = 0.5
    fk = kernel_functionals()
    braced = roughness_fhat2(y, h) - fk.roughness_K2 / (50 * h**5)
    want = fk.roughness_K / (50 * h) + 0.25 * h**4 * fk.mu2**2 * braced
    assert bcv_objective(y, h) == pytest.approx(want, rel=1e-10)


def test_bcv_bias_term_dominates_at_large_h():
    # while the curvature estimate still tracks R(f''), doubling h roughly
    # multiplies the objective by 2^4 (bias term dominance)
    rng = np.random.default_rng(7)
    y = rng.normal(0, 1, 2000)
    vals = [bcv_objective(y, h) for h in (0.4, 0.8)]
    assert 4.0 < vals[1] / vals[0] < 16.0
    assert vals[1] > vals[0]


def test_mbcv_reduction_and_linearity():
    rng = np.random.default_rng(8)
    y = rng.normal(0, 1, 100)
    h = 0.4
    fk = kernel_functionals()
    assert mbcv_objective(y, h, 1.0) == bcv_objective(y, h)
    assert mbcv_objective(y, h, 2.0) - bcv_objective(y, h) == pytest.approx(
        fk.roughness_K / (100 * h), rel=1e-12
    )


def test_sj_term_by_term():
    rng = np.random.default_rng(9)
    y = rng.normal(0, 1, 50)
    h = 0.5
    p = pilot_bandwidths(y)
    fk = kernel_functionals()
    s = S_functional(y, g_hat(y, h, p))
    want = fk.roughness_K / (50 * h) + 0.25 * h**4 * fk.mu2**2 * s
    assert sj_objective(y, h, p) == pytest.approx(want, rel=1e-10)
    assert msj_objective(y, h, p, 1.0) == sj_objective(y, h, p)


def test_objective_rejects_bad_args():
    y = np.array([0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        bcv_objective(y, -0.1)
    with pytest.raises(ValueError):
        mbcv_objective(y, 0.3, -1.0)


# --- optimizer --------------------------------------------------------------

def _cfg(method="BCV", lo=0.01, hi=2.0, tol=1e-6):
    return SelectorConfig(method=method, search_lo=lo, search_hi=hi, tol=tol)


def test_minimize_known_quadratic():
    res = minimize_objective(lambda h: (h - 0.3) ** 2, _cfg())
    assert res.converged and res.boundary_hit == "none"
    assert res.h == pytest.approx(0.3, abs=1e-6)


@pytest.mark.parametrize("n", [1_000, 10_000])
def test_minimize_amise_closed_form(n):
    # analytic objective for N(0,1): R(f'') = 3 / (8 sqrt(pi))
    fk = kernel_functionals()
    r_f2 = 3 / (8 * math.sqrt(math.pi))
    amise = lambda h: fk.roughness_K / (n * h) + 0.25 * h**4 * fk.mu2**2 * r_f2
    want = (fk.roughness_K / (n * fk.mu2**2 * r_f2)) ** 0.2
    res = minimize_objective(amise, _cfg(tol=1e-7))
    assert res.h == pytest.approx(want, abs=1e-6)
    if n == 10_000:
        assert want == pytest.approx((4 / 3) ** 0.2 * 10 ** -0.8, rel=1e-12)


def test_minimize_bimodal_finds_global():
    # two wells: local at h = 1.2 (value 0.1), global at h = 0.08 (value 0)
    def two_well(h):
        return min((h - 0.08) ** 2, 0.1 + (h - 1.2) ** 2)

    res = minimize_objective(two_well, _cfg())
    assert res.h == pytest.approx(0.08, abs=1e-5)


def test_minimize_boundary_hit():
    res = minimize_objective(lambda h: h, _cfg())
    assert res.boundary_hit == "lo" and not res.converged
    res = minimize_objective(lambda h: -h, _cfg())
    assert res.boundary_hit == "hi" and not res.converged


def test_minimize_nonfinite_objective_errors():
    with pytest.raises(ObjectiveEvaluationError):
        minimize_objective(lambda h: float("nan"), _cfg())


def test_config_validation():
    with pytest.raises(ValueError):
        SelectorConfig(method="BCV", search_lo=1.0, search_hi=0.5, tol=1e-4)
    with pytest.raises(ValueError):
        SelectorConfig(method="nope", search_lo=0.1, search_hi=1.0, tol=1e-3)
    with pytest.raises(ValueError):
        SelectorConfig(method="BCV", search_lo=0.1, search_hi=1.0, tol=1e-9)


# --- solve the equation -----------------------------------------------------

def test_ste_frozen_S_closed_form():
    # with S frozen at a constant the root is h* = (R(K) zeta / (n mu2^2 S))^(1/5);
    # forcing zeta = 2^5 doubles the root
    y = iid_sample(normal_target(), 500, 3)
    p = pilot_bandwidths(y)
    fk = kernel_functionals()
    n = y.size
    s_const = 30.0
    base = (fk.roughness_K / (n * fk.mu2**2 * s_const)) ** 0.2
    cfg = _cfg("SJse", lo=1e-3, hi=1.0, tol=1e-9)
    res = solve_the_equation(y, p, modified=False, cfg=cfg, s_fn=lambda h: s_const)
    assert res.h == pytest.approx(base, rel=1e-6)
    cfg_m = _cfg("mSJse", lo=1e-3, hi=1.0, tol=1e-9)
    res_m = solve_the_equation(
        y, p, modified=True, cfg=cfg_m, s_fn=lambda h: s_const, zeta_fn=lambda h: 2.0**5
    )
    assert res_m.h == pytest.approx(2 * base, rel=1e-6)


def test_ste_residual_below_tol():
    y = iid_sample(normal_target(), 2000, 5)
    cfg = default_config(y, "SJse")
    res = solve_the_equation(y, pilot_bandwidths(y), modified=False, cfg=cfg)
    assert abs(res.objective_at_h) <= cfg.tol
    assert res.converged
    rerun = solve_the_equation(y, pilot_bandwidths(y), modified=False, cfg=cfg)
    assert rerun.h == res.h


def test_ste_no_root_raises():
    y = iid_sample(normal_target(), 500, 9)
    cfg = _cfg("SJse", lo=1e-4, hi=2e-4, tol=1e-10)
    with pytest.raises(RootNotFoundError):
        solve_the_equation(y, pilot_bandwidths(y), modified=False, cfg=cfg, s_fn=lambda h: 30.0)


# --- select dispatch --------------------------------------------------------

@pytest.fixture(scope="module")
def iid_2k():
    return iid_sample(normal_target(), 1200, 77)


def test_reduction_zeta_one(iid_2k):
    y = iid_2k
    # hand the modified selectors a zeta cache that forces zeta = 1 everywhere
    class Ones(dict):
        def __contains__(self, key):
            return True

        def __getitem__(self, key):
            return 1.0

    for std, mod in (("BCV", "mBCV"), ("SJmin", "mSJmin"), ("SJse", "mSJse")):
        r_std = select(y, default_config(y, std))
        r_mod = select(y, default_config(y, mod), zeta_cache=Ones())
        assert r_mod.h == r_std.h
        assert r_mod.zeta_at_h == 1.0


def test_monotone_zeta_response(iid_2k):
    y = iid_2k

    class Const(dict):
        def __init__(self, v):
            self.v = v

        def __contains__(self, key):
            return True

        def __getitem__(self, key):
            return self.v

    for mod in ("mBCV", "mSJmin", "mSJse"):
        hs = [select(y, default_config(y, mod), zeta_cache=Const(k)).h for k in (1.0, 2.0, 8.0)]
        assert hs[0] < hs[1] < hs[2]


def test_select_iid_methods_close_to_normal_scale(iid_2k):
    y = iid_2k
    h_ns = normal_scale_bandwidth(y)
    for method in ("BCV", "SJse", "SJmin"):
        res = select(y, default_config(y, method))
        assert 0.5 * h_ns < res.h < 2.0 * h_ns
        assert res.zeta_at_h == 1.0


def test_select_modified_close_to_standard_on_iid(iid_2k):
    y = iid_2k
    cache = {}
    for std, mod in (("SJse", "mSJse"), ("SJmin", "mSJmin")):
        h_std = select(y, default_config(y, std)).h
        h_mod = select(y, default_config(y, mod), zeta_cache=cache).h
        assert h_mod == pytest.approx(h_std, rel=0.10)


def test_select_pilot_failure_fallback():
    # nearly-degenerate cluster with wide outliers: force pilot failure via
    # stubbed S; instead just validate the fallback path with a crafted cache
    y = np.concatenate([np.zeros(98), [5.0, -5.0]])
    # IQR is 0 -> pilot failure -> normal-scale fallback for SJ methods
    res = select(y, SelectorConfig(method="SJse", search_lo=0.01, search_hi=5.0, tol=1e-4))
    assert not res.converged
    assert "pilot failure" in res.note
    assert 0.01 <= res.h <= 5.0
