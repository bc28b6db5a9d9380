"""Filter design: grids, ZPFR, LP design, bounds, quantization, verification."""

import numpy as np
import pytest
from oracles import lattice_infeasibility, simplex_solve

from firlock.design import (
    FilterSpec,
    InfeasibleSpec,
    RealCoefficients,
    _band_rows,
    build_frequency_grid,
    coefficient_bounds,
    compute_zpfr,
    design_coefficients,
    magnitude_bitwidth,
    quantization_deviation_bound,
    quantize,
    response_matrix,
    verify_response,
    verify_spec,
)

from conftest import reference_spec


def lowpass(N=3, wp=0.5, ws=0.6, dp=0.1, ds=0.1, Q=8, index=0):
    return FilterSpec(index=index, band_type="low-pass", N=N, wp=wp, ws=ws, dp=dp, ds=ds, Q=Q)


# --- spec validation and serialization ---------------------------------

def test_spec_json_round_trip_field_names():
    spec = reference_spec(1)
    d = spec.to_json_dict()
    assert d == {
        "index": 1, "type": "low-pass", "N": 29,
        "wp": 0.3, "ws": 0.5, "dp": 0.00316, "ds": 0.00316, "Q": 14,
    }
    assert FilterSpec.from_json_dict(d) == spec


@pytest.mark.parametrize(
    "kwargs",
    [
        {"N": 28},
        {"N": -3},
        {"wp": 0.6, "ws": 0.5},          # low-pass needs wp < ws
        {"dp": 0.0},
        {"ds": 1.5},
        {"wp": 0.0},
    ],
)
def test_spec_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        lowpass(**kwargs)


def test_highpass_requires_ws_below_wp():
    FilterSpec(index=0, band_type="high-pass", N=5, wp=0.8, ws=0.7, dp=0.1, ds=0.1, Q=8)
    with pytest.raises(ValueError):
        FilterSpec(index=0, band_type="high-pass", N=5, wp=0.7, ws=0.8, dp=0.1, ds=0.1, Q=8)


# --- frequency grid -----------------------------------------------------

def test_grid_lowpass_example_points():
    grid = build_frequency_grid(lowpass(N=3, wp=0.5, ws=0.6), density=1)
    np.testing.assert_allclose(grid.passband, [0.0, 0.25 * np.pi, 0.5 * np.pi])
    np.testing.assert_allclose(grid.stopband, [0.6 * np.pi, 0.8 * np.pi, np.pi])


def test_grid_reference_density_point_count():
    grid = build_frequency_grid(reference_spec(1), density=16)
    assert len(grid.passband) == 464 and len(grid.stopband) == 464


def test_grid_highpass_band_roles():
    grid = build_frequency_grid(reference_spec(3))
    assert grid.stopband[0] == 0.0
    assert np.isclose(grid.stopband[-1], 0.7 * np.pi)
    assert np.isclose(grid.passband[0], 0.8 * np.pi)
    assert np.isclose(grid.passband[-1], np.pi)


def test_grid_strictly_increasing():
    grid = build_frequency_grid(reference_spec(2), density=16)
    assert np.all(np.diff(grid.passband) > 0)
    assert np.all(np.diff(grid.stopband) > 0)


# --- ZPFR ---------------------------------------------------------------

def test_zpfr_zero_coefficients():
    assert compute_zpfr([0.0, 0.0], 1.3) == 0.0


def test_zpfr_center_tap_only():
    for w in (0.0, 0.7, np.pi):
        assert np.isclose(compute_zpfr([0.0, 1.0], w), 1.0)


def test_zpfr_endpoint_values():
    # h = [0.5, 1] gives G(w) = 1 + cos(w).
    assert np.isclose(compute_zpfr([0.5, 1.0], 0.0), 2.0)
    assert np.isclose(compute_zpfr([0.5, 1.0], np.pi), 0.0)


def test_zpfr_linearity():
    rng = np.random.default_rng(5)
    for _ in range(20):
        M = int(rng.integers(1, 9))
        h = rng.normal(size=M + 1)
        g = rng.normal(size=M + 1)
        a, b = rng.normal(size=2)
        w = float(rng.uniform(0, np.pi))
        lhs = compute_zpfr(a * h + b * g, w)
        rhs = a * compute_zpfr(h, w) + b * compute_zpfr(g, w)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs), abs(rhs))


# --- design LP ----------------------------------------------------------

def test_design_reference_filter_satisfies_grid(designed):
    d = designed(1)
    A, b = _band_rows(d.spec, d.grid)
    assert float(np.max(A @ d.coeffs.h - b)) <= 1e-8


def test_design_slack_spec_feasible():
    spec = lowpass(N=5, dp=0.99, ds=0.99)
    grid = build_frequency_grid(spec)
    h = design_coefficients(spec, grid)
    assert np.all(np.abs(h.h) <= 1 + 1e-12)


def test_design_infeasible_spec_raises_and_lattice_agrees():
    spec = lowpass(N=3, wp=0.3, ws=0.5, dp=0.003, ds=0.003)
    grid = build_frequency_grid(spec)
    with pytest.raises(InfeasibleSpec):
        design_coefficients(spec, grid)
    # Independent evidence: every point of a coarse coefficient lattice
    # violates some band constraint by a wide margin.
    assert lattice_infeasibility(spec, grid) > spec.dp


# --- coefficient bounds -------------------------------------------------

def test_bounds_contain_design(designed):
    d = designed(1)
    assert np.all(d.bounds.lower <= d.coeffs.h + 1e-9)
    assert np.all(d.coeffs.h <= d.bounds.upper + 1e-9)


def test_bounds_widen_toward_box_as_ripples_relax():
    # Conjunction of passband floor and stopband cap keeps the bounds
    # strictly inside the box even at extreme ripples, but the interval
    # widens monotonically as constraints go slack.
    widths = []
    for d in (0.1, 0.3, 0.9):
        spec = lowpass(N=7, wp=0.3, ws=0.7, dp=d, ds=d)
        bounds = coefficient_bounds(spec, build_frequency_grid(spec))
        assert np.all(bounds.lower >= -1.0) and np.all(bounds.upper <= 1.0)
        widths.append(np.sum(bounds.upper - bounds.lower))
    assert widths[0] < widths[1] < widths[2]


def test_bounds_match_independent_simplex_oracle():
    """Re-solve all bound LPs with the textbook simplex; agree to 1e-6."""
    spec = reference_spec(1)
    grid = build_frequency_grid(spec, density=2.0)  # coarse: oracle-sized
    bounds = coefficient_bounds(spec, grid)
    A, b = _band_rows(spec, grid)
    M = spec.M
    lo_box = np.full(M + 1, -1.0)
    hi_box = np.full(M + 1, 1.0)
    for i in range(M + 1):
        c = np.zeros(M + 1)
        c[i] = 1.0
        status, _, obj = simplex_solve(c, A, b, lo_box, hi_box)
        assert status == "optimal"
        assert abs(obj - bounds.lower[i]) < 1e-6
        status, _, obj = simplex_solve(-c, A, b, lo_box, hi_box)
        assert status == "optimal"
        assert abs(-obj - bounds.upper[i]) < 1e-6
    # Values frozen from the oracle run (density 2.0).
    assert bounds.lower[0] == pytest.approx(-0.00400409, abs=1e-6)
    assert bounds.lower[1] == pytest.approx(-0.00419477, abs=1e-6)
    assert bounds.upper[0] == pytest.approx(-0.00061070, abs=1e-6)
    assert bounds.upper[1] == pytest.approx(-0.00044358, abs=1e-6)


def test_bound_optimality_via_added_constraint(designed):
    """Pinning a coefficient just below its lower bound kills feasibility."""
    from scipy.optimize import linprog

    d = designed(1)
    A, b = _band_rows(d.spec, d.grid)
    M = d.spec.M
    for i in (0, M // 2, M):
        row = np.zeros(M + 1)
        row[i] = 1.0
        A_aug = np.vstack([A, row])
        b_aug = np.append(b, d.bounds.lower[i] - 1e-6)
        res = linprog(
            np.zeros(M + 1), A_ub=A_aug, b_ub=b_aug,
            bounds=[(-1, 1)] * (M + 1), method="highs",
        )
        assert res.status == 2


# --- quantization -------------------------------------------------------

def test_quantize_examples():
    coeffs = RealCoefficients(h=np.array([0.5, -0.3, 0.0]))
    from firlock.design import BoundSet

    bounds = BoundSet(lower=coeffs.h - 0.01, upper=coeffs.h + 0.01)
    qf = quantize(coeffs, bounds, Q=14)
    assert qf.coeffs[0] == 8192          # 0.5 * 2**14 exactly
    assert qf.coeffs[1] == -4915         # ceil(-4915.2)
    assert qf.coeffs[2] == 0
    assert qf.N == 5


def test_quantize_monotone_and_error_range():
    rng = np.random.default_rng(3)
    Q = 10
    vals = np.sort(rng.uniform(-1, 1, size=200))
    q = np.ceil(vals * 2**Q)
    assert np.all(np.diff(q) >= 0)
    err = q / 2**Q - vals
    assert np.all(err >= 0) and np.all(err < 2.0**-Q)


def test_quantize_symmetry(designed):
    qf = designed(1).qf
    assert np.array_equal(qf.coeffs, qf.coeffs[::-1])
    assert np.array_equal(qf.bounds_l, qf.bounds_l[::-1])
    assert np.array_equal(qf.bounds_u, qf.bounds_u[::-1])


def test_magnitude_bitwidth():
    assert magnitude_bitwidth(0) == 1
    assert magnitude_bitwidth(1) == 1
    assert magnitude_bitwidth(-7) == 3
    assert magnitude_bitwidth(8) == 4


def test_quantized_filter_json_round_trip(designed):
    from firlock.design import QuantizedFilter

    qf = designed(1).qf
    again = QuantizedFilter.from_json_dict(qf.to_json_dict())
    assert np.array_equal(again.coeffs, qf.coeffs)
    assert np.array_equal(again.bounds_l, qf.bounds_l)
    assert again.Q == qf.Q and again.mbw == qf.mbw


# --- verification -------------------------------------------------------

def test_verify_quantized_within_ceiling_bound(designed):
    d = designed(1)
    gp_f = response_matrix(d.verify_grid.passband, d.spec.M) @ d.coeffs.h
    gp_q = response_matrix(d.verify_grid.passband, d.spec.M) @ (d.qf.half() / 2**d.spec.Q)
    bound = quantization_deviation_bound(d.spec.M, d.spec.Q)
    assert np.max(np.abs(gp_q - gp_f)) <= bound


def test_verify_all_zero_filter_fails_passband():
    spec = lowpass(N=5, dp=0.2, ds=0.2)
    grid = build_frequency_grid(spec)
    report = verify_response(np.zeros(spec.M + 1), spec, grid)
    assert report.passband_violations > 0
    assert report.stopband_violations == 0


def test_verify_float_design_clean_on_design_grid(designed):
    d = designed(1)
    report = verify_response(d.coeffs.h, d.spec, d.grid)
    assert report.ok


def test_verify_spec_reports_quantized_deviations(designed):
    d = designed(1)
    report = verify_spec(d.qf, d.spec, d.verify_grid)
    assert report.max_passband_deviation < d.spec.dp
    assert report.max_stopband_deviation < d.spec.ds
    assert report.ok
