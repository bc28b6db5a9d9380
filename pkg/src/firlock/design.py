"""Linear-programming design of symmetric fixed-point FIR filters.

A filter is specified by its length N (odd), band edges, ripples, and a
quantization exponent Q.  The zero-phase frequency response (ZPFR) of a
symmetric odd-length filter is linear in the half coefficient vector
``h_0 .. h_M`` (M = (N-1)/2), so the band constraints

    1 - dp <= G(w) <= 1 + dp   on the passband
      - ds <= G(w) <=     ds   on the stopband

discretized onto a frequency grid form a linear program.  The design LP
maximizes the uniform slack inside both ripple budgets; two further LPs
per coefficient minimize / maximize that coefficient over the same
constraint set, yielding the feasible interval every tap must stay in.
All real values are finally quantized to integers by ceiling after
scaling with 2**Q.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "BAND_TYPES",
    "BoundSet",
    "FilterSpec",
    "FrequencyGrid",
    "InfeasibleSpec",
    "QuantizedFilter",
    "RealCoefficients",
    "ViolationReport",
    "build_frequency_grid",
    "coefficient_bounds",
    "compute_zpfr",
    "design_coefficients",
    "magnitude_bitwidth",
    "quantize",
    "quantization_deviation_bound",
    "response_matrix",
    "verify_response",
    "verify_spec",
]

BAND_TYPES = ("low-pass", "high-pass")

# Uniform feasibility target for every discretized band constraint.
LP_RESIDUAL_TOL = 1e-8

_LP_OPTIONS = {
    "primal_feasibility_tolerance": 1e-9,
    "dual_feasibility_tolerance": 1e-9,
}


class InfeasibleSpec(Exception):
    """No filter of the requested length meets the band constraints."""


def magnitude_bitwidth(value: int) -> int:
    """Bit count of ``|value|``; zero is defined to need one bit."""
    return max(int(abs(value)).bit_length(), 1)


@dataclass(frozen=True)
class FilterSpec:
    """Band specification of a symmetric odd-length FIR filter.

    ``wp`` and ``ws`` are normalized band edges in units of pi
    rad/sample, ``dp`` and ``ds`` are linear ripple bounds, and ``Q``
    is the number of fractional bits used for integer quantization.
    """

    index: int
    band_type: str
    N: int
    wp: float
    ws: float
    dp: float
    ds: float
    Q: int

    def __post_init__(self):
        if self.band_type not in BAND_TYPES:
            raise ValueError(f"band_type must be one of {BAND_TYPES}")
        if self.N < 1 or self.N % 2 == 0:
            raise ValueError("filter length N must be a positive odd integer")
        if not (0.0 < self.wp < 1.0 and 0.0 < self.ws < 1.0):
            raise ValueError("band edges must lie strictly inside (0, 1)")
        if self.band_type == "low-pass" and not self.wp < self.ws:
            raise ValueError("low-pass requires wp < ws")
        if self.band_type == "high-pass" and not self.ws < self.wp:
            raise ValueError("high-pass requires ws < wp")
        if not (0.0 < self.dp < 1.0 and 0.0 < self.ds < 1.0):
            raise ValueError("ripples must lie strictly inside (0, 1)")
        if self.Q < 1:
            raise ValueError("quantization exponent Q must be positive")

    @property
    def M(self) -> int:
        return (self.N - 1) // 2

    @classmethod
    def from_json_dict(cls, d: dict) -> "FilterSpec":
        return cls(
            index=d["index"],
            band_type=d["type"],
            N=d["N"],
            wp=d["wp"],
            ws=d["ws"],
            dp=d["dp"],
            ds=d["ds"],
            Q=d["Q"],
        )

    @classmethod
    def from_file(cls, path) -> "FilterSpec":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json_dict(json.load(f))

    def to_json_dict(self) -> dict:
        return {
            "index": self.index,
            "type": self.band_type,
            "N": self.N,
            "wp": self.wp,
            "ws": self.ws,
            "dp": self.dp,
            "ds": self.ds,
            "Q": self.Q,
        }


@dataclass(frozen=True)
class FrequencyGrid:
    """Discrete angular frequencies (radians in [0, pi]) per band."""

    passband: np.ndarray
    stopband: np.ndarray

    @property
    def points_per_band(self) -> int:
        return len(self.passband)


def build_frequency_grid(spec: FilterSpec, density: float = 16.0) -> FrequencyGrid:
    """Uniform grid of ``ceil(density * N)`` points per band, edges included.

    For a low-pass spec the passband is [0, wp*pi] and the stopband
    [ws*pi, pi]; a high-pass spec swaps the band roles (stopband
    [0, ws*pi], passband [wp*pi, pi]).
    """
    if density < 1:
        raise ValueError("grid density must be at least 1")
    n = math.ceil(density * spec.N)
    if spec.band_type == "low-pass":
        passband = np.linspace(0.0, spec.wp * np.pi, n)
        stopband = np.linspace(spec.ws * np.pi, np.pi, n)
    else:
        stopband = np.linspace(0.0, spec.ws * np.pi, n)
        passband = np.linspace(spec.wp * np.pi, np.pi, n)
    return FrequencyGrid(passband=passband, stopband=stopband)


def response_matrix(w, M: int) -> np.ndarray:
    """Rows of ZPFR weights: row r, column i is ``e_i * cos(w_r * (M - i))``.

    ``e_i`` doubles every term except the center tap, accounting for the
    mirrored half of the symmetric impulse response.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    i = np.arange(M + 1)
    e = np.where(i < M, 2.0, 1.0)
    return e[None, :] * np.cos(np.outer(w, M - i))


@dataclass(frozen=True)
class RealCoefficients:
    """Half of a symmetric impulse response: ``h_0 .. h_M`` in [-1, 1]."""

    h: np.ndarray

    @property
    def M(self) -> int:
        return len(self.h) - 1

    @property
    def N(self) -> int:
        return 2 * self.M + 1

    def full(self) -> np.ndarray:
        """Materialize the complete symmetric impulse response."""
        return np.concatenate([self.h, self.h[-2::-1]])


def compute_zpfr(coeffs, w):
    """Zero-phase frequency response of the half coefficient vector.

    ``coeffs`` may be a `RealCoefficients` or a plain array of length
    M+1; ``w`` may be a scalar or an array of angular frequencies.
    """
    h = coeffs.h if isinstance(coeffs, RealCoefficients) else np.asarray(coeffs, float)
    gains = response_matrix(w, len(h) - 1) @ h
    return float(gains[0]) if np.isscalar(w) else gains


def _band_rows(spec: FilterSpec, grid: FrequencyGrid):
    """Stacked one-sided constraint rows A h <= b for both bands."""
    M = spec.M
    Ap = response_matrix(grid.passband, M)
    As = response_matrix(grid.stopband, M)
    A = np.vstack([Ap, -Ap, As, -As])
    b = np.concatenate(
        [
            np.full(len(Ap), 1.0 + spec.dp),
            np.full(len(Ap), -(1.0 - spec.dp)),
            np.full(len(As), spec.ds),
            np.full(len(As), spec.ds),
        ]
    )
    return A, b


def design_coefficients(spec: FilterSpec, grid: FrequencyGrid) -> RealCoefficients:
    """Solve the margin-maximizing design LP for the half coefficients.

    A slack variable t >= 0 tightens both ripple budgets; maximizing t
    produces a strictly interior solution when one exists, which keeps
    the subsequent quantization step from breaking the constraints.

    Raises `InfeasibleSpec` if not even t = 0 is attainable.
    """
    M = spec.M
    A, b = _band_rows(spec, grid)
    n_rows, n_h = A.shape
    A_lp = np.hstack([A, np.ones((n_rows, 1))])
    c = np.zeros(n_h + 1)
    c[-1] = -1.0
    bounds = [(-1.0, 1.0)] * n_h + [(0.0, min(spec.dp, spec.ds))]
    res = linprog(c, A_ub=A_lp, b_ub=b, bounds=bounds, method="highs", options=_LP_OPTIONS)
    if res.status == 2:
        raise InfeasibleSpec(
            f"no length-{spec.N} {spec.band_type} filter satisfies the spec on this grid"
        )
    if res.status != 0:
        raise RuntimeError(f"LP solver failed with status {res.status}: {res.message}")
    h = res.x[:n_h]
    residual = float(np.max(A @ h - b))
    if residual > LP_RESIDUAL_TOL:
        raise RuntimeError(f"LP solution violates constraints by {residual:.3e}")
    return RealCoefficients(h=h)


@dataclass(frozen=True)
class BoundSet:
    """Per-coefficient feasible interval ``lower[i] <= h_i <= upper[i]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("lower/upper length mismatch")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")


def coefficient_bounds(spec: FilterSpec, grid: FrequencyGrid) -> BoundSet:
    """Extremal value of each coefficient over the feasible polytope.

    For every i, two LPs over the plain band constraints (no margin
    slack, box [-1, 1]) minimize h_i and -h_i; the optima are the
    tightest interval any feasible symmetric filter confines h_i to.
    """
    M = spec.M
    A, b = _band_rows(spec, grid)
    bounds = [(-1.0, 1.0)] * (M + 1)
    lower = np.empty(M + 1)
    upper = np.empty(M + 1)
    for i in range(M + 1):
        c = np.zeros(M + 1)
        c[i] = 1.0
        res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs", options=_LP_OPTIONS)
        if res.status == 2:
            raise InfeasibleSpec("bound LP infeasible; design the filter first")
        if res.status != 0:
            raise RuntimeError(f"bound LP failed with status {res.status}: {res.message}")
        lower[i] = res.fun
        c[i] = -1.0
        res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs", options=_LP_OPTIONS)
        if res.status != 0:
            raise RuntimeError(f"bound LP failed with status {res.status}: {res.message}")
        upper[i] = -res.fun
    return BoundSet(lower=lower, upper=upper)


@dataclass(frozen=True)
class QuantizedFilter:
    """Integer filter in units of 2**-Q, with per-tap integer bounds.

    All three arrays cover the full length N and are symmetric;
    ``mbw`` is the maximum magnitude bit-width over the coefficients.
    """

    coeffs: np.ndarray
    bounds_l: np.ndarray
    bounds_u: np.ndarray
    Q: int
    mbw: int

    @property
    def N(self) -> int:
        return len(self.coeffs)

    @property
    def M(self) -> int:
        return (self.N - 1) // 2

    def half(self) -> np.ndarray:
        return self.coeffs[: self.M + 1]

    def to_json_dict(self) -> dict:
        return {
            "N": int(self.N),
            "Q": int(self.Q),
            "coeffs": [int(v) for v in self.coeffs],
            "bounds_l": [int(v) for v in self.bounds_l],
            "bounds_u": [int(v) for v in self.bounds_u],
            "mbw": int(self.mbw),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "QuantizedFilter":
        qf = cls(
            coeffs=np.asarray(d["coeffs"], dtype=np.int64),
            bounds_l=np.asarray(d["bounds_l"], dtype=np.int64),
            bounds_u=np.asarray(d["bounds_u"], dtype=np.int64),
            Q=int(d["Q"]),
            mbw=int(d["mbw"]),
        )
        if qf.N != int(d["N"]):
            raise ValueError("coefficient count does not match N")
        return qf


def _mirror(half: np.ndarray) -> np.ndarray:
    return np.concatenate([half, half[-2::-1]])


def quantize(coeffs: RealCoefficients, bounds: BoundSet, Q: int) -> QuantizedFilter:
    """Map every real value v to ``ceil(v * 2**Q)`` and mirror to length N.

    The ceiling rule is applied uniformly to the coefficients and to
    both bounds, so a decoy-free integer interval per tap is simply
    ``[bounds_l[i], bounds_u[i]]``.
    """
    scale = 1 << Q
    qh = np.ceil(coeffs.h * scale).astype(np.int64)
    ql = np.ceil(bounds.lower * scale).astype(np.int64)
    qu = np.ceil(bounds.upper * scale).astype(np.int64)
    full = _mirror(qh)
    mbw = max(magnitude_bitwidth(int(v)) for v in full)
    return QuantizedFilter(
        coeffs=full,
        bounds_l=_mirror(ql),
        bounds_u=_mirror(qu),
        Q=Q,
        mbw=mbw,
    )


def quantization_deviation_bound(M: int, Q: int) -> float:
    """Uniform bound on |quantized ZPFR - real ZPFR|.

    Each of the M+1 half coefficients moves by less than 2**-Q under
    the ceiling rule and is weighted by at most 2 in the ZPFR, so the
    responses differ by less than 2*(M+1)*2**-Q at every frequency.
    """
    return 2.0 * (M + 1) * 2.0 ** (-Q)


@dataclass(frozen=True)
class ViolationReport:
    """Band-constraint audit of a response against its spec."""

    max_passband_deviation: float
    max_stopband_deviation: float
    passband_violations: int
    stopband_violations: int
    tol: float

    @property
    def ok(self) -> bool:
        return self.passband_violations == 0 and self.stopband_violations == 0

    def to_json_dict(self) -> dict:
        return {
            "max_passband_deviation": self.max_passband_deviation,
            "max_stopband_deviation": self.max_stopband_deviation,
            "passband_violations": self.passband_violations,
            "stopband_violations": self.stopband_violations,
            "tol": self.tol,
            "ok": self.ok,
        }


def verify_response(
    half, spec: FilterSpec, grid: FrequencyGrid, tol: float = LP_RESIDUAL_TOL
) -> ViolationReport:
    """Check the ZPFR of a real half coefficient vector on a grid."""
    half = np.asarray(half, dtype=float)
    gp = response_matrix(grid.passband, spec.M) @ half
    gs = response_matrix(grid.stopband, spec.M) @ half
    pass_dev = np.abs(gp - 1.0)
    stop_dev = np.abs(gs)
    return ViolationReport(
        max_passband_deviation=float(pass_dev.max()),
        max_stopband_deviation=float(stop_dev.max()),
        passband_violations=int(np.sum(pass_dev > spec.dp + tol)),
        stopband_violations=int(np.sum(stop_dev > spec.ds + tol)),
        tol=tol,
    )


def verify_spec(
    qf: QuantizedFilter, spec: FilterSpec, grid: FrequencyGrid, tol: float = LP_RESIDUAL_TOL
) -> ViolationReport:
    """Check the scaled quantized response G(w)/2**Q against the spec."""
    return verify_response(qf.half() / (1 << qf.Q), spec, grid, tol)
