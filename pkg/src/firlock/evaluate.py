"""Behavior of the obfuscated filter under wrong keys.

The effective coefficients of the filter under *any* key can be read
off behaviorally: drive the constant-1 step from reset and difference
the first N outputs.  The resulting tap vector is exactly what the key
selected per index, so its frequency response tells whether the filter
still meets its spec.  A wrong key can break coefficient symmetry, so
the violation test uses the full-response magnitude |H(e^jw)| (a direct
DFT of the effective taps); the symmetric-part ZPFR is kept for
plotting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from firlock.design import FilterSpec, build_frequency_grid, response_matrix
from firlock.tmcm import FoldedFilter, SecretKey, simulate_filter

__all__ = [
    "BehaviorReport",
    "KeyBehavior",
    "WrongKeySample",
    "behavior_report",
    "effective_coefficients",
    "emit_curves",
    "sample_wrong_keys",
    "single_slice_corruptions",
    "zpfr_under_key",
]

VIOLATION_TOL = 1e-8

# Below this ball size the Hamming ball is enumerated outright, giving
# exact uniform sampling without replacement.
_ENUMERATION_LIMIT = 1 << 18


@dataclass(frozen=True)
class WrongKeySample:
    """Distinct wrong keys within a Hamming ball of the secret."""

    keys: tuple
    max_hd: int
    seed: int


def sample_wrong_keys(secret: SecretKey, count: int, max_hd: int, seed: int) -> WrongKeySample:
    """Uniform sample of ``count`` distinct keys at HD 1..max_hd from the secret."""
    p = secret.p
    if count < 0:
        raise ValueError("count must be non-negative")
    if not 1 <= max_hd <= p:
        raise ValueError("max_hd must lie in [1, p]")
    sizes = [math.comb(p, d) for d in range(1, max_hd + 1)]
    total = sum(sizes)
    if count > total:
        raise ValueError(f"only {total} keys exist within Hamming distance {max_hd}")
    rng = np.random.default_rng(seed)
    if total <= _ENUMERATION_LIMIT:
        masks = []
        for d in range(1, max_hd + 1):
            for positions in combinations(range(p), d):
                masks.append(sum(1 << b for b in positions))
        chosen = rng.choice(len(masks), size=count, replace=False)
        keys = tuple(secret.bits ^ masks[m] for m in chosen)
    else:
        weights = np.array(sizes, dtype=float) / total
        seen = set()
        keys = []
        while len(keys) < count:
            d = int(rng.choice(np.arange(1, max_hd + 1), p=weights))
            positions = rng.choice(p, size=d, replace=False)
            key = secret.bits ^ sum(1 << int(b) for b in positions)
            if key not in seen:
                seen.add(key)
                keys.append(key)
        keys = tuple(keys)
    return WrongKeySample(keys=keys, max_hd=max_hd, seed=seed)


def single_slice_corruptions(secret: SecretKey) -> list:
    """Every key that differs from the secret in exactly one slice."""
    keys = []
    for i, w in enumerate(secret.widths):
        good = secret.slice_value(i)
        for v in range(1 << w):
            if v != good:
                keys.append(secret.with_slice(i, v).bits)
    return keys


def effective_coefficients(filt: FoldedFilter, key) -> np.ndarray:
    """Taps realized under ``key``, probed through the step response.

    Equals ``tmcm_select`` per index for any key: the step makes output
    j the running sum of the first j+1 selected constants.
    """
    N = filt.tmcm.N
    y = simulate_filter(filt, key, np.ones(N, dtype=np.int64))
    return np.diff(y, prepend=0)


def zpfr_under_key(filt: FoldedFilter, key, w, q_scale: int) -> np.ndarray:
    """Zero-phase response of the symmetric part of the effective taps.

    A wrong key may break symmetry; the symmetric part is what a
    zero-phase plot can show.  ``q_scale`` is the quantization exponent
    Q of the underlying design.
    """
    taps = effective_coefficients(filt, key)
    sym = (taps + taps[::-1]) / 2.0
    M = (len(taps) - 1) // 2
    return response_matrix(w, M) @ (sym[: M + 1] / (1 << q_scale))


@dataclass(frozen=True)
class KeyBehavior:
    """Spec audit of the filter under one key."""

    key_hex: str
    is_secret: bool
    taps: tuple
    symmetric: bool
    max_passband_dev: float
    max_stopband_dev: float
    band_excess: float
    violates: bool
    curve: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "key": self.key_hex,
            "is_secret": self.is_secret,
            "taps": [int(t) for t in self.taps],
            "symmetric": self.symmetric,
            "max_passband_dev": self.max_passband_dev,
            "max_stopband_dev": self.max_stopband_dev,
            "band_excess": self.band_excess,
            "violates": self.violates,
        }


@dataclass(frozen=True)
class BehaviorReport:
    """Per-key audits plus the wrong-key violation fraction."""

    spec: FilterSpec
    entries: tuple
    violation_fraction: float
    grid_density: float
    tol: float
    curve_w: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "spec": self.spec.to_json_dict(),
            "grid_density": self.grid_density,
            "tol": self.tol,
            "wrong_keys": len(self.entries) - 1,
            "violation_fraction": self.violation_fraction,
            "keys": [e.to_json_dict() for e in self.entries],
        }


def behavior_report(
    filt: FoldedFilter,
    secret: SecretKey,
    spec: FilterSpec,
    wrong_keys,
    grid_density: float = 160.0,
    curve_points: int = 257,
    tol: float = VIOLATION_TOL,
) -> BehaviorReport:
    """Audit the correct key and every wrong key against the spec.

    A key is flagged violating when |H(e^jw)| leaves the ripple band by
    more than ``tol`` anywhere on the verification grid.  The correct
    key always appears first (key id 0 in the curve export); only wrong
    keys count toward the violation fraction.
    """
    grid = build_frequency_grid(spec, grid_density)
    N = filt.tmcm.N
    idx = np.arange(N)
    phase_pass = np.exp(-1j * np.outer(grid.passband, idx))
    phase_stop = np.exp(-1j * np.outer(grid.stopband, idx))
    curve_w = np.linspace(0.0, np.pi, curve_points)
    scale = 1 << spec.Q

    def audit(key, is_secret):
        taps = effective_coefficients(filt, key)
        mag_pass = np.abs(phase_pass @ (taps / scale))
        mag_stop = np.abs(phase_stop @ (taps / scale))
        pass_dev = float(np.max(np.abs(mag_pass - 1.0)))
        stop_dev = float(np.max(mag_stop))
        excess = max(pass_dev - spec.dp, stop_dev - spec.ds)
        bits = key.bits if isinstance(key, SecretKey) else int(key)
        return KeyBehavior(
            key_hex=format(bits, f"0{(secret.p + 3) // 4}x"),
            is_secret=is_secret,
            taps=tuple(int(t) for t in taps),
            symmetric=bool(np.array_equal(taps, taps[::-1])),
            max_passband_dev=pass_dev,
            max_stopband_dev=stop_dev,
            band_excess=float(excess),
            violates=bool(excess > tol),
            curve=zpfr_under_key(filt, key, curve_w, spec.Q),
        )

    entries = [audit(secret, True)] + [audit(k, False) for k in wrong_keys]
    wrong = entries[1:]
    fraction = float(np.mean([e.violates for e in wrong])) if wrong else 0.0
    return BehaviorReport(
        spec=spec,
        entries=tuple(entries),
        violation_fraction=fraction,
        grid_density=grid_density,
        tol=tol,
        curve_w=curve_w,
    )


def emit_curves(report: BehaviorReport) -> str:
    """CSV of the per-key zero-phase curves; key id 0 is the correct key."""
    lines = ["key_id,w_over_pi,gain"]
    w_over_pi = report.curve_w / np.pi
    for key_id, entry in enumerate(report.entries):
        for w, g in zip(w_over_pi, entry.curve):
            lines.append(f"{key_id},{w:.10g},{g:.10g}")
    return "\n".join(lines) + "\n"
