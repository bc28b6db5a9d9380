"""Shared fixtures: the three reference filters, designed and obfuscated once.

The LP designs (and especially the per-coefficient bound LPs) dominate
suite runtime, so everything derived from them is session-scoped and
built lazily per (filter, method) pair.
"""

import json
from types import SimpleNamespace

import numpy as np
import pytest

from firlock.cli import BENCH_KEY_BITS, bundled_spec_text
from firlock.decoys import DecoyMethod, assign_decoys
from firlock.design import (
    FilterSpec,
    QuantizedFilter,
    build_frequency_grid,
    coefficient_bounds,
    design_coefficients,
    quantize,
)
from firlock.netlist import lower_to_gates
from firlock.tmcm import build_folded_filter, build_tmcm

# Reference seeds used across the suite and the acceptance gate.
DECOY_SEED = 11
PLACEMENT_SEED = 12
ATTACK_SEED = 2
EVAL_SEED = 3
REFERENCE_IBW = 32

DESIGN_DENSITY = 16.0
VERIFY_DENSITY = 160.0


def reference_spec(index: int) -> FilterSpec:
    return FilterSpec.from_json_dict(json.loads(bundled_spec_text(index)))


def make_quantized(coeffs, lo, hi, Q=8):
    """Hand-built quantized filter for unit tests (no LP involved)."""
    coeffs = np.asarray(coeffs, dtype=np.int64)
    mbw = max(max(int(abs(v)).bit_length(), 1) for v in coeffs)
    return QuantizedFilter(
        coeffs=coeffs,
        bounds_l=np.asarray(lo, dtype=np.int64),
        bounds_u=np.asarray(hi, dtype=np.int64),
        Q=Q,
        mbw=mbw,
    )


@pytest.fixture(scope="session")
def designed():
    """designed(index) -> spec, grids, float design, bounds, quantized filter."""
    cache = {}

    def get(index: int):
        if index not in cache:
            spec = reference_spec(index)
            grid = build_frequency_grid(spec, DESIGN_DENSITY)
            coeffs = design_coefficients(spec, grid)
            bounds = coefficient_bounds(spec, grid)
            qf = quantize(coeffs, bounds, spec.Q)
            cache[index] = SimpleNamespace(
                spec=spec,
                grid=grid,
                verify_grid=build_frequency_grid(spec, VERIFY_DENSITY),
                coeffs=coeffs,
                bounds=bounds,
                qf=qf,
            )
        return cache[index]

    return get


@pytest.fixture(scope="session")
def built(designed):
    """built(index, dsm) -> the obfuscated design at the reference key budget."""
    cache = {}

    def get(index: int, dsm):
        dsm = DecoyMethod(dsm)
        key_tag = (index, dsm)
        if key_tag not in cache:
            d = designed(index)
            da = assign_decoys(d.qf, BENCH_KEY_BITS[index], dsm, seed=DECOY_SEED)
            tmcm, secret = build_tmcm(d.qf, da, ibw=REFERENCE_IBW, seed=PLACEMENT_SEED)
            cache[key_tag] = SimpleNamespace(
                design=d,
                da=da,
                tmcm=tmcm,
                secret=secret,
                filt=build_folded_filter(tmcm),
                netlist=lower_to_gates(tmcm),
            )
        return cache[key_tag]

    return get


@pytest.fixture(scope="session")
def extracted(built):
    """extracted(index, dsm) -> RecoveredConstantSets from the real netlist."""
    from firlock.attack import extract_constants

    cache = {}

    def get(index: int, dsm):
        key_tag = (index, DecoyMethod(dsm))
        if key_tag not in cache:
            cache[key_tag] = extract_constants(
                built(index, dsm).netlist, seed=ATTACK_SEED
            )
        return cache[key_tag]

    return get
