"""Reverse engineering of a multiplexed constant-multiplier netlist.

The attacker holds the gate-level function f_r(i, k, x) and nothing
else: no key, no filter spec, no working reference device.  The attack
proceeds in stages:

1. key slice discovery: which key bits steer which primary select value
   (functional probing; the lowering is regular so this is reliable);
2. LSB-first constant extraction: product bit j depends only on bits
   0..j of the constant and of x, so each constant falls out one bit at
   a time with an exhaustive check over the free low bits of x -- the
   desk-scale equivalent of proving a miter bit unsatisfiable;
3. decoy-method classification from the extracted constant sets;
4. hub-based coefficient recovery: a constant whose Hamming distance to
   every other extracted constant is minimal gives itself away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from firlock.hamming import hamming_distance, hub_element
from firlock.netlist import GateNetlist, PackedEvaluator, const_mask, pack_bits, pack_value_bits

__all__ = [
    "DsmVerdict",
    "ExtractionAnomaly",
    "InconclusiveClassification",
    "NoConsistentBit",
    "RecoveredConstantSets",
    "RecoveryReport",
    "VerificationMismatch",
    "classify_dsm",
    "compile_report",
    "extract_bit",
    "extract_constants",
    "fit_hub_threshold",
    "impulse_attack",
    "infer_key_slices",
    "recover_coefficient",
]


class NoConsistentBit(Exception):
    """Neither bit value matches: the block is not a constant multiplier here."""


class ExtractionAnomaly(Exception):
    """Both bit values matched, impossible for a true multiplication."""


class VerificationMismatch(Exception):
    """A completed constant failed the random-input spot check."""


class InconclusiveClassification(Exception):
    """Every constant set has two elements; no hub signal exists."""


def _split_bits(value: int, width: int) -> list:
    return [(value >> t) & 1 for t in range(width)]


def infer_key_slices(nl: GateNetlist) -> list:
    """Group key bits by the primary select value they influence.

    Drives x = 1 and sweeps all i lanes at once; flipping a key bit
    changes the selected constant (all table entries are distinct), so
    the affected lane identifies the owner.  Raises if a key bit feeds
    no lane or several, which would mean the netlist is not a
    per-coefficient selector.
    """
    meta = nl.meta
    n, ibw, p = meta["N"], meta["ibw"], len(nl.inputs["k"])
    ev = PackedEvaluator(nl)
    lanes = np.arange(n, dtype=np.uint64)
    i_masks = pack_value_bits(lanes, len(nl.inputs["i"]))
    x_masks = [const_mask(1, n)] + [0] * (ibw - 1)
    base = ev.run({"i": i_masks, "k": [0] * p, "x": x_masks}, n)
    slices = [[] for _ in range(n)]
    for bit in range(p):
        k_masks = [0] * p
        k_masks[bit] = const_mask(1, n)
        out = ev.run({"i": i_masks, "k": k_masks, "x": x_masks}, n)
        diff = 0
        for a, b in zip(base, out):
            diff |= a ^ b
        owners = [lane for lane in range(n) if (diff >> lane) & 1]
        if len(owners) != 1:
            raise ValueError(f"key bit {bit} influences {len(owners)} selects, expected 1")
        slices[owners[0]].append(bit)
    return slices


def extract_bit(ev: PackedEvaluator, i: int, k: int, partial: int, j: int) -> int:
    """Bit j of the constant behind (i, k), given verified bits 0..j-1.

    Checks both candidate values against the netlist on every x with
    bits 0..j free (2**(j+1) evaluations, all lanes of one packed run).
    Exactly one candidate can survive for a true multiplication: the
    two candidate products already differ at bit j for x = 1.
    """
    nl = ev.nl
    ibw = nl.meta["ibw"]
    free = min(j + 1, ibw)  # beyond ibw the whole input is already free
    width = 1 << free
    xs = np.arange(width, dtype=np.uint64)
    x_masks = pack_value_bits(xs, free) + [0] * (ibw - free)
    i_masks = [const_mask(bit, width) for bit in _split_bits(i, len(nl.inputs["i"]))]
    k_masks = [const_mask(bit, width) for bit in _split_bits(k, len(nl.inputs["k"]))]
    observed = ev.run({"i": i_masks, "k": k_masks, "x": x_masks}, width, out_bits=(j,))[0]
    # Sign-extend x when its top bit is free: for j >= ibw the product
    # bit depends on x as a signed word, not on the raw pattern.
    xs_signed = xs.astype(np.int64)
    if free == ibw:
        xs_signed -= (xs >> np.uint64(ibw - 1)).astype(np.int64) << ibw
    matches = []
    for b in (0, 1):
        c = partial | (b << j)
        predicted = pack_bits(((np.int64(c) * xs_signed) >> np.int64(j)) & np.int64(1))
        if predicted == observed:
            matches.append(b)
    if len(matches) == 1:
        return matches[0]
    if not matches:
        raise NoConsistentBit(f"no constant bit {j} reproduces f_r for i={i}, k={k:#x}")
    raise ExtractionAnomaly(f"both values of bit {j} match for i={i}, k={k:#x}")


def _spread(value: int, bit_positions) -> int:
    out = 0
    for t, pos in enumerate(bit_positions):
        out |= ((value >> t) & 1) << pos
    return out


@dataclass(frozen=True)
class RecoveredConstantSets:
    """Per-select lists of extracted constants, in key-slice-value order.

    ``R[i]`` holds one signed constant per value of key slice i; which
    entry is the true coefficient is exactly what the key hides.
    """

    R: tuple
    cbw: int
    slices: tuple

    @property
    def N(self) -> int:
        return len(self.R)

    @property
    def p(self) -> int:
        return sum(len(s) for s in self.slices)

    def to_json_dict(self) -> dict:
        return {
            "cbw": int(self.cbw),
            "R": [[int(v) for v in row] for row in self.R],
            "key_slices": [[int(b) for b in s] for s in self.slices],
        }


def extract_constants(
    nl: GateNetlist, key_slices=None, samples: int = 1000, seed: int = 0
) -> RecoveredConstantSets:
    """Recover every constant behind every (i, key slice value) pair.

    Runs the LSB-first extraction for all cbw bits, then spot-checks
    each completed constant against the netlist on ``samples`` random
    full-width inputs.
    """
    meta = nl.meta
    n, cbw, ibw = meta["N"], meta["cbw"], meta["ibw"]
    if cbw + ibw > 63:
        raise ValueError("extraction verification uses 64-bit arithmetic; cbw + ibw must stay below 64")
    ev = PackedEvaluator(nl)
    if key_slices is None:
        key_slices = infer_key_slices(nl)
    rng = np.random.default_rng(seed)
    sign_bit = 1 << (cbw - 1)
    prod_mask = np.uint64((1 << (cbw + ibw)) - 1)
    rows = []
    for i in range(n):
        bits_i = sorted(key_slices[i])
        row = []
        for v in range(1 << len(bits_i)):
            k = _spread(v, bits_i)
            partial = 0
            for j in range(cbw):
                partial |= extract_bit(ev, i, k, partial, j) << j
            _verify_constant(ev, i, k, partial, meta, rng, samples, prod_mask)
            row.append(partial - (1 << cbw) if partial & sign_bit else partial)
        rows.append(tuple(row))
    return RecoveredConstantSets(R=tuple(rows), cbw=cbw, slices=tuple(tuple(sorted(s)) for s in key_slices))


def _verify_constant(ev, i, k, partial, meta, rng, samples, prod_mask):
    """Full-width random check of f(c, x) == f_r(i, k, x)."""
    nl = ev.nl
    cbw, ibw = meta["cbw"], meta["ibw"]
    xs = rng.integers(0, 1 << ibw, size=samples, dtype=np.uint64)
    x_masks = pack_value_bits(xs, ibw)
    i_masks = [const_mask(bit, samples) for bit in _split_bits(i, len(nl.inputs["i"]))]
    k_masks = [const_mask(bit, samples) for bit in _split_bits(k, len(nl.inputs["k"]))]
    observed = ev.run({"i": i_masks, "k": k_masks, "x": x_masks}, samples)
    c_signed = partial - (1 << cbw) if partial & (1 << (cbw - 1)) else partial
    x_signed = xs.astype(np.int64) - ((xs >> np.uint64(ibw - 1)).astype(np.int64) << ibw)
    products = (np.int64(c_signed) * x_signed).astype(np.uint64) & prod_mask
    expected = pack_value_bits(products, cbw + ibw)
    if observed != expected:
        raise VerificationMismatch(f"extracted constant fails spot check for i={i}, k={k:#x}")


def recover_coefficient(values, tau: int = 1):
    """Hub test on one constant set: the coefficient, or None if undecided.

    A two-element set is always undecided; for larger sets the unique
    element within Hamming distance tau of all others (and the only one
    with that property) is reported as the coefficient.
    """
    vals = list(values)
    if len(vals) <= 2:
        return None
    return hub_element(vals, tau)


@dataclass(frozen=True)
class DsmVerdict:
    """Classifier output over the extracted constant sets."""

    label: str
    score: float
    features: dict

    def to_json_dict(self) -> dict:
        return {"label": self.label, "score": self.score, "features": dict(self.features)}


def classify_dsm(R: RecoveredConstantSets, tau: int = 1, threshold: float = 0.5) -> DsmVerdict:
    """Label the design HD-like or non-HD from hub-pattern evidence.

    The score is the fraction of multi-element sets containing a unique
    Hamming hub; pair-level proximity of the two-element sets is kept
    as a secondary feature (a hybrid method leaves hub-free multi sets
    but near-neighbor pairs).  Raises `InconclusiveClassification` when
    only two-element sets exist.
    """
    multi = [row for row in R.R if len(row) > 2]
    pairs = [row for row in R.R if len(row) == 2]
    if not multi:
        raise InconclusiveClassification("all constant sets are pairs; no hub signal")
    hub_fraction = float(np.mean([hub_element(row, tau) is not None for row in multi]))
    pair_close = (
        float(np.mean([hamming_distance(a, b) <= tau for a, b in pairs])) if pairs else 0.0
    )
    widths = [
        float(np.std([abs(int(v)).bit_length() for v in row])) for row in R.R if len(row) > 1
    ]
    features = {
        "hub_fraction": hub_fraction,
        "pair_close_fraction": pair_close,
        "bitwidth_spread": float(np.mean(widths)),
        "n_multi_sets": len(multi),
    }
    label = "HD-like" if hub_fraction >= threshold else "non-HD"
    return DsmVerdict(label=label, score=hub_fraction, features=features)


def fit_hub_threshold(hd_scores, other_scores) -> float:
    """Decision threshold maximizing training accuracy on two score sets."""
    candidates = sorted(set(hd_scores) | set(other_scores))
    best_t, best_acc = 0.5, -1.0
    edges = [0.0] + [
        (a + b) / 2 for a, b in zip(candidates, candidates[1:])
    ] + [1.0]
    for t in edges:
        acc = sum(s >= t for s in hd_scores) + sum(s < t for s in other_scores)
        if acc > best_acc:
            best_acc, best_t = acc, t
    return best_t


@dataclass(frozen=True)
class RecoveryReport:
    """Attack outcome accounting.

    ``vc`` counts multi-decoy selects, ``cdc`` the hub hypotheses that
    match the ground truth (None without ground truth), and
    ``apc_log2`` the log2 of key combinations left after removing the
    slices the hub test resolved.
    """

    vc: int
    cdc: int | None
    apc_log2: int
    verdicts: tuple
    dsm_verdict: DsmVerdict | None

    def to_json_dict(self) -> dict:
        d = {
            "vc": self.vc,
            "apc_log2": self.apc_log2,
            "verdicts": [None if v is None else int(v) for v in self.verdicts],
            "dsm_verdict": None if self.dsm_verdict is None else self.dsm_verdict.to_json_dict(),
        }
        if self.cdc is not None:
            d["cdc"] = self.cdc
        return d


def compile_report(
    R: RecoveredConstantSets,
    verdicts=None,
    ground_truth=None,
    tau: int = 1,
    dsm_verdict: DsmVerdict | None = None,
) -> RecoveryReport:
    """Assemble vc / cdc / apc from the extraction and hub results.

    ``ground_truth`` (the true coefficient list) is owner-side scoring
    data and the only secret-aware input in this module; everything
    else is computable by the attacker.
    """
    if verdicts is None:
        verdicts = [recover_coefficient(row, tau) for row in R.R]
    widths = [int(math.log2(len(row))) for row in R.R]
    p = sum(widths)
    vc = sum(1 for row in R.R if len(row) > 2)
    resolved = [i for i, v in enumerate(verdicts) if v is not None]
    apc_log2 = p - sum(widths[i] for i in resolved)
    cdc = None
    if ground_truth is not None:
        truth = [int(v) for v in ground_truth]
        cdc = sum(1 for i in resolved if verdicts[i] == truth[i])
    return RecoveryReport(
        vc=vc,
        cdc=cdc,
        apc_log2=apc_log2,
        verdicts=tuple(verdicts),
        dsm_verdict=dsm_verdict,
    )


def impulse_attack(run_filter, n_taps: int) -> list:
    """Read the coefficients of an unprotected filter off its output.

    Drives a constant-1 step from reset; the first output is h_0 and
    successive differences yield every further tap.
    """
    y = list(run_filter([1] * n_taps))
    return [int(y[0])] + [int(y[i] - y[i - 1]) for i in range(1, n_taps)]
