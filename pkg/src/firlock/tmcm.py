"""Key-controlled multiplexed constant multiplication and the folded filter.

The TMCM block holds, for every coefficient index i, a power-of-two sized
table containing the coefficient and its decoys in random order.  A key
slice per index selects one table entry; the selected constant is
multiplied by the filter input.  Under the secret key every slice picks
the true coefficient, and the surrounding folded filter computes the
exact convolution; any other key multiplies at least one decoy.

The word-level reference semantics in this module are the ground truth
that the gate-level lowering (`firlock.netlist`) must match.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from firlock.decoys import DecoyAssignment
from firlock.design import QuantizedFilter

__all__ = [
    "FoldedFilter",
    "ObfuscatedTMCM",
    "SecretKey",
    "build_folded_filter",
    "build_tmcm",
    "clog2",
    "reference_convolution",
    "simulate_filter",
    "timing_signal",
    "tmcm_multiply",
    "tmcm_select",
]


def clog2(n: int) -> int:
    """Bits needed to address n items (0 for a single item)."""
    return (n - 1).bit_length()


@dataclass(frozen=True)
class SecretKey:
    """A p-bit key split into per-coefficient slices.

    Slices are laid out in coefficient order starting at bit 0, each
    slice LSB-first; interpreting slice i as an unsigned integer yields
    the position of coefficient i in its multiplexer table.
    """

    bits: int
    widths: tuple

    @property
    def p(self) -> int:
        return sum(self.widths)

    @cached_property
    def offsets(self) -> tuple:
        offs = []
        acc = 0
        for w in self.widths:
            offs.append(acc)
            acc += w
        return tuple(offs)

    def slice_value(self, i: int) -> int:
        return (self.bits >> self.offsets[i]) & ((1 << self.widths[i]) - 1)

    def with_slice(self, i: int, value: int) -> "SecretKey":
        if not 0 <= value < (1 << self.widths[i]):
            raise ValueError("slice value out of range")
        mask = ((1 << self.widths[i]) - 1) << self.offsets[i]
        bits = (self.bits & ~mask) | (value << self.offsets[i])
        return SecretKey(bits=bits, widths=self.widths)

    def to_hex(self) -> str:
        """Lowercase hex, ceil(p/4) digits, most significant nibble first."""
        digits = (self.p + 3) // 4
        return format(self.bits, f"0{digits}x")

    @classmethod
    def from_hex(cls, text: str, widths) -> "SecretKey":
        return cls(bits=int(text.strip(), 16), widths=tuple(widths))

    def layout_json_dict(self) -> dict:
        return {
            "p": self.p,
            "slice_order": "coefficient index ascending, slices LSB-first from bit 0",
            "slices": [
                {"index": i, "offset": off, "width": w}
                for i, (off, w) in enumerate(zip(self.offsets, self.widths))
            ],
        }


@dataclass(frozen=True)
class ObfuscatedTMCM:
    """Multiplexer tables of constants plus the port geometry.

    ``mux_tables[i]`` is a permutation of {coefficient i} and its
    decoys; ``cbw`` is the two's-complement width every stored constant
    fits in (one sign bit on top of the magnitude width), and ``ibw``
    the width of the multiplier's variable input.
    """

    N: int
    ibw: int
    cbw: int
    mux_tables: tuple
    key_widths: tuple
    seed: int

    def __post_init__(self):
        for i, table in enumerate(self.mux_tables):
            if len(table) != (1 << self.key_widths[i]):
                raise ValueError(f"table {i} size is not 2**width")
            for c in table:
                if not -(1 << (self.cbw - 1)) <= c < (1 << (self.cbw - 1)):
                    raise ValueError(f"constant {c} does not fit in {self.cbw} signed bits")

    @property
    def p(self) -> int:
        return sum(self.key_widths)

    @property
    def select_width(self) -> int:
        return clog2(self.N)

    def to_json_dict(self) -> dict:
        return {
            "N": int(self.N),
            "ibw": int(self.ibw),
            "cbw": int(self.cbw),
            "mux_tables": [[int(c) for c in t] for t in self.mux_tables],
            "key_widths": [int(w) for w in self.key_widths],
            "seed": int(self.seed),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ObfuscatedTMCM":
        return cls(
            N=int(d["N"]),
            ibw=int(d["ibw"]),
            cbw=int(d["cbw"]),
            mux_tables=tuple(tuple(int(c) for c in t) for t in d["mux_tables"]),
            key_widths=tuple(int(w) for w in d["key_widths"]),
            seed=int(d["seed"]),
        )


def build_tmcm(
    qf: QuantizedFilter, da: DecoyAssignment, ibw: int, seed: int
) -> tuple:
    """Shuffle each coefficient among its decoys and derive the key.

    Placement within each table is a uniform random permutation from the
    seeded generator; the key slice for index i records where the true
    coefficient landed.
    """
    if da.N != qf.N:
        raise ValueError("decoy assignment does not match the filter length")
    rng = np.random.default_rng(seed)
    tables = []
    key_bits = 0
    widths = da.key_widths
    offset = 0
    for i in range(qf.N):
        entries = [int(qf.coeffs[i])] + [int(v) for v in da.D[i]]
        order = rng.permutation(len(entries))
        tables.append(tuple(int(entries[j]) for j in order))
        position = int(np.where(order == 0)[0][0])
        key_bits |= position << offset
        offset += widths[i]
    tmcm = ObfuscatedTMCM(
        N=qf.N,
        ibw=ibw,
        cbw=qf.mbw + 1,
        mux_tables=tuple(tables),
        key_widths=widths,
        seed=seed,
    )
    return tmcm, SecretKey(bits=key_bits, widths=widths)


def _key_bits(key) -> int:
    return key.bits if isinstance(key, SecretKey) else int(key)


def tmcm_select(tmcm: ObfuscatedTMCM, i: int, key) -> int:
    """Constant chosen by key slice i; the word-level MUX semantics."""
    if not 0 <= i < tmcm.N:
        raise ValueError("primary select out of range")
    bits = _key_bits(key)
    offset = sum(tmcm.key_widths[:i])
    v = (bits >> offset) & ((1 << tmcm.key_widths[i]) - 1)
    return tmcm.mux_tables[i][v]


def tmcm_multiply(tmcm: ObfuscatedTMCM, i: int, key, x: int) -> int:
    """Selected constant times x, exact integer arithmetic."""
    half = 1 << (tmcm.ibw - 1)
    if not -half <= x < half:
        raise ValueError(f"input {x} does not fit in {tmcm.ibw} signed bits")
    return tmcm_select(tmcm, i, key) * int(x)


@dataclass(frozen=True)
class FoldedFilter:
    """Folded realization: one TMCM, one adder, N-1 delay registers.

    Each input sample is held for N clock cycles; a counter sweeps the
    coefficient index, the TMCM product is accumulated into the delay
    line, and the timing signal marks the last cycle of every sample,
    triggering emit/shift/load.  The output width is sized so partial
    sums can never wrap.
    """

    tmcm: ObfuscatedTMCM
    counter_width: int
    register_count: int
    output_width: int


def build_folded_filter(tmcm: ObfuscatedTMCM) -> FoldedFilter:
    return FoldedFilter(
        tmcm=tmcm,
        counter_width=clog2(tmcm.N),
        register_count=tmcm.N - 1,
        output_width=tmcm.cbw + tmcm.ibw + clog2(tmcm.N),
    )


def timing_signal(filt: FoldedFilter, n_cycles: int) -> list:
    """TS per clock cycle: one pulse on the last cycle of each sample."""
    N = filt.tmcm.N
    return [(c % N) == N - 1 for c in range(n_cycles)]


def simulate_filter(filt: FoldedFilter, key, inputs) -> np.ndarray:
    """Run the folded filter; one output per input sample.

    Registers reset to zero.  Each sample costs N internal cycles: cycle
    c accumulates ``constant_c * x`` into delay slot c, and the TS pulse
    after cycle N-1 emits slot 0 and shifts the line.  Under the secret
    key this reproduces the exact transposed-form convolution.
    """
    tmcm = filt.tmcm
    N = tmcm.N
    if filt.output_width > 63:
        raise ValueError("simulation uses 64-bit accumulators; output width must stay below 64")
    bits = _key_bits(key)
    consts = np.array([tmcm_select(tmcm, i, bits) for i in range(N)], dtype=np.int64)
    half = 1 << (tmcm.ibw - 1)
    xs = np.asarray(inputs, dtype=np.int64)
    if len(xs) and (xs.max(initial=0) >= half or xs.min(initial=0) < -half):
        raise ValueError(f"inputs must fit in {tmcm.ibw} signed bits")
    slots = np.zeros(N, dtype=np.int64)
    out = np.empty(len(xs), dtype=np.int64)
    for t, x in enumerate(xs):
        slots += consts * x          # the N multiply/accumulate cycles
        out[t] = slots[0]            # TS: emit, then shift the line
        slots[:-1] = slots[1:]
        slots[-1] = 0
    return out


def reference_convolution(coeffs, inputs) -> np.ndarray:
    """Direct convolution ``y(j) = sum_i coeffs[i] * x(j - i)``; the oracle."""
    coeffs = np.asarray(coeffs, dtype=np.int64)
    xs = np.asarray(inputs, dtype=np.int64)
    if len(xs) == 0:
        return np.empty(0, dtype=np.int64)
    return np.convolve(xs, coeffs)[: len(xs)]
