"""Gate-level netlists: lowering of the TMCM block and fast evaluation.

Net ids: 0 and 1 are the constants, primary input bits follow, and gate
j drives net ``first_gate_id + j``.  Gates only reference earlier nets,
so the list is topologically ordered by construction.

The evaluator packs many test vectors into one arbitrary-width Python
integer per net (one bit per vector), so a single pass over the gate
list evaluates thousands of input combinations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from firlock.tmcm import ObfuscatedTMCM

__all__ = [
    "GateNetlist",
    "NetlistBuilder",
    "PackedEvaluator",
    "const_mask",
    "lower_to_gates",
    "pack_bits",
    "pack_value_bits",
]

OP_AND, OP_OR, OP_XOR, OP_NOT, OP_MUX2 = range(5)
OP_NAMES = ("AND", "OR", "XOR", "NOT", "MUX2")
_OP_CODES = {name: code for code, name in enumerate(OP_NAMES)}

CONST0, CONST1 = 0, 1


@dataclass
class GateNetlist:
    """Combinational netlist over {AND, OR, XOR, NOT, MUX2}.

    ``inputs`` maps port name to net ids LSB-first; ``outputs`` lists
    the product bits LSB-first.  ``meta`` records the port geometry
    (N, cbw, ibw); ``names`` is an optional debug map of net id to
    label.
    """

    inputs: dict
    outputs: list
    gates: list
    meta: dict = field(default_factory=dict)
    names: dict = field(default_factory=dict)

    @property
    def n_input_bits(self) -> int:
        return sum(len(v) for v in self.inputs.values())

    @property
    def first_gate_id(self) -> int:
        return 2 + self.n_input_bits

    @property
    def n_nets(self) -> int:
        return self.first_gate_id + len(self.gates)

    def validate(self) -> None:
        """Check topological order and reference sanity."""
        first = self.first_gate_id
        input_ids = {i for ids in self.inputs.values() for i in ids}
        if input_ids and (min(input_ids) < 2 or max(input_ids) >= first):
            raise ValueError("input net ids out of range")
        for j, gate in enumerate(self.gates):
            if gate[0] not in range(len(OP_NAMES)):
                raise ValueError(f"gate {j}: unknown op {gate[0]}")
            for operand in gate[1:]:
                if not 0 <= operand < first + j:
                    raise ValueError(f"gate {j} references net {operand} not yet defined")
        for out in self.outputs:
            if not 0 <= out < self.n_nets:
                raise ValueError(f"output references unknown net {out}")

    def to_json_dict(self) -> dict:
        def gate_dict(g):
            d = {"op": OP_NAMES[g[0]], "a": g[1]}
            if g[0] in (OP_AND, OP_OR, OP_XOR, OP_MUX2):
                d["b"] = g[2]
            if g[0] == OP_MUX2:
                d["s"] = g[3]
            return d

        return {
            "n_nets": self.n_nets,
            "inputs": {k: list(v) for k, v in self.inputs.items()},
            "outputs": list(self.outputs),
            "gates": [gate_dict(g) for g in self.gates],
            "meta": dict(self.meta),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "GateNetlist":
        gates = []
        for g in d["gates"]:
            code = _OP_CODES[g["op"]]
            if code == OP_MUX2:
                gates.append((code, g["a"], g["b"], g["s"]))
            elif code == OP_NOT:
                gates.append((code, g["a"]))
            else:
                gates.append((code, g["a"], g["b"]))
        nl = cls(
            inputs={k: list(v) for k, v in d["inputs"].items()},
            outputs=list(d["outputs"]),
            gates=gates,
            meta=dict(d.get("meta", {})),
        )
        nl.validate()
        if nl.n_nets != d["n_nets"]:
            raise ValueError("net count mismatch")
        return nl


class NetlistBuilder:
    """Construct netlists with structural hashing and constant folding.

    Constant operands dissolve into the surrounding logic (a MUX2 leaf
    fed by two hard-wired bits reduces to a wire, an inverter, or
    nothing), which is what embeds the TMCM constants into the netlist
    instead of leaving them readable on leaf wires.
    """

    def __init__(self):
        self.inputs = {}
        self.gates = []
        self.names = {}
        self._cache = {}
        self._not_of = {CONST0: CONST1, CONST1: CONST0}
        self._n_inputs = 0

    def add_input(self, name: str, width: int) -> list:
        if self.gates:
            raise RuntimeError("declare all inputs before building gates")
        ids = [2 + self._n_inputs + b for b in range(width)]
        self._n_inputs += width
        self.inputs[name] = ids
        for b, nid in enumerate(ids):
            self.names[nid] = f"{name}[{b}]"
        return ids

    def const(self, value) -> int:
        return CONST1 if value else CONST0

    def _emit(self, op: int, *operands) -> int:
        key = (op, *operands)
        nid = self._cache.get(key)
        if nid is None:
            nid = 2 + self._n_inputs + len(self.gates)
            self.gates.append((op, *operands))
            self._cache[key] = nid
        return nid

    def not_(self, a: int) -> int:
        known = self._not_of.get(a)
        if known is not None:
            return known
        nid = self._emit(OP_NOT, a)
        self._not_of[a] = nid
        self._not_of[nid] = a
        return nid

    def and_(self, a: int, b: int) -> int:
        if a == CONST0 or b == CONST0 or self._not_of.get(a) == b:
            return CONST0
        if a == CONST1:
            return b
        if b == CONST1 or a == b:
            return a
        return self._emit(OP_AND, *sorted((a, b)))

    def or_(self, a: int, b: int) -> int:
        if a == CONST1 or b == CONST1 or self._not_of.get(a) == b:
            return CONST1
        if a == CONST0:
            return b
        if b == CONST0 or a == b:
            return a
        return self._emit(OP_OR, *sorted((a, b)))

    def xor_(self, a: int, b: int) -> int:
        if a == b:
            return CONST0
        if self._not_of.get(a) == b:
            return CONST1
        if a == CONST0:
            return b
        if b == CONST0:
            return a
        if a == CONST1:
            return self.not_(b)
        if b == CONST1:
            return self.not_(a)
        return self._emit(OP_XOR, *sorted((a, b)))

    def mux(self, a: int, b: int, s: int) -> int:
        """b when s else a."""
        if s == CONST0 or a == b:
            return a
        if s == CONST1:
            return b
        if a == CONST0:
            return self.and_(b, s)
        if a == CONST1:
            return self.or_(b, self.not_(s))
        if b == CONST0:
            return self.and_(a, self.not_(s))
        if b == CONST1:
            return self.or_(a, s)
        if self._not_of.get(a) == b:
            return self.xor_(a, s)
        return self._emit(OP_MUX2, a, b, s)

    def full_adder(self, a: int, b: int, c: int):
        axb = self.xor_(a, b)
        total = self.xor_(axb, c)
        carry = self.or_(self.and_(a, b), self.and_(c, axb))
        return total, carry

    def build(self, outputs, meta=None, output_name: str = "y") -> GateNetlist:
        for b, nid in enumerate(outputs):
            self.names.setdefault(nid, f"{output_name}[{b}]")
        nl = GateNetlist(
            inputs=self.inputs,
            outputs=list(outputs),
            gates=self.gates,
            meta=dict(meta or {}),
            names=self.names,
        )
        nl.validate()
        return nl


def _constant_bits(b: NetlistBuilder, value: int, width: int) -> list:
    """Two's-complement bits of a constant as net ids."""
    mask = (1 << width) - 1
    v = value & mask
    return [b.const((v >> t) & 1) for t in range(width)]


def _mux_tree(b: NetlistBuilder, entries: list, sel: list) -> int:
    """Binary select tree, LSB select bit switching adjacent entries."""
    if not sel:
        return entries[0]
    lo = _mux_tree(b, entries[0::2], sel[1:])
    hi = _mux_tree(b, entries[1::2], sel[1:])
    return b.mux(lo, hi, sel[0])


def _signed_multiplier(b: NetlistBuilder, a_bits: list, x_bits: list, width: int) -> list:
    """Signed array multiplier, truncated to ``width`` output bits.

    Both operands are sign-extended to the output width; the unsigned
    product mod 2**width then equals the two's-complement encoding of
    the true signed product, which always fits because
    width = len(a_bits) + len(x_bits).
    """
    a_ext = a_bits + [a_bits[-1]] * (width - len(a_bits))
    x_ext = x_bits + [x_bits[-1]] * (width - len(x_bits))
    columns = [[] for _ in range(width)]
    for r in range(width):
        xr = x_ext[r]
        for c in range(width - r):
            pp = b.and_(a_ext[c], xr)
            if pp != CONST0:
                columns[r + c].append(pp)
    out = []
    for j in range(width):
        col = columns[j]
        while len(col) > 1:
            if len(col) >= 3:
                s, cy = b.full_adder(col.pop(0), col.pop(0), col.pop(0))
            else:
                a0, b0 = col.pop(0), col.pop(0)
                s, cy = b.xor_(a0, b0), b.and_(a0, b0)
            col.append(s)
            if cy != CONST0 and j + 1 < width:
                columns[j + 1].append(cy)
        out.append(col[0] if col else CONST0)
    return out


def lower_to_gates(tmcm: ObfuscatedTMCM) -> GateNetlist:
    """Lower the TMCM block to a gate netlist.

    Structure: per-coefficient MUX2 trees over the key slice bits pick
    the constant word (constant leaf bits fold into the tree logic), a
    second tree over the primary select i picks among coefficients
    (out-of-range selects read as zero), and a signed array multiplier
    forms the product with x.  For every (i, k, x) the gate-level output
    equals ``tmcm_multiply`` mod 2**(cbw+ibw).
    """
    b = NetlistBuilder()
    i_bits = b.add_input("i", tmcm.select_width)
    k_bits = b.add_input("k", tmcm.p)
    x_bits = b.add_input("x", tmcm.ibw)

    words = []
    offset = 0
    for i in range(tmcm.N):
        w = tmcm.key_widths[i]
        sel = k_bits[offset : offset + w]
        offset += w
        leaf_words = [_constant_bits(b, c, tmcm.cbw) for c in tmcm.mux_tables[i]]
        words.append(
            [_mux_tree(b, [lw[t] for lw in leaf_words], sel) for t in range(tmcm.cbw)]
        )

    zero_word = [CONST0] * tmcm.cbw
    padded = words + [zero_word] * ((1 << tmcm.select_width) - tmcm.N)
    selected = [_mux_tree(b, [wd[t] for wd in padded], i_bits) for t in range(tmcm.cbw)]

    product = _signed_multiplier(b, selected, x_bits, tmcm.cbw + tmcm.ibw)
    return b.build(
        product,
        meta={"N": tmcm.N, "cbw": tmcm.cbw, "ibw": tmcm.ibw, "p": tmcm.p},
    )


def pack_bits(bits: np.ndarray) -> int:
    """Pack a 0/1 vector into an int, element 0 at bit 0."""
    packed = np.packbits(bits.astype(np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def pack_value_bits(values: np.ndarray, width: int) -> list:
    """Per-bit lane masks for a vector of ``width``-bit values."""
    values = np.asarray(values).astype(np.uint64)
    return [pack_bits((values >> np.uint64(t)) & np.uint64(1)) for t in range(width)]


def const_mask(bit: int, width: int) -> int:
    """All-lanes mask for a constant input bit."""
    return ((1 << width) - 1) if bit else 0


class PackedEvaluator:
    """Bit-parallel netlist evaluation with per-output-bit cones.

    ``run`` takes per-input-bit lane masks and returns lane masks for
    the requested output bits; restricting to a cone skips every gate
    the requested bits do not depend on, which matters when scanning
    low product bits during constant extraction.
    """

    def __init__(self, nl: GateNetlist):
        self.nl = nl
        self._first = nl.first_gate_id
        self._cones = {}

    def _cone(self, out_bits: tuple) -> list:
        cached = self._cones.get(out_bits)
        if cached is not None:
            return cached
        first = self._first
        gates = self.nl.gates
        needed = set()
        stack = [self.nl.outputs[t] for t in out_bits]
        while stack:
            nid = stack.pop()
            if nid < first or nid in needed:
                continue
            needed.add(nid)
            stack.extend(gates[nid - first][1:])
        cone = sorted(nid - first for nid in needed)
        self._cones[out_bits] = cone
        return cone

    def run(self, input_masks: dict, width: int, out_bits=None):
        """Evaluate; ``input_masks`` maps port name to per-bit masks.

        Returns the lane masks of ``out_bits`` (default: all output
        bits) in the requested order.
        """
        nl = self.nl
        mask = (1 << width) - 1
        values = [0] * nl.n_nets
        values[CONST1] = mask
        for name, ids in nl.inputs.items():
            masks = input_masks[name]
            if len(masks) != len(ids):
                raise ValueError(f"port {name} expects {len(ids)} bit masks")
            for nid, m in zip(ids, masks):
                values[nid] = m
        if out_bits is None:
            out_bits = tuple(range(len(nl.outputs)))
        else:
            out_bits = tuple(out_bits)
        first = self._first
        gates = nl.gates
        for gi in self._cone(out_bits):
            g = gates[gi]
            op = g[0]
            if op == OP_AND:
                v = values[g[1]] & values[g[2]]
            elif op == OP_OR:
                v = values[g[1]] | values[g[2]]
            elif op == OP_XOR:
                v = values[g[1]] ^ values[g[2]]
            elif op == OP_NOT:
                v = values[g[1]] ^ mask
            else:
                a = values[g[1]]
                v = a ^ ((a ^ values[g[2]]) & values[g[3]])
            values[first + gi] = v
        return [values[nl.outputs[t]] for t in out_bits]
