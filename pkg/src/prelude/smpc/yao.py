"""Garbled-circuit evaluation with free XOR and point-and-permute.

Wire labels are 128-bit integers; the two labels of a wire differ by a global
offset whose low bit is forced to 1, so a label's low bit doubles as the row
select bit.  XOR gates combine labels locally and NOT gates are free as well:
the garbler aliases the output labels to the input pair swapped, and the
evaluator just passes its label through.  Each AND gate costs four 16-byte
rows, keyed by a blake2s PRF over both input labels and the gate index.

The garbled tables depend only on the circuit, so they travel during setup.
The online phase is a single round trip: the evaluator sends masked choice
bits for its input wires, the garbler answers with its own input labels plus
pad-masked label pairs from which the evaluator unlocks exactly one each.
Output stays XOR-shared between the low bit of the garbler's zero-labels and
the low bit of the labels the evaluator computed; reveal_output() joins them.
"""

from __future__ import annotations

import hashlib
from typing import Mapping, Sequence

from prelude.circuits import AND, Circuit, NOT, XOR
from prelude.smpc.channel import (
    MSG_GARBLED_TABLES,
    MSG_INPUT_SHARE,
    MSG_LABELS,
    MSG_SETUP_TRIPLES,
    ProtocolError,
)
from prelude.smpc.dealer import (
    LABEL_BITS,
    LABEL_BYTES,
    DealerMaterial,
    SetupUnderprovisioned,
)
from prelude.smpc.gmw import _recv, _send
from prelude.smpc.shares import BitShares, pack_bits, unpack_bits
from prelude.smpc.transcript import SessionTranscript

# Online rounds per execution, counting the final share reveal.
YAO_ROUNDS_WITH_REVEAL = 2

_ROW_BYTES = LABEL_BYTES
_TABLE_BYTES = 4 * _ROW_BYTES


def _prf(label_a: int, label_b: int, gate_index: int) -> int:
    data = (
        label_a.to_bytes(LABEL_BYTES, "little")
        + label_b.to_bytes(LABEL_BYTES, "little")
        + gate_index.to_bytes(4, "little")
    )
    digest = hashlib.blake2s(data, key=b"prelude-garble", digest_size=16).digest()
    return int.from_bytes(digest, "little")


def _garble(circuit: Circuit, rng) -> tuple[int, list[int], bytes]:
    """Return (delta, zero-label per wire, concatenated AND tables)."""
    delta = rng.getrandbits(LABEL_BITS) | 1
    label0 = [0] * circuit.n_wires
    for group in circuit.input_groups:
        for w in group.wires:
            label0[w] = rng.getrandbits(LABEL_BITS)
    tables = bytearray()
    for gate_index, (kind, a, b, out) in enumerate(circuit.gates):
        if kind == XOR:
            label0[out] = label0[a] ^ label0[b]
        elif kind == NOT:
            label0[out] = label0[a] ^ delta
        else:
            out0 = rng.getrandbits(LABEL_BITS)
            label0[out] = out0
            rows: list[bytes] = [b""] * 4
            for va in (0, 1):
                la = label0[a] ^ (delta if va else 0)
                for vb in (0, 1):
                    lb = label0[b] ^ (delta if vb else 0)
                    lo = out0 ^ (delta if va and vb else 0)
                    row = ((la & 1) << 1) | (lb & 1)
                    rows[row] = (_prf(la, lb, gate_index) ^ lo).to_bytes(
                        LABEL_BYTES, "little"
                    )
            tables += b"".join(rows)
    return delta, label0, bytes(tables)


def _evaluate(circuit: Circuit, labels: list[int], tables: bytes) -> None:
    and_seen = 0
    for gate_index, (kind, a, b, out) in enumerate(circuit.gates):
        if kind == XOR:
            labels[out] = labels[a] ^ labels[b]
        elif kind == NOT:
            labels[out] = labels[a]
        else:
            la = labels[a]
            lb = labels[b]
            offset = _TABLE_BYTES * and_seen + _ROW_BYTES * (((la & 1) << 1) | (lb & 1))
            row = int.from_bytes(tables[offset : offset + _ROW_BYTES], "little")
            labels[out] = _prf(la, lb, gate_index) ^ row
            and_seen += 1


def _party_wires(circuit: Circuit, party: int) -> list[int]:
    return [w for g in circuit.input_groups if g.party == party for w in g.wires]


def _flatten_inputs(
    circuit: Circuit, party: int, my_inputs: Mapping[str, Sequence[int]]
) -> list[int]:
    mine = {g.name for g in circuit.input_groups if g.party == party}
    if set(my_inputs) != mine:
        raise ValueError(f"party {party} must supply exactly groups {sorted(mine)}")
    bits: list[int] = []
    for group in circuit.input_groups:
        if group.party != party:
            continue
        got = my_inputs[group.name]
        if len(got) != len(group.wires):
            raise ValueError(f"group {group.name!r} has wrong length")
        for bit in got:
            if bit not in (0, 1):
                raise ValueError("inputs must be bits")
            bits.append(bit)
    return bits


def yao_execute(
    circuit: Circuit,
    party: int,
    my_inputs: Mapping[str, Sequence[int]],
    channel,
    setup: DealerMaterial,
    rng=None,
    transcript: SessionTranscript | None = None,
    garbler: int = 1,
) -> BitShares:
    """Run one garbled execution; returns this party's shares of the outputs.

    ``rng`` is required on the garbler side only.  Call reveal_output()
    afterwards to reconstruct (it costs the second online round).
    """
    if party != setup.party:
        raise ValueError("setup material belongs to the other party")
    if transcript is not None:
        transcript.record_receive(
            MSG_SETUP_TRIPLES, setup.serialized_size(), setup.digest_bytes()
        )
    evaluator_wires = _party_wires(circuit, 1 - garbler)
    garbler_wires = _party_wires(circuit, garbler)

    if party == garbler:
        if rng is None:
            raise ValueError("garbler needs an rng")
        pads = setup.transfer_pads
        if pads is None or len(pads) < len(evaluator_wires):
            raise SetupUnderprovisioned(
                f"needed {len(evaluator_wires)} label transfers"
            )
        my_bits = _flatten_inputs(circuit, party, my_inputs)
        delta, label0, tables = _garble(circuit, rng)
        _send(channel, transcript, MSG_GARBLED_TABLES, tables)
        if transcript is not None:
            transcript.begin_online()
            transcript.next_round()
        e_bits = unpack_bits(
            _recv(channel, transcript, MSG_INPUT_SHARE), len(evaluator_wires)
        )
        parts: list[bytes] = []
        for w, bit in zip(garbler_wires, my_bits):
            label = label0[w] ^ (delta if bit else 0)
            parts.append(label.to_bytes(LABEL_BYTES, "little"))
        for j, w in enumerate(evaluator_wires):
            r0, r1 = pads[j]
            zero = label0[w]
            one = zero ^ delta
            if e_bits[j]:
                parts.append((zero ^ r1).to_bytes(LABEL_BYTES, "little"))
                parts.append((one ^ r0).to_bytes(LABEL_BYTES, "little"))
            else:
                parts.append((zero ^ r0).to_bytes(LABEL_BYTES, "little"))
                parts.append((one ^ r1).to_bytes(LABEL_BYTES, "little"))
        _send(channel, transcript, MSG_LABELS, b"".join(parts))
        return BitShares(tuple(label0[w] & 1 for w in circuit.output_wires))

    # Evaluator side.
    choices = setup.transfer_choices
    if choices is None or len(choices) < len(evaluator_wires):
        raise SetupUnderprovisioned(f"needed {len(evaluator_wires)} label transfers")
    my_bits = _flatten_inputs(circuit, party, my_inputs)
    tables = _recv(channel, transcript, MSG_GARBLED_TABLES)
    if len(tables) != _TABLE_BYTES * circuit.and_count():
        raise ProtocolError("garbled table payload has wrong size")
    if transcript is not None:
        transcript.begin_online()
        transcript.next_round()
    e_bits = [bit ^ choices[j][0] for j, bit in enumerate(my_bits)]
    _send(channel, transcript, MSG_INPUT_SHARE, pack_bits(e_bits))
    payload = _recv(channel, transcript, MSG_LABELS)
    expected = LABEL_BYTES * (len(garbler_wires) + 2 * len(evaluator_wires))
    if len(payload) != expected:
        raise ProtocolError("label payload has wrong size")
    labels = [0] * circuit.n_wires
    pos = 0
    for w in garbler_wires:
        labels[w] = int.from_bytes(payload[pos : pos + LABEL_BYTES], "little")
        pos += LABEL_BYTES
    for j, w in enumerate(evaluator_wires):
        pair = (
            int.from_bytes(payload[pos : pos + LABEL_BYTES], "little"),
            int.from_bytes(payload[pos + LABEL_BYTES : pos + 2 * LABEL_BYTES], "little"),
        )
        pos += 2 * LABEL_BYTES
        labels[w] = pair[my_bits[j]] ^ choices[j][1]
    _evaluate(circuit, labels, tables)
    return BitShares(tuple(labels[w] & 1 for w in circuit.output_wires))
