"""GMW evaluation over XOR shares.

XOR and NOT gates are evaluated locally (NOT by party 0 flipping its share).
Each AND layer consumes one Beaver triple per gate and costs exactly one
exchange of masked openings, so the online round count equals the circuit's
AND depth; revealing the output afterwards adds one more round.

Input wires never touch the channel: both parties expand the dealer's joint
mask seed into one mask bit per input wire, the owner takes ``bit XOR mask``
as its share and the peer takes the mask, which is a valid fresh sharing.
"""

from __future__ import annotations

import random
from typing import Mapping, Sequence

from prelude.circuits import AND, Circuit, NOT, XOR
from prelude.smpc.channel import (
    MSG_AND_OPENING,
    MSG_OUTPUT_SHARE,
    MSG_SETUP_TRIPLES,
    ProtocolError,
)
from prelude.smpc.dealer import DealerMaterial
from prelude.smpc.shares import BitShares, pack_bits, unpack_bits
from prelude.smpc.transcript import SessionTranscript


def _send(channel, transcript: SessionTranscript | None, kind: int, payload: bytes):
    n = channel.send(kind, payload)
    if transcript is not None:
        transcript.record_send(kind, n, payload)


def _recv(channel, transcript: SessionTranscript | None, expect: int) -> bytes:
    kind, payload, n = channel.recv()
    if kind != expect:
        raise ProtocolError(f"expected message kind {expect}, got {kind}")
    if transcript is not None:
        transcript.record_receive(kind, n, payload)
    return payload


def _plan(circuit: Circuit):
    """Gates bucketed by AND level: plan[L] = (and_gates_at_L, local_gates_after_L)."""
    cached = getattr(circuit, "_gmw_plan", None)
    if cached is not None:
        return cached
    depth = circuit.wire_and_depths()
    d_max = circuit.and_depth()
    ands: list[list] = [[] for _ in range(d_max + 1)]
    locals_: list[list] = [[] for _ in range(d_max + 1)]
    for gate in circuit.gates:
        level = depth[gate[3]]
        (ands if gate[0] == AND else locals_)[level].append(gate)
    plan = (d_max, ands, locals_)
    circuit._gmw_plan = plan
    return plan


def _input_shares(circuit: Circuit, party: int,
                  my_inputs: Mapping[str, Sequence[int]], mask_seed: bytes,
                  values: list[int]) -> None:
    n_in = sum(len(g.wires) for g in circuit.input_groups)
    masks = 0
    if n_in:
        masks = random.Random(int.from_bytes(mask_seed, "little")).getrandbits(n_in)
    mine = {g.name for g in circuit.input_groups if g.party == party}
    if set(my_inputs) != mine:
        raise ValueError(f"party {party} must supply exactly groups {sorted(mine)}")
    for group in circuit.input_groups:
        if group.party == party:
            bits = my_inputs[group.name]
            if len(bits) != len(group.wires):
                raise ValueError(f"group {group.name!r} has wrong length")
            for w, bit in zip(group.wires, bits):
                if bit not in (0, 1):
                    raise ValueError("inputs must be bits")
                values[w] = bit ^ ((masks >> w) & 1)
        else:
            for w in group.wires:
                values[w] = (masks >> w) & 1


def gmw_execute(
    circuit: Circuit,
    party: int,
    my_inputs: Mapping[str, Sequence[int]],
    channel,
    setup: DealerMaterial,
    transcript: SessionTranscript | None = None,
) -> BitShares:
    """Run the online phase; returns this party's shares of the output wires.

    Outputs stay shared: call reveal_output() afterwards to reconstruct.
    """
    if party != setup.party:
        raise ValueError("setup material belongs to the other party")
    if transcript is not None:
        transcript.record_receive(
            MSG_SETUP_TRIPLES, setup.serialized_size(), setup.digest_bytes()
        )
        transcript.begin_online()

    values = [0] * circuit.n_wires
    _input_shares(circuit, party, my_inputs, setup.input_mask_seed, values)

    def run_local(gates) -> None:
        for kind, a, b, out in gates:
            if kind == XOR:
                values[out] = values[a] ^ values[b]
            else:  # NOT: only party 0 flips its share
                values[out] = values[a] ^ 1 if party == 0 else values[a]

    d_max, ands, locals_ = _plan(circuit)
    run_local(locals_[0])
    for level in range(1, d_max + 1):
        gates = ands[level]
        nb = len(gates)
        ta, tb, tc = setup.triples.take(nb)
        d_mine = 0
        e_mine = 0
        for i, (_, a, b, _out) in enumerate(gates):
            d_mine |= (values[a] ^ ((ta >> i) & 1)) << i
            e_mine |= (values[b] ^ ((tb >> i) & 1)) << i
        payload = (d_mine | (e_mine << nb)).to_bytes((2 * nb + 7) // 8, "little")
        if transcript is not None:
            transcript.next_round()
        _send(channel, transcript, MSG_AND_OPENING, payload)
        theirs = int.from_bytes(_recv(channel, transcript, MSG_AND_OPENING), "little")
        mask = (1 << nb) - 1
        d_pub = d_mine ^ (theirs & mask)
        e_pub = e_mine ^ ((theirs >> nb) & mask)
        z = tc ^ (d_pub & tb) ^ (e_pub & ta)
        if party == 0:
            z ^= d_pub & e_pub
        for i, gate in enumerate(gates):
            values[gate[3]] = (z >> i) & 1
        run_local(locals_[level])

    return BitShares(tuple(values[w] for w in circuit.output_wires))


def reveal_output(
    my_share: BitShares,
    channel,
    transcript: SessionTranscript | None = None,
    send: bool = True,
    receive: bool = True,
) -> tuple[int, ...] | None:
    """Reconstruct shared outputs over the channel; one online round.

    With ``send`` or ``receive`` disabled the reveal is one-sided: only the
    receiving party learns the plaintext, the other returns None.
    """
    if transcript is not None:
        transcript.next_round()
    if send:
        _send(channel, transcript, MSG_OUTPUT_SHARE, pack_bits(my_share.bits))
    if not receive:
        if transcript is not None:
            transcript.finish()
        return None
    payload = _recv(channel, transcript, MSG_OUTPUT_SHARE)
    theirs = BitShares(unpack_bits(payload, len(my_share)))
    if transcript is not None:
        transcript.finish()
    return (my_share ^ theirs).bits
