"""Two-party semi-honest secure computation over boolean circuits.

Two interchangeable backends evaluate the same circuit objects:

- :func:`gmw_execute` works on XOR shares with dealer-issued Beaver triples;
  its online round count equals the circuit's AND depth.
- :func:`yao_execute` garbles the circuit; its online phase is a single
  round trip regardless of depth.

Both leave the result XOR-shared; :func:`reveal_output` reconstructs it,
optionally one-sided so only one party learns the plaintext.  Channels are
in-process queue pairs with an injectable one-way delay, or real sockets.
Every byte moved is visible to a :class:`SessionTranscript` for round and
bandwidth accounting.
"""

from prelude.smpc.channel import (
    ChannelClosed,
    ChannelTimeout,
    KIND_NAMES,
    LoopbackEnd,
    MSG_AND_OPENING,
    MSG_ENVELOPE,
    MSG_ENVELOPE_ACK,
    MSG_GARBLED_TABLES,
    MSG_INPUT_SHARE,
    MSG_LABELS,
    MSG_NOTIFY_CHANGE,
    MSG_OUTPUT_SHARE,
    MSG_SETUP_TRIPLES,
    MSG_SUBSCRIBE,
    MSG_VERIFY_QUERY,
    MSG_VERIFY_RESULT,
    ProtocolError,
    TcpChannel,
    encode_frame,
    frame_size,
    run_pair,
)
from prelude.smpc.dealer import (
    DealerMaterial,
    SetupUnderprovisioned,
    TripleStream,
    dealer_for_circuit,
    dealer_gen,
)
from prelude.smpc.gmw import gmw_execute, reveal_output
from prelude.smpc.shares import BitShares, pack_bits, reconstruct, share, unpack_bits
from prelude.smpc.transcript import (
    ONLINE,
    RECEIVED,
    SENT,
    SETUP,
    SessionTranscript,
    TranscriptEntry,
)
from prelude.smpc.yao import YAO_ROUNDS_WITH_REVEAL, yao_execute

__all__ = [
    "BitShares",
    "ChannelClosed",
    "ChannelTimeout",
    "DealerMaterial",
    "KIND_NAMES",
    "LoopbackEnd",
    "MSG_AND_OPENING",
    "MSG_ENVELOPE",
    "MSG_ENVELOPE_ACK",
    "MSG_GARBLED_TABLES",
    "MSG_INPUT_SHARE",
    "MSG_LABELS",
    "MSG_NOTIFY_CHANGE",
    "MSG_OUTPUT_SHARE",
    "MSG_SETUP_TRIPLES",
    "MSG_SUBSCRIBE",
    "MSG_VERIFY_QUERY",
    "MSG_VERIFY_RESULT",
    "ONLINE",
    "ProtocolError",
    "RECEIVED",
    "SENT",
    "SETUP",
    "SessionTranscript",
    "SetupUnderprovisioned",
    "TcpChannel",
    "TranscriptEntry",
    "TripleStream",
    "YAO_ROUNDS_WITH_REVEAL",
    "dealer_for_circuit",
    "dealer_gen",
    "encode_frame",
    "frame_size",
    "gmw_execute",
    "pack_bits",
    "reconstruct",
    "reveal_output",
    "run_pair",
    "share",
    "unpack_bits",
    "yao_execute",
]
