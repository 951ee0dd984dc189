"""Two-bidder auction protocols with exact round and bit accounting.

A protocol is five deterministic functions: each bidder maps (valuation,
transcript received so far) to a bit-string message; the seller maps the two
bidder-side transcripts either to a pair of reply messages or to termination;
allocation and prices are computed from the full bidder-side transcripts.
Communication cost counts every bidder message plus every seller message
actually sent (the seller sends nothing in the final round).  A one-round
protocol is *simultaneous*: the seller never speaks.

Randomized protocols are seed-indexed families of deterministic protocols and
are executed per seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .construction import Instance, constant_vectors
from .itemsets import ItemSet, part_profile
from .rng import _mix64
from .valuations import Allocation, BXOSValuation, build_valuations, opt_value

Message = str
Transcript = tuple[Message, ...]


class ProtocolError(RuntimeError):
    """A protocol misbehaved: bad message alphabet, overlapping allocation,
    a simultaneous protocol that spoke as seller, or a blown round budget."""


def encode_uint(value: int, width: int) -> Message:
    if value < 0 or value >> width:
        raise ValueError(f"{value} does not fit in {width} bits")
    return format(value, f"0{width}b") if width else ""

def decode_uint(msg: Message) -> int:
    return int(msg, 2) if msg else 0


def encode_set(s: ItemSet) -> Message:
    """Raw m-bit string, item 0 first."""
    return format(s.bits, f"0{s.m}b")[::-1]


def decode_set(m: int, msg: Message) -> ItemSet:
    if len(msg) != m:
        raise ProtocolError(f"set message has {len(msg)} bits, expected {m}")
    return ItemSet(m, int(msg[::-1], 2))


def encode_basis(s1: ItemSet, s2: ItemSet) -> Message:
    return encode_set(s1) + encode_set(s2)


def decode_basis(m: int, msg: Message) -> tuple[ItemSet, ItemSet]:
    if len(msg) != 2 * m:
        raise ProtocolError(f"basis message has {len(msg)} bits, expected {2 * m}")
    return decode_set(m, msg[:m]), decode_set(m, msg[m:])


@dataclass(frozen=True)
class Protocol:
    name: str
    simultaneous: bool
    bidder_a: Callable[[BXOSValuation, Transcript], Message]
    bidder_b: Callable[[BXOSValuation, Transcript], Message]
    seller: Callable[[Transcript, Transcript], Optional[tuple[Message, Message]]]
    alloc: Callable[[Transcript, Transcript], Allocation]
    price: Callable[[Transcript, Transcript], tuple[Fraction, Fraction]]


@dataclass(frozen=True)
class ProtocolOutcome:
    allocation: Allocation
    prices: tuple[Fraction, Fraction]
    rounds: int
    cc_bits: int
    from_a: Transcript
    from_b: Transcript
    to_a: Transcript
    to_b: Transcript


def _check_bits(msg: Message, origin: str) -> Message:
    if not isinstance(msg, str) or any(ch not in "01" for ch in msg):
        raise ProtocolError(f"{origin} produced a non-binary message")
    return msg


def execute(
    protocol: Protocol,
    va: BXOSValuation,
    vb: BXOSValuation,
    max_rounds: int = 64,
) -> ProtocolOutcome:
    """Run the round structure to termination and account for every bit.

    Raises :class:`ProtocolError` if the round budget is exceeded (standing
    in for a non-terminating protocol) or if the allocation overlaps; a
    protocol bug is surfaced, never silently repaired.
    """
    if max_rounds < 1:
        raise ValueError("at least one round is required")
    seen_a: Transcript = ()
    seen_b: Transcript = ()
    from_a: list[Message] = []
    from_b: list[Message] = []
    to_a: list[Message] = []
    to_b: list[Message] = []
    rounds = 0
    while True:
        if rounds == max_rounds:
            raise ProtocolError(f"round budget of {max_rounds} exceeded")
        rounds += 1
        from_a.append(_check_bits(protocol.bidder_a(va, seen_a), "first bidder"))
        from_b.append(_check_bits(protocol.bidder_b(vb, seen_b), "second bidder"))
        reply = protocol.seller(tuple(from_a), tuple(from_b))
        if reply is None:
            break
        if protocol.simultaneous:
            raise ProtocolError("a simultaneous protocol sent a seller message")
        msg_a, msg_b = reply
        to_a.append(_check_bits(msg_a, "seller"))
        to_b.append(_check_bits(msg_b, "seller"))
        seen_a = (*seen_a, msg_a)
        seen_b = (*seen_b, msg_b)

    allocation = protocol.alloc(tuple(from_a), tuple(from_b))
    if not isinstance(allocation, Allocation):
        raise ProtocolError("allocation function returned a non-allocation")
    prices = protocol.price(tuple(from_a), tuple(from_b))
    cc = sum(len(x) for x in from_a + from_b + to_a + to_b)
    return ProtocolOutcome(
        allocation=allocation,
        prices=(Fraction(prices[0]), Fraction(prices[1])),
        rounds=rounds,
        cc_bits=cc,
        from_a=tuple(from_a),
        from_b=tuple(from_b),
        to_a=tuple(to_a),
        to_b=tuple(to_b),
    )


def welfare(outcome: ProtocolOutcome, va: BXOSValuation, vb: BXOSValuation) -> int:
    return va.value(outcome.allocation.to_alice) + vb.value(outcome.allocation.to_bob)


def approx_ratio(outcome: ProtocolOutcome, va: BXOSValuation, vb: BXOSValuation) -> Fraction:
    """Achieved welfare over the exact optimum, as an exact rational."""
    return Fraction(welfare(outcome, va, vb), opt_value(va, vb))


@dataclass(frozen=True)
class TruthfulnessViolation:
    bidder: str  # "A" or "B"
    own_index: int
    other_index: int
    deviation_index: int
    gap: Fraction


def check_truthful(
    protocol: Protocol, valuations: Sequence[BXOSValuation], max_rounds: int = 64
) -> list[TruthfulnessViolation]:
    """Enumerate all profitable unilateral deviations over a finite valuation set.

    For every pair of true inputs and every deviation report, compares the
    deviating bidder's utility (true value of the award minus price) against
    truthful play, in exact arithmetic.  An empty list means following the
    protocol is an ex-post equilibrium on this set.
    """
    vs = list(valuations)
    outcomes = {
        (i, j): execute(protocol, vs[i], vs[j], max_rounds)
        for i in range(len(vs))
        for j in range(len(vs))
    }
    violations = []
    for i, va in enumerate(vs):
        for j, vb in enumerate(vs):
            truth = outcomes[(i, j)]
            util_a = va.value(truth.allocation.to_alice) - truth.prices[0]
            util_b = vb.value(truth.allocation.to_bob) - truth.prices[1]
            for d in range(len(vs)):
                dev_a = outcomes[(d, j)]
                gain_a = va.value(dev_a.allocation.to_alice) - dev_a.prices[0] - util_a
                if gain_a > 0:
                    violations.append(TruthfulnessViolation("A", i, j, d, gain_a))
                dev_b = outcomes[(i, d)]
                gain_b = vb.value(dev_b.allocation.to_bob) - dev_b.prices[1] - util_b
                if gain_b > 0:
                    violations.append(TruthfulnessViolation("B", i, j, d, gain_b))
    return violations


# ---------------------------------------------------------------------------
# Baseline protocols.
# ---------------------------------------------------------------------------

PROTOCOL_NAMES = ("trivial", "basis-exchange", "random-clause", "vickrey-bundle")


def _zero_prices(_a: Transcript, _b: Transcript) -> tuple[Fraction, Fraction]:
    return (Fraction(0), Fraction(0))


def _bundle_report(width: int) -> Callable[[BXOSValuation, Transcript], Message]:
    def report(v: BXOSValuation, _seen: Transcript) -> Message:
        return encode_uint(v.value(ItemSet.full(v.m)), width)

    return report


def trivial_bundle_protocol(m: int) -> Protocol:
    """One round: both bidders report their grand-bundle value and the whole
    universe goes to the higher reporter (ties to the first bidder), free."""
    width = m.bit_length()

    def alloc(from_a: Transcript, from_b: Transcript) -> Allocation:
        a_wins = decode_uint(from_a[0]) >= decode_uint(from_b[0])
        everything = ItemSet.full(m)
        nothing = ItemSet.empty(m)
        return Allocation(everything, nothing) if a_wins else Allocation(nothing, everything)

    return Protocol(
        name="trivial",
        simultaneous=True,
        bidder_a=_bundle_report(width),
        bidder_b=_bundle_report(width),
        seller=lambda a, b: None,
        alloc=alloc,
        price=_zero_prices,
    )


def bundle_vickrey_protocol(m: int) -> Protocol:
    """Grand-bundle second-price: winner takes all and pays the loser's
    report.  Truthful on any valuation set (a single-good Vickrey auction)."""
    width = m.bit_length()

    def alloc(from_a: Transcript, from_b: Transcript) -> Allocation:
        a_wins = decode_uint(from_a[0]) >= decode_uint(from_b[0])
        everything = ItemSet.full(m)
        nothing = ItemSet.empty(m)
        return Allocation(everything, nothing) if a_wins else Allocation(nothing, everything)

    def price(from_a: Transcript, from_b: Transcript) -> tuple[Fraction, Fraction]:
        bid_a = decode_uint(from_a[0])
        bid_b = decode_uint(from_b[0])
        if bid_a >= bid_b:
            return (Fraction(bid_b), Fraction(0))
        return (Fraction(0), Fraction(bid_a))

    return Protocol(
        name="vickrey-bundle",
        simultaneous=True,
        bidder_a=_bundle_report(width),
        bidder_b=_bundle_report(width),
        seller=lambda a, b: None,
        alloc=alloc,
        price=price,
    )


def basis_exchange_protocol(inst: Instance) -> Protocol:
    """Two rounds, 5m bits: the second bidder reveals their basis, the seller
    forwards it, and the first bidder sends the clause whose joint profile
    with both bases marks it as special; that clause and its complement get
    allocated.

    The bidder functions close over each bidder's private basis, modeling
    knowledge that the bare clause list carries only implicitly.  Profile
    collisions that could misidentify the special clause die off
    exponentially in the universe size; candidates are taken in family order.
    """
    m = inst.m
    vec = constant_vectors(m)
    s = inst.s
    t = inst.t

    def bidder_a(v: BXOSValuation, seen: Transcript) -> Message:
        if not seen:
            return ""
        t1, t2 = decode_basis(m, seen[0])
        sets = (s.s1, s.s2, t1, t2)
        for clause in v.clauses:
            prof = part_profile(m, sets, clause)
            if prof == vec.spec1 or prof == vec.spec2:
                return encode_set(clause)
        # Unreachable on well-formed instances; concede the first clause.
        return encode_set(v.clauses[0])

    def bidder_b(v: BXOSValuation, seen: Transcript) -> Message:
        return encode_basis(t.s1, t.s2) if not seen else ""

    def seller(from_a: Transcript, from_b: Transcript) -> Optional[tuple[Message, Message]]:
        if len(from_a) == 1:
            return (from_b[0], "")
        return None

    def alloc(from_a: Transcript, from_b: Transcript) -> Allocation:
        chosen = decode_set(m, from_a[1])
        return Allocation(chosen, ~chosen)

    return Protocol(
        name="basis-exchange",
        simultaneous=False,
        bidder_a=bidder_a,
        bidder_b=bidder_b,
        seller=seller,
        alloc=alloc,
        price=_zero_prices,
    )


def random_clause_protocol(m: int, seed: int) -> Protocol:
    """One round, m bits: the first bidder sends one clause of their family
    (position picked by the seed, uniform over seeds) and receives exactly
    those items; the complement goes to the second bidder."""

    def bidder_a(v: BXOSValuation, _seen: Transcript) -> Message:
        return encode_set(v.clauses[_mix64(seed, 0) % len(v.clauses)])

    def alloc(from_a: Transcript, _from_b: Transcript) -> Allocation:
        chosen = decode_set(m, from_a[0])
        return Allocation(chosen, ~chosen)

    return Protocol(
        name="random-clause",
        simultaneous=True,
        bidder_a=bidder_a,
        bidder_b=lambda v, seen: "",
        seller=lambda a, b: None,
        alloc=alloc,
        price=_zero_prices,
    )


def build_protocol(name: str, inst: Instance, seed: int = 0) -> Protocol:
    """Instantiate a registered protocol for one instance execution."""
    if name not in PROTOCOL_NAMES:
        raise KeyError(f"unknown protocol {name!r}; known: {', '.join(PROTOCOL_NAMES)}")
    if name == "trivial":
        return trivial_bundle_protocol(inst.m)
    if name == "vickrey-bundle":
        return bundle_vickrey_protocol(inst.m)
    if name == "basis-exchange":
        return basis_exchange_protocol(inst)
    return random_clause_protocol(inst.m, seed)


def run_on_instance(
    name: str, inst: Instance, seed: int = 0, max_rounds: int = 64
) -> tuple[ProtocolOutcome, int, Fraction]:
    """Execute a registered protocol on an instance's bidder inputs.

    Returns (outcome, welfare, ratio to the exact optimum).
    """
    va, vb, *_ = build_valuations(inst)
    protocol = build_protocol(name, inst, seed)
    outcome = execute(protocol, va, vb, max_rounds)
    return outcome, welfare(outcome, va, vb), approx_ratio(outcome, va, vb)
