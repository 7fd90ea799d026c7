"""Tangles: diagram fragments in a disk with boundary legs.

A tangle is the local-move payload: crossings and internal connections
plus an ordered cyclic list of boundary legs.  Leg k is either attached
to a crossing port or is one end of a crossing-free arc through the
disk (its partner leg is the other end).  Directions are `in` (strand
flows into the disk) or `out`.

Disk-embeddability is checked by capping the tangle with a hub vertex
joined to the legs in reversed cyclic order and requiring the closed map
to be spherical; this is exactly "the legs lie on a round boundary in
the stated order".
"""

from __future__ import annotations

import re

from .diagram import KINDS, Port, VlinkError, is_in_port, is_out_port
from .maps import RotMap

# Leg attachments
PortAttach = tuple[str, str, int]  # ("port", crossing, index)
ArcAttach = tuple[str, int]  # ("arc", partner leg)


class Tangle:
    __slots__ = ("crossings", "succ", "pred", "legs", "free_loops")

    def __init__(
        self,
        crossings: dict[str, str],
        connections: dict[Port, Port],
        legs: list[tuple[tuple, str]],
        free_loops: int = 0,
    ):
        self.crossings = dict(crossings)
        self.succ = dict(connections)
        self.pred = {q: p for p, q in self.succ.items()}
        self.legs = list(legs)
        self.free_loops = free_loops

    @property
    def arity(self) -> int:
        return len(self.legs)

    def leg_dirs(self) -> tuple[str, ...]:
        return tuple(d for _, d in self.legs)

    def arcs(self) -> list[tuple[int, int]]:
        """Crossing-free strands as (in-leg, out-leg) pairs."""
        out = []
        for k, (attach, direction) in enumerate(self.legs):
            if attach[0] == "arc" and direction == "in":
                out.append((k, attach[1]))
        return sorted(out)

    def attached_port(self, k: int) -> Port | None:
        attach, _ = self.legs[k]
        if attach[0] == "port":
            return (attach[1], attach[2])
        return None

    def validate(self) -> list[str]:
        bad: list[str] = []
        if self.free_loops < 0:
            bad.append("negative free_loops")
        attach_ports: dict[Port, int] = {}
        for k, (attach, direction) in enumerate(self.legs):
            if direction not in ("in", "out"):
                bad.append(f"leg {k}: bad direction {direction!r}")
            if attach[0] == "port":
                p = (attach[1], attach[2])
                if p[0] not in self.crossings:
                    bad.append(f"leg {k}: unknown crossing {p[0]}")
                    continue
                if p in attach_ports:
                    bad.append(f"leg {k}: port {p} already used by a leg")
                attach_ports[p] = k
                want = "in" if is_in_port(p) else "out"
                if direction != want:
                    bad.append(f"leg {k}: direction {direction} at {want}-port {p}")
            elif attach[0] == "arc":
                m = attach[1]
                if not (0 <= m < len(self.legs)) or m == k:
                    bad.append(f"leg {k}: bad arc partner {m}")
                    continue
                pattach, pdir = self.legs[m]
                if pattach != ("arc", k):
                    bad.append(f"leg {k}: arc partner {m} does not point back")
                elif pdir == direction:
                    bad.append(f"leg {k}: arc with two {direction} ends")
            else:
                bad.append(f"leg {k}: bad attachment {attach!r}")
        if bad:
            return bad
        seen_in: set[Port] = set()
        for p, q in self.succ.items():
            if p[0] not in self.crossings or q[0] not in self.crossings:
                bad.append(f"connection {p}->{q} references unknown crossing")
                continue
            if not is_out_port(p) or not is_in_port(q):
                bad.append(f"connection {p}->{q} violates orientation")
            seen_in.add(q)
        for c in self.crossings:
            if self.crossings[c] not in KINDS:
                bad.append(f"crossing {c}: bad kind")
            for i in range(4):
                p = (c, i)
                uses = int(p in self.succ or p in seen_in) + int(p in attach_ports)
                if uses != 1:
                    bad.append(f"port {c}.{i} used {uses} times (want exactly 1)")
        if bad:
            return bad
        if not self._closure().is_planar():
            bad.append("tangle does not embed in a disk with legs in this order")
        return bad

    def _closure(self) -> RotMap:
        m = RotMap()
        for c in self.crossings:
            m.add_vertex(c, [(c, i) for i in range(4)])
        hub = [("hub", k) for k in reversed(range(len(self.legs)))]
        if hub:
            m.add_vertex("hub", hub)
        for p, q in self.succ.items():
            m.add_edge(p, q)
        done: set[int] = set()
        for k, (attach, _) in enumerate(self.legs):
            if attach[0] == "port":
                m.add_edge((attach[1], attach[2]), ("hub", k))
            elif k not in done:
                m.add_edge(("hub", k), ("hub", attach[1]))
                done.add(k)
                done.add(attach[1])
        return m

    def canonical(self) -> str:
        """Label-independent code with the leg order pinned."""
        label: dict[str, str] = {}

        def name(c: str) -> str:
            if c not in label:
                label[c] = f"q{len(label)}"
            return label[c]

        # Seed labels from legs, then sweep connections to a fixed point.
        parts = []
        for attach, direction in self.legs:
            if attach[0] == "port":
                parts.append(f"{name(attach[1])}.{attach[2]}{direction[0]}")
            else:
                parts.append(f"~{attach[1]}{direction[0]}")
        pending = dict(self.succ)
        while pending:
            progressed = False
            for p in sorted(pending, key=lambda p: (label.get(p[0], "~"), p)):
                if p[0] in label or not label:
                    q = pending.pop(p)
                    parts.append(f"{name(p[0])}.{p[1]}-{name(q[0])}.{q[1]}")
                    progressed = True
                    break
            if not progressed:  # disconnected piece: seed its least crossing
                p = min(pending, key=lambda p: (self.crossings[p[0]], p))
                name(p[0])
        kinds = ";".join(f"{label[c]}={self.crossings[c]}" for c in sorted(label, key=label.get))
        return f"L{self.free_loops}|" + ",".join(parts) + "|" + kinds

    def rotated(self, r: int) -> "Tangle":
        """Re-root the distinguished first leg at position r."""
        b = len(self.legs)
        newlegs = []
        for k in range(b):
            attach, direction = self.legs[(k + r) % b]
            if attach[0] == "arc":
                attach = ("arc", (attach[1] - r) % b)
            newlegs.append((attach, direction))
        return Tangle(self.crossings, self.succ, newlegs, self.free_loops)


def _parse_leg_line(toks: list[str], ln: int) -> tuple[int, tuple, str]:
    if len(toks) != 4:
        raise VlinkError("leg takes index, attachment, direction", ln)
    if not toks[1].isdigit():
        raise VlinkError(f"bad leg index {toks[1]!r}", ln)
    k = int(toks[1])
    if toks[3] not in ("in", "out"):
        raise VlinkError(f"bad leg direction {toks[3]!r}", ln)
    if toks[2].startswith("~"):
        if not toks[2][1:].isdigit():
            raise VlinkError(f"bad arc partner {toks[2]!r}", ln)
        return k, ("arc", int(toks[2][1:])), toks[3]
    m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\.([0-3])$", toks[2])
    if not m:
        raise VlinkError(f"bad leg attachment {toks[2]!r}", ln)
    return k, ("port", m.group(1), int(m.group(2))), toks[3]


def parse_tangle_block(lines: list[tuple[int, str]]) -> Tangle:
    """Parse vlink-style lines extended with `leg` directives."""
    crossings: dict[str, str] = {}
    conns: dict[Port, Port] = {}
    legs: dict[int, tuple[tuple, str]] = {}
    loops = 0
    for ln, stripped in lines:
        toks = stripped.split()
        kw = toks[0]
        if kw == "loops":
            if len(toks) != 2 or not toks[1].isdigit():
                raise VlinkError("loops takes one non-negative integer", ln)
            loops = int(toks[1])
        elif kw == "crossing":
            if len(toks) != 3 or toks[2] not in KINDS:
                raise VlinkError("crossing takes id and kind", ln)
            if toks[1] in crossings:
                raise VlinkError(f"duplicate crossing {toks[1]}", ln)
            crossings[toks[1]] = toks[2]
        elif kw == "connect":
            if len(toks) != 3:
                raise VlinkError("connect takes two ports", ln)
            pm = re.match(r"^(\w+)\.([0-3])$", toks[1])
            qm = re.match(r"^(\w+)\.([0-3])$", toks[2])
            if not pm or not qm:
                raise VlinkError("bad port", ln)
            p = (pm.group(1), int(pm.group(2)))
            q = (qm.group(1), int(qm.group(2)))
            if not is_out_port(p) or not is_in_port(q):
                raise VlinkError("connect goes out-port to in-port", ln)
            if p in conns:
                raise VlinkError(f"port {toks[1]} used twice", ln)
            conns[p] = q
        elif kw == "leg":
            k, attach, direction = _parse_leg_line(toks, ln)
            if k in legs:
                raise VlinkError(f"duplicate leg {k}", ln)
            legs[k] = (attach, direction)
        else:
            raise VlinkError(f"unknown directive {kw!r} in tangle block", ln)
    if sorted(legs) != list(range(len(legs))):
        raise VlinkError("leg indices must cover 0..b-1")
    t = Tangle(crossings, conns, [legs[k] for k in sorted(legs)], loops)
    bad = t.validate()
    if bad:
        raise VlinkError("invalid tangle: " + "; ".join(bad))
    return t


def serialize_tangle(t: Tangle, indent: str = "  ") -> str:
    out = []
    if t.free_loops:
        out.append(f"{indent}loops {t.free_loops}")
    for c in sorted(t.crossings):
        out.append(f"{indent}crossing {c} {t.crossings[c]}")
    for p, q in sorted(t.succ.items()):
        out.append(f"{indent}connect {p[0]}.{p[1]} {q[0]}.{q[1]}")
    for k, (attach, direction) in enumerate(t.legs):
        if attach[0] == "port":
            at = f"{attach[1]}.{attach[2]}"
        else:
            at = f"~{attach[1]}"
        out.append(f"{indent}leg {k} {at} {direction}")
    return "\n".join(out)


# -- lane builder -----------------------------------------------------------
#
# Schema tangles are written as words over horizontal lanes.  Lane 0 is
# the top lane; a word item (letter, i) crosses lanes i and i+1, where
# the letter says what the left-hand upper occupant does: 'O' passes
# over, 'U' passes under, 'V' crosses virtually.  Lane directions 'R'
# (left to right) and 'L' fix leg directions and crossing signs.

_CCW_ENDS = ("Ri", "Li", "Li1", "Ri1")  # counterclockwise around a crossing


def build_lane_tangle(
    dirs: str, word: list[tuple[str, int]], prefix: str = "x"
) -> Tangle:
    n = len(dirs)
    if any(ch not in "RL" for ch in dirs):
        raise ValueError("dirs must be drawn from 'RL'")
    occupants = list(range(n))  # strand k starts in lane k
    # events[lane] = list of (end-kind, crossing) along increasing x
    events: list[list[tuple[str, str]]] = [[] for _ in range(n)]
    ports: dict[tuple[str, str], Port] = {}  # (crossing, end) -> port
    kinds: dict[str, str] = {}
    for t, (letter, i) in enumerate(word):
        if letter not in "OUV":
            raise ValueError(f"bad word letter {letter!r}")
        if not (0 <= i < n - 1):
            raise ValueError(f"lane index {i} out of range")
        c = f"{prefix}{t}"
        pstr, qstr = occupants[i], occupants[i + 1]
        pdir, qdir = dirs[pstr], dirs[qstr]
        p_in = "Li" if pdir == "R" else "Ri1"
        q_in = "Li1" if qdir == "R" else "Ri"
        ins = {p_in, q_in}
        j = next(
            j
            for j in range(4)
            if _CCW_ENDS[j] in ins and _CCW_ENDS[(j + 1) % 4] in ins
        )
        for off in range(4):
            ports[(c, _CCW_ENDS[(j + off) % 4])] = (c, off)
        if letter == "V":
            kinds[c] = "V"
        else:
            over = pstr if letter == "O" else qstr
            zero_two_owner = pstr if _CCW_ENDS[j] in ("Li", "Ri1") else qstr
            kinds[c] = "X+" if over == zero_two_owner else "X-"
        events[i].append(("i", c))
        events[i + 1].append(("i1", c))
        occupants[i], occupants[i + 1] = occupants[i + 1], occupants[i]
    # lane segments -> connections and legs
    conns: dict[Port, Port] = {}
    left_leg: dict[int, tuple[tuple, str]] = {}
    right_leg: dict[int, tuple[tuple, str]] = {}
    strand_at = list(range(n))  # occupant per lane, rolling left to right
    for lane in range(n):
        strand_at[lane] = lane
    occupants = list(range(n))
    segs: list[list[tuple[str, object, object]]] = []
    # walk the word again to know the occupant of every segment
    seg_occ: dict[tuple[int, int], int] = {}  # (lane, seg index) -> strand
    counts = [0] * n
    occ = list(range(n))
    for lane in range(n):
        seg_occ[(lane, 0)] = occ[lane]
    for letter, i in word:
        occ[i], occ[i + 1] = occ[i + 1], occ[i]
        counts[i] += 1
        counts[i + 1] += 1
        seg_occ[(i, counts[i])] = occ[i]
        seg_occ[(i + 1, counts[i + 1])] = occ[i + 1]
    for lane in range(n):
        evs = events[lane]
        bounds: list[tuple] = [("start",)] + [
            ("end", kind, c) for kind, c in evs
        ] + [("stop",)]
        # segment s runs between bounds[s] and bounds[s+1]
        for s in range(len(evs) + 1):
            strand = seg_occ[(lane, s)]
            d = dirs[strand]
            lo, hi = bounds[s], bounds[s + 1]

            def end_port(b, side: str) -> Port | None:
                if b[0] in ("start", "stop"):
                    return None
                kind, c = b[1], b[2]
                # side: the segment touches a crossing's right ends on
                # its left bound and left ends on its right bound
                end = ("R" if side == "lo" else "L") + ("i" if kind == "i" else "i1")
                return ports[(c, end)]

            lo_p = end_port(lo, "lo")
            hi_p = end_port(hi, "hi")
            if lo_p is not None and hi_p is not None:
                if d == "R":
                    conns[lo_p] = hi_p
                else:
                    conns[hi_p] = lo_p
            elif lo_p is None and hi_p is None:
                # bare arc through the whole lane
                left_leg[lane] = (("lane-arc", lane), "in" if d == "R" else "out")
                right_leg[lane] = (("lane-arc", lane), "out" if d == "R" else "in")
            elif lo_p is None:
                left_leg[lane] = (
                    ("port", hi_p[0], hi_p[1]),
                    "in" if d == "R" else "out",
                )
            else:
                right_leg[lane] = (
                    ("port", lo_p[0], lo_p[1]),
                    "out" if d == "R" else "in",
                )
    legs: list[tuple[tuple, str]] = []
    for lane in range(n):
        legs.append(left_leg[lane])
    for lane in reversed(range(n)):
        legs.append(right_leg[lane])
    # resolve lane arcs to partner leg indices: left leg k pairs with the
    # right-side leg of the same lane at index 2n-1-lane
    resolved: list[tuple[tuple, str]] = []
    for k, (attach, direction) in enumerate(legs):
        if attach[0] == "lane-arc":
            lane = attach[1]
            partner = 2 * n - 1 - lane if k < n else lane
            resolved.append((("arc", partner), direction))
        else:
            resolved.append((attach, direction))
    t = Tangle(kinds, conns, resolved)
    bad = t.validate()
    if bad:
        raise AssertionError(f"lane tangle invalid: {bad}")
    return t


def kink_tangle(kind: str, loop: str) -> Tangle:
    """One-crossing curl; `loop` chooses which strand pair closes."""
    if loop == "a":  # loop edge 2->1, open strand through ports 0,3
        conns = {("k", 2): ("k", 1)}
        legs = [(("port", "k", 0), "in"), (("port", "k", 3), "out")]
    elif loop == "b":  # loop edge 3->0, open strand through ports 1,2
        conns = {("k", 3): ("k", 0)}
        legs = [(("port", "k", 1), "in"), (("port", "k", 2), "out")]
    else:
        raise ValueError("loop must be 'a' or 'b'")
    t = Tangle({"k": kind}, conns, legs)
    bad = t.validate()
    if bad:
        raise AssertionError(f"kink tangle invalid: {bad}")
    return t


def strand_tangle() -> Tangle:
    """A single bare strand through the disk."""
    return Tangle({}, {}, [(("arc", 1), "in"), (("arc", 0), "out")])


def crossing_tangle(kind: str) -> Tangle:
    """A single crossing with all four ports on the boundary."""
    legs = [
        (("port", "c", 0), "in"),
        (("port", "c", 1), "in"),
        (("port", "c", 2), "out"),
        (("port", "c", 3), "out"),
    ]
    return Tangle({"c": kind}, {}, legs)
