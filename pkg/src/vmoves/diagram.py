"""Oriented 4-valent diagram model and the `vlink` text format.

A diagram is a combinatorial map: crossings with four ports in fixed
counterclockwise order 0,1,2,3, where ports 0,1 take strands in and
ports 2,3 let them out, and the two strands through a crossing are the
port pairs (0,2) and (1,3).  Crossing kind is one of ``X+`` (the 0->2
strand passes over), ``X-`` (the 1->3 strand passes over) or ``V``
(virtual, no over strand).  Crossing-free closed components cannot be
expressed with ports, so they live in an explicit ``free_loops`` count.

Diagrams are embedded in the sphere: validation requires every connected
component of the underlying 4-valent graph to have Euler characteristic
2 under face tracing.  Relative placement of disconnected components is
not part of the data.
"""

from __future__ import annotations

import re

from .maps import RotMap

Port = tuple[str, int]

KINDS = ("X+", "X-", "V")
CLASSICAL = ("X+", "X-")

_ID_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class VlinkError(ValueError):
    """Syntax or structural error in a vlink document."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Diagram:
    """Immutable-by-convention diagram value.

    ``succ`` maps each out-port to the in-port its strand flows into;
    ``pred`` is the inverse.  Construction does not validate planarity;
    use :func:`validate`.
    """

    __slots__ = ("name", "crossings", "succ", "pred", "free_loops", "_canon")

    def __init__(
        self,
        crossings: dict[str, str],
        connections: dict[Port, Port],
        free_loops: int = 0,
        name: str = "",
    ):
        self.name = name
        self.crossings = dict(crossings)
        self.succ = dict(connections)
        self.pred = {q: p for p, q in self.succ.items()}
        self.free_loops = free_loops
        self._canon: bytes | None = None

    def ports(self) -> list[Port]:
        return [(c, i) for c in self.crossings for i in range(4)]

    def edges(self) -> list[tuple[Port, Port]]:
        """Directed edges (out-port, in-port), sorted."""
        return sorted(self.succ.items())

    def classical_crossings(self) -> list[str]:
        return sorted(c for c, k in self.crossings.items() if k in CLASSICAL)

    def virtual_crossings(self) -> list[str]:
        return sorted(c for c, k in self.crossings.items() if k == "V")

    def copy(self) -> "Diagram":
        return Diagram(self.crossings, self.succ, self.free_loops, self.name)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Diagram):
            return NotImplemented
        return (
            self.crossings == other.crossings
            and self.succ == other.succ
            and self.free_loops == other.free_loops
        )

    def __hash__(self) -> int:
        return hash(
            (
                tuple(sorted(self.crossings.items())),
                tuple(sorted(self.succ.items())),
                self.free_loops,
            )
        )

    def __repr__(self) -> str:
        return (
            f"<Diagram {self.name or '?'}: {len(self.crossings)} crossings, "
            f"{self.free_loops} loops>"
        )


def is_in_port(p: Port) -> bool:
    return p[1] in (0, 1)


def is_out_port(p: Port) -> bool:
    return p[1] in (2, 3)


def _parse_port(tok: str, line: int) -> Port:
    m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\.([0-3])$", tok)
    if not m:
        raise VlinkError(f"bad port {tok!r} (want id.0-3)", line)
    return (m.group(1), int(m.group(2)))


def parse_diagram(text: str) -> Diagram:
    """Parse a vlink document.

    Raises :class:`VlinkError` with a line number on syntax errors,
    dangling or doubly-used ports, and out-to-out / in-to-in connections.
    """
    lines = text.splitlines()
    name = ""
    loops = 0
    crossings: dict[str, str] = {}
    conns: dict[Port, Port] = {}
    used_in: set[Port] = set()
    header_seen = False
    for ln, raw in enumerate(lines, start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        toks = stripped.split()
        if not header_seen:
            if toks[0] != "vlink":
                raise VlinkError("document must start with 'vlink'", ln)
            if len(toks) > 2:
                raise VlinkError("vlink header takes at most one name", ln)
            if len(toks) == 2:
                name = toks[1]
            header_seen = True
            continue
        kw = toks[0]
        if kw == "loops":
            if len(toks) != 2 or not toks[1].isdigit():
                raise VlinkError("loops takes one non-negative integer", ln)
            loops = int(toks[1])
        elif kw == "crossing":
            if len(toks) != 3:
                raise VlinkError("crossing takes id and kind", ln)
            cid, kind = toks[1], toks[2]
            if not _ID_RE.match(cid):
                raise VlinkError(f"bad crossing id {cid!r}", ln)
            if kind not in KINDS:
                raise VlinkError(f"bad kind {kind!r} (want X+, X- or V)", ln)
            if cid in crossings:
                raise VlinkError(f"duplicate crossing {cid!r}", ln)
            crossings[cid] = kind
        elif kw == "connect":
            if len(toks) != 3:
                raise VlinkError("connect takes two ports", ln)
            a = _parse_port(toks[1], ln)
            b = _parse_port(toks[2], ln)
            for p in (a, b):
                if p[0] not in crossings:
                    raise VlinkError(f"unknown crossing {p[0]!r}", ln)
            if not is_out_port(a):
                raise VlinkError(f"{toks[1]} is not an out-port (2 or 3)", ln)
            if not is_in_port(b):
                raise VlinkError(f"{toks[2]} is not an in-port (0 or 1)", ln)
            if a in conns:
                raise VlinkError(f"port {toks[1]} used twice", ln)
            if b in used_in:
                raise VlinkError(f"port {toks[2]} used twice", ln)
            conns[a] = b
            used_in.add(b)
        else:
            raise VlinkError(f"unknown directive {kw!r}", ln)
    if not header_seen:
        raise VlinkError("empty document", 1)
    for c in crossings:
        for i in (2, 3):
            if (c, i) not in conns:
                raise VlinkError(f"dangling out-port {c}.{i}")
        for i in (0, 1):
            if (c, i) not in used_in:
                raise VlinkError(f"dangling in-port {c}.{i}")
    return Diagram(crossings, conns, loops, name)


def serialize_diagram(d: Diagram) -> str:
    """Deterministic vlink text: sorted crossings, then sorted connections."""
    out = ["vlink" + (f" {d.name}" if d.name else "")]
    if d.free_loops:
        out.append(f"loops {d.free_loops}")
    for c in sorted(d.crossings):
        out.append(f"crossing {c} {d.crossings[c]}")
    for (a, i), (b, j) in d.edges():
        out.append(f"connect {a}.{i} {b}.{j}")
    return "\n".join(out) + "\n"


def _rot_map(d: Diagram) -> RotMap:
    m = RotMap()
    for c in d.crossings:
        m.add_vertex(c, [(c, i) for i in range(4)])
    for p, q in d.succ.items():
        m.add_edge(p, q)
    return m


def faces(d: Diagram) -> list[list[Port]]:
    """Face walks as cyclic port-dart lists.

    A zero-crossing free loop contributes no darts; by convention each
    free loop adds two faces to the count used in reports.
    """
    if not d.crossings:
        return []
    return _rot_map(d).faces()


def face_count(d: Diagram) -> int:
    return len(faces(d)) + 2 * d.free_loops


def validate(d: Diagram) -> list[str]:
    """All invariant violations, as human-readable strings; empty = valid."""
    bad: list[str] = []
    if d.free_loops < 0:
        bad.append("free_loops is negative")
    for c, k in d.crossings.items():
        if k not in KINDS:
            bad.append(f"crossing {c} has bad kind {k!r}")
    seen_in: set[Port] = set()
    for p, q in d.succ.items():
        if p[0] not in d.crossings or q[0] not in d.crossings:
            bad.append(f"connection {p}->{q} references unknown crossing")
            continue
        if not is_out_port(p):
            bad.append(f"connection starts at in-port {p[0]}.{p[1]}")
        if not is_in_port(q):
            bad.append(f"connection ends at out-port {q[0]}.{q[1]}")
        if q in seen_in:
            bad.append(f"in-port {q[0]}.{q[1]} used twice")
        seen_in.add(q)
    for c in d.crossings:
        for i in (2, 3):
            if (c, i) not in d.succ:
                bad.append(f"dangling out-port {c}.{i}")
        for i in (0, 1):
            if (c, i) not in seen_in:
                bad.append(f"dangling in-port {c}.{i}")
    if bad:
        return bad
    if d.crossings:
        for comp, chi in _rot_map(d).genus_by_component():
            if chi != 2:
                names = ",".join(sorted(comp))
                bad.append(
                    f"component {{{names}}} has Euler characteristic {chi}, not 2"
                )
    return bad


# Strand passages: (cid, 0) is the 0->2 passage, (cid, 1) the 1->3 one.

Passage = tuple[str, int]


def _passage_exit(p: Passage) -> Port:
    return (p[0], 2 if p[1] == 0 else 3)


def _port_passage(q: Port) -> Passage:
    return (q[0], 0 if q[1] in (0, 2) else 1)


def components(d: Diagram) -> tuple[int, dict[Passage, int]]:
    """Closed-strand count (plus free loops) and passage assignment."""
    assign: dict[Passage, int] = {}
    count = 0
    for c in sorted(d.crossings):
        for s in (0, 1):
            if (c, s) in assign:
                continue
            cur = (c, s)
            while cur not in assign:
                assign[cur] = count
                cur = _port_passage(d.succ[_passage_exit(cur)])
            count += 1
    return count + d.free_loops, assign


def component_count(d: Diagram) -> int:
    return components(d)[0]


def over_passage(kind: str) -> int | None:
    """Which passage (0 or 1) is the over strand, None for virtual."""
    if kind == "X+":
        return 0
    if kind == "X-":
        return 1
    return None


def gauss_code(d: Diagram) -> list[list[tuple[str, str, int]]]:
    """Per-component classical passage codes: (crossing, 'O'|'U', sign).

    Virtual crossings are passed through silently.  Components that meet
    no classical crossing yield empty codes; free loops are not listed.
    Traversal starts from the least unvisited passage, so the output is
    deterministic for a given labeling.
    """
    visited: set[Passage] = set()
    codes: list[list[tuple[str, str, int]]] = []
    for c in sorted(d.crossings):
        for s in (0, 1):
            if (c, s) in visited:
                continue
            code: list[tuple[str, str, int]] = []
            cur = (c, s)
            while cur not in visited:
                visited.add(cur)
                kind = d.crossings[cur[0]]
                if kind in CLASSICAL:
                    over = over_passage(kind)
                    sym = "O" if cur[1] == over else "U"
                    code.append((cur[0], sym, 1 if kind == "X+" else -1))
                cur = _port_passage(d.succ[_passage_exit(cur)])
            codes.append(code)
    return codes


def _bfs_relabel(d: Diagram, start: str) -> dict[str, str]:
    """Deterministic breadth-first relabeling of start's component."""
    label: dict[str, str] = {start: "a0"}
    queue = [start]
    n = 1
    while queue:
        c = queue.pop(0)
        for i in range(4):
            p = (c, i)
            q = d.succ.get(p) or d.pred.get(p)
            if q is None:
                continue
            w = q[0]
            if w not in label:
                label[w] = f"a{n}"
                n += 1
                queue.append(w)
    return label


def _component_code(d: Diagram, comp: list[str]) -> str:
    best: str | None = None
    for start in comp:
        label = _bfs_relabel(d, start)
        rows = sorted(f"{label[c]}={d.crossings[c]}" for c in comp)
        conns = sorted(
            f"{label[p[0]]}.{p[1]}-{label[q[0]]}.{q[1]}"
            for p, q in d.succ.items()
            if p[0] in label
        )
        code = ";".join(rows) + "|" + ";".join(conns)
        if best is None or code < best:
            best = code
    assert best is not None
    return best


def _graph_components(d: Diagram) -> list[list[str]]:
    comps = []
    left = set(d.crossings)
    while left:
        c0 = min(left)
        comp = {c0}
        stack = [c0]
        while stack:
            c = stack.pop()
            for i in range(4):
                q = d.succ.get((c, i)) or d.pred.get((c, i))
                if q and q[0] not in comp:
                    comp.add(q[0])
                    stack.append(q[0])
        left -= comp
        comps.append(sorted(comp))
    return comps


def _reverse_strands(d: Diagram, comps_to_flip: set[int]) -> Diagram:
    """Reverse the orientation of the given closed strands.

    Port labels are rotated per crossing so the fixed port conventions
    still hold; reversing exactly one strand of a classical crossing
    flips its sign.
    """
    _, assign = components(d)
    relab: dict[Port, Port] = {}
    kinds: dict[str, str] = {}
    for c, kind in d.crossings.items():
        r0 = assign[(c, 0)] in comps_to_flip
        r1 = assign[(c, 1)] in comps_to_flip
        if not r0 and not r1:
            shift = 0
        elif r0 and r1:
            shift = 2
        elif r0:
            shift = 1  # old port 1 becomes new port 0
        else:
            shift = 3  # old port 3 becomes new port 0
        for i in range(4):
            relab[(c, i)] = (c, (i - shift) % 4)
        if kind == "V" or (r0 == r1):
            kinds[c] = kind
        else:
            kinds[c] = "X+" if kind == "X-" else "X-"
    conns: dict[Port, Port] = {}
    for p, q in d.succ.items():
        a, b = relab[p], relab[q]
        if is_in_port(a):
            a, b = b, a
        conns[a] = b
    return Diagram(kinds, conns, d.free_loops, d.name)


def canonical_form(d: Diagram, oriented: bool = True) -> bytes:
    """Canonical code: equal iff diagrams are isomorphic labeled maps.

    The unoriented mode quotients additionally by reversal of any subset
    of closed strands (feasible at desk scale; component counts stay
    single digits).
    """
    if oriented and d._canon is not None:
        return d._canon
    variants = [d]
    if not oriented:
        n = components(d)[0] - d.free_loops
        variants = [
            _reverse_strands(d, {i for i in range(n) if (mask >> i) & 1})
            for mask in range(1 << n)
        ]
    best: str | None = None
    for v in variants:
        parts = sorted(_component_code(v, comp) for comp in _graph_components(v))
        code = f"L{v.free_loops}!" + "!".join(parts)
        if best is None or code < best:
            best = code
    assert best is not None
    out = best.encode()
    if oriented:
        d._canon = out
    return out
