"""Move schemas, the `vrule` format, the builtin rule table and move sets.

Every move ships as data: a named pair of boundary-compatible tangles.
Variant files are explicit (kink side, crossing sign, strand order,
orientation pattern) rather than closed under symmetry at match time;
the `family` field groups variants for move-set membership, so a trace
step can name the exact variant used while checkers reason per family.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .diagram import VlinkError
from .tangle import (
    Tangle,
    build_lane_tangle,
    crossing_tangle,
    kink_tangle,
    parse_tangle_block,
    serialize_tangle,
    strand_tangle,
)


@dataclass(frozen=True)
class MoveSchema:
    name: str
    family: str
    lhs: Tangle
    rhs: Tangle
    oriented: bool = True
    macro: bool = False  # not a Reidemeister-type equivalence move

    @property
    def arity(self) -> int:
        return self.lhs.arity

    def source(self, direction: str) -> Tangle:
        return self.lhs if direction == "f" else self.rhs

    def target(self, direction: str) -> Tangle:
        return self.rhs if direction == "f" else self.lhs

    def check(self) -> list[str]:
        bad = self.lhs.validate() + self.rhs.validate()
        if self.lhs.arity != self.rhs.arity:
            bad.append(
                f"boundary mismatch: lhs has {self.lhs.arity} legs, "
                f"rhs has {self.rhs.arity}"
            )
        elif self.lhs.leg_dirs() != self.rhs.leg_dirs():
            bad.append("boundary mismatch: leg directions differ")
        return bad


def parse_rule(text: str) -> MoveSchema:
    """Parse a vrule document; raises VlinkError on malformed input."""
    name = family = None
    arity = None
    oriented = True
    macro = False
    blocks: dict[str, list[tuple[int, str]]] = {}
    current: str | None = None
    header_seen = False
    for ln, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        toks = stripped.split()
        if not header_seen:
            if toks[0] != "vrule" or len(toks) != 2:
                raise VlinkError("document must start with 'vrule <name>'", ln)
            name = toks[1]
            header_seen = True
            continue
        if toks[0] == "family" and len(toks) == 2:
            family = toks[1]
        elif toks[0] == "arity" and len(toks) == 2 and toks[1].isdigit():
            arity = int(toks[1])
        elif toks[0] == "oriented" and len(toks) == 2 and toks[1] in ("yes", "no"):
            oriented = toks[1] == "yes"
        elif toks[0] == "macro" and len(toks) == 2 and toks[1] in ("yes", "no"):
            macro = toks[1] == "yes"
        elif stripped in ("lhs:", "rhs:"):
            current = stripped[:-1]
            blocks[current] = []
        elif current is not None:
            blocks[current].append((ln, stripped))
        else:
            raise VlinkError(f"unexpected line {stripped!r}", ln)
    if name is None:
        raise VlinkError("missing vrule header")
    if "lhs" not in blocks or "rhs" not in blocks:
        raise VlinkError("rule needs lhs: and rhs: blocks")
    lhs = parse_tangle_block(blocks["lhs"])
    rhs = parse_tangle_block(blocks["rhs"])
    schema = MoveSchema(name, family or name, lhs, rhs, oriented, macro)
    bad = schema.check()
    if bad:
        raise VlinkError(f"invalid rule {name}: " + "; ".join(bad))
    if arity is not None and arity != schema.arity:
        raise VlinkError(f"declared arity {arity} != actual {schema.arity}")
    return schema


def serialize_rule(s: MoveSchema) -> str:
    lines = [
        f"vrule {s.name}",
        f"family {s.family}",
        f"arity {s.arity}",
        f"oriented {'yes' if s.oriented else 'no'}",
        f"macro {'yes' if s.macro else 'no'}",
        "lhs:",
        serialize_tangle(s.lhs),
        "rhs:",
        serialize_tangle(s.rhs),
    ]
    return "\n".join(lines) + "\n"


def hn_word(n: int) -> list[tuple[str, int]]:
    """Pairwise virtual-then-classical blocks; odd n leaves the last
    strand passing straight through."""
    word: list[tuple[str, int]] = []
    for i in range(0, n - 1, 2):
        word.append(("V", i))
        word.append(("O", i))
    return word


_HN_CACHE: dict[int, MoveSchema] = {}


def hn_schema(n: int) -> MoveSchema:
    """The n-strand unknotting move on alternating parallel strands."""
    if n < 2:
        raise ValueError(f"H(n) needs n >= 2, got {n}")
    if n not in _HN_CACHE:
        dirs = ("RL" * n)[:n]
        schema = MoveSchema(
            name=f"H{n}",
            family=f"H{n}",
            lhs=build_lane_tangle(dirs, []),
            rhs=build_lane_tangle(dirs, hn_word(n)),
            oriented=True,
            macro=True,
        )
        assert not schema.check()
        _HN_CACHE[n] = schema
    return _HN_CACHE[n]


def _strand_decomposition(t: Tangle) -> dict[int, list[tuple[str, int]]]:
    """in-leg -> list of (crossing, passage) along the strand."""
    out: dict[int, list[tuple[str, int]]] = {}
    for k, (attach, direction) in enumerate(t.legs):
        if direction != "in" or attach[0] != "port":
            continue
        path: list[tuple[str, int]] = []
        port = (attach[1], attach[2])
        while True:
            c, i = port
            passage = 0 if i in (0, 2) else 1
            path.append((c, passage))
            exit_port = (c, 2 if passage == 0 else 3)
            nxt = t.succ.get(exit_port)
            if nxt is None:
                break
            port = nxt
        out[k] = path
    return out


def _over_strand(t: Tangle, c: str, strands: dict[int, list[tuple[str, int]]]):
    kind = t.crossings[c]
    if kind == "V":
        return None
    over = 0 if kind == "X+" else 1
    for leg, path in strands.items():
        if (c, over) in path:
            return leg
    return None


def _cyclic_leg_orders(ports: list[Port]):
    from itertools import permutations

    first = min(ports)
    rest = [p for p in ports if p != first]
    for perm in permutations(rest):
        yield [first, *perm]


def _enumerate_poke_family() -> tuple[list[MoveSchema], list[MoveSchema]]:
    """All 2-crossing bigons in a disk: R2 pokes and VR2 virtual pokes.

    A lane drawing only realizes some of the port wirings a poke can
    take inside a diagram, so the family is enumerated exhaustively:
    choose the two edges joining the crossings, choose the boundary
    order of the remaining ports, keep disk-embeddable results where one
    strand passes over at both crossings (no condition when virtual).
    """
    r2: list[MoveSchema] = []
    vr2: list[MoveSchema] = []
    seen: set[str] = set()
    kind_pairs = [("X+", "X-"), ("X-", "X+"), ("V", "V")]
    outs = [("a", 2), ("a", 3), ("b", 2), ("b", 3)]
    ins = [("a", 0), ("a", 1), ("b", 0), ("b", 1)]
    for ka, kb in kind_pairs:
        kinds = {"a": ka, "b": kb}
        for p1 in outs:
            for q1 in ins:
                if p1[0] == q1[0]:
                    continue
                for p2 in outs:
                    if p2 <= p1:
                        continue
                    for q2 in ins:
                        if q2 == q1 or p2[0] == q2[0]:
                            continue
                        conns = {p1: q1, p2: q2}
                        free = [
                            (c, i)
                            for c in ("a", "b")
                            for i in range(4)
                            if (c, i) not in conns and (c, i) not in conns.values()
                        ]
                        for order in _cyclic_leg_orders(free):
                            legs = [
                                (("port", c, i), "in" if i in (0, 1) else "out")
                                for c, i in order
                            ]
                            t = Tangle(kinds, conns, legs)
                            if t.validate():
                                continue
                            strands = _strand_decomposition(t)
                            if len(strands) != 2:
                                continue
                            paths = list(strands.values())
                            if any(
                                sorted(c for c, _ in path) != ["a", "b"]
                                for path in paths
                            ):
                                continue
                            if ka != "V" and _over_strand(t, "a", strands) != _over_strand(
                                t, "b", strands
                            ):
                                continue
                            # lhs: the same two strands, uncrossed
                            lhs_legs: list = [None] * len(t.legs)
                            for k in strands:
                                # strand from in-leg k exits where its path ends
                                last_c, last_pass = strands[k][-1]
                                exit_port = (last_c, 2 if last_pass == 0 else 3)
                                m = next(
                                    j
                                    for j, (at, dr) in enumerate(t.legs)
                                    if at == ("port", exit_port[0], exit_port[1])
                                )
                                lhs_legs[k] = (("arc", m), "in")
                                lhs_legs[m] = (("arc", k), "out")
                            lhs = Tangle({}, {}, lhs_legs)
                            if lhs.validate():
                                continue
                            family = "VR2" if ka == "V" else "R2"
                            schema = MoveSchema("tmp", family, lhs, t, True, False)
                            keys = [
                                schema.lhs.rotated(r).canonical()
                                + "##"
                                + schema.rhs.rotated(r).canonical()
                                for r in range(schema.arity)
                            ]
                            if any(key in seen for key in keys):
                                continue
                            seen.update(keys)
                            (vr2 if ka == "V" else r2).append(schema)
    r2 = [
        MoveSchema(f"R2.{i}", "R2", s.lhs, s.rhs, True, False)
        for i, s in enumerate(r2)
    ]
    vr2 = [
        MoveSchema(f"VR2.{i}", "VR2", s.lhs, s.rhs, True, False)
        for i, s in enumerate(vr2)
    ]
    return r2, vr2


def _slide_lhs_tangles():
    """All valid slide triangles: slider S crosses A then B with one
    consistent relation while A and B cross at a center z."""
    from itertools import product

    for sx, sy, az, ds, da, db, r, kz in product(
        (0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1), "OUV", ("X+", "X-", "V")
    ):
        # kind of (S,A) crossing x: S on passage sx, over iff r == 'O'
        if r == "V":
            kx = ky = "V"
        else:
            kx = "X+" if (r == "O") == (sx == 0) else "X-"
            ky = "X+" if (r == "O") == (sy == 0) else "X-"
        yield sx, sy, az, ds, da, db, r, kz, kx, ky


def _build_slide(sx, sy, az, ds, da, db, kz, kx, ky, flipped: bool):
    """Wire one slide side; `flipped` swaps A's and B's crossing order
    with the center, which is exactly the move."""
    kinds = {"x": kx, "y": ky, "z": kz}
    conns: dict[Port, Port] = {}

    def seg(c1: str, p1: int, c2: str, p2: int, first_is_c1: bool):
        # strand runs c1 then c2 when first_is_c1
        if first_is_c1:
            conns[(c1, 2 if p1 == 0 else 3)] = (c2, 0 if p2 == 0 else 1)
        else:
            conns[(c2, 2 if p2 == 0 else 3)] = (c1, 0 if p1 == 0 else 1)

    # Sliding S across the center reverses every passage order: S meets
    # the other strand first, and A, B meet the center first.
    seg("x", sx, "y", sy, (ds == 0) != flipped)
    seg("x", 1 - sx, "z", az, (da == 0) != flipped)
    seg("y", 1 - sy, "z", 1 - az, (db == 0) != flipped)
    free = [
        (c, i)
        for c in ("x", "y", "z")
        for i in range(4)
        if (c, i) not in conns and (c, i) not in conns.values()
    ]
    return kinds, conns, free


def _strand_ends(kinds, conns, free):
    """Map each free in-port to the free out-port of its strand."""
    ends = {}
    for c, i in free:
        if i not in (0, 1):
            continue
        port = (c, i)
        while True:
            cc, ii = port
            exit_port = (cc, 2 if ii in (0, 2) else 3)
            nxt = conns.get(exit_port)
            if nxt is None:
                ends[(c, i)] = exit_port
                break
            port = nxt
    return ends


def _enumerate_slide_family() -> list[MoveSchema]:
    fam_of = {
        ("O", "V"): "FO",
        ("U", "V"): "FU",
        ("V", "V"): "VR3",
        ("V", "X+"): "VR4",
        ("V", "X-"): "VR4",
    }
    counters: dict[str, int] = {}
    seen: set[str] = set()
    out: list[MoveSchema] = []
    for sx, sy, az, ds, da, db, r, kz, kx, ky in _slide_lhs_tangles():
        family = fam_of.get((r, kz), "R3")
        kinds, lconns, lfree = _build_slide(sx, sy, az, ds, da, db, kz, kx, ky, False)
        _, rconns, rfree = _build_slide(sx, sy, az, ds, da, db, kz, kx, ky, True)
        lends = _strand_ends(kinds, lconns, lfree)
        rends = _strand_ends(kinds, rconns, rfree)
        if len(lends) != 3 or len(rends) != 3:
            continue
        # boundary correspondence: lhs strand from S-in to S-out matches
        # the rhs strand with the same crossing multiset
        for order in _cyclic_leg_orders(lfree):
            legs = [
                (("port", c, i), "in" if i in (0, 1) else "out") for c, i in order
            ]
            lhs = Tangle(kinds, lconns, legs)
            if lhs.validate():
                continue
            # rhs keeps each boundary slot on the same strand end
            rin_of_lin: dict[Port, Port] = {}
            for lin in lends:
                cands = [
                    rin
                    for rin in rends
                    if sorted(_passage_multiset(lconns, lin))
                    == sorted(_passage_multiset(rconns, rin))
                ]
                if len(cands) != 1:
                    rin_of_lin = {}
                    break
                rin_of_lin[lin] = cands[0]
            if not rin_of_lin:
                continue
            rlegs: list[tuple[tuple, str]] = []
            ok = True
            for c, i in order:
                if i in (0, 1):
                    rp = rin_of_lin[(c, i)]
                else:
                    lin = next(k for k, v in lends.items() if v == (c, i))
                    rp = rends[rin_of_lin[lin]]
                rlegs.append((("port", rp[0], rp[1]), "in" if rp[1] in (0, 1) else "out"))
            rhs = Tangle(kinds, rconns, rlegs)
            if rhs.validate():
                continue
            schema = MoveSchema("tmp", family, lhs, rhs, True, family in ("FO", "FU"))
            keys = [
                schema.lhs.rotated(rr).canonical()
                + "##"
                + schema.rhs.rotated(rr).canonical()
                for rr in range(schema.arity)
            ]
            if any(key in seen for key in keys):
                continue
            seen.update(keys)
            idx = counters.get(family, 0)
            counters[family] = idx + 1
            out.append(
                MoveSchema(
                    f"{family}.{idx}", family, lhs, rhs, True, family in ("FO", "FU")
                )
            )
    return out


def _passage_multiset(conns: dict[Port, Port], start: Port) -> tuple:
    path = []
    port = start
    while True:
        c, i = port
        path.append(c)
        exit_port = (c, 2 if i in (0, 2) else 3)
        nxt = conns.get(exit_port)
        if nxt is None:
            return tuple(path)
        port = nxt


def _pair_key(s: MoveSchema) -> str:
    return s.lhs.canonical() + "##" + s.rhs.canonical()


def _dedup_rotations(schemas: list[MoveSchema]) -> list[MoveSchema]:
    """Drop variants that are leg rotations of an earlier one."""
    seen: set[str] = set()
    kept = []
    for s in schemas:
        keys = []
        for r in range(s.arity):
            keys.append(
                s.lhs.rotated(r).canonical() + "##" + s.rhs.rotated(r).canonical()
            )
        if any(k in seen for k in keys):
            continue
        seen.update(keys)
        kept.append(s)
    return kept


def _generate_builtin() -> list[MoveSchema]:
    out: list[MoveSchema] = []
    strand = strand_tangle()
    for sign, tag in (("X+", "p"), ("X-", "m")):
        for loop in "ab":
            out.append(
                MoveSchema(f"R1.{tag}{loop}", "R1", strand, kink_tangle(sign, loop))
            )
    for loop in "ab":
        out.append(MoveSchema(f"VR1.{loop}", "VR1", strand, kink_tangle("V", loop)))
    r2, vr2 = _enumerate_poke_family()
    out.extend(r2)
    out.extend(vr2)
    out.extend(_enumerate_slide_family())
    out.append(
        MoveSchema("VIRT.p", "VIRT", crossing_tangle("X+"), crossing_tangle("V"), True, True)
    )
    out.append(
        MoveSchema("VIRT.m", "VIRT", crossing_tangle("X-"), crossing_tangle("V"), True, True)
    )
    # CF: a classical crossing passes a virtual one on two strands and
    # trades over for under on the way through.
    out.append(
        MoveSchema(
            "CF",
            "CF",
            build_lane_tangle("RL", [("O", 0), ("V", 0)]),
            build_lane_tangle("RL", [("V", 0), ("O", 0)]),
            True,
            True,
        )
    )
    out.append(hn_schema(2))
    out.append(hn_schema(3))
    return out


_BUILTIN: dict[str, MoveSchema] | None = None


def builtin_rules(from_files: bool = True) -> dict[str, MoveSchema]:
    """Name -> schema table for all shipped rule files."""
    global _BUILTIN
    if _BUILTIN is None:
        table: dict[str, MoveSchema] = {}
        loaded = False
        if from_files:
            try:
                root = resources.files("vmoves").joinpath("rules")
                for entry in sorted(root.iterdir(), key=lambda e: e.name):
                    if entry.name.endswith(".vrule"):
                        s = parse_rule(entry.read_text())
                        table[s.name] = s
                        loaded = True
            except (FileNotFoundError, ModuleNotFoundError):
                loaded = False
        if not loaded:
            table = {s.name: s for s in _generate_builtin()}
        _BUILTIN = table
    return _BUILTIN


def lookup(name: str) -> MoveSchema:
    table = builtin_rules()
    if name in table:
        return table[name]
    if name.startswith("H") and name[1:].isdigit():
        return hn_schema(int(name[1:]))
    raise KeyError(f"unknown schema {name!r}")


def schemas_in_family(family: str) -> list[MoveSchema]:
    return [s for s in builtin_rules().values() if s.family == family]


MOVE_SETS: dict[str, frozenset[str]] = {
    "CLASSICAL": frozenset({"R1", "R2", "R3"}),
    "VIRTUAL": frozenset({"R1", "R2", "R3", "VR1", "VR2", "VR3", "VR4"}),
    "WELDED": frozenset({"R1", "R2", "R3", "VR1", "VR2", "VR3", "VR4", "FO"}),
    "FUSED": frozenset({"R1", "R2", "R3", "VR1", "VR2", "VR3", "VR4", "FO", "FU"}),
}


def move_set_families(name: str, extras: tuple[str, ...] = ()) -> frozenset[str]:
    if name not in MOVE_SETS:
        raise KeyError(f"unknown move set {name!r}")
    return MOVE_SETS[name] | set(extras)
