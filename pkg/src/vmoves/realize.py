"""Trace-emitting constructions: virtualization, lifting, unknotting,
forbidden-move and CF realizations, and the descending switch set.

Every construction is verified while it is built: each block knows the
exact diagram it must produce (the direct macro application) and the
emitted steps are accepted only when they reach it.  Candidate sites
are tried in sorted order, so emitted traces are deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .diagram import Diagram, Port, canonical_form, component_count, validate
from .matching import Site, apply_move, find_sites, make_site, validate_site
from .rules import MoveSchema, hn_schema, lookup, schemas_in_family
from .trace import Step, Trace, step_for


class RealizationError(RuntimeError):
    pass


class SearchCapExceeded(RealizationError):
    pass


@dataclass
class Realization:
    description: str
    trace: Trace
    final: Diagram

    @property
    def initial(self) -> Diagram:
        return self.trace.initial

    def step_families(self) -> list[str]:
        return [lookup(s.schema).family for s in self.trace.steps]


class Builder:
    """Accumulates verified steps against a live diagram."""

    def __init__(self, d: Diagram, moveset: str = "VIRTUAL", extras: tuple[str, ...] = ()):
        self.initial = d
        self.d = d
        self.moveset = moveset
        self.extras = extras
        self.steps: list[Step] = []

    def apply(self, schema: MoveSchema, site: Site) -> None:
        before = self.d
        after, _ = apply_move(before, schema, site)
        self.steps.append(step_for(len(self.steps), schema, site, before, after))
        self.d = after

    def realization(self, description: str) -> Realization:
        trace = Trace(self.moveset, self.extras, self.initial, list(self.steps))
        return Realization(description, trace, self.d)


def _family(name: str) -> list[MoveSchema]:
    return sorted(schemas_in_family(name), key=lambda s: s.name)


def virtualize_direct(d: Diagram, c: str) -> Diagram:
    """Replace one classical crossing by a virtual one (VIRT macro)."""
    kind = d.crossings.get(c)
    if kind is None:
        raise RealizationError(f"no crossing {c}")
    if kind == "V":
        raise RealizationError(f"crossing {c} is already virtual")
    schema = lookup("VIRT.p" if kind == "X+" else "VIRT.m")
    out, _ = apply_move(d, schema, make_site(schema, "f", {"c": c}, {}))
    return out


# -- small search helpers ----------------------------------------------------


def _sites_with(d, schema, direction, must_include=frozenset(), arc_fixed=None):
    """Sites whose crossing image covers `must_include`; deterministic."""
    out = []
    for site in find_sites(d, schema, direction):
        if not must_include <= set(site.crossing_map().values()):
            continue
        if arc_fixed is not None:
            am = site.arc_map()
            if any(am.get(k) != v for k, v in arc_fixed.items()):
                continue
        out.append(site)
    return out


def _edges_at(d: Diagram, c: str) -> list[Port]:
    return sorted(t for t in d.succ if t[0] == c or d.succ[t][0] == c)


def _new_crossings(before: Diagram, after: Diagram) -> list[str]:
    return sorted(set(after.crossings) - set(before.crossings))


def _kink_cleanup(
    d: Diagram,
    target: bytes,
    restrict: set[str] | None = None,
    depth: int = 5,
) -> list[tuple[MoveSchema, Site]] | None:
    """Shortest sequence of curl removals reaching the target form."""
    kinks = _family("VR1") + _family("R1")
    seen = {canonical_form(d)}
    queue: deque[tuple[Diagram, list[tuple[MoveSchema, Site]]]] = deque([(d, [])])
    while queue:
        cur, path = queue.popleft()
        if canonical_form(cur) == target:
            return path
        if len(path) >= depth:
            continue
        for schema in kinks:
            for site in find_sites(cur, schema, "b"):
                if restrict is not None and not (
                    set(site.crossing_map().values()) <= restrict
                ):
                    continue
                nxt, _ = apply_move(cur, schema, site)
                key = canonical_form(nxt)
                if key in seen:
                    continue
                seen.add(key)
                queue.append((nxt, path + [(schema, site)]))
    return None


# -- Lemma 1 / Lemma 2 blocks ------------------------------------------------
#
# Virtualizing one classical crossing c:
#   X+ : insert the 2-strand H block on the edges at c's (1,2) corner,
#        then cancel the block's classical crossing against c with an R2.
#   X- : insert a virtual poke on the edges at c's (3,0) corner, then
#        remove {poke crossing, c} as an H(2) pattern backwards.
# The 3-strand variant feeds the H(3) move a third parallel lane made
# from a virtual curl.  Degenerate corners (the two corner edges
# coincide) get a virtual kink first to split the edge.


def _corner(d: Diagram, c: str) -> tuple[Port, Port]:
    if d.crossings[c] == "X+":
        return d.pred[(c, 1)], (c, 2)
    return (c, 3), d.pred[(c, 0)]


def _try_h_insert_cancel(b: Builder, c: str, hs: MoveSchema, target: bytes, extra_arcs):
    """X+ core: H-move forward at c's corner, then R2 cancel against c."""
    d = b.d
    e_in, e_out = _corner(d, c)
    if e_in == e_out:
        return False
    lanes = {0: e_in, extra_arcs["out_key"]: e_out}
    for rest in extra_arcs["fill"](d, lanes):
        amap = dict(lanes)
        amap.update(rest)
        if len(set(amap.values())) != len(amap):
            continue
        site = make_site(hs, "f", {}, amap)
        if validate_site(d, hs, site) is not None:
            continue
        mid, _ = apply_move(d, hs, site)
        for r2 in _family("R2"):
            for rsite in _sites_with(mid, r2, "b", {c}):
                out, _ = apply_move(mid, r2, rsite)
                if canonical_form(out) == target:
                    b.apply(hs, site)
                    b.apply(r2, rsite)
                    return True
    return False


def _try_poke_h_remove(b: Builder, c: str, hs: MoveSchema, target: bytes, extra_arcs):
    """X- core: virtual poke at c's corner, then remove as H pattern."""
    d = b.d
    e_out, e_in = _corner(d, c)
    if e_in == e_out:
        return False
    for vr2 in _family("VR2"):
        site = make_site(vr2, "f", {}, {0: e_out, 2: e_in})
        if validate_site(d, vr2, site) is not None:
            continue
        mid, _ = apply_move(d, vr2, site)
        for prep, cur in extra_arcs["dress"](mid):
            for hsite in _sites_with(cur, hs, "b", {c}):
                out, _ = apply_move(cur, hs, hsite)
                if canonical_form(out) == target:
                    b.apply(vr2, site)
                    for schema, psite in prep:
                        b.apply(schema, psite)
                    b.apply(hs, hsite)
                    return True
    return False


def _h2_extras():
    return {
        "out_key": 2,
        "fill": lambda d, lanes: [{}],
        "dress": lambda d: [([], d)],
    }


def _h3_extras():
    """The 3-strand move needs one more parallel lane: a virtual curl."""

    def fill(d, lanes):
        out = [{}]  # try without a curl lane first (never valid for H3)
        del out[0]
        for vr1 in _family("VR1"):
            for ks in find_sites(d, vr1, "f"):
                tail = ks.arc_map()[0]
                if tail not in lanes.values():
                    continue
                yield {"__prep__": (vr1, ks)}
        return

    return {"out_key": 4, "fill": fill, "dress": None}


def _virtualize_block(b: Builder, c: str, order: int) -> None:
    """Emit steps replacing classical crossing c by a virtual one, using
    only the 2-strand (order=2) or 3-strand (order=3) move."""
    kind = b.d.crossings[c]
    target = canonical_form(virtualize_direct(b.d, c))
    if order == 2:
        ok = (
            _l1_xplus(b, c, target)
            if kind == "X+"
            else _l1_xminus(b, c, target)
        )
    else:
        ok = (
            _l2_xplus(b, c, target)
            if kind == "X+"
            else _l2_xminus(b, c, target)
        )
    if ok:
        return
    # degenerate corner: split an edge at c with a virtual kink, redo,
    # then drop the kink again
    for vr1 in _family("VR1"):
        for ks in find_sites(b.d, vr1, "f"):
            tail = ks.arc_map()[0]
            if tail[0] != c and b.d.succ[tail][0] != c:
                continue
            probe = Builder(b.d)
            probe.apply(vr1, ks)
            kink = _new_crossings(b.d, probe.d)[0]
            inner_target = canonical_form(virtualize_direct(probe.d, c))
            if probe.d.crossings[c] == "X+":
                ok = (
                    _l1_xplus(probe, c, inner_target)
                    if order == 2
                    else _l2_xplus(probe, c, inner_target)
                )
            else:
                ok = (
                    _l1_xminus(probe, c, inner_target)
                    if order == 2
                    else _l2_xminus(probe, c, inner_target)
                )
            if not ok:
                continue
            for uk in _family("VR1"):
                for us in _sites_with(probe.d, uk, "b", {kink}):
                    out, _ = apply_move(probe.d, uk, us)
                    if canonical_form(out) == target:
                        for st in probe.steps:
                            b.apply(lookup(st.schema), st.site(lookup(st.schema)))
                        b.apply(uk, us)
                        return
    raise RealizationError(
        f"could not realize virtualization of {c} with the {order}-strand move"
    )


def _l1_xplus(b: Builder, c: str, target: bytes) -> bool:
    return _try_h_insert_cancel(b, c, hn_schema(2), target, _h2_extras())


def _l1_xminus(b: Builder, c: str, target: bytes) -> bool:
    return _try_poke_h_remove(b, c, hn_schema(2), target, _h2_extras())


def _l2_xplus(b: Builder, c: str, target: bytes) -> bool:
    """Curl one corner edge, run the 3-strand block over the curl lane,
    cancel against c, remove the curl."""
    d = b.d
    e_in, e_out = _corner(d, c)
    if e_in == e_out:
        return False
    h3 = hn_schema(3)
    for vr1 in _family("VR1"):
        for ks in find_sites(d, vr1, "f"):
            if ks.arc_map()[0] not in (e_in, e_out):
                continue
            mid0, _ = apply_move(d, vr1, ks)
            kink = _new_crossings(d, mid0)[0]
            e_in0 = mid0.pred[(c, 1)]
            if (c, 2) not in mid0.succ or e_in0 not in mid0.succ:
                continue
            for e3 in _edges_at(mid0, kink):
                amap = {0: e_in0, 4: (c, 2), 2: e3}
                if len(set(amap.values())) != 3:
                    continue
                site = make_site(h3, "f", {}, amap)
                if validate_site(mid0, h3, site) is not None:
                    continue
                mid1, _ = apply_move(mid0, h3, site)
                for r2 in _family("R2"):
                    for rsite in _sites_with(mid1, r2, "b", {c}):
                        mid2, _ = apply_move(mid1, r2, rsite)
                        for uk in _family("VR1"):
                            for us in _sites_with(mid2, uk, "b", {kink}):
                                out, _ = apply_move(mid2, uk, us)
                                if canonical_form(out) == target:
                                    b.apply(vr1, ks)
                                    b.apply(h3, site)
                                    b.apply(r2, rsite)
                                    b.apply(uk, us)
                                    return True
    return False


def _l2_xminus(b: Builder, c: str, target: bytes) -> bool:
    """Poke virtually at the corner, curl for the third lane, remove
    the 3-strand pattern backwards, drop the curl."""
    d = b.d
    e_out, e_in = _corner(d, c)
    if e_in == e_out:
        return False
    h3 = hn_schema(3)
    for vr2 in _family("VR2"):
        site = make_site(vr2, "f", {}, {0: e_out, 2: e_in})
        if validate_site(d, vr2, site) is not None:
            continue
        mid0, _ = apply_move(d, vr2, site)
        pokes = _new_crossings(d, mid0)
        for vr1 in _family("VR1"):
            for ks in find_sites(mid0, vr1, "f"):
                tail = ks.arc_map()[0]
                near = {tail[0], mid0.succ[tail][0]}
                if not near & (set(pokes) | {c}):
                    continue
                mid1, _ = apply_move(mid0, vr1, ks)
                kink = _new_crossings(mid0, mid1)[0]
                for hsite in _sites_with(mid1, h3, "b", {c}):
                    mid2, _ = apply_move(mid1, h3, hsite)
                    for uk in _family("VR1"):
                        for us in _sites_with(mid2, uk, "b", {kink}):
                            out, _ = apply_move(mid2, uk, us)
                            if canonical_form(out) == target:
                                b.apply(vr2, site)
                                b.apply(vr1, ks)
                                b.apply(h3, hsite)
                                b.apply(uk, us)
                                return True
    return False


def virtualize_via_h2(d: Diagram, c: str) -> Realization:
    _check_classical(d, c)
    b = Builder(d, "VIRTUAL", ("H2",))
    _virtualize_block(b, c, 2)
    return b.realization(f"virtualize {c} using 2-strand moves")


def virtualize_via_h3(d: Diagram, c: str) -> Realization:
    _check_classical(d, c)
    b = Builder(d, "VIRTUAL", ("H3",))
    _virtualize_block(b, c, 3)
    return b.realization(f"virtualize {c} using 3-strand moves")


def _check_classical(d: Diagram, c: str) -> None:
    if c not in d.crossings:
        raise RealizationError(f"no crossing {c}")
    if d.crossings[c] == "V":
        raise RealizationError(f"crossing {c} is virtual")


# -- Lemma 3: lifting H(n) through H(n+2) -------------------------------------


def _lane_inleg(n: int, lane: int) -> int:
    return lane if lane % 2 == 0 else 2 * n - 1 - lane


def _hn_lane_edges(n: int, site: Site) -> list[Port]:
    amap = site.arc_map()
    return [amap[_lane_inleg(n, lane)] for lane in range(n)]


def _lift_forward(b: Builder, n: int, site: Site, emit_h) -> None:
    """Replace a forward H(n) application by a single H(n+2) one.

    Two nested virtual curls on the last lane supply the two extra
    strands; after the wide move, the pair of block crossings riding the
    curl plus the curls themselves are four kink removals.
    """
    d = b.d
    hn = hn_schema(n)
    hm = hn_schema(n + 2)
    direct, _ = apply_move(d, hn, site)
    target = canonical_form(direct)
    lanes = _hn_lane_edges(n, site)
    spiral_edge = lanes[-1]
    keep = {_lane_inleg(n + 2, lane): lanes[lane] for lane in range(n - 1)}
    for vr1a in _family("VR1"):
        for ks1 in find_sites(d, vr1a, "f"):
            if ks1.arc_map()[0] != spiral_edge:
                continue
            mid1, _ = apply_move(d, vr1a, ks1)
            k1 = _new_crossings(d, mid1)[0]
            for vr1b in _family("VR1"):
                for ks2 in find_sites(mid1, vr1b, "f"):
                    t2 = ks2.arc_map()[0]
                    if t2[0] != k1 and mid1.succ[t2][0] != k1:
                        continue
                    mid2, _ = apply_move(mid1, vr1b, ks2)
                    k2 = _new_crossings(mid1, mid2)[0]
                    for hsite in find_sites(mid2, hm, "f", fixed_arcs=keep):
                        mid3, _ = apply_move(mid2, hm, hsite)
                        fresh = set(_new_crossings(mid2, mid3)) | {k1, k2}
                        path = _kink_cleanup(mid3, target, restrict=fresh, depth=4)
                        if path is None:
                            continue
                        b.apply(vr1a, ks1)
                        b.apply(vr1b, ks2)
                        emit_h(b, n + 2, hsite)
                        for schema, csite in _replay_cleanup(b.d, target, fresh):
                            b.apply(schema, csite)
                        return
    raise RealizationError(f"could not lift a forward H({n}) application")


def _replay_cleanup(d: Diagram, target: bytes, restrict: set[str]):
    """Re-derive the kink cleanup on the live diagram (labels may differ
    from the search probe after recursive lifting)."""
    live = {c for c in restrict if c in d.crossings}
    live |= {c for c in d.crossings if c.startswith("t")}
    path = _kink_cleanup(d, target, restrict=live, depth=4)
    if path is None:
        path = _kink_cleanup(d, target, restrict=None, depth=4)
    if path is None:
        raise RealizationError("lift cleanup lost its target")
    return path


def _lift_backward(b: Builder, n: int, site: Site, emit_h) -> None:
    """Replace a backward H(n) application: dress a nested curl pair
    into the wider pattern, remove it with H(n+2) backwards, then drop
    the curls."""
    d = b.d
    hn = hn_schema(n)
    hm = hn_schema(n + 2)
    direct, _ = apply_move(d, hn, site)
    target = canonical_form(direct)
    pattern = set(site.crossing_map().values())
    near_edges = sorted(
        {e for c in pattern for e in _edges_at(d, c)}
    )
    for vr1a in _family("VR1"):
        for ks1 in find_sites(d, vr1a, "f"):
            if ks1.arc_map()[0] not in near_edges:
                continue
            mid1, _ = apply_move(d, vr1a, ks1)
            k1 = _new_crossings(d, mid1)[0]
            for vr1b in _family("VR1"):
                for ks2 in find_sites(mid1, vr1b, "f"):
                    t2 = ks2.arc_map()[0]
                    if t2[0] != k1 and mid1.succ[t2][0] != k1:
                        continue
                    mid2, _ = apply_move(mid1, vr1b, ks2)
                    k2 = _new_crossings(mid1, mid2)[0]
                    # dress the spiral with the block pair: a classical
                    # kink and a virtual kink on the curl lanes
                    for r1 in _family("R1"):
                        for rs in find_sites(mid2, r1, "f"):
                            t3 = rs.arc_map()[0]
                            if t3[0] not in (k1, k2) and mid2.succ[t3][0] not in (
                                k1,
                                k2,
                            ):
                                continue
                            mid3, _ = apply_move(mid2, r1, rs)
                            k3 = _new_crossings(mid2, mid3)[0]
                            for vr1c in _family("VR1"):
                                for vs in find_sites(mid3, vr1c, "f"):
                                    t4 = vs.arc_map()[0]
                                    touch = {t4[0], mid3.succ[t4][0]}
                                    if not touch & {k1, k2, k3}:
                                        continue
                                    mid4, _ = apply_move(mid3, vr1c, vs)
                                    for hsite in _sites_with(
                                        mid4, hm, "b", pattern
                                    ):
                                        mid5, _ = apply_move(mid4, hm, hsite)
                                        path = _kink_cleanup(
                                            mid5, target, restrict={k1, k2}, depth=2
                                        )
                                        if path is None:
                                            continue
                                        b.apply(vr1a, ks1)
                                        b.apply(vr1b, ks2)
                                        b.apply(r1, rs)
                                        b.apply(vr1c, vs)
                                        emit_h(b, n + 2, hsite)
                                        for schema, csite in _replay_cleanup(
                                            b.d, target, {k1, k2}
                                        ):
                                            b.apply(schema, csite)
                                        return
    raise RealizationError(f"could not lift a backward H({n}) application")


def lift_hn_step(d: Diagram, n: int, site: Site) -> Realization:
    """Realize one H(n) application by exactly one H(n+2) plus virtual
    Reidemeister moves."""
    hn = hn_schema(n)
    if validate_site(d, hn, site) is not None:
        raise RealizationError(f"illegal H({n}) site")
    b = Builder(d, "VIRTUAL", (f"H{n + 2}",))

    def emit_direct(bb: Builder, k: int, hsite: Site) -> None:
        bb.apply(hn_schema(k), hsite)

    if site.direction == "f":
        _lift_forward(b, n, site, emit_direct)
    else:
        _lift_backward(b, n, site, emit_direct)
    return b.realization(f"lift H({n}) application to H({n + 2})")


def _emit_h_lifted(b: Builder, k: int, site: Site, n: int) -> None:
    """Apply H(k) at `site`, lifting through H(k+2), ..., H(n)."""
    if k == n:
        b.apply(hn_schema(k), site)
        return

    def emit(bb: Builder, kk: int, hsite: Site) -> None:
        _emit_h_lifted(bb, kk, hsite, n)

    if site.direction == "f":
        _lift_forward(b, k, site, emit)
    else:
        _lift_backward(b, k, site, emit)


# -- Theorem 1 ----------------------------------------------------------------


def virtualize_via_hn(d: Diagram, c: str, n: int) -> Realization:
    """Virtualize one crossing using only the n-strand move (plus
    generalized Reidemeister moves)."""
    if n < 2:
        raise RealizationError(f"H(n) needs n >= 2, got {n}")
    _check_classical(d, c)
    b = Builder(d, "VIRTUAL", (f"H{n}",))
    _virtualize_block_lifted(b, c, n)
    return b.realization(f"virtualize {c} using H({n})")


def _virtualize_block_lifted(b: Builder, c: str, n: int) -> None:
    base = 2 if n % 2 == 0 else 3
    if n == base:
        _virtualize_block(b, c, base)
        return
    # Run the base block on a probe to learn its step sequence.  The
    # live replay lifts every H step, which shifts fresh crossing
    # labels, so once the first lift has happened later sites are
    # re-derived by matching each step's expected canonical state.
    probe = Builder(b.d)
    _virtualize_block(probe, c, base)
    expected = []
    dd = b.d
    for st in probe.steps:
        sch = lookup(st.schema)
        dd, _ = apply_move(dd, sch, st.site(sch))
        expected.append(canonical_form(dd))
    aligned = True
    for st, expect in zip(probe.steps, expected):
        schema = lookup(st.schema)
        if schema.family.startswith("H"):
            if aligned:
                site = st.site(schema)
            else:
                site = _matching_site(b.d, schema, st.direction, expect)
            _emit_h_lifted(b, base, site, n)
            aligned = False
        elif aligned:
            b.apply(schema, st.site(schema))
        else:
            if not _apply_matching(b, schema, st.direction, expect):
                raise RealizationError(
                    f"lost track of the {schema.family} step while lifting"
                )


def _matching_site(d: Diagram, schema: MoveSchema, direction: str, target: bytes) -> Site:
    for site in find_sites(d, schema, direction):
        out, _ = apply_move(d, schema, site)
        if canonical_form(out) == target:
            return site
    raise RealizationError(f"no {schema.name} site matches the expected state")


def flat_simplify(d: Diagram, depth_cap: int = 8) -> Realization:
    """Reduce a classical-crossing-free diagram to bare loops with
    virtual Reidemeister moves only."""
    if d.classical_crossings():
        raise RealizationError("flat_simplify needs a purely virtual diagram")
    b = Builder(d, "VIRTUAL")
    while b.d.crossings:
        if not _flat_reduce_once(b):
            raise SearchCapExceeded(
                f"no virtual reduction within depth {depth_cap}"
            )
    return b.realization("reduce purely virtual diagram to loops")


def _flat_reduction_site(d: Diagram):
    for fam in ("VR1", "VR2"):
        for schema in _family(fam):
            sites = find_sites(d, schema, "b")
            if sites:
                return schema, sites[0]
    return None


def _flat_reduce_once(b: Builder, depth_cap: int = 8) -> bool:
    hit = _flat_reduction_site(b.d)
    if hit:
        b.apply(*hit)
        return True
    # breadth-first over sliding moves until a reduction appears
    seen = {canonical_form(b.d)}
    queue: deque[tuple[Diagram, list]] = deque([(b.d, [])])
    while queue:
        cur, path = queue.popleft()
        if len(path) >= depth_cap:
            continue
        for schema in _family("VR3"):
            for direction in ("f", "b"):
                for site in find_sites(cur, schema, direction):
                    nxt, _ = apply_move(cur, schema, site)
                    key = canonical_form(nxt)
                    if key in seen:
                        continue
                    seen.add(key)
                    npath = path + [(schema, site)]
                    if _flat_reduction_site(nxt):
                        for s, st in npath:
                            b.apply(s, st)
                        return True
                    queue.append((nxt, npath))
    return False


def unknot(d: Diagram, n: int, depth_cap: int = 8) -> Realization:
    """Theorem 1 pipeline: virtualize every classical crossing with the
    n-strand move, then reduce the purely virtual remainder."""
    if n < 2:
        raise RealizationError(f"H(n) needs n >= 2, got {n}")
    if validate(d):
        raise RealizationError("invalid input diagram")
    b = Builder(d, "VIRTUAL", (f"H{n}",))
    while True:
        classical = b.d.classical_crossings()
        if not classical:
            break
        _virtualize_block_lifted(b, classical[0], n)
    flat = flat_simplify(b.d, depth_cap)
    for st in flat.trace.steps:
        schema = lookup(st.schema)
        b.apply(schema, st.site(schema))
    return b.realization(f"unknot with H({n})")


# -- Theorems 2 and 3 ----------------------------------------------------------


def _virtual_bridge(b: Builder, target: bytes, depth: int = 4) -> bool:
    """Connect to `target` with virtual moves only (small search)."""
    fams = [s for fam in ("VR1", "VR2", "VR3") for s in _family(fam)]
    seen = {canonical_form(b.d)}
    queue: deque[tuple[Diagram, list]] = deque([(b.d, [])])
    while queue:
        cur, path = queue.popleft()
        if canonical_form(cur) == target:
            for s, st in path:
                b.apply(s, st)
            return True
        if len(path) >= depth:
            continue
        for schema in fams:
            for direction in ("f", "b"):
                for site in find_sites(cur, schema, direction):
                    nxt, _ = apply_move(cur, schema, site)
                    key = canonical_form(nxt)
                    if key in seen:
                        continue
                    seen.add(key)
                    queue.append((nxt, path + [(schema, site)]))
    return False


def realize_fu(d: Diagram, site: Site) -> Realization:
    schema = lookup(site.schema)
    if schema.family != "FU":
        raise RealizationError("site is not a forbidden-under site")
    return _realize_pattern_move(d, schema, site, "realize forbidden under-move", "WELDED")


def realize_cf(d: Diagram, site: Site) -> Realization:
    schema = lookup(site.schema)
    if schema.family != "CF":
        raise RealizationError("site is not a CF site")
    return _realize_pattern_move(d, schema, site, "realize CF move", "VIRTUAL")


def _realize_pattern_move(
    d: Diagram, schema: MoveSchema, site: Site, description: str, moveset: str
) -> Realization:
    """Melt, slide, freeze: virtualize the pattern's classical
    crossings, bridge the purely virtual forms with virtual moves, then
    rebuild the far side's classical crossings in reverse."""
    if validate_site(d, schema, site) is not None:
        raise RealizationError(f"illegal {schema.name} site")
    direct, _ = apply_move(d, schema, site)
    target = canonical_form(direct)
    src = schema.source(site.direction)
    cmap = site.crossing_map()
    classical_src = sorted(
        cmap[c] for c in src.crossings if src.crossings[c] != "V"
    )

    b = Builder(d, moveset, ("H2",))
    for c in classical_src:
        _virtualize_block(b, c, 2)

    # melt the far side on a probe: gives both the bridge target and,
    # reversed, the freezing recipe
    probe = Builder(direct)
    far_classical = sorted(
        x
        for x in direct.crossings
        if direct.crossings[x] != "V" and x not in d.crossings
    )
    for c in far_classical:
        _virtualize_block(probe, c, 2)
    if not _virtual_bridge(b, canonical_form(probe.d), depth=4):
        raise RealizationError(f"no virtual bridge for {schema.name}")

    # replay the probe's steps backwards onto the live builder; the live
    # diagram is only canonically equal, so re-derive each reverse site
    # by searching for the step that undoes the canonical change
    for st in reversed(probe.steps):
        sch = lookup(st.schema)
        before_key = canonical_form(_probe_state(direct, probe.steps, st.index))
        flipped = "b" if st.direction == "f" else "f"
        if not _apply_matching(b, sch, flipped, before_key):
            raise RealizationError(
                f"could not invert {sch.name} while freezing {schema.name}"
            )
    if canonical_form(b.d) != target:
        raise RealizationError(f"{schema.name} realization missed its target")
    return b.realization(description)


def _probe_state(start: Diagram, steps: list[Step], upto: int) -> Diagram:
    d = start
    for st in steps[:upto]:
        sch = lookup(st.schema)
        d, _ = apply_move(d, sch, st.site(sch))
    return d


def _apply_matching(b: Builder, schema: MoveSchema, direction: str, target: bytes) -> bool:
    for site in find_sites(b.d, schema, direction):
        out, _ = apply_move(b.d, schema, site)
        if canonical_form(out) == target:
            b.apply(schema, site)
            return True
    return False


# -- descending diagrams -------------------------------------------------------


def descending_switches(d: Diagram, basepoint: Port) -> tuple[list[str], Diagram]:
    """Crossing changes making the knot descending from the basepoint.

    The basepoint is an edge, named by its tail port.  Walking the knot
    from there, every classical crossing first met on its under strand
    gets switched; virtual crossings are ignored.
    """
    if component_count(d) - d.free_loops != 1 or d.free_loops:
        raise RealizationError("descending diagrams need a one-component knot")
    if basepoint not in d.succ:
        raise RealizationError(f"basepoint {basepoint} is not an edge tail")
    switches: list[str] = []
    seen: set[str] = set()
    port = d.succ[basepoint]
    while True:
        c, i = port
        passage = 0 if i in (0, 2) else 1
        kind = d.crossings[c]
        if kind != "V" and c not in seen:
            seen.add(c)
            over = 0 if kind == "X+" else 1
            if passage != over:
                switches.append(c)
        exit_port = (c, 2 if passage == 0 else 3)
        if exit_port == basepoint:
            break
        port = d.succ[exit_port]
    kinds = dict(d.crossings)
    for c in switches:
        kinds[c] = "X+" if kinds[c] == "X-" else "X-"
    return sorted(switches), Diagram(kinds, d.succ, d.free_loops, d.name)


def is_descending(d: Diagram, basepoint: Port) -> bool:
    switches, _ = descending_switches(d, basepoint)
    return not switches
