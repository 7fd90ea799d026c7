"""Site matching and move application.

A site fixes where a schema's source tangle sits in a diagram: an
injective crossing map plus, for each crossing-free arc of the tangle, a
whole diagram edge that carries it.  Boundary legs then anchor to
diagram ports (head of the incoming edge for crossing-attached in-legs,
tail for out-legs; tail/head of the assigned edge for arc legs), which
is also how trace steps serialize sites.

Legality is decided combinatorially: cutting the anchored edges must
leave the matched part isomorphic to the tangle and the rest of the
diagram seeing the cut stubs on a single disk boundary in the tangle's
leg order.  The outside condition is checked by face-tracing the
complement with stub tips and comparing tip orders walk by walk;
components of the complement may nest freely (relative placement of
disconnected pieces is not part of the map), so the per-component
orders only have to be mutually non-interleaved.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagram import Diagram, Port
from .maps import RotMap
from .rules import MoveSchema
from .tangle import Tangle


@dataclass(frozen=True, order=True)
class Site:
    schema: str
    direction: str  # 'f' or 'b'
    cmap: tuple[tuple[str, str], ...]  # (tangle crossing, diagram crossing)
    arcmap: tuple[tuple[int, Port], ...]  # (arc in-leg, edge tail port)

    def crossing_map(self) -> dict[str, str]:
        return dict(self.cmap)

    def arc_map(self) -> dict[int, Port]:
        return dict(self.arcmap)


def make_site(
    schema: MoveSchema,
    direction: str,
    cmap: dict[str, str],
    arcmap: dict[int, Port],
) -> Site:
    return Site(
        schema.name,
        direction,
        tuple(sorted(cmap.items())),
        tuple(sorted(arcmap.items())),
    )


class _Cut:
    __slots__ = ("leg", "where", "kind")

    def __init__(self, leg: int, where: str, kind: str):
        self.leg = leg  # leg index
        self.where = where  # 'T' or 'H'
        self.kind = kind  # 'port' or 'arc'


def _leg_cuts(
    d: Diagram, src: Tangle, cmap: dict[str, str], arcmap: dict[int, Port]
) -> dict[Port, list[_Cut]] | str:
    """Cuts per diagram edge (keyed by tail port), or an error string."""
    cuts: dict[Port, list[_Cut]] = {}
    anchors: set[Port] = set()

    def anchor(p: Port) -> bool:
        if p in anchors:
            return False
        anchors.add(p)
        return True

    for k, (attach, direction) in enumerate(src.legs):
        if attach[0] == "port":
            dp = (cmap[attach[1]], attach[2])
            if not anchor(dp):
                return f"leg {k}: anchor {dp} collides"
            if direction == "in":
                tail = d.pred.get(dp)
                if tail is None:
                    return f"leg {k}: no edge into {dp}"
                cuts.setdefault(tail, []).append(_Cut(k, "H", "port"))
            else:
                if dp not in d.succ:
                    return f"leg {k}: no edge out of {dp}"
                cuts.setdefault(dp, []).append(_Cut(k, "T", "port"))
        else:
            if direction != "in":
                continue  # arcs recorded once, from their in-leg
            if k not in arcmap:
                return f"arc in-leg {k} unassigned"
            tail = arcmap[k]
            if tail not in d.succ:
                return f"arc leg {k}: {tail} is not an edge tail"
            head = d.succ[tail]
            if not anchor(tail) or not anchor(head):
                return f"arc leg {k}: anchors collide"
            m = attach[1]
            cuts.setdefault(tail, []).append(_Cut(k, "T", "arc"))
            cuts.setdefault(tail, []).append(_Cut(m, "H", "arc"))
    return cuts


def validate_site(d: Diagram, schema: MoveSchema, site: Site) -> str | None:
    """None when the site is a legal embedding, else the first reason."""
    src = schema.source(site.direction)
    cmap = site.crossing_map()
    arcmap = site.arc_map()

    if sorted(cmap) != sorted(src.crossings):
        return "crossing map does not cover the source tangle"
    if len(set(cmap.values())) != len(cmap):
        return "crossing map is not injective"
    if sorted(arcmap) != [k for k, _ in src.arcs()]:
        return "arc map does not cover the source arcs"
    if len(set(arcmap.values())) != len(arcmap):
        return "two arcs on one edge"
    for c, x in cmap.items():
        if x not in d.crossings:
            return f"no crossing {x} in diagram"
        if d.crossings[x] != src.crossings[c]:
            return f"kind mismatch at {x}"
    matched = set(cmap.values())
    for p, q in src.succ.items():
        dp, dq = (cmap[p[0]], p[1]), (cmap[q[0]], q[1])
        if d.succ.get(dp) != dq:
            return f"internal connection {dp}->{dq} absent"
    if src.free_loops > d.free_loops:
        return "not enough free loops"

    cuts = _leg_cuts(d, src, cmap, arcmap)
    if isinstance(cuts, str):
        return cuts

    internal = {(cmap[p[0]], p[1]) for p in src.succ}
    # per-edge cut configurations
    for tail, edge_cuts in cuts.items():
        if tail in internal:
            return f"cut on internal edge at {tail}"
        head = d.succ[tail]
        byw = {c.where: c for c in edge_cuts}
        if len(edge_cuts) != len(byw):
            return f"edge at {tail} cut twice at the same end"
        t_matched = tail[0] in matched
        h_matched = head[0] in matched
        if "T" in byw and "H" in byw:
            kinds = (byw["T"].kind, byw["H"].kind)
            if kinds == ("arc", "arc"):
                if t_matched or h_matched:
                    return f"arc edge at {tail} touches matched crossings"
            elif kinds == ("port", "port"):
                if not (t_matched and h_matched):
                    return f"wire edge at {tail} must join matched crossings"
            else:
                return f"inconsistent cuts on edge at {tail}"
        elif "T" in byw:
            if byw["T"].kind != "port" or not t_matched or h_matched:
                return f"bad tail cut on edge at {tail}"
        else:
            if byw["H"].kind != "port" or not h_matched or t_matched:
                return f"bad head cut on edge at {tail}"

    return _check_boundary(d, src, matched, internal, cuts)


def _check_boundary(
    d: Diagram,
    src: Tangle,
    matched: set[str],
    internal: set[Port],
    cuts: dict[Port, list[_Cut]],
) -> str | None:
    """Disk condition: complement sees the cuts in reversed leg order."""
    m = RotMap()
    for c in d.crossings:
        if c not in matched:
            m.add_vertex(c, [(c, i) for i in range(4)])
    tip_of_leg: dict[int, tuple[str, int]] = {}

    def tip(leg: int) -> tuple[str, int]:
        v = ("tip", leg)
        if leg not in tip_of_leg:
            m.add_vertex(v, [v])
            tip_of_leg[leg] = v
        return v

    for tail, q in d.succ.items():
        if tail in internal:
            continue
        edge_cuts = cuts.get(tail, [])
        t_matched = tail[0] in matched
        h_matched = q[0] in matched
        if not edge_cuts:
            if t_matched or h_matched:
                continue  # fully inside only when internal; guarded earlier
            m.add_edge(tail, q)
            continue
        byw = {c.where: c for c in edge_cuts}
        if "T" in byw and "H" in byw:
            if byw["T"].kind == "arc":
                m.add_edge(tail, tip(byw["T"].leg))
                m.add_edge(tip(byw["H"].leg), q)
            else:
                m.add_edge(tip(byw["T"].leg), tip(byw["H"].leg))
        elif "T" in byw:
            m.add_edge(tip(byw["T"].leg), q)
        else:
            m.add_edge(tail, tip(byw["H"].leg))

    walk_of_tip: dict[int, int] = {}
    order_in_walk: dict[int, list[int]] = {}
    for wi, walk in enumerate(m.faces()):
        for dart in walk:
            if isinstance(dart, tuple) and dart[0] == "tip":
                walk_of_tip[dart[1]] = wi
                order_in_walk.setdefault(wi, []).append(dart[1])

    comp_of_vertex: dict[object, int] = {}
    for ci, comp in enumerate(m.components()):
        for v in comp:
            comp_of_vertex[v] = ci
    comp_of_leg = {
        leg: comp_of_vertex[v] for leg, v in tip_of_leg.items()
    }

    b = len(src.legs)
    legs_by_comp: dict[int, list[int]] = {}
    for k in range(b):
        legs_by_comp.setdefault(comp_of_leg[k], []).append(k)

    for ci, legs in legs_by_comp.items():
        walks = {walk_of_tip[k] for k in legs}
        if len(walks) != 1:
            return "cut stubs of one complement piece span several regions"
        seen_order = order_in_walk[walks.pop()]
        expect = list(reversed(legs))
        if len(seen_order) != len(expect):
            return "region order mismatch"
        if not _cyclic_equal(seen_order, expect):
            return "cut stubs appear in the wrong cyclic order"

    comps = sorted(legs_by_comp)
    for i, a in enumerate(comps):
        for bb in comps[i + 1 :]:
            if _interleaved(legs_by_comp[a], legs_by_comp[bb], b):
                return "complement pieces interleave around the boundary"
    return None


def _cyclic_equal(xs: list[int], ys: list[int]) -> bool:
    if len(xs) != len(ys):
        return False
    if not xs:
        return True
    n = len(xs)
    for r in range(n):
        if all(xs[(r + i) % n] == ys[i] for i in range(n)):
            return True
    return False


def _interleaved(a: list[int], b: list[int], n: int) -> bool:
    word = []
    for k in range(n):
        if k in a:
            word.append("a")
        elif k in b:
            word.append("b")
    blocks = 1
    for i in range(1, len(word)):
        if word[i] != word[i - 1]:
            blocks += 1
    if word and word[0] == word[-1] and blocks > 1:
        blocks -= 1
    return blocks > 2


# -- enumeration ------------------------------------------------------------


def _graph_component_of_edges(d: Diagram) -> dict[Port, int]:
    comp: dict[str, int] = {}
    idx = 0
    for c in sorted(d.crossings):
        if c in comp:
            continue
        stack = [c]
        comp[c] = idx
        while stack:
            x = stack.pop()
            for i in range(4):
                q = d.succ.get((x, i)) or d.pred.get((x, i))
                if q and q[0] not in comp:
                    comp[q[0]] = idx
                    stack.append(q[0])
        idx += 1
    return {tail: comp[tail[0]] for tail in d.succ}


def _face_neighbors(d: Diagram) -> dict[Port, set[Port]]:
    """edge tail -> tails of edges sharing a face walk with it."""
    from .diagram import faces as d_faces

    tail_of_dart: dict[Port, Port] = {}
    for tail, head in d.succ.items():
        tail_of_dart[tail] = tail
        tail_of_dart[head] = tail
    nbrs: dict[Port, set[Port]] = {t: set() for t in d.succ}
    for walk in d_faces(d):
        tails = {tail_of_dart[dart] for dart in walk}
        for t in tails:
            nbrs[t] |= tails
    return nbrs


def _candidate_cmaps(d: Diagram, src: Tangle) -> list[dict[str, str]]:
    tcids = sorted(src.crossings)
    if not tcids:
        return [{}]
    # order tangle crossings to follow internal connectivity for pruning
    order = [tcids[0]]
    pending = set(tcids[1:])
    adj: dict[str, set[str]] = {c: set() for c in tcids}
    for p, q in src.succ.items():
        adj[p[0]].add(q[0])
        adj[q[0]].add(p[0])
    while pending:
        nxt = sorted(c for c in pending if any(o in adj[c] for o in order))
        pick = nxt[0] if nxt else sorted(pending)[0]
        order.append(pick)
        pending.remove(pick)

    results: list[dict[str, str]] = []
    by_kind: dict[str, list[str]] = {}
    for x in sorted(d.crossings):
        by_kind.setdefault(d.crossings[x], []).append(x)

    def consistent(cmap: dict[str, str], c: str, x: str) -> bool:
        for i in range(4):
            q = src.succ.get((c, i))
            if q is not None and q[0] in cmap:
                if d.succ.get((x, i)) != (cmap[q[0]], q[1]):
                    return False
            r = src.pred.get((c, i))
            if r is not None and r[0] in cmap:
                if d.pred.get((x, i)) != (cmap[r[0]], r[1]):
                    return False
        return True

    def rec(i: int, cmap: dict[str, str], used: set[str]) -> None:
        if i == len(order):
            results.append(dict(cmap))
            return
        c = order[i]
        for x in by_kind.get(src.crossings[c], []):
            if x in used or not consistent(cmap, c, x):
                continue
            cmap[c] = x
            used.add(x)
            rec(i + 1, cmap, used)
            del cmap[c]
            used.remove(x)

    rec(0, {}, set())
    return results


def _candidate_arcmaps(
    d: Diagram,
    src: Tangle,
    cmap: dict[str, str],
    guided: bool,
    fixed: dict[int, Port] | None = None,
) -> list[dict[int, Port]]:
    arcs = src.arcs()
    if not arcs:
        return [{}]
    fixed = fixed or {}
    internal = {(cmap[p[0]], p[1]) for p in src.succ}
    all_tails = [t for t in sorted(d.succ) if t not in internal]
    if guided and not src.crossings:
        nbrs = _face_neighbors(d)
        comp = _graph_component_of_edges(d)
    results: list[dict[int, Port]] = []

    def rec(i: int, amap: dict[int, Port], used: set[Port]) -> None:
        if i == len(arcs):
            results.append(dict(amap))
            return
        k = arcs[i][0]
        if k in fixed:
            t = fixed[k]
            if t in used or t not in d.succ:
                return
            amap[k] = t
            used.add(t)
            rec(i + 1, amap, used)
            del amap[k]
            used.remove(t)
            return
        if guided and not src.crossings and i > 0:
            prev = amap[arcs[i - 1][0]]
            cands = sorted(
                t
                for t in d.succ
                if t not in used and (t in nbrs[prev] or comp[t] != comp[prev])
            )
        else:
            cands = [t for t in all_tails if t not in used]
        for t in cands:
            amap[k] = t
            used.add(t)
            rec(i + 1, amap, used)
            del amap[k]
            used.remove(t)

    rec(0, {}, set())
    return results


def find_sites(
    d: Diagram,
    schema: MoveSchema,
    direction: str = "f",
    brute: bool = False,
    fixed_arcs: dict[int, Port] | None = None,
) -> list[Site]:
    """Complete, deterministic enumeration of legal sites.

    With ``brute=True`` all injective assignments are tried with no
    pruning; this is the independent oracle for matcher equivalence.
    ``fixed_arcs`` pins chosen arc legs to given edges.
    """
    src = schema.source(direction)
    sites = []
    if brute:
        cmaps = _brute_cmaps(d, src)
    else:
        cmaps = _candidate_cmaps(d, src)
    for cmap in cmaps:
        for amap in _candidate_arcmaps(
            d, src, cmap, guided=not brute, fixed=fixed_arcs
        ):
            site = make_site(schema, direction, cmap, amap)
            if validate_site(d, schema, site) is None:
                sites.append(site)
    return sorted(set(sites))


def _brute_cmaps(d: Diagram, src: Tangle) -> list[dict[str, str]]:
    from itertools import permutations

    tcids = sorted(src.crossings)
    if not tcids:
        return [{}]
    out = []
    for perm in permutations(sorted(d.crossings), len(tcids)):
        out.append(dict(zip(tcids, perm)))
    return out


def brute_force_sites(d: Diagram, schema: MoveSchema, direction: str = "f") -> list[Site]:
    return find_sites(d, schema, direction, brute=True)


# -- application ------------------------------------------------------------


class StaleSiteError(ValueError):
    pass


def _fresh_names(d: Diagram, count: int) -> list[str]:
    top = 0
    for c in d.crossings:
        digits = ""
        for ch in reversed(c):
            if ch.isdigit():
                digits = ch + digits
            else:
                break
        if digits:
            top = max(top, int(digits))
    return [f"t{top + 1 + i}" for i in range(count)]


def apply_move(
    d: Diagram, schema: MoveSchema, site: Site
) -> tuple[Diagram, Site | None]:
    """Replace the source tangle at `site` with the target side.

    Returns the rewritten diagram plus the site that undoes the move, or
    None when the inverse site is not expressible (a replacement strand
    would have to carry two arcs of the inverse pattern at once).
    """
    reason = validate_site(d, schema, site)
    if reason is not None:
        raise StaleSiteError(f"illegal site for {schema.name}: {reason}")
    src = schema.source(site.direction)
    tgt = schema.target(site.direction)
    cmap = site.crossing_map()
    arcmap = site.arc_map()
    matched = set(cmap.values())
    internal = {(cmap[p[0]], p[1]) for p in src.succ}

    cuts = _leg_cuts(d, src, cmap, arcmap)
    assert not isinstance(cuts, str)

    # outside terminal per source leg
    in_src: dict[int, tuple[str, object]] = {}
    out_dst: dict[int, tuple[str, object]] = {}
    for tail, edge_cuts in cuts.items():
        head = d.succ[tail]
        byw = {c.where: c for c in edge_cuts}
        if "T" in byw and "H" in byw:
            if byw["T"].kind == "arc":
                in_src[byw["T"].leg] = ("port", tail)
                out_dst[byw["H"].leg] = ("port", head)
            else:
                out_dst[byw["T"].leg] = ("wire", byw["H"].leg)
                in_src[byw["H"].leg] = ("wire", byw["T"].leg)
        elif "T" in byw:
            out_dst[byw["T"].leg] = ("port", head)
        else:
            in_src[byw["H"].leg] = ("port", tail)

    fresh = _fresh_names(d, len(tgt.crossings))
    nu = dict(zip(sorted(tgt.crossings), fresh))
    kinds = {c: k for c, k in d.crossings.items() if c not in matched}
    for c in sorted(tgt.crossings):
        kinds[nu[c]] = tgt.crossings[c]

    conns: dict[Port, Port] = {
        p: q
        for p, q in d.succ.items()
        if p[0] not in matched
        and q[0] not in matched
        and p not in cuts  # cut edges are rebuilt by stitching
    }
    for p, q in tgt.succ.items():
        conns[(nu[p[0]], p[1])] = (nu[q[0]], q[1])

    # stitch chains through the target side
    arc_partner = {k: m for k, m in tgt.arcs()}

    def inside_of(k: int):  # target in-leg k -> terminal port or next out-leg
        attach, _ = tgt.legs[k]
        if attach[0] == "port":
            return ("port", (nu[attach[1]], attach[2]))
        return ("leg", attach[1])

    chain_edges: dict[int, Port] = {}  # target arc in-leg -> created edge tail
    visited_in: set[int] = set()
    cycles = 0

    def run_chain(start_port: Port, first_in_leg: int | None, start_out_leg: int | None):
        arcs_seen: list[int] = []
        k = first_in_leg
        j = start_out_leg
        while True:
            if k is not None:
                visited_in.add(k)
                kindo, val = inside_of(k)
                if kindo == "port":
                    conns[start_port] = val
                    break
                arcs_seen.append(k)
                j, k = val, None
            else:
                kindo, val = out_dst[j]
                if kindo == "port":
                    conns[start_port] = val
                    break
                j, k = None, val
        for a in arcs_seen:
            chain_edges[a] = start_port

    for k, (attach, direction) in enumerate(tgt.legs):
        if direction != "in":
            continue
        kind, val = in_src[k]
        if kind == "port":
            run_chain(val, k, None)
    for k, (attach, direction) in enumerate(tgt.legs):
        if direction == "out" and attach[0] == "port":
            run_chain((nu[attach[1]], attach[2]), None, k)
    # unreached in-legs sit on closed arc/wire cycles
    for k, (attach, direction) in enumerate(tgt.legs):
        if direction == "in" and k not in visited_in:
            cycles += 1
            cur = k
            while True:
                visited_in.add(cur)
                kindo, val = inside_of(cur)
                assert kindo == "leg"
                nkind, nval = out_dst[val]
                assert nkind == "wire"
                cur = nval
                if cur == k:
                    break

    loops = d.free_loops - src.free_loops + tgt.free_loops + cycles
    out = Diagram(kinds, conns, loops, d.name)

    rev_cmap = {c: nu[c] for c in tgt.crossings}
    rev_arcs: dict[int, Port] = {}
    representable = True
    claimed: set[Port] = set()
    for k, m in tgt.arcs():
        tail = chain_edges.get(k)
        if tail is None or tail in claimed or tail not in out.succ:
            representable = False
            break
        claimed.add(tail)
        rev_arcs[k] = tail
    reverse = None
    if representable:
        reverse = make_site(
            schema,
            "b" if site.direction == "f" else "f",
            rev_cmap,
            rev_arcs,
        )
        if validate_site(out, schema, reverse) is not None:
            reverse = None
    return out, reverse
