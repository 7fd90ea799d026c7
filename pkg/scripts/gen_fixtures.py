"""Generate the frozen fixture corpus.

Run once from the repository root: python3 scripts/gen_fixtures.py
The base fixtures (u0, k1, k2, vt, hopf, vhopf, tref) are hand-written
and left untouched.
"""

from __future__ import annotations

import random
from pathlib import Path

from vmoves.diagram import Diagram, component_count, serialize_diagram, validate
from vmoves.matching import apply_move, find_sites
from vmoves.rules import builtin_rules, hn_schema, lookup, schemas_in_family
from vmoves.tangle import Tangle

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def close_tangle(t: Tangle, pairing: dict[int, int], name: str) -> Diagram | None:
    """Close a crossing-attached tangle by joining out-leg j to in-leg k."""
    conns = dict(t.succ)
    for j, k in pairing.items():
        pj, dj = t.legs[j]
        pk, dk = t.legs[k]
        assert dj == "out" and dk == "in" and pj[0] == pk[0] == "port"
        conns[(pj[1], pj[2])] = (pk[1], pk[2])
    d = Diagram(t.crossings, conns, 0, name)
    return d if not validate(d) else None


def closures(t: Tangle):
    import itertools

    outs = [k for k, (_, dr) in enumerate(t.legs) if dr == "out"]
    ins = [k for k, (_, dr) in enumerate(t.legs) if dr == "in"]
    for perm in itertools.permutations(ins):
        yield dict(zip(outs, perm))


def decorate(
    d: Diagram,
    rng: random.Random,
    moves: int,
    forbidden_tails: frozenset = frozenset(),
) -> Diagram:
    """Grow a diagram with random insertion moves, never inserting on
    the given edges (tails)."""
    pool = [
        s
        for fam in ("R1", "VR1", "R2", "VR2")
        for s in schemas_in_family(fam)
    ]
    for _ in range(moves):
        rng.shuffle(pool)
        for schema in pool:
            if len(d.classical_crossings()) + 2 > 10 and schema.family in ("R1", "R2"):
                continue
            sites = [
                s
                for s in find_sites(d, schema, "f")
                if not set(s.arc_map().values()) & forbidden_tails
            ]
            if not sites:
                continue
            d, _ = apply_move(d, schema, rng.choice(sites))
            break
    return d


def main() -> None:
    rng = random.Random(20260810)
    table = builtin_rules()

    # pattern-bearing fixtures with legal FU / CF sites
    made = 0
    for name in sorted(n for n in table if table[n].family == "FU"):
        schema = table[name]
        for pairing in closures(schema.lhs):
            d = close_tangle(schema.lhs, pairing, f"FU{made + 1}")
            if d is None or component_count(d) > 2:
                continue
            if not find_sites(d, schema, "f"):
                continue
            if made >= 3:
                site = find_sites(d, schema, "f")[0]
                cmap = site.crossing_map()
                forbidden = frozenset(
                    (cmap[p[0]], p[1]) for p in schema.lhs.succ
                )
                grown = decorate(d, rng, 2, forbidden)
                grown = Diagram(
                    grown.crossings, grown.succ, grown.free_loops, f"FU{made + 1}"
                )
                if find_sites(grown, schema, "f"):
                    d = grown
            (FIXTURES / f"fu{made + 1}.vlink").write_text(serialize_diagram(d))
            made += 1
            break
        if made >= 6:
            break
    assert made >= 5, f"only {made} FU fixtures"

    cf = table["CF"]
    made = 0
    seeds = [0, 1, 2, 3, 4, 5]
    for seed in seeds:
        for pairing in closures(cf.lhs):
            d = close_tangle(cf.lhs, pairing, f"CF{made + 1}")
            if d is None:
                continue
            if seed:
                site = find_sites(d, cf, "f")[0]
                cmap = site.crossing_map()
                forbidden = frozenset((cmap[p[0]], p[1]) for p in cf.lhs.succ)
                d = decorate(d, random.Random(7000 + seed), seed % 3 + 1, forbidden)
                d = Diagram(d.crossings, d.succ, d.free_loops, f"CF{made + 1}")
            if not find_sites(d, cf, "f"):
                continue
            (FIXTURES / f"cf{made + 1}.vlink").write_text(serialize_diagram(d))
            made += 1
            break
        if made >= 5:
            break
    assert made >= 5, f"only {made} CF fixtures"

    # diagrams carrying n-strand move patterns (backward sites)
    base = {
        "vt": (FIXTURES / "vt.vlink").read_text(),
        "hopf": (FIXTURES / "hopf.vlink").read_text(),
        "tref": (FIXTURES / "tref.vlink").read_text(),
    }
    from vmoves.diagram import parse_diagram

    for n, src in ((2, "vt"), (2, "hopf"), (3, "tref"), (4, "tref")):
        d = parse_diagram(base[src])
        schema = hn_schema(n)
        sites = find_sites(d, schema, "f")
        d, _ = apply_move(d, schema, sites[0])
        d = Diagram(d.crossings, d.succ, d.free_loops, f"H{n}PAT_{src.upper()}")
        assert not validate(d)
        (FIXTURES / f"h{n}pat_{src}.vlink").write_text(serialize_diagram(d))

    # randomized corpus
    seeds = {
        "u0": "vlink\nloops 1\n",
        "vt": base["vt"],
        "hopf": base["hopf"],
        "tref": base["tref"],
    }
    count = 0
    i = 0
    while count < 14:
        i += 1
        start = rng.choice(sorted(seeds))
        d = parse_diagram(seeds[start])
        d = decorate(d, rng, rng.randint(2, 6))
        if len(d.classical_crossings()) > 10:
            continue
        if not d.crossings:
            continue
        count += 1
        d = Diagram(d.crossings, d.succ, d.free_loops, f"RND{count:02d}")
        assert not validate(d)
        (FIXTURES / f"rnd{count:02d}.vlink").write_text(serialize_diagram(d))

    print(f"fixtures in {FIXTURES}:")
    for p in sorted(FIXTURES.glob("*.vlink")):
        dd = parse_diagram(p.read_text())
        print(
            f"  {p.name:<18}",
            f"C={len(dd.classical_crossings())} V={len(dd.virtual_crossings())}",
            f"comps={component_count(dd)}",
        )


if __name__ == "__main__":
    main()
