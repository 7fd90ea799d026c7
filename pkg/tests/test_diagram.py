from __future__ import annotations

import random

import pytest

from vmoves.diagram import (
    Diagram,
    VlinkError,
    canonical_form,
    component_count,
    face_count,
    faces,
    gauss_code,
    parse_diagram,
    serialize_diagram,
    validate,
)

from conftest import load

# The one-crossing wiring with each strand closed onto itself is a torus
# map (two circles cannot meet once in the sphere); only the kink wiring
# connecting the two passages is planar.
TORUS_ONE = "vlink\ncrossing c1 X+\nconnect c1.2 c1.0\nconnect c1.3 c1.1\n"


def test_parse_zero_crossing_unknot():
    d = parse_diagram("vlink\nloops 1\n")
    assert not d.crossings
    assert d.free_loops == 1
    assert validate(d) == []
    assert component_count(d) == 1


def test_parse_kink():
    d = load("k1")
    assert len(d.crossings) == 1
    assert validate(d) == []


def test_parse_virtual_trefoil():
    d = load("vt")
    assert sorted(d.crossings.values()) == ["V", "X+", "X+"]
    assert validate(d) == []


@pytest.mark.parametrize(
    "text,frag",
    [
        ("nope\n", "vlink"),
        ("vlink\ncrossing c1 Z\n", "kind"),
        ("vlink\ncrossing c1 X+\n", "dangling"),
        ("vlink\ncrossing c1 X+\nconnect c1.0 c1.2\n", "out-port"),
        (
            "vlink\ncrossing c1 X+\nconnect c1.2 c1.1\nconnect c1.2 c1.0\n",
            "used twice",
        ),
        ("vlink\ncrossing c1 X+\nconnect c1.2 c9.0\n", "unknown"),
    ],
)
def test_parse_errors(text, frag):
    with pytest.raises(VlinkError) as e:
        parse_diagram(text)
    assert frag in str(e.value)


def test_serialize_round_trip_is_idempotent():
    for name in ("k1", "vt", "hopf", "k2", "tref"):
        d = load(name)
        once = serialize_diagram(d)
        twice = serialize_diagram(parse_diagram(once))
        assert once == twice


def test_serialize_loops():
    d = Diagram({}, {}, free_loops=2)
    assert "loops 2" in serialize_diagram(d)


def test_validate_orientation_violation():
    d = load("k1")
    broken = Diagram(d.crossings, {("c1", 0): ("c1", 2), ("c1", 3): ("c1", 1)})
    assert any("in-port" in v or "out-port" in v for v in validate(broken))


def test_validate_rejects_torus_wiring():
    d = parse_diagram(TORUS_ONE)
    violations = validate(d)
    assert violations and "Euler" in violations[0]


def test_validate_two_crossing_torus():
    text = (
        "vlink\ncrossing c1 X+\ncrossing c2 X+\n"
        "connect c1.2 c2.0\nconnect c2.2 c1.0\n"
        "connect c1.3 c2.1\nconnect c2.3 c1.1\n"
    )
    d = parse_diagram(text)
    assert any("Euler" in v for v in validate(d))


def test_faces_counts():
    assert len(faces(load("k1"))) == 3
    assert face_count(load("u0")) == 2
    assert len(faces(load("vt"))) == 5  # V=3, E=6 forces F=5


def test_components():
    assert component_count(load("vt")) == 1
    assert component_count(load("hopf")) == 2
    assert component_count(Diagram({}, {}, free_loops=3)) == 3
    assert component_count(load("vhopf")) == 2


def _relabel(d: Diagram, mapping: dict[str, str]) -> Diagram:
    conns = {
        (mapping[p[0]], p[1]): (mapping[q[0]], q[1]) for p, q in d.succ.items()
    }
    kinds = {mapping[c]: k for c, k in d.crossings.items()}
    return Diagram(kinds, conns, d.free_loops)


def test_canonical_relabel_invariance():
    d = load("vt")
    base = canonical_form(d)
    rng = random.Random(7)
    names = sorted(d.crossings)
    for _ in range(100):
        perm = [f"z{rng.randrange(10**6)}" for _ in names]
        while len(set(perm)) < len(names):
            perm = [f"z{rng.randrange(10**6)}" for _ in names]
        assert canonical_form(_relabel(d, dict(zip(names, perm)))) == base


def test_canonical_distinguishes_mirror():
    d = load("k1")
    mirror = Diagram({"c1": "X-"}, d.succ, d.free_loops)
    assert canonical_form(d) != canonical_form(mirror)


def test_canonical_unoriented_mode():
    # Reversing one Hopf component flips both signs but keeps the wiring,
    # so the two diagrams agree exactly in the orientation-blind code.
    hopf = load("hopf")
    reversed_one = Diagram({"c1": "X-", "c2": "X-"}, hopf.succ)
    assert canonical_form(hopf) != canonical_form(reversed_one)
    assert canonical_form(hopf, oriented=False) == canonical_form(
        reversed_one, oriented=False
    )
    # A kink and its kind-flip are mirror images, not reverses.
    k1 = load("k1")
    mirror = Diagram({"c1": "X-"}, k1.succ, k1.free_loops)
    assert canonical_form(k1, oriented=False) != canonical_form(
        mirror, oriented=False
    )


def test_gauss_code_vt():
    codes = gauss_code(load("vt"))
    assert len(codes) == 1
    code = codes[0]
    assert len(code) == 4
    assert sorted(c for c, _, _ in code) == ["c1", "c1", "c2", "c2"]
    assert {s for _, s, _ in code} == {"O", "U"}


def test_gauss_code_hopf():
    codes = gauss_code(load("hopf"))
    assert sorted(len(c) for c in codes) == [2, 2]


def test_gauss_code_purely_virtual():
    text = "vlink\ncrossing v1 V\nconnect v1.2 v1.1\nconnect v1.3 v1.0\n"
    d = parse_diagram(text)
    assert gauss_code(d) == [[]]
    assert component_count(d) == 1
