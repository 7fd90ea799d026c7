"""Low-level rotation-system maps: face tracing and genus checks.

Everything in this package that needs an embedding question answered
(planarity of a diagram, disk-embeddability of a tangle, legality of a
rewrite site) reduces to face tracing on a small rotation map.  A map is
a set of vertices, each carrying a cyclic counterclockwise list of dart
slots, plus an involution pairing darts into edges.  Degree-1 vertices
are allowed and behave like dangling stub tips: a face walk U-turns
around them, which is exactly what boundary-region tracing needs.
"""

from __future__ import annotations


class RotMap:
    """A closed map given by rotations and an edge involution."""

    def __init__(self) -> None:
        self.rot: dict[object, list[object]] = {}
        self.theta: dict[object, object] = {}
        self._dart_vertex: dict[object, object] = {}
        self._dart_pos: dict[object, int] = {}

    def add_vertex(self, v: object, darts: list[object]) -> None:
        if v in self.rot:
            raise ValueError(f"duplicate vertex {v!r}")
        self.rot[v] = list(darts)
        for i, d in enumerate(darts):
            if d in self._dart_vertex:
                raise ValueError(f"duplicate dart {d!r}")
            self._dart_vertex[d] = v
            self._dart_pos[d] = i

    def add_edge(self, d1: object, d2: object) -> None:
        if d1 in self.theta or d2 in self.theta or d1 == d2:
            raise ValueError("dart already paired")
        self.theta[d1] = d2
        self.theta[d2] = d1

    def _next(self, d: object) -> object:
        v = self._dart_vertex[d]
        ring = self.rot[v]
        return ring[(self._dart_pos[d] + 1) % len(ring)]

    def faces(self) -> list[list[object]]:
        """Face walks as dart cycles; every dart lies in exactly one walk.

        The successor of dart d is the next dart counterclockwise after
        d's partner at the far vertex, so each walk keeps one region on a
        fixed side all the way round.
        """
        for d in self._dart_vertex:
            if d not in self.theta:
                raise ValueError(f"unpaired dart {d!r}")
        seen: set[object] = set()
        walks = []
        for d0 in self._dart_vertex:
            if d0 in seen:
                continue
            walk = []
            d = d0
            while d not in seen:
                seen.add(d)
                walk.append(d)
                d = self._next(self.theta[d])
            walks.append(walk)
        return walks

    def components(self) -> list[set[object]]:
        """Connected components as vertex sets (via edges)."""
        comps = []
        unvisited = set(self.rot)
        while unvisited:
            v0 = unvisited.pop()
            comp = {v0}
            stack = [v0]
            while stack:
                v = stack.pop()
                for d in self.rot[v]:
                    w = self._dart_vertex[self.theta[d]]
                    if w not in comp:
                        comp.add(w)
                        unvisited.discard(w)
                        stack.append(w)
            comps.append(comp)
        return comps

    def genus_by_component(self) -> list[tuple[set[object], int]]:
        """(vertices, 2-2g) per connected component; 2 means spherical."""
        face_of: dict[object, int] = {}
        walks = self.faces()
        for i, walk in enumerate(walks):
            for d in walk:
                face_of[d] = i
        out = []
        for comp in self.components():
            v = len(comp)
            darts = [d for w in comp for d in self.rot[w]]
            e = len(darts) // 2
            f = len({face_of[d] for d in darts})
            out.append((comp, v - e + f))
        return out

    def is_planar(self) -> bool:
        return all(chi == 2 for _, chi in self.genus_by_component())
