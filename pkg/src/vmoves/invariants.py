"""Cheap diagram invariants used as move-soundness oracles."""

from __future__ import annotations

from dataclasses import dataclass

from .diagram import Diagram, component_count, gauss_code, validate


@dataclass(frozen=True)
class InvariantReport:
    components: int
    classical_count: int
    virtual_count: int
    odd_writhe: int | None  # single-component diagrams only

    def lines(self) -> list[str]:
        out = [
            f"components={self.components}",
            f"classical={self.classical_count}",
            f"virtual={self.virtual_count}",
        ]
        if self.odd_writhe is not None:
            out.append(f"odd_writhe={self.odd_writhe}")
        return out


def odd_writhe(d: Diagram) -> int:
    """Sum of signs over classical crossings with oddly interleaved
    chords; zero on every classical diagram, 2 on the virtual trefoil."""
    if component_count(d) != 1:
        raise ValueError("odd writhe needs a single-component diagram")
    codes = [c for c in gauss_code(d) if c]
    if not codes:
        return 0
    code = codes[0]
    pos: dict[str, list[int]] = {}
    for i, (c, _, _) in enumerate(code):
        pos.setdefault(c, []).append(i)
    total = 0
    for c, (i, j) in pos.items():
        if (j - i - 1) % 2 == 1:
            total += code[i][2]
    return total


def report(d: Diagram) -> InvariantReport:
    bad = validate(d)
    if bad:
        raise ValueError("invalid diagram: " + bad[0])
    comps = component_count(d)
    classical = len(d.classical_crossings())
    virtual = len(d.virtual_crossings())
    ow = odd_writhe(d) if comps == 1 else None
    return InvariantReport(comps, classical, virtual, ow)
