"""Move-sequence certificates (`vtrace`) and the independent checker.

A trace embeds its initial diagram, declares a move set plus extra
schemas, and lists steps as (schema, direction, site).  Checking replays
every step through the engine with full site revalidation, enforces
that each step's schema family is inside the declared set, and compares
optional per-step digests of the canonical form, so a corrupted
certificate fails at the first offending step.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

from .diagram import Diagram, VlinkError, canonical_form, parse_diagram, serialize_diagram
from .matching import Site, StaleSiteError, apply_move
from .rules import MoveSchema, lookup, move_set_families


def digest(d: Diagram) -> str:
    return hashlib.sha256(canonical_form(d)).hexdigest()[:16]


@dataclass(frozen=True)
class Step:
    index: int
    schema: str
    direction: str
    cmap: tuple[tuple[str, str], ...]
    legs: tuple[tuple[int, tuple[str, int]], ...]
    digest: str | None = None

    def site(self, schema: MoveSchema) -> Site:
        src = schema.source(self.direction)
        legmap = dict(self.legs)
        arcmap = {}
        for k, _ in src.arcs():
            if k not in legmap:
                raise VlinkError(f"step {self.index}: missing arc leg {k}")
            arcmap[k] = legmap[k]
        return Site(self.schema, self.direction, self.cmap, tuple(sorted(arcmap.items())))


@dataclass
class Trace:
    moveset: str
    extras: tuple[str, ...]
    initial: Diagram
    steps: list[Step] = field(default_factory=list)

    def schema_names(self) -> set[str]:
        return {s.schema for s in self.steps}


class TraceError(ValueError):
    def __init__(self, message: str, step: int | None = None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


def step_for(
    index: int,
    schema: MoveSchema,
    site: Site,
    before: Diagram,
    after: Diagram | None,
) -> Step:
    """Encode a site against the diagram it applies to."""
    src = schema.source(site.direction)
    cmap = site.crossing_map()
    arcmap = site.arc_map()
    legs: list[tuple[int, tuple[str, int]]] = []
    for k, (attach, direction) in enumerate(src.legs):
        if attach[0] == "port":
            legs.append((k, (cmap[attach[1]], attach[2])))
        elif direction == "in":
            legs.append((k, arcmap[k]))
        else:
            partner = attach[1]
            legs.append((k, before.succ[arcmap[partner]]))
    return Step(
        index,
        schema.name,
        site.direction,
        tuple(sorted(cmap.items())),
        tuple(legs),
        digest(after) if after is not None else None,
    )


def serialize_trace(t: Trace) -> str:
    out = ["vtrace 1", f"moveset {t.moveset}"]
    for e in t.extras:
        out.append(f"extra {e}")
    out.append("begin-diagram")
    out.append(serialize_diagram(t.initial).rstrip("\n"))
    out.append("end-diagram")
    for s in t.steps:
        parts = [f"step {s.index} {s.schema} {s.direction}"]
        if s.cmap:
            parts.append("map " + ",".join(f"{a}={b}" for a, b in s.cmap))
        parts.append(
            "legs " + ",".join(f"{k}={c}.{i}" for k, (c, i) in s.legs)
        )
        if s.digest:
            parts.append(f"digest {s.digest}")
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"


_PORT_RE = re.compile(r"^(\w+)\.([0-3])$")


def parse_trace(text: str) -> Trace:
    lines = text.splitlines()
    pos = 0

    def current() -> str:
        return lines[pos].split("#", 1)[0].strip()

    while pos < len(lines) and not current():
        pos += 1
    if pos >= len(lines) or current() != "vtrace 1":
        raise VlinkError("trace must start with 'vtrace 1'", pos + 1)
    pos += 1
    moveset = None
    extras: list[str] = []
    while pos < len(lines):
        s = current()
        if not s:
            pos += 1
            continue
        toks = s.split()
        if toks[0] == "moveset" and len(toks) == 2:
            moveset = toks[1]
        elif toks[0] == "extra" and len(toks) == 2:
            extras.append(toks[1])
        elif s == "begin-diagram":
            pos += 1
            break
        else:
            raise VlinkError(f"unexpected line {s!r}", pos + 1)
        pos += 1
    if moveset is None:
        raise VlinkError("trace missing moveset")
    dia_lines = []
    while pos < len(lines) and current() != "end-diagram":
        dia_lines.append(lines[pos])
        pos += 1
    if pos >= len(lines):
        raise VlinkError("unterminated diagram block")
    pos += 1
    initial = parse_diagram("\n".join(dia_lines))
    move_set_families(moveset)  # unknown set name fails here
    steps: list[Step] = []
    for ln in range(pos, len(lines)):
        s = lines[ln].split("#", 1)[0].strip()
        if not s:
            continue
        toks = s.split()
        if toks[0] != "step" or len(toks) < 4:
            raise VlinkError(f"bad step line {s!r}", ln + 1)
        try:
            index = int(toks[1])
        except ValueError:
            raise VlinkError(f"bad step index {toks[1]!r}", ln + 1)
        schema, direction = toks[2], toks[3]
        lookup(schema)  # unknown schema name is a parse error
        if direction not in ("f", "b"):
            raise VlinkError(f"bad direction {direction!r}", ln + 1)
        cmap: list[tuple[str, str]] = []
        legs: list[tuple[int, tuple[str, int]]] = []
        dg: str | None = None
        i = 4
        while i < len(toks):
            key = toks[i]
            if key == "map":
                for pair in toks[i + 1].split(","):
                    a, _, b = pair.partition("=")
                    if not a or not b:
                        raise VlinkError(f"bad map entry {pair!r}", ln + 1)
                    cmap.append((a, b))
                i += 2
            elif key == "legs":
                for pair in toks[i + 1].split(","):
                    k, _, p = pair.partition("=")
                    m = _PORT_RE.match(p)
                    if not k.isdigit() or not m:
                        raise VlinkError(f"bad leg entry {pair!r}", ln + 1)
                    legs.append((int(k), (m.group(1), int(m.group(2)))))
                i += 2
            elif key == "digest":
                dg = toks[i + 1]
                i += 2
            else:
                raise VlinkError(f"unknown step field {key!r}", ln + 1)
        steps.append(Step(index, schema, direction, tuple(sorted(cmap)), tuple(legs), dg))
    return Trace(moveset, tuple(extras), initial, steps)


def check_trace(t: Trace) -> Diagram:
    """Replay the trace; returns the final diagram or raises TraceError."""
    allowed = move_set_families(t.moveset, t.extras)
    d = t.initial
    for i, step in enumerate(t.steps):
        if step.index != i:
            raise TraceError(f"expected index {i}, found {step.index}", i)
        try:
            schema = lookup(step.schema)
        except KeyError as e:
            raise TraceError(str(e), i)
        if schema.family not in allowed:
            raise TraceError(
                f"schema {step.schema} (family {schema.family}) outside "
                f"move set {t.moveset} + extras",
                i,
            )
        src = schema.source(step.direction)
        site = step.site(schema)
        # every declared leg anchor must agree with the site embedding
        cmap = site.crossing_map()
        arcmap = site.arc_map()
        for k, anchor in step.legs:
            attach, direction = src.legs[k]
            if attach[0] == "port":
                want = (cmap[attach[1]], attach[2])
            elif direction == "in":
                want = arcmap[k]
            else:
                tail = arcmap[attach[1]]
                want = d.succ.get(tail)
            if want != anchor:
                raise TraceError(f"leg {k} anchor {anchor} inconsistent", i)
        try:
            d, _ = apply_move(d, schema, site)
        except StaleSiteError as e:
            raise TraceError(str(e), i)
        if step.digest is not None and digest(d) != step.digest:
            raise TraceError("digest mismatch", i)
    return d
