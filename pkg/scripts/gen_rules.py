"""Regenerate the shipped rule files from the schema enumerations.

Run from the repository root:  python3 scripts/gen_rules.py
"""
from pathlib import Path

from vmoves.rules import _generate_builtin, parse_rule, serialize_rule

out = Path(__file__).resolve().parent.parent / "src" / "vmoves" / "rules"
out.mkdir(exist_ok=True)
for old in out.glob("*.vrule"):
    old.unlink()
schemas = _generate_builtin()
for s in schemas:
    text = serialize_rule(s)
    back = parse_rule(text)
    assert back.name == s.name and back.family == s.family
    assert back.lhs.canonical() == s.lhs.canonical()
    assert back.rhs.canonical() == s.rhs.canonical()
    assert back.macro == s.macro and back.oriented == s.oriented
    (out / f"{s.name}.vrule").write_text(text)
print(f"wrote {len(schemas)} rule files to {out}")
