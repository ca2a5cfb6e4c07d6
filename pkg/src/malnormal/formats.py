"""Text and JSON formats for subgroups, virtually free data and reports."""

from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import ParseError
from .stallings import Subgroup, build
from .vfree import FiniteGroupTable, FreeAutomorphism, VirtuallyFreeData
from .words import Word


def parse_subgroup(text: str) -> Subgroup:
    """Subgroup file: first line ``rank m``, then one word per line.
    ``#`` starts a comment."""
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ParseError("empty subgroup file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "rank" or not head[1].isdigit():
        raise ParseError(f"first line must be 'rank m', got {lines[0]!r}")
    m = int(head[1])
    return build([Word.parse(w, m) for w in lines[1:]], rank=m)


def load_subgroup(path) -> Subgroup:
    return parse_subgroup(Path(path).read_text())


def dump_subgroup(H: Subgroup, basis: bool = False) -> str:
    words = H.basis() if basis else H.generators
    return "\n".join([f"rank {H.ambient_rank}"] + [str(w) for w in words]) + "\n"


def parse_vfree(data: dict) -> VirtuallyFreeData:
    try:
        m = int(data["rank"])
        n = int(data["q_order"])
        table = data["table"]
        action = data["action"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad virtually free data: {exc}") from None
    if len(table) != n:
        raise ParseError(f"table has {len(table)} rows, q_order is {n}")
    Q = FiniteGroupTable.from_table(table)
    autos = []
    for q in range(n):
        key = f"q_{q}"
        if key in action:
            autos.append(FreeAutomorphism.parse(action[key], m))
        elif q == Q.identity:
            autos.append(FreeAutomorphism.identity(m))
        else:
            raise ParseError(f"missing action for {key}")
    return VirtuallyFreeData(m, Q, tuple(autos))


def load_vfree(path) -> VirtuallyFreeData:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return parse_vfree(data)


def dump_vfree(vf: VirtuallyFreeData) -> dict:
    return {
        "rank": vf.rank,
        "q_order": vf.Q.order,
        "table": [list(r) for r in vf.Q.table],
        "action": {f"q_{q}": [str(w) for w in phi.images] for q, phi in enumerate(vf.action)},
    }


def _plain(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "infinite"
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Word):
        return str(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False)
