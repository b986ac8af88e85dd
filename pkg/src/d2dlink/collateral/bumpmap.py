"""Bump-map text files: one row per line, whitespace-separated role tokens, '.' for empty, '#' comments."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

ROLES = ("tx", "rx", "vdd", "vss", "other")
EMPTY = "."


class BumpMapError(ValueError):
    pass


@dataclass(frozen=True)
class BumpMap:
    grid: tuple[tuple[str, ...], ...]

    @property
    def rows(self) -> int:
        return len(self.grid)

    @property
    def cols(self) -> int:
        return len(self.grid[0]) if self.grid else 0

    def count(self, role: str) -> int:
        return sum(row.count(role) for row in self.grid)

    def sites(self):
        """(row, col, role) for every non-empty site in reading order."""
        for r, row in enumerate(self.grid):
            for c, tok in enumerate(row):
                if tok != EMPTY:
                    yield r, c, tok


def parse_bump_map_text(text: str, lane_count: int, source: str = "<bump map>") -> BumpMap:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = tuple(t.lower() for t in line.split())
        for t in toks:
            if t not in ROLES and t != EMPTY:
                raise BumpMapError(f"{source}:{lineno}: unknown token {t!r} (expected {', '.join(ROLES)} or '.')")
        if rows and len(toks) != len(rows[0]):
            raise BumpMapError(f"{source}:{lineno}: ragged row with {len(toks)} sites, expected {len(rows[0])}")
        rows.append(toks)
    if not rows:
        raise BumpMapError(f"{source}: no bump rows")
    bm = BumpMap(tuple(rows))
    n_tx, n_rx = bm.count("tx"), bm.count("rx")
    bad = [f"{role}={n} ≠ lane_count={lane_count}" for role, n in (("tx", n_tx), ("rx", n_rx)) if n != lane_count]
    if bad:
        raise BumpMapError(f"{source}: " + "; ".join(bad))
    return bm


def parse_bump_map(path: str | Path, lane_count: int) -> BumpMap:
    path = Path(path)
    if not path.is_file():
        raise BumpMapError(f"bump map not found: {path}")
    return parse_bump_map_text(path.read_text(), lane_count, str(path))
