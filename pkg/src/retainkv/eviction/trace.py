"""Per-step record of which units each eviction kept."""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger

from retainkv.eviction.cache_pool import HeadCache

TRACE_COLUMNS = ("chunk_step", "layer", "kv_head", "original_position", "retained", "score")


@dataclass(frozen=True)
class TraceRow:
    chunk_step: int
    layer: int
    kv_head: int
    original_position: int
    retained: bool
    score: float


@dataclass
class EvictionTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def record(self, step: int, layer: int, kv_head: int, before: HeadCache, after: HeadCache) -> None:
        kept = np.isin(before.positions, after.positions)
        self.rows.extend(
            TraceRow(step, layer, kv_head, int(p), bool(k), float(s))
            for p, k, s in zip(before.positions, kept, before.scores, strict=True)
        )

    def retained_positions(self, step: int, layer: int, kv_head: int) -> list[int]:
        return [
            r.original_position
            for r in self.rows
            if r.chunk_step == step and r.layer == layer and r.kv_head == kv_head and r.retained
        ]

    @property
    def n_steps(self) -> int:
        return 1 + max((r.chunk_step for r in self.rows), default=-1)

    def write_csv(self, path: str | Path, header_lines: list[str] | None = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            for line in header_lines or []:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for r in self.rows:
                writer.writerow([r.chunk_step, r.layer, r.kv_head, r.original_position, int(r.retained), repr(r.score)])
        logger.info(f"Wrote {len(self.rows)} trace rows to {path}")
        return path
