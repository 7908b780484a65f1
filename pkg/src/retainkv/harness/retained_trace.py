"""Retained-pattern matrices: which original positions survive each chunk step."""

import numpy as np

from retainkv.eviction import EvictionTrace
from retainkv.exceptions import ContractViolation


def trace_retained(trace: EvictionTrace, layer: int, kv_head: int) -> np.ndarray:
    """Binary (steps, positions) matrix; row ``t`` marks positions held after step ``t``."""
    rows = [r for r in trace.rows if r.layer == layer and r.kv_head == kv_head]
    if not rows:
        raise ContractViolation(f"trace holds no rows for layer {layer}, KV head {kv_head}")
    n_positions = 1 + max(r.original_position for r in trace.rows)
    matrix = np.zeros((trace.n_steps, n_positions), dtype=np.int8)
    for r in rows:
        if r.retained:
            matrix[r.chunk_step, r.original_position] = 1
    return matrix


def matrix_rows(matrix: np.ndarray) -> list[list[int]]:
    return [[step, *row.tolist()] for step, row in enumerate(matrix)]
