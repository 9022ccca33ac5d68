"""Synchronous average consensus and the spatial-sum primitive.

The iteration is executed as a dense product ``W @ a``; because ``W`` is zero
outside each node's neighbourhood this is exactly the node-local update.  The
ledger charges one broadcast per node per iteration, which is the cost a
real deployment would pay.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TransmissionLedger:
    n_nodes: int
    per_node_broadcasts: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.per_node_broadcasts is None:
            self.per_node_broadcasts = np.zeros(self.n_nodes, dtype=np.int64)
        else:
            self.per_node_broadcasts = np.asarray(self.per_node_broadcasts, dtype=np.int64)

    @property
    def total_broadcasts(self) -> int:
        return int(self.per_node_broadcasts.sum())

    def record_round(self, count: int = 1) -> None:
        self.per_node_broadcasts += count

    def merge(self, other: "TransmissionLedger") -> "TransmissionLedger":
        if other.n_nodes != self.n_nodes:
            raise ValueError("cannot merge ledgers of different network sizes")
        return TransmissionLedger(self.n_nodes, self.per_node_broadcasts + other.per_node_broadcasts)


def _check(W, a):
    W = np.asarray(W, dtype=float)
    a = np.asarray(a, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"weight matrix must be square, got {W.shape}")
    if a.shape[0] != W.shape[0]:
        raise ValueError(f"value vector has {a.shape[0]} entries for {W.shape[0]} nodes")
    return W, a


def _runs(a: np.ndarray) -> int:
    # extra trailing axes hold independent consensus runs over the same network
    return int(np.prod(a.shape[1:], dtype=np.int64))


def consensus_iterate(W, a, ledger: TransmissionLedger | None = None) -> np.ndarray:
    """One exchange round: every node averages its neighbours' values with weights ``W``."""
    W, a = _check(W, a)
    if ledger is not None:
        ledger.record_round(_runs(a))
    return np.tensordot(W, a, axes=1)


def consensus_run(W, a, n_it: int, ledger: TransmissionLedger | None = None) -> np.ndarray:
    """States ``a(0), ..., a(n_it)`` stacked along a new leading axis."""
    W, a = _check(W, a)
    states = [a]
    for _ in range(n_it):
        a = consensus_iterate(W, a, ledger)
        states.append(a)
    return np.stack(states)


def spatial_sum(W, a, n_it: int, ledger: TransmissionLedger | None = None) -> np.ndarray:
    """Each node's estimate ``N * a_k(n_it)`` of the network-wide sum of ``a``."""
    if n_it < 1:
        raise ValueError(f"n_it must be >= 1, got {n_it}")
    W, a = _check(W, a)
    for _ in range(n_it):
        a = consensus_iterate(W, a, ledger)
    return W.shape[0] * a
