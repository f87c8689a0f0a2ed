"""Residual-bit accounting for rateless transmission.

A fixed batch of source data (``n_total``, in the same units as the
per-slot capacities, nats here) is streamed until the accumulated
capacity covers it.  ``decode_check`` replays the reverse-order
feasibility argument: the final slot carries only the remainder, every
earlier slot exactly its own capacity.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class LedgerError(RuntimeError):
    """Misuse of a ledger (e.g. stepping after completion)."""


@dataclass
class RateLedger:
    """Append-only per-slot capacity record with completion detection.

    ``completed_at`` is the number of slots consumed when the cumulative
    capacity first reaches ``n_total`` (None while still transmitting).
    """

    n_total: float
    capacities: list[float] = field(default_factory=list)
    completed_at: int | None = None

    def __post_init__(self):
        if not self.n_total > 0:
            raise ValueError("n_total must be positive")

    @property
    def delivered(self) -> float:
        return float(sum(self.capacities))

    @property
    def residual(self) -> float:
        return max(0.0, self.n_total - self.delivered)

    @property
    def completed(self) -> bool:
        return self.completed_at is not None

    @property
    def overhead(self) -> float | None:
        """Excess capacity spent beyond n_total; defined once completed."""
        if not self.completed:
            return None
        return self.delivered - self.n_total

    @property
    def relative_overhead(self) -> float | None:
        if not self.completed:
            return None
        return (self.delivered - self.n_total) / self.n_total

    def record(self, r_t: float) -> None:
        """Append one slot's capacity; marks completion at the first slot
        whose cumulative capacity reaches n_total."""
        if self.completed:
            raise LedgerError("ledger already completed; no further slots accepted")
        if r_t < 0:
            raise ValueError("per-slot capacity must be nonnegative")
        self.capacities.append(float(r_t))
        if self.delivered >= self.n_total:
            self.completed_at = len(self.capacities)


def ledger_step(ledger: RateLedger, r_t: float) -> RateLedger:
    """Functional wrapper around RateLedger.record (returns the same object)."""
    ledger.record(r_t)
    return ledger


def decode_check(ledger: RateLedger) -> list[dict]:
    """Reverse-order decode feasibility table for a completed ledger.

    The last slot is assigned the remainder n_total - sum of the earlier
    capacities; each earlier slot is assigned exactly its capacity.  Every
    assignment must fit within its slot's capacity; the assignments sum to
    n_total.  A violation indicates a corrupted ledger and raises.
    """
    if not ledger.completed:
        raise LedgerError("decode check requires a completed ledger")
    caps = ledger.capacities
    t_done = ledger.completed_at
    head = sum(caps[: t_done - 1])
    table = []
    for tau in range(t_done):
        assigned = caps[tau] if tau < t_done - 1 else ledger.n_total - head
        if assigned > caps[tau] + 1e-12:
            raise LedgerError(
                f"slot {tau} assignment {assigned!r} exceeds capacity {caps[tau]!r}"
            )
        table.append({"slot": tau, "assigned": float(assigned), "capacity": caps[tau]})
    return table
