"""Arc evolution during one placement pass, replayed with instrumentation.

While symbols l = n, n-1, ..., 1 are being placed, the indices [n] are
partitioned into *arcs*: chains j -> y_j of placement choices.  An open
arc is a sequence (a_1, ..., a_s) with head a_1 (an unused place) and
tail a_s (the unique element < l+1); a closed arc is such a chain bitten
into a cycle.  The tracker starts at configuration step n+1 (n singleton
open arcs) and applies one transition per placement:

  * if symbol l is placed at a place inside its own arc, that arc closes
    (its head is necessarily y_l and its tail is l);
  * otherwise the arc tailed at l is prepended to the arc headed at y_l.

At step 1 nothing is open and the closed arcs are exactly the cycles of
the resulting permutation (an arc chain follows the inverse permutation,
so a closed arc read backwards is a forward cycle).

The walk (w_t, z_t) follows arc tails from a start index s through the
configurations at steps z_0 = s > z_1 > ... and freezes (w = 0) the
first time s sits in a closed arc; its final z value is the minimum of
the cycle through s in the output permutation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .sampler import InvariantViolation

__all__ = [
    "ArcStatus",
    "ArcTracker",
    "TrackWalk",
    "available_heads",
    "replay",
    "replay_steps",
    "track_walk",
]


class ArcStatus(NamedTuple):
    closed: bool
    head: int
    tail: int
    arc_id: int


@dataclass
class TrackWalk:
    """Tail-following walk from start index s; w and z have length t_stop + 1."""

    s: int
    w: list[int]
    z: list[int]
    t_stop: int

    @property
    def terminal(self) -> int:
        """z at the last live time, equal to min of the cycle through s."""
        return self.z[self.t_stop - 1]


class ArcTracker:
    """Open/closed arc partition of [n] during one placement pass.

    Arc membership lives in a union-find keyed by index; each component
    root stores head, tail and a closed flag, and an arc's element order
    is recovered by following the recorded placement choices from its
    head.  Arc ids are the minimum element of the arc (stable under the
    merges, which only take unions).
    """

    def __init__(self, b, log_events: bool = False):
        b = np.asarray(b, dtype=np.float64)
        n = b.size
        if n < 1:
            raise ValueError("need at least one place")
        if np.any(b < np.arange(1, n + 1)):
            raise InvariantViolation("arc replay requires b_p >= p for every place")
        self.n = n
        self.b = b
        self.step = n + 1
        self._parent = np.arange(n + 1, dtype=np.int64)
        self._rank = np.zeros(n + 1, dtype=np.int64)
        self._head = np.arange(n + 1, dtype=np.int64)
        self._tail = np.arange(n + 1, dtype=np.int64)
        self._min = np.arange(n + 1, dtype=np.int64)
        self._closed = np.zeros(n + 1, dtype=bool)
        self._y = np.zeros(n + 1, dtype=np.int64)
        self._used = np.zeros(n + 1, dtype=bool)
        self._open_roots: set[int] = set(range(1, n + 1))
        self.events: list[dict] | None = [] if log_events else None

    def _find(self, j: int) -> int:
        parent = self._parent
        root = j
        while parent[root] != root:
            root = parent[root]
        while parent[j] != root:
            parent[j], j = root, parent[j]
        return root

    def is_used(self, p: int) -> bool:
        return bool(self._used[p])

    def status(self, j: int) -> ArcStatus:
        if not 1 <= j <= self.n:
            raise ValueError(f"index {j} outside [1, {self.n}]")
        r = self._find(j)
        return ArcStatus(
            closed=bool(self._closed[r]),
            head=int(self._head[r]),
            tail=int(self._tail[r]),
            arc_id=int(self._min[r]),
        )

    def transition(self, l: int, y_l: int) -> None:
        """Apply the placement of symbol l at place y_l."""
        if l != self.step - 1:
            raise ValueError(f"expected transition for symbol {self.step - 1}, got {l}")
        if not 1 <= y_l <= self.n:
            raise ValueError(f"place {y_l} outside [1, {self.n}]")
        if self._used[y_l]:
            raise ValueError(f"place {y_l} already used")
        if self.b[y_l - 1] < l:
            raise ValueError(f"place {y_l} ineligible for symbol {l}: b = {self.b[y_l - 1]}")
        ra = self._find(l)
        rc = self._find(y_l)
        if self._closed[ra] or self._closed[rc]:
            raise InvariantViolation("transition endpoints must lie in open arcs")
        if self._tail[ra] != l:
            raise InvariantViolation(f"symbol {l} is not the tail of its open arc")
        if self._head[rc] != y_l:
            raise InvariantViolation(f"place {y_l} is not the head of its open arc")
        self._used[y_l] = True
        self._y[l] = y_l
        if ra == rc:
            self._closed[ra] = True
            self._open_roots.discard(ra)
            if self.events is not None:
                self.events.append(
                    {
                        "step": l,
                        "kind": "close",
                        "arc_ids": [int(self._min[ra])],
                        "head": int(self._head[ra]),
                        "tail": int(self._tail[ra]),
                    }
                )
        else:
            if self.events is not None:
                self.events.append(
                    {
                        "step": l,
                        "kind": "merge",
                        "arc_ids": [int(self._min[ra]), int(self._min[rc])],
                        "head": int(self._head[ra]),
                        "tail": int(self._tail[rc]),
                    }
                )
            head, tail = self._head[ra], self._tail[rc]
            mn = min(self._min[ra], self._min[rc])
            self._open_roots.discard(ra)
            self._open_roots.discard(rc)
            if self._rank[ra] < self._rank[rc]:
                ra, rc = rc, ra
            self._parent[rc] = ra
            if self._rank[ra] == self._rank[rc]:
                self._rank[ra] += 1
            self._head[ra] = head
            self._tail[ra] = tail
            self._min[ra] = mn
            self._open_roots.add(ra)
        self.step = l

    def _follow(self, start: int, count: int) -> list[int]:
        seq = [start]
        j = start
        for _ in range(count - 1):
            j = int(self._y[j])
            seq.append(j)
        return seq

    def open_arc_sequence(self, j: int) -> tuple[int, ...]:
        """The ordered elements of the open arc containing j, head to tail."""
        st = self.status(j)
        if st.closed:
            raise ValueError(f"{j} lies in a closed arc")
        seq = [st.head]
        p = st.head
        while p != st.tail:
            p = int(self._y[p])
            seq.append(p)
        return tuple(seq)

    def closed_arc_cycle(self, j: int) -> tuple[int, ...]:
        """The closed arc containing j as a forward cycle, minimum first.

        Arc chains follow the inverse permutation, so the recovered chain
        is reversed (after its minimum) to match cycle orientation.
        """
        st = self.status(j)
        if not st.closed:
            raise ValueError(f"{j} lies in an open arc")
        seq = [st.arc_id]
        p = int(self._y[st.arc_id])
        while p != st.arc_id:
            seq.append(p)
            p = int(self._y[p])
        return tuple([seq[0]] + seq[:0:-1])

    def open_arcs(self) -> list[tuple[int, ...]]:
        """All open arcs as head-to-tail sequences, sorted by minimum element."""
        arcs = [self.open_arc_sequence(int(self._head[r])) for r in self._open_roots]
        return sorted(arcs, key=min)

    def closed_cycles(self) -> list[tuple[int, ...]]:
        """All closed arcs as min-first forward cycles, sorted by minimum."""
        seen: set[int] = set()
        cycles = []
        for j in range(1, self.n + 1):
            r = self._find(j)
            if self._closed[r] and r not in seen:
                seen.add(r)
                cycles.append(self.closed_arc_cycle(j))
        return sorted(cycles, key=lambda c: c[0])

    def check_partition(self) -> None:
        """Verify open and closed arcs together partition [n]."""
        cover: list[int] = []
        for arc in self.open_arcs():
            cover.extend(arc)
        for cyc in self.closed_cycles():
            cover.extend(cyc)
        if sorted(cover) != list(range(1, self.n + 1)):
            raise InvariantViolation("arcs do not partition [n]")


def available_heads(tracker: ArcTracker, l: int) -> tuple[frozenset[int], frozenset[int]]:
    """The selectable tail set H'_l and the cutoff set H_l, computed
    independently of each other.

    H_l depends only on the cutoffs: indices j <= l-1 with b_j >= l.
    H'_l collects the tails of the open arcs whose head h is an unused
    place with b_h >= l.  The tracker must sit at configuration step l+1.
    Their contract (checked by tests, not here): H'_l = H_l + {l}, and
    |H'_l| equals the eligible-place count N_l.
    """
    if tracker.step != l + 1:
        raise InvariantViolation(
            f"tracker is at configuration step {tracker.step}, need {l + 1}"
        )
    b = tracker.b
    h = frozenset((np.nonzero(b[: l - 1] >= l)[0] + 1).tolist())
    h_prime = []
    for r in tracker._open_roots:
        head = int(tracker._head[r])
        if not tracker._used[head] and b[head - 1] >= l:
            h_prime.append(int(tracker._tail[r]))
    return frozenset(h_prime), h


def replay_steps(b, y, log_events: bool = False) -> Iterator[tuple[int, ArcTracker]]:
    """Replay a full placement (b, y) and yield (l, tracker) after each transition."""
    y = np.asarray(y, dtype=np.int64)
    tracker = ArcTracker(b, log_events=log_events)
    for l in range(tracker.n, 0, -1):
        tracker.transition(l, int(y[l - 1]))
        yield l, tracker


def replay(b, y, log_events: bool = False) -> ArcTracker:
    """Replay a full placement and return the final tracker (step 1)."""
    tracker = None
    for _, tracker in replay_steps(b, y, log_events=log_events):
        pass
    assert tracker is not None
    return tracker


def track_walk(s: int, b, y) -> TrackWalk:
    """Follow arc tails from s through the replayed configurations.

    z strictly decreases while w = 1, queries happen at configuration
    steps z_0 = s > z_1 > ..., and the final live z equals the minimum
    of the cycle through s.
    """
    b = np.asarray(b, dtype=np.float64)
    n = b.size
    if not 1 <= s <= n:
        raise ValueError(f"start index {s} outside [1, {n}]")
    w = [1]
    z = [s]
    for l, tracker in replay_steps(b, y):
        while l == z[-1] and w[-1] == 1:
            st = tracker.status(s)
            if st.closed:
                w.append(0)
                z.append(z[-1])
                return TrackWalk(s=s, w=w, z=z, t_stop=len(w) - 1)
            if st.tail >= l:
                raise InvariantViolation(f"open arc at step {l} has tail {st.tail} >= {l}")
            w.append(1)
            z.append(st.tail)
    raise InvariantViolation("walk failed to terminate: no closed arc reached")
