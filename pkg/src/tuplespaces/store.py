"""Thread-safe local tuple store with indexed lookup and blocking waiters.

Layout mirrors a hash table of buckets: a tuple lands in the bucket keyed by
(arity, first field) when its first field is a string, else (arity, None).
Within a bucket tuples keep insertion order; selection across buckets is by
global insertion stamp, so every probe returns the oldest match (FIFO).  That
tie-break is a determinism choice: it makes the brute-force scan oracle exact.

Blocking reads and takes register a waiter and park on a per-waiter event.
No lock is held while parked, so an out on any bucket always proceeds.  When
an out arrives it completes every matching non-destructive waiter and then at
most one destructive waiter (the oldest registered), which consumes the tuple
before it ever becomes visible to probes.
"""

from __future__ import annotations

import threading
from typing import Callable, Optional

from .errors import SpaceTimeout, WaiterCancelled
from .tuples import LITERAL, STR, Template, Tuple, match

# Waiter states.
_PENDING = 0
_SATISFIED = 1
_CANCELLED = 2


class Waiter:
    """A parked blocking request; transitions exactly once under the space lock."""

    __slots__ = ("template", "destructive", "state", "result", "event", "on_complete", "_space", "order")

    def __init__(self, space: "LocalSpace", template: Template, destructive: bool,
                 on_complete: Optional[Callable[["Waiter"], None]], order: int):
        self.template = template
        self.destructive = destructive
        self.state = _PENDING
        self.result: Optional[Tuple] = None
        self.event = threading.Event()
        self.on_complete = on_complete
        self._space = space
        self.order = order

    @property
    def satisfied(self) -> bool:
        return self.state == _SATISFIED

    @property
    def cancelled(self) -> bool:
        return self.state == _CANCELLED

    def wait(self, timeout: float | None = None) -> Optional[Tuple]:
        """Block until completed or cancelled; None on local timeout.

        A timeout here does NOT deregister the waiter; use cancel() for that.
        """
        self.event.wait(timeout)
        return self.result

    def cancel(self) -> bool:
        """Deregister if still pending.  False means it was already satisfied
        (the tuple, possibly consumed, must still be delivered)."""
        return self._space.cancel_waiter(self)


class LocalSpace:
    """An indexed concurrent multiset of tuples with blocking read/take."""

    def __init__(self, name: str = "local"):
        self.name = name
        self._lock = threading.Lock()
        self._buckets: dict[tuple, list] = {}  # key -> list of (stamp, Tuple)
        self._waiters: list[Waiter] = []
        self._stamp = 0
        self._order = 0

    # -- indexing ---------------------------------------------------------

    @staticmethod
    def bucket_key(tup: Tuple) -> tuple:
        first = tup.fields[0]
        head = first.data if first.tag == STR else None
        return (tup.arity, head)

    def _candidate_keys(self, tpl: Template) -> list:
        ar = tpl.arity
        first = tpl.fields[0]
        if first.kind == LITERAL and first.tag == STR:
            # One literal-string bucket plus the non-string-headed bucket.
            return [(ar, first.value.data), (ar, None)]
        return [k for k in self._buckets if k[0] == ar]

    def _find_earliest(self, tpl: Template):
        """Earliest matching (stamp, key, index, tuple) or None.  Lock held."""
        best = None
        for key in self._candidate_keys(tpl):
            bucket = self._buckets.get(key)
            if not bucket:
                continue
            for idx, (stamp, tup) in enumerate(bucket):
                if match(tpl, tup):
                    if best is None or stamp < best[0]:
                        best = (stamp, key, idx, tup)
                    break  # bucket is stamp-ordered; first match is its earliest
        return best

    def _remove_at(self, key, idx):
        bucket = self._buckets[key]
        bucket.pop(idx)
        if not bucket:
            del self._buckets[key]

    # -- operations -------------------------------------------------------

    def out(self, tup: Tuple) -> None:
        """Insert a tuple, waking exactly the waiters it can satisfy."""
        if not isinstance(tup, Tuple):
            raise TypeError("out expects a Tuple")
        to_complete: list[Waiter] = []
        with self._lock:
            self._stamp += 1
            stamp = self._stamp
            consumed = False
            if self._waiters:
                survivors = []
                taker: Optional[Waiter] = None
                for w in self._waiters:
                    if match(w.template, tup):
                        if w.destructive:
                            if taker is None:
                                taker = w  # oldest registered destructive waiter
                            else:
                                survivors.append(w)
                        else:
                            w.state = _SATISFIED
                            w.result = tup
                            to_complete.append(w)
                    else:
                        survivors.append(w)
                if taker is not None:
                    taker.state = _SATISFIED
                    taker.result = tup
                    to_complete.append(taker)
                    consumed = True
                self._waiters = survivors
            if not consumed:
                self._buckets.setdefault(self.bucket_key(tup), []).append((stamp, tup))
        for w in to_complete:
            w.event.set()
            if w.on_complete is not None:
                w.on_complete(w)

    def rdp(self, tpl: Template) -> Optional[Tuple]:
        """Non-blocking read probe: oldest match or None; store unchanged."""
        with self._lock:
            found = self._find_earliest(tpl)
            return found[3] if found else None

    def inp(self, tpl: Template) -> Optional[Tuple]:
        """Non-blocking take probe: atomically remove and return oldest match."""
        with self._lock:
            found = self._find_earliest(tpl)
            if found is None:
                return None
            _, key, idx, tup = found
            self._remove_at(key, idx)
            return tup

    def count(self, tpl: Template) -> int:
        with self._lock:
            total = 0
            for key in self._candidate_keys(tpl):
                for _, tup in self._buckets.get(key, ()):
                    if match(tpl, tup):
                        total += 1
            return total

    def register_waiter(self, tpl: Template, destructive: bool,
                        on_complete: Optional[Callable[[Waiter], None]] = None) -> Waiter:
        """Atomically probe-or-park.

        If a match is already stored the returned waiter comes back satisfied
        (and the tuple removed when destructive); otherwise it is registered
        and will be completed by a future out, a cancel, or never.
        """
        with self._lock:
            self._order += 1
            w = Waiter(self, tpl, destructive, on_complete, self._order)
            found = self._find_earliest(tpl)
            if found is not None:
                _, key, idx, tup = found
                if destructive:
                    self._remove_at(key, idx)
                w.state = _SATISFIED
                w.result = tup
            else:
                self._waiters.append(w)
        if w.state == _SATISFIED:
            w.event.set()
            if on_complete is not None:
                on_complete(w)
        return w

    def cancel_waiter(self, w: Waiter) -> bool:
        with self._lock:
            if w.state != _PENDING:
                return False
            w.state = _CANCELLED
            try:
                self._waiters.remove(w)
            except ValueError:
                pass
        w.event.set()
        if w.on_complete is not None:
            w.on_complete(w)
        return True

    def rd(self, tpl: Template, timeout: float | None = None) -> Tuple:
        """Blocking read: returns a match as soon as one exists; store unchanged."""
        return self._blocking(tpl, destructive=False, timeout=timeout)

    def in_(self, tpl: Template, timeout: float | None = None) -> Tuple:
        """Blocking take: as rd but the returned tuple is atomically removed."""
        return self._blocking(tpl, destructive=True, timeout=timeout)

    def _blocking(self, tpl: Template, destructive: bool, timeout: float | None) -> Tuple:
        w = self.register_waiter(tpl, destructive)
        if w.state == _SATISFIED:
            return w.result
        w.wait(timeout)
        timed_out = False
        with self._lock:
            if w.state == _PENDING:
                # Deregister under the lock: a racing out has either completed
                # us already or never will.
                w.state = _CANCELLED
                try:
                    self._waiters.remove(w)
                except ValueError:
                    pass
                timed_out = True
        if w.state == _SATISFIED:
            # A destructive waiter satisfied during the timeout race consumed
            # the tuple, so it must be delivered, not dropped.
            return w.result
        if timed_out:
            raise SpaceTimeout(f"no match within {timeout!r}s on space {self.name!r}")
        raise WaiterCancelled(f"blocking op on {self.name!r} cancelled")

    # -- diagnostics (tests and tooling) -----------------------------------

    def size(self) -> int:
        with self._lock:
            return sum(len(b) for b in self._buckets.values())

    def snapshot(self) -> list[Tuple]:
        """All stored tuples in global stamp order (diagnostic copy)."""
        with self._lock:
            entries = [e for b in self._buckets.values() for e in b]
        entries.sort(key=lambda e: e[0])
        return [t for _, t in entries]

    def pending_waiter_count(self) -> int:
        with self._lock:
            return len(self._waiters)

    def check_wakeup_completeness(self) -> bool:
        """At quiescence no registered waiter may match a stored tuple."""
        with self._lock:
            for w in self._waiters:
                for key in self._candidate_keys(w.template):
                    for _, tup in self._buckets.get(key, ()):
                        if match(w.template, tup):
                            return False
            return True
