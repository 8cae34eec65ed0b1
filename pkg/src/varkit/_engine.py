"""Backtracking search over bitmask domains with edge-relation propagation.

Every variable takes a value among the vertices of a fixed target digraph.
A directed constraint ``x -> w`` requires ``(value(x), value(w))`` to be an
edge of the target.  Variables are branched in ascending index order with
values ascending, so solutions come out in lexicographic order of the value
array.  Extra constraints plug in as propagators watching variables.
"""
from __future__ import annotations

from typing import Callable, Iterable, Iterator, Protocol

from .errors import CapExceeded
from .structures import Digraph


def bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def is_singleton(mask: int) -> bool:
    return mask != 0 and mask & (mask - 1) == 0


def single_value(mask: int) -> int:
    return mask.bit_length() - 1


class Propagator(Protocol):
    def initial(self, engine: "Engine") -> bool: ...
    def on_change(self, engine: "Engine", var: int) -> bool: ...
    def check_complete(self, engine: "Engine") -> bool: ...


class Engine:
    """Search state: domains, trail, propagation queue, node counter.

    ``out_of(x)`` / ``in_of(x)`` return the variables constrained to lie at
    the head / tail of an edge leaving / entering ``x``.
    """

    def __init__(self, target: Digraph, domains: list[int],
                 out_of: Callable[[int], Iterable[int]],
                 in_of: Callable[[int], Iterable[int]],
                 propagators: list | None = None,
                 max_nodes: int | None = None):
        self.target = target
        self.full = (1 << target.vertex_count) - 1
        self.dom = list(domains)
        self.out_of = out_of
        self.in_of = in_of
        self.propagators = propagators or []
        self.max_nodes = max_nodes
        self.nodes = 0
        self.trail: list[tuple[int, int]] = []
        self.queue: list[int] = []
        self.queued = [False] * len(domains)
        self._out_support: dict[int, int] = {}
        self._in_support: dict[int, int] = {}
        self.watchers: dict[int, list] = {}

    # -- domain bookkeeping ----------------------------------------------
    def restrict(self, var: int, mask: int) -> bool:
        old = self.dom[var]
        new = old & mask
        if new == old:
            return True
        if new == 0:
            return False
        self.trail.append((var, old))
        self.dom[var] = new
        if not self.queued[var]:
            self.queued[var] = True
            self.queue.append(var)
        return True

    def undo(self, mark: int) -> None:
        trail, dom = self.trail, self.dom
        while len(trail) > mark:
            var, old = trail.pop()
            dom[var] = old

    def watch(self, var: int, key) -> None:
        self.watchers.setdefault(var, []).append(key)

    def out_support(self, mask: int) -> int:
        s = self._out_support.get(mask)
        if s is None:
            s = 0
            for a in bits(mask):
                s |= self.target.out_masks[a]
            self._out_support[mask] = s
        return s

    def in_support(self, mask: int) -> int:
        s = self._in_support.get(mask)
        if s is None:
            s = 0
            for a in bits(mask):
                s |= self.target.in_masks[a]
            self._in_support[mask] = s
        return s

    # -- propagation -------------------------------------------------------
    def propagate(self) -> bool:
        dom, queue, queued = self.dom, self.queue, self.queued
        full, loops = self.full, self.target.loop_mask
        ok = True
        while queue and ok:
            x = queue.pop()
            queued[x] = False
            dx = dom[x]
            so = self.out_support(dx)
            if so != full:
                for w in self.out_of(x):
                    if not self.restrict(w, loops if w == x else so):
                        ok = False
                        break
            if not ok:
                break
            si = self.in_support(dom[x])
            if si != full:
                for w in self.in_of(x):
                    if not self.restrict(w, loops if w == x else si):
                        ok = False
                        break
            if not ok:
                break
            for prop in self.propagators:
                if not prop.on_change(self, x):
                    ok = False
                    break
        if not ok:
            for x in queue:
                queued[x] = False
            queue.clear()
        return ok

    def initial_propagation(self) -> bool:
        if any(d == 0 for d in self.dom):
            return False
        loops = self.target.loop_mask
        if loops != self.full:
            for x in range(len(self.dom)):
                if any(w == x for w in self.out_of(x)) and not self.restrict(x, loops):
                    return False
        for x in range(len(self.dom)):
            if not self.queued[x]:
                self.queued[x] = True
                self.queue.append(x)
        for prop in self.propagators:
            if not prop.initial(self):
                return False
        return self.propagate()

    # -- search ------------------------------------------------------------
    def _next_open(self, start: int) -> int | None:
        dom = self.dom
        for v in range(start, len(dom)):
            d = dom[v]
            if d & (d - 1):
                return v
        return None

    def _leaf_ok(self) -> bool:
        return all(p.check_complete(self) for p in self.propagators)

    def solutions(self) -> Iterator[list[int]]:
        """Yield complete assignments (value per variable) in lexicographic order."""
        if not self.initial_propagation():
            return
        first = self._next_open(0)
        if first is None:
            if self._leaf_ok():
                yield [single_value(d) for d in self.dom]
            return
        stack = [[first, self.dom[first], len(self.trail)]]
        while stack:
            frame = stack[-1]
            var, remaining, mark = frame
            self.undo(mark)
            if not remaining:
                stack.pop()
                continue
            low = remaining & -remaining
            frame[1] = remaining ^ low
            self.nodes += 1
            if self.max_nodes is not None and self.nodes > self.max_nodes:
                raise CapExceeded(f"search exceeded {self.max_nodes} nodes", reached=self.nodes)
            if not (self.restrict(var, low) and self.propagate()):
                continue
            nxt = self._next_open(var + 1)
            if nxt is None:
                if self._leaf_ok():
                    yield [single_value(d) for d in self.dom]
                continue
            stack.append([nxt, self.dom[nxt], len(self.trail)])
        self.undo(0)
