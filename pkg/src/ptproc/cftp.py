"""Perfect sampling by dominated coupling from the past.

The dominating process is the spatial birth-death process with birth rate
measure phi(xi) dxi and unit per-point death rate; its equilibrium is the
Poisson process with intensity phi.  The trajectory is constructed
*backward* from an equilibrium draw at time 0, which makes horizon
doubling trivial: extending just continues the backward simulation, and
the restriction of the trajectory to (-T, 0] never changes afterwards.
Read backward, deaths become forward births (each carrying a fresh
uniform mark) and births become forward deaths.

The forward replay evolves a lower and an upper process between the empty
pattern and the dominating state.  A forward birth with mark u enters the
upper process when u <= lambda(L, xi)/phi(xi) and the lower process when
u <= lambda(U, xi)/phi(xi), both thresholds evaluated before insertion;
for repulsive models the conditional intensity is monotone decreasing in
the configuration, so the crossed rule keeps L inside U.  Deaths remove
the point from whichever process holds it.  When the two processes agree
at time 0, that common pattern is an exact draw.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .geometry import PointPattern
from .models import Model
from .rng import SeedTree

__all__ = [
    "DomEvent",
    "DominatingTrajectory",
    "SandwichState",
    "CftpHorizonError",
    "extend_backward",
    "sandwich_replay",
    "cftp_sample",
]

BIRTH = 1
DEATH = 0


class DomEvent(NamedTuple):
    time: float  # forward time, in (-horizon, 0]
    kind: int
    pid: int
    u: float  # acceptance mark; only meaningful for births


class CftpHorizonError(RuntimeError):
    """Raised when the sandwich has not coalesced at the horizon cap."""

    def __init__(self, horizon: float, n_lower: int, n_upper: int, n_events: int):
        self.horizon = horizon
        self.n_lower = n_lower
        self.n_upper = n_upper
        self.n_events = n_events
        super().__init__(
            f"no coalescence by horizon {horizon:g} "
            f"(lower {n_lower}, upper {n_upper} points, {n_events} events)"
        )


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, SeedTree):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return SeedTree(int(rng)).generator()
    raise TypeError("rng must be a Generator, SeedTree or int seed")


class _LiveSet:
    """Mutable point set keyed by id, exposing its coordinates as a dense
    array view for conditional-intensity evaluation.  Removal swaps with
    the last row, so all operations are O(1)."""

    __slots__ = ("coords", "ids", "pos", "n")

    def __init__(self, dim: int, capacity: int = 64):
        self.coords = np.empty((max(capacity, 4), dim))
        self.ids: list[int] = []
        self.pos: dict[int, int] = {}
        self.n = 0

    def add(self, pid: int, xi: np.ndarray) -> None:
        if self.n == self.coords.shape[0]:
            grown = np.empty((2 * self.n, self.coords.shape[1]))
            grown[: self.n] = self.coords
            self.coords = grown
        self.coords[self.n] = xi
        self.ids.append(pid)
        self.pos[pid] = self.n
        self.n += 1

    def remove(self, pid: int) -> None:
        j = self.pos.pop(pid, None)
        if j is None:
            return
        last = self.n - 1
        if j != last:
            self.coords[j] = self.coords[last]
            moved = self.ids[last]
            self.ids[j] = moved
            self.pos[moved] = j
        self.ids.pop()
        self.n -= 1

    def __contains__(self, pid: int) -> bool:
        return pid in self.pos

    def view(self) -> np.ndarray:
        return self.coords[: self.n]


class DominatingTrajectory:
    """Backward-built dominating trajectory on (-horizon, 0].

    state0 is the equilibrium Poisson(phi) draw at time 0; frontier is the
    state at -horizon.  events are stored in order of construction, i.e.
    decreasing forward time; iterate them reversed to replay forward.
    """

    def __init__(self, m: Model, rng):
        gen = _generator(rng)
        self.model = m
        self.c_star = m.phi_integral
        self.horizon = 0.0
        self.events: list[DomEvent] = []
        self.points: dict[int, np.ndarray] = {}
        self._frontier_ids: list[int] = []
        self._frontier_pos: dict[int, int] = {}
        n0 = int(gen.poisson(self.c_star))
        for pid in range(n0):
            self.points[pid] = m.sample_phi_proposal(gen)
            self._frontier_pos[pid] = len(self._frontier_ids)
            self._frontier_ids.append(pid)
        self._next_id = n0
        self.state0_ids = tuple(range(n0))

    # frontier bookkeeping -------------------------------------------------
    def _frontier_add(self, pid: int) -> None:
        self._frontier_pos[pid] = len(self._frontier_ids)
        self._frontier_ids.append(pid)

    def _frontier_remove_at(self, j: int) -> int:
        ids = self._frontier_ids
        pid = ids[j]
        last = ids[-1]
        ids[j] = last
        self._frontier_pos[last] = j
        ids.pop()
        del self._frontier_pos[pid]
        return pid

    def frontier_pattern(self) -> PointPattern:
        """Dominating state at -horizon."""
        coords = np.array([self.points[pid] for pid in self._frontier_ids]).reshape(
            len(self._frontier_ids), self.model.window.dim
        )
        return PointPattern(coords, self.model.window, validate=False)

    # construction ---------------------------------------------------------
    def extend_to(self, new_horizon: float, rng) -> None:
        """Continue the backward simulation from -horizon to -new_horizon.
        Existing events are untouched; the clipped waiting time at the old
        horizon is redrawn, which is exact by memorylessness."""
        gen = _generator(rng)
        if new_horizon <= self.horizon:
            raise ValueError("new horizon must exceed the current one")
        s = self.horizon
        while True:
            n = len(self._frontier_ids)
            rate = self.c_star + n
            s = s + gen.exponential() / rate
            if s > new_horizon:
                break
            if gen.random() < self.c_star / rate:
                # backward birth: a point that, read forward, dies at -s
                pid = self._next_id
                self._next_id += 1
                self.points[pid] = self.model.sample_phi_proposal(gen)
                self._frontier_add(pid)
                self.events.append(DomEvent(-s, DEATH, pid, 0.0))
            else:
                # backward death: read forward, this point is born at -s
                j = int(gen.integers(n))
                pid = self._frontier_remove_at(j)
                self.events.append(DomEvent(-s, BIRTH, pid, gen.random()))
        self.horizon = new_horizon

    def replay_dominating(self) -> set[int]:
        """Forward-replay the dominating process itself from the frontier;
        returns the id set at time 0 (must equal state0)."""
        live = set(self._frontier_ids)
        for ev in reversed(self.events):
            if ev.kind == BIRTH:
                live.add(ev.pid)
            else:
                live.discard(ev.pid)
        return live


def extend_backward(d: DominatingTrajectory, rng) -> DominatingTrajectory:
    """Double the horizon in place (initial horizon 0 extends to 1)."""
    d.extend_to(2.0 * d.horizon if d.horizon > 0 else 1.0, rng)
    return d


@dataclass(frozen=True)
class SandwichState:
    lower: PointPattern
    upper: PointPattern
    coalesced: bool


def sandwich_replay(d: DominatingTrajectory, m: Model, check: bool = False) -> SandwichState:
    """Run the lower/upper pair forward over the whole trajectory.

    With check=True the sandwich invariants (lower ids inside upper ids,
    upper acceptance a superset of lower acceptance) are asserted at every
    event; estimation paths leave it off.
    """
    dim = m.window.dim
    upper = _LiveSet(dim)
    lower = _LiveSet(dim)
    for pid in d._frontier_ids:
        upper.add(pid, d.points[pid])
    for ev in reversed(d.events):
        if ev.kind == BIRTH:
            xi = d.points[ev.pid]
            log_phi = m.log_phi(xi)
            log_u = math.log(ev.u) if ev.u > 0.0 else -math.inf
            acc_upper = log_u <= m.log_papangelou_coords(lower.view(), xi) - log_phi
            acc_lower = log_u <= m.log_papangelou_coords(upper.view(), xi) - log_phi
            if check and acc_lower and not acc_upper:
                raise AssertionError("lower process accepted a birth the upper rejected")
            if acc_upper:
                upper.add(ev.pid, xi)
            if acc_lower:
                lower.add(ev.pid, xi)
        else:
            upper.remove(ev.pid)
            lower.remove(ev.pid)
        if check and not set(lower.ids) <= set(upper.ids):
            raise AssertionError("sandwich order violated")
    coalesced = lower.n == upper.n
    w = m.window
    return SandwichState(
        lower=PointPattern(lower.view().copy(), w, validate=False),
        upper=PointPattern(upper.view().copy(), w, validate=False),
        coalesced=coalesced,
    )


def cftp_sample(
    m: Model,
    rng,
    t_max: int = 20,
    info: Optional[dict] = None,
) -> PointPattern:
    """One exact draw from the model.

    Horizons 1, 2, 4, ... are tried until the sandwich coalesces; beyond
    2**t_max a CftpHorizonError carries the sandwich sizes for diagnosis.
    info, when given, receives horizon / doublings / events_processed.
    """
    if t_max < 0:
        raise ValueError("t_max must be non-negative")
    gen = _generator(rng)
    d = DominatingTrajectory(m, gen)
    d.extend_to(1.0, gen)
    doublings = 0
    events_processed = 0
    t_start = time.perf_counter()
    while True:
        s = sandwich_replay(d, m)
        events_processed += len(d.events)
        if s.coalesced:
            if info is not None:
                info["horizon"] = d.horizon
                info["doublings"] = doublings
                info["events_processed"] = events_processed
                info["wall_seconds"] = time.perf_counter() - t_start
            return s.upper
        doublings += 1
        if doublings > t_max:
            raise CftpHorizonError(d.horizon, s.lower.n, s.upper.n, len(d.events))
        d.extend_to(2.0**doublings, gen)
