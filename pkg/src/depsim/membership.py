"""Gossip heartbeat failure detection and cluster hierarchy.

Every node keeps a heartbeat table for its cluster: per peer a counter,
an incarnation and the local time the counter last advanced, plus the
window of observed inter-advance gaps that feeds the adaptive timeout.
Detection is local to a cluster; clusters are organized in a static
tree and elected representatives exchange per-cluster summaries along
it, so the root representative ends up with a global liveness view
without any cross-cluster gossip.

State machine per observed peer: Alive -> Suspected (timeout exceeded),
Suspected -> Alive (counter advanced, refutation), Suspected -> Removed
(cleanup window expired). Removed is terminal until the peer comes back
with a higher incarnation, which is how a restarted node rejoins after
losing its state.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, Iterable

SimTime = int


class NoLiveMember(Exception):
    """Representative election over a cluster with no live member."""


@dataclass(frozen=True)
class DetectorParams:
    gossip_interval: int = 10
    fanout: int = 2
    window: int = 16
    k: float = 4.0
    t_min: int | None = None
    t_max: int | None = None
    t_bootstrap: int | None = None
    t_cleanup: int | None = None
    summary_interval: int = 20

    def __post_init__(self) -> None:
        gi = self.gossip_interval
        if gi < 1:
            raise ValueError("gossip_interval must be >= 1")
        if self.fanout < 1:
            raise ValueError("fanout must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.t_min is None:
            object.__setattr__(self, "t_min", 3 * gi)
        if self.t_max is None:
            object.__setattr__(self, "t_max", 100 * gi)
        if self.t_bootstrap is None:
            object.__setattr__(self, "t_bootstrap", 10 * gi)
        if self.t_cleanup is None:
            object.__setattr__(self, "t_cleanup", 20 * gi)
        if self.t_min > self.t_max:
            raise ValueError("t_min must not exceed t_max")


class HeartbeatEntry:
    """Table row for one peer.

    ``gaps`` holds the last ``window`` observed inter-advance gaps;
    ``gap_sum``/``gap_sumsq`` track running sums so the timeout is O(1)
    to recompute. ``timeout`` caches adapt_timeout for the current gap
    window and is refreshed whenever the window changes.
    """

    __slots__ = ("counter", "incarnation", "last_bump", "gaps", "gap_sum", "gap_sumsq", "timeout")

    def __init__(self, counter: int, incarnation: int, last_bump: SimTime, params: DetectorParams):
        self.counter = counter
        self.incarnation = incarnation
        self.last_bump = last_bump
        self.gaps: deque[int] = deque(maxlen=params.window)
        self.gap_sum = 0
        self.gap_sumsq = 0
        self.timeout = params.t_bootstrap

    def append_gap(self, gap: int, params: DetectorParams) -> None:
        if len(self.gaps) == self.gaps.maxlen:
            old = self.gaps[0]
            self.gap_sum -= old
            self.gap_sumsq -= old * old
        self.gaps.append(gap)
        self.gap_sum += gap
        self.gap_sumsq += gap * gap
        self.timeout = adapt_timeout(self, params)

    def reset(self, counter: int, incarnation: int, now: SimTime, params: DetectorParams) -> None:
        """Fresh incarnation: the peer restarted, its history is void."""
        self.counter = counter
        self.incarnation = incarnation
        self.last_bump = now
        self.gaps.clear()
        self.gap_sum = 0
        self.gap_sumsq = 0
        self.timeout = params.t_bootstrap


def adapt_timeout(entry: HeartbeatEntry, params: DetectorParams) -> int:
    """Adaptive failure timeout for one table entry.

    mean + k * stddev over the observed gap window (population stddev,
    rounded up), clamped into [t_min, t_max]. The bootstrap grace
    period is a floor until the window has filled once: a handful of
    lucky early samples must not collapse the timeout below what the
    gap distribution's tail will later produce.
    """
    n = len(entry.gaps)
    if n == 0:
        return params.t_bootstrap
    mean = entry.gap_sum / n
    var = entry.gap_sumsq / n - mean * mean
    if var < 0.0:  # float error on near-constant windows
        var = 0.0
    t = math.ceil(mean + params.k * math.sqrt(var))
    t = max(params.t_min, min(t, params.t_max))
    if n < params.window:
        return max(t, params.t_bootstrap)
    return t


@dataclass(frozen=True)
class GossipDigest:
    kind: ClassVar[str] = "gossip"
    origin: str
    entries: dict[str, tuple[int, int]]  # node -> (counter, incarnation)


class HeartbeatTable:
    __slots__ = ("owner", "entries")

    def __init__(self, owner: str):
        self.owner = owner
        self.entries: dict[str, HeartbeatEntry] = {}

    def digest(self) -> GossipDigest:
        return GossipDigest(self.owner, {nid: (e.counter, e.incarnation) for nid, e in self.entries.items()})


def merge(table: HeartbeatTable, digest: GossipDigest, now: SimTime, params: DetectorParams) -> HeartbeatTable:
    """Fold an incoming digest into the table (componentwise max).

    Counters never regress. A strictly greater counter at the same
    incarnation bumps last_bump and records the observed gap; a higher
    incarnation replaces the row outright (restart), accepting a lower
    counter. The owner's own row is never writable from outside.
    No hidden state; deterministic in its inputs.
    """
    entries = table.entries
    owner = table.owner
    for nid, (counter, incarnation) in digest.entries.items():
        if nid == owner:
            continue
        entry = entries.get(nid)
        if entry is None:
            entries[nid] = HeartbeatEntry(counter, incarnation, now, params)
        elif incarnation > entry.incarnation:
            entry.reset(counter, incarnation, now, params)
        elif incarnation == entry.incarnation and counter > entry.counter:
            entry.counter = counter
            entry.append_gap(now - entry.last_bump, params)
            entry.last_bump = now
    return table


# --- suspicion --------------------------------------------------------------


class PeerState(Enum):
    ALIVE = "alive"
    SUSPECTED = "suspected"
    REMOVED = "removed"


class PeerView:
    __slots__ = ("state", "since", "snapshot")

    def __init__(self) -> None:
        self.state = PeerState.ALIVE
        self.since: SimTime = 0
        # (incarnation, counter) at the moment of suspicion; any advance
        # past it is a refutation.
        self.snapshot: tuple[int, int] = (-1, -1)


@dataclass(frozen=True)
class Transition:
    peer: str
    kind: str  # suspect | refute | remove
    at: SimTime
    gap: int = 0
    rejoin: bool = False


# --- topology ---------------------------------------------------------------


@dataclass(frozen=True)
class ClusterTopology:
    """Static cluster tree. ``clusters`` maps cluster id to its member
    nodes; ``parent`` maps cluster id to its parent cluster (None for
    the root)."""

    clusters: dict[str, tuple[str, ...]]
    parent: dict[str, str | None]
    cluster_of: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        roots = [cid for cid, p in self.parent.items() if p is None]
        if set(self.parent) != set(self.clusters):
            raise ValueError("parent map must cover exactly the declared clusters")
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root cluster, found {roots}")
        for cid, p in self.parent.items():
            if p is not None and p not in self.clusters:
                raise ValueError(f"cluster {cid!r} has unknown parent {p!r}")
        cluster_of: dict[str, str] = {}
        for cid, members in self.clusters.items():
            if not members:
                raise ValueError(f"cluster {cid!r} has no members")
            for m in members:
                if m in cluster_of:
                    raise ValueError(f"node {m!r} appears in two clusters")
                cluster_of[m] = cid
        object.__setattr__(self, "cluster_of", cluster_of)
        # reject cycles by walking each cluster to the root
        for cid in self.clusters:
            seen = set()
            cur: str | None = cid
            while cur is not None:
                if cur in seen:
                    raise ValueError(f"cluster parent cycle at {cur!r}")
                seen.add(cur)
                cur = self.parent[cur]

    @property
    def root(self) -> str:
        for cid, p in self.parent.items():
            if p is None:
                return cid
        raise AssertionError("validated topology always has a root")

    def children(self, cid: str) -> list[str]:
        return [c for c, p in self.parent.items() if p == cid]

    def depth(self) -> int:
        def d(cid: str) -> int:
            p = self.parent[cid]
            return 0 if p is None else 1 + d(p)

        return max(d(cid) for cid in self.clusters)

    def nodes(self) -> list[str]:
        out: list[str] = []
        for members in self.clusters.values():
            out.extend(members)
        return out


def elect_representative(cluster: str, topology: ClusterTopology, alive: Iterable[str]) -> str:
    """Smallest live member id wins; every node with the same view picks
    the same representative."""
    members = topology.clusters.get(cluster)
    if members is None:
        raise KeyError(f"unknown cluster {cluster!r}")
    alive_set = set(alive)
    live = [m for m in members if m in alive_set]
    if not live:
        raise NoLiveMember(cluster)
    return min(live)


@dataclass(frozen=True)
class ClusterSummary:
    cluster: str
    epoch: int  # emission tick; strictly increasing per representative
    rep: str
    alive: tuple[str, ...]
    suspected: tuple[str, ...]


@dataclass(frozen=True)
class SummaryBatch:
    kind: ClassVar[str] = "summary_batch"
    origin: str
    summaries: tuple[ClusterSummary, ...]


# --- detector ---------------------------------------------------------------


class Detector:
    """Per-node failure detector state.

    Peer targets for gossip are drawn with a seeded shuffled-cycle
    sweep: each eligible peer is visited once per cycle, reshuffled
    every cycle. Marginally uniform, but the distance between repeat
    contacts is bounded, which keeps observed gap tails sane.
    """

    def __init__(
        self,
        owner: str,
        topology: ClusterTopology,
        params: DetectorParams,
        rng,
        now: SimTime = 0,
        incarnation: int = 0,
    ):
        self.owner = owner
        self.topology = topology
        self.params = params
        self.cluster = topology.cluster_of[owner]
        self.peers: tuple[str, ...] = tuple(m for m in topology.clusters[self.cluster] if m != owner)
        self.table = HeartbeatTable(owner)
        self.table.entries[owner] = HeartbeatEntry(0, incarnation, now, params)
        # Seeded rows for peers never heard from: incarnation -1 so any
        # real digest wins, bootstrap timeout so a node dead from the
        # start still gets detected.
        for p in self.peers:
            self.table.entries[p] = HeartbeatEntry(0, -1, now, params)
        self.view: dict[str, PeerView] = {p: PeerView() for p in self.peers}
        self.rng = rng
        self._cycle: list[str] = []
        self.latest: dict[str, ClusterSummary] = {}

    # -- gossip

    def _draw_peers(self) -> list[str]:
        eligible = [p for p in self.peers if self.view[p].state is not PeerState.REMOVED]
        if not eligible:
            return []
        need = min(self.params.fanout, len(eligible))
        eligible_set = set(eligible)
        out: list[str] = []
        attempts = 0
        limit = 4 * len(self.peers) + 8
        while len(out) < need and attempts < limit:
            attempts += 1
            if not self._cycle:
                self._cycle = self.rng.sample(self.peers, len(self.peers))
            cand = self._cycle.pop()
            if cand in eligible_set and cand not in out:
                out.append(cand)
        return out

    def local_tick(self, now: SimTime) -> list[tuple[str, GossipDigest]]:
        """Advance the own heartbeat and pick gossip targets.

        Returns (peer, digest) send instructions; empty for a cluster
        of one.
        """
        own = self.table.entries[self.owner]
        own.counter += 1
        own.last_bump = now
        targets = self._draw_peers()
        if not targets:
            return []
        digest = self.table.digest()
        return [(t, digest) for t in targets]

    def merge(self, digest: GossipDigest, now: SimTime) -> None:
        merge(self.table, digest, now, self.params)

    # -- suspicion

    def evaluate(self, now: SimTime) -> list[Transition]:
        """Run the suspicion state machine over every peer entry."""
        out: list[Transition] = []
        params = self.params
        for peer in self.peers:
            entry = self.table.entries[peer]
            view = self.view[peer]
            state = view.state
            if state is PeerState.ALIVE:
                gap = now - entry.last_bump
                if gap > entry.timeout:
                    view.state = PeerState.SUSPECTED
                    view.since = now
                    view.snapshot = (entry.incarnation, entry.counter)
                    out.append(Transition(peer, "suspect", now, gap=gap))
            elif state is PeerState.SUSPECTED:
                if (entry.incarnation, entry.counter) > view.snapshot:
                    view.state = PeerState.ALIVE
                    out.append(Transition(peer, "refute", now))
                elif now - view.since > params.t_cleanup:
                    view.state = PeerState.REMOVED
                    view.since = now
                    out.append(Transition(peer, "remove", now))
            else:  # REMOVED: terminal until a higher incarnation shows up
                if entry.incarnation > view.snapshot[0]:
                    view.state = PeerState.ALIVE
                    out.append(Transition(peer, "refute", now, rejoin=True))
        return out

    def alive_members(self) -> list[str]:
        members = self.topology.clusters[self.cluster]
        return [m for m in members if m == self.owner or self.view[m].state is PeerState.ALIVE]

    def suspected_members(self) -> list[str]:
        members = self.topology.clusters[self.cluster]
        return [m for m in members if m != self.owner and self.view[m].state is not PeerState.ALIVE]

    def is_alive(self, node: str) -> bool:
        if node == self.owner:
            return True
        view = self.view.get(node)
        return view is None or view.state is PeerState.ALIVE

    def is_removed(self, node: str) -> bool:
        view = self.view.get(node)
        return view is not None and view.state is PeerState.REMOVED

    # -- hierarchy

    def _remote_rep(self, cluster: str) -> str:
        """Best guess at a remote cluster's representative: its own most
        recent summary if we have one, else the default (lowest id)."""
        summary = self.latest.get(cluster)
        if summary is not None and summary.alive:
            return min(summary.alive)
        return min(self.topology.clusters[cluster])

    def summarize_and_channel(self, now: SimTime) -> tuple[ClusterSummary | None, list[tuple[str, SummaryBatch]]]:
        """Emit this cluster's summary if we are its representative.

        The batch relays every freshest summary we hold, so information
        moves one tree level per summary interval in both directions.
        Returns (own summary or None, sends).
        """
        alive = self.alive_members()
        rep = min(alive)  # own node is always alive in its own view
        if rep != self.owner:
            return None, []
        summary = ClusterSummary(
            cluster=self.cluster,
            epoch=now,
            rep=self.owner,
            alive=tuple(sorted(alive)),
            suspected=tuple(sorted(self.suspected_members())),
        )
        self.latest[self.cluster] = summary
        batch = SummaryBatch(self.owner, tuple(self.latest[c] for c in sorted(self.latest)))
        sends: list[tuple[str, SummaryBatch]] = []
        targets: list[str] = []
        parent = self.topology.parent[self.cluster]
        if parent is not None:
            targets.append(self._remote_rep(parent))
        for child in self.topology.children(self.cluster):
            targets.append(self._remote_rep(child))
        seen: set[str] = set()
        for t in targets:
            if t != self.owner and t not in seen:
                seen.add(t)
                sends.append((t, batch))
        return summary, sends

    def apply_summaries(self, batch: SummaryBatch) -> list[ClusterSummary]:
        """Keep the freshest summary per origin cluster. Returns the
        summaries that actually updated our store."""
        applied: list[ClusterSummary] = []
        for s in batch.summaries:
            cur = self.latest.get(s.cluster)
            if cur is None or (s.epoch, s.rep) > (cur.epoch, cur.rep):
                self.latest[s.cluster] = s
                applied.append(s)
        return applied

    def global_suspected(self) -> set[str]:
        """Union of suspected nodes across all summaries we hold, plus
        our own local view."""
        out = set(self.suspected_members())
        for s in self.latest.values():
            out.update(s.suspected)
        return out
