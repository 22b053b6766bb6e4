"""Scheduling policies.

All policies share the same per-slot shape: an index update fed with the
slot's arrivals, a selection step returning at most one transmission, and
an outcome hook.  The hierarchical policies keep a pool of retained
high-priority packets (at most one per AoI UE, the whole queue per latency
UE); whenever that pool is nonempty its best-index packet is sent, and
only an empty pool lets the throughput tier transmit.  Ties break toward
the lowest UE id everywhere, which keeps runs reproducible.

AoI eligibility is gated by a counter: an arrival in slot t bumps the
counter only if more than ``threshold`` slots passed since the previous
bump, and while the counter exceeds the UE's delivery count every new
arrival replaces the retained packet (fresher data supersedes older).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .model import Scenario, ScenarioError, UeClass, Variant, theta_j
from .solver import TStarSolution, compute_t_star, hier_threshold


@dataclass(frozen=True)
class Transmit:
    ue_id: int
    g: int  # arrival slot of the transmitted packet


@dataclass
class PolicyState:
    """Scheduler bookkeeping, all keyed by UE id."""

    W: dict[int, float] = field(default_factory=dict)
    a: dict[int, int] = field(default_factory=dict)
    b: dict[int, int] = field(default_factory=dict)
    s_packet: dict[int, int | None] = field(default_factory=dict)
    latency_queues: dict[int, list[int]] = field(default_factory=dict)
    virtual_rho: dict[int, float] = field(default_factory=dict)
    thresholds: dict[int, int] = field(default_factory=dict)
    deliveries: dict[int, int] = field(default_factory=dict)
    lam: dict[int, int] = field(default_factory=dict)
    attempts: dict[int, int] = field(default_factory=dict)


def _split(scenario: Scenario):
    aoi = sorted((u for u in scenario.ues if u.cls is UeClass.AOI), key=lambda u: u.id)
    lat = sorted((u for u in scenario.ues if u.cls is UeClass.LATENCY), key=lambda u: u.id)
    thr = sorted((u for u in scenario.ues if u.cls is UeClass.THROUGHPUT), key=lambda u: u.id)
    return aoi, lat, thr


def thresholds_for(scenario: Scenario, zeta: float) -> tuple[dict[int, int], TStarSolution | None]:
    """Counter thresholds from the spacing program; empty without AoI UEs."""
    aoi = scenario.aoi_ues
    if not aoi:
        return {}, None
    sol = compute_t_star(aoi, zeta)
    return {u.id: hier_threshold(sol.t_star[u.id], u.q) for u in aoi}, sol


class HierarchicalPolicy:
    """Index policy with a strict two-tier hierarchy.

    On latency-constrained scenarios the latency weights are virtual: they
    start at 1 and every ``f`` slots move by ``eta`` times the gap between
    the UE's running average latency and its ceiling, floored at zero (the
    policy then reports itself as "vw").  On weighted scenarios the
    latency weights come from the scenario and never change.
    """

    name = "hier"
    needs_draw = False

    def __init__(self, scenario: Scenario, thresholds: dict[int, int],
                 f: int = 10000, eta: float = 0.1):
        aoi, lat, thr = _split(scenario)
        self.aoi_ids = [u.id for u in aoi]
        self.lat_ids = [u.id for u in lat]
        self.thr_ids = [u.id for u in thr]
        self.al_ids = sorted(self.aoi_ids + self.lat_ids)
        aoi_set = set(self.aoi_ids)
        self._al_src = [(ue, ue in aoi_set) for ue in self.al_ids]
        self._cls = {u.id: u.cls for u in scenario.ues}
        self._q = {u.id: u.q for u in aoi + lat}
        self._p = {u.id: u.p for u in scenario.ues}
        self._rho = {u.id: u.rho for u in aoi}
        self._alpha = {u.id: u.alpha for u in thr}
        virtual = scenario.variant is Variant.LATENCY_CONSTRAINED and bool(lat)
        self.virtual = virtual
        if virtual:
            self.name = "vw"
            self._beta = {u.id: u.beta for u in lat}
            self.f = f
            self.eta = eta
            lat_rho = {u.id: 1.0 for u in lat}
            self.weight_log: list[dict[int, float]] = []
        else:
            lat_rho = {u.id: u.rho for u in lat}
        st = PolicyState()
        st.W = {i: 0.0 for i in self.al_ids}
        st.a = {i: 0 for i in self.aoi_ids}
        st.b = {i: 0 for i in self.aoi_ids}
        st.s_packet = {i: None for i in self.aoi_ids}
        st.latency_queues = {i: [] for i in self.lat_ids}
        st.virtual_rho = lat_rho
        st.thresholds = dict(thresholds)
        st.deliveries = {i: 0 for i in self.aoi_ids}
        st.lam = {i: 0 for i in self.aoi_ids}
        st.attempts = {i: 0 for i in self.thr_ids}
        self.state = st

    def update_virtual_weights(self, latency_now: dict[int, float | None]) -> None:
        st = self.state
        for j in self.lat_ids:
            lbar = latency_now.get(j)
            if lbar is None:
                continue
            st.virtual_rho[j] = max(0.0, st.virtual_rho[j] - self.eta * (self._beta[j] - lbar))
        self.weight_log.append(dict(st.virtual_rho))

    def update_index(self, t: int, arrived: list[int]) -> None:
        st = self.state
        for ue in arrived:
            if self._cls[ue] is UeClass.LATENCY:
                st.latency_queues[ue].append(t)
                st.W[ue] = st.virtual_rho[ue] * self._p[ue] / self._q[ue]
            else:
                if t - st.a[ue] > st.thresholds[ue]:
                    st.a[ue] = t
                    st.b[ue] += 1
                if st.b[ue] > st.deliveries[ue]:
                    st.s_packet[ue] = t
                    st.W[ue] = self._rho[ue] * self._p[ue] * (t - st.lam[ue])

    def _best_member(self) -> int | None:
        st = self.state
        s_packet = st.s_packet
        queues = st.latency_queues
        best = None
        best_w = -1.0
        for ue, is_aoi in self._al_src:
            if (s_packet[ue] is None) if is_aoi else (not queues[ue]):
                continue
            w = st.W[ue]
            if w > best_w:
                best, best_w = ue, w
        return best

    def _best_throughput(self, t: int) -> int | None:
        st = self.state
        best = None
        best_y = -math.inf
        for k in self.thr_ids:
            y = self._alpha[k] * t / self._p[k] - st.attempts[k]
            if y > best_y:
                best, best_y = k, y
        return best

    def select(self, t: int) -> Transmit | None:
        best = self._best_member()
        if best is not None:
            st = self.state
            if self._cls[best] is UeClass.AOI:
                g = st.s_packet[best]
            else:
                g = st.latency_queues[best][-1]
            return Transmit(best, g)
        k = self._best_throughput(t)
        return Transmit(k, t) if k is not None else None

    def on_outcome(self, action: Transmit, success: bool, t: int) -> None:
        ue = action.ue_id
        st = self.state
        if self._cls[ue] is UeClass.THROUGHPUT:
            st.attempts[ue] += 1
            return
        if not success:
            return
        if self._cls[ue] is UeClass.AOI:
            if st.lam[ue] < action.g:
                st.lam[ue] = action.g
            st.deliveries[ue] += 1
            st.s_packet[ue] = None
            st.W[ue] = 0.0
            assert st.deliveries[ue] <= st.b[ue]
        else:
            q = st.latency_queues[ue]
            q.pop()  # newest was transmitted
            if not q:
                st.W[ue] = 0.0

    def pending_aoi_packets(self) -> dict[int, int]:
        return {ue: g for ue, g in self.state.s_packet.items() if g is not None}


class RandomizedPolicy:
    """Two-tier selection for AoI/throughput plus randomised latency service.

    Each latency UE with a queued packet is served with its fixed
    probability share; the leftover goes to the deterministic candidate.
    If the queued shares exceed the whole slot they are scaled down
    proportionally (the latency ceilings are then unattainable and the
    leftover share is zero).
    """

    name = "rd"
    needs_draw = True

    def __init__(self, scenario: Scenario, thresholds: dict[int, int]):
        if scenario.latency_ues and scenario.variant is not Variant.LATENCY_CONSTRAINED:
            raise ScenarioError("randomised policy needs latency ceilings (beta)")
        aoi, lat, thr = _split(scenario)
        self.aoi_ids = [u.id for u in aoi]
        self.lat_ids = [u.id for u in lat]
        self.thr_ids = [u.id for u in thr]
        self._cls = {u.id: u.cls for u in scenario.ues}
        self._q = {u.id: u.q for u in aoi + lat}
        self._p = {u.id: u.p for u in scenario.ues}
        self._rho = {u.id: u.rho for u in aoi}
        self._alpha = {u.id: u.alpha for u in thr}
        self.theta = {u.id: theta_j(u.q, u.p, u.beta) for u in lat}
        st = PolicyState()
        st.W = {i: 0.0 for i in self.aoi_ids}
        st.a = {i: 0 for i in self.aoi_ids}
        st.b = {i: 0 for i in self.aoi_ids}
        st.s_packet = {i: None for i in self.aoi_ids}
        st.latency_queues = {i: [] for i in self.lat_ids}
        st.thresholds = dict(thresholds)
        st.deliveries = {i: 0 for i in self.aoi_ids}
        st.lam = {i: 0 for i in self.aoi_ids}
        st.attempts = {i: 0 for i in self.thr_ids}
        self.state = st

    def update_index(self, t: int, arrived: list[int]) -> None:
        st = self.state
        for ue in arrived:
            if self._cls[ue] is UeClass.LATENCY:
                st.latency_queues[ue].append(t)
            else:
                if t - st.a[ue] > st.thresholds[ue]:
                    st.a[ue] = t
                    st.b[ue] += 1
                if st.b[ue] > st.deliveries[ue]:
                    st.s_packet[ue] = t
                    st.W[ue] = self._rho[ue] * self._p[ue] * (t - st.lam[ue])

    def select(self, t: int, draw: float) -> Transmit | None:
        st = self.state
        best = None
        best_w = 0.0
        for ue in self.aoi_ids:
            if st.s_packet[ue] is not None and st.W[ue] > best_w:
                best, best_w = ue, st.W[ue]
        if best is None and self.thr_ids:
            best_y = -math.inf
            for k in self.thr_ids:
                y = self._alpha[k] * t / self._p[k] - st.attempts[k]
                if y > best_y:
                    best, best_y = k, y
        queued = [(j, self.theta[j]) for j in self.lat_ids if st.latency_queues[j]]
        total = sum(th for _, th in queued)
        scale = 1.0 if total <= 1.0 else 1.0 / total
        acc = 0.0
        for j, th in queued:
            acc += th * scale
            if draw < acc:
                return Transmit(j, st.latency_queues[j][-1])
        if best is None:
            return None
        if self._cls[best] is UeClass.AOI:
            return Transmit(best, st.s_packet[best])
        return Transmit(best, t)

    def on_outcome(self, action: Transmit, success: bool, t: int) -> None:
        ue = action.ue_id
        st = self.state
        cls = self._cls[ue]
        if cls is UeClass.THROUGHPUT:
            st.attempts[ue] += 1
            return
        if not success:
            return
        if cls is UeClass.AOI:
            if st.lam[ue] < action.g:
                st.lam[ue] = action.g
            st.deliveries[ue] += 1
            st.s_packet[ue] = None
            st.W[ue] = 0.0
        else:
            st.latency_queues[ue].pop()

    def pending_aoi_packets(self) -> dict[int, int]:
        return {ue: g for ue, g in self.state.s_packet.items() if g is not None}


class CmuPolicy:
    """Weighted-rate rule over latency UEs only: serve the nonempty queue
    with the largest rho*p/q, oldest packet first."""

    name = "cmu"
    needs_draw = False

    def __init__(self, scenario: Scenario):
        lat = scenario.latency_ues
        if len(lat) != len(scenario.ues):
            raise ScenarioError("weighted-rate rule runs on latency-only scenarios")
        if scenario.variant is not Variant.LATENCY_WEIGHTED:
            raise ScenarioError("weighted-rate rule needs latency weights (rho)")
        order = sorted(lat, key=lambda u: (-(u.rho * u.p / u.q), u.id))
        self.order = [u.id for u in order]
        self.queues: dict[int, deque[int]] = {u.id: deque() for u in lat}

    def update_index(self, t: int, arrived: list[int]) -> None:
        for ue in arrived:
            self.queues[ue].append(t)

    def select(self, t: int) -> Transmit | None:
        for ue in self.order:
            q = self.queues[ue]
            if q:
                return Transmit(ue, q[0])
        return None

    def on_outcome(self, action: Transmit, success: bool, t: int) -> None:
        if success:
            self.queues[action.ue_id].popleft()

    def pending_aoi_packets(self) -> dict[int, int]:
        return {}
