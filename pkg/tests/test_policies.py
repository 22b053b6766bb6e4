import pytest

from aoisched.model import Scenario, ScenarioError, UeClass, UeConfig, Variant
from aoisched.policies import (CmuPolicy, HierarchicalPolicy, RandomizedPolicy,
                               Transmit, thresholds_for)


def weighted_scenario():
    return Scenario(ues=(
        UeConfig(id=1, cls=UeClass.AOI, q=0.9, p=0.7, rho=1.0),
        UeConfig(id=2, cls=UeClass.LATENCY, q=0.2, p=0.8, rho=1.0),
        UeConfig(id=3, cls=UeClass.THROUGHPUT, p=0.9, alpha=0.2),
    ), variant=Variant.LATENCY_WEIGHTED)


def constrained_scenario(beta=2.0):
    return Scenario(ues=(
        UeConfig(id=1, cls=UeClass.AOI, q=0.9, p=0.7, rho=1.0),
        UeConfig(id=2, cls=UeClass.LATENCY, q=0.2, p=0.8, beta=beta),
        UeConfig(id=3, cls=UeClass.THROUGHPUT, p=0.9, alpha=0.2),
    ), variant=Variant.LATENCY_CONSTRAINED)


def hier(thresholds={1: 2}):
    return HierarchicalPolicy(weighted_scenario(), thresholds)


# -- index update hand-traces ---------------------------------------------------

def test_latency_arrival_index_is_constant():
    p = hier()
    p.update_index(1, [2])
    assert p.state.W[2] == pytest.approx(1.0 * 0.8 / 0.2)  # = 4
    p.update_index(2, [2])
    assert p.state.W[2] == pytest.approx(4.0)


def test_counter_gap_must_strictly_exceed_threshold():
    p = hier()
    p.state.a[1] = 5
    p.state.b[1] = 1
    p.update_index(6, [1])  # gap 1, threshold 2: no bump
    assert p.state.b[1] == 1 and p.state.a[1] == 5
    p.update_index(7, [1])  # gap 2: still no bump (strict)
    assert p.state.b[1] == 1
    p.update_index(8, [1])  # gap 3: bump
    assert p.state.b[1] == 2 and p.state.a[1] == 8


def test_first_eligible_arrival_gets_age_weighted_index():
    p = hier()
    # arrivals every slot from t=1; threshold 2 means the first bump is at t=3
    for t in (1, 2):
        p.update_index(t, [1])
        assert p.state.W[1] == 0.0 and p.state.s_packet[1] is None
    p.update_index(3, [1])
    assert p.state.b[1] == 1
    assert p.state.s_packet[1] == 3
    assert p.state.W[1] == pytest.approx(0.7 * 3)  # rho * p * (t - lam), lam = 0


def test_newer_eligible_arrival_replaces_retained_packet():
    p = hier()
    p.update_index(3, [1])
    assert p.state.s_packet[1] == 3
    # the counter still exceeds the delivery count, so the next arrival
    # supersedes the retained packet even without a counter bump
    p.update_index(4, [1])
    assert p.state.s_packet[1] == 4
    assert p.state.W[1] == pytest.approx(0.7 * 4)
    assert p.state.b[1] == 1


def test_ten_slot_reference_trace():
    # arrivals for ue1 at every slot except 5 and 9; delivery succeeds at t=4.
    # threshold 2, so bumps happen at t=3 (gap 3) and t=7 (gap 4).
    p = hier()
    expected = {
        1: (0, None, 0.0), 2: (0, None, 0.0),
        3: (1, 3, 2.1),    # bump; W = 0.7 * (3 - 0)
        4: (1, 4, 2.8),    # replace; W = 0.7 * (4 - 0)
    }
    for t in range(1, 5):
        p.update_index(t, [1])
        b, s, w = expected[t]
        assert (p.state.b[1], p.state.s_packet[1]) == (b, s)
        assert p.state.W[1] == pytest.approx(w)
    action = p.select(4)
    assert action == Transmit(1, 4)
    p.on_outcome(action, success=True, t=4)
    assert p.state.W[1] == 0.0 and p.state.s_packet[1] is None
    assert p.state.lam[1] == 4 and p.state.deliveries[1] == 1

    p.update_index(6, [1])   # gap 3 > 2 but b == deliveries: bump, retain
    assert p.state.b[1] == 2 and p.state.s_packet[1] == 6
    assert p.state.W[1] == pytest.approx(0.7 * (6 - 4))
    p.update_index(7, [1])   # replace with fresher arrival
    assert p.state.s_packet[1] == 7
    assert p.state.W[1] == pytest.approx(0.7 * (7 - 4))
    p.update_index(8, [1])   # gap 2 from the t=6 bump: replace only
    assert p.state.s_packet[1] == 8
    assert p.state.b[1] == 2
    p.update_index(10, [1])  # gap 4 > 2: bump
    assert p.state.b[1] == 3
    assert p.state.a[1] == 10
    assert p.state.s_packet[1] == 10


def test_counter_bump_timing_follows_a_not_retained_packet():
    p = hier()
    p.update_index(3, [1])           # bump: a=3, b=1
    p.update_index(4, [1])           # replace only
    p.update_index(6, [1])           # gap 3 > 2: bump (a tracks bumps, not packets)
    assert p.state.b[1] == 2
    assert p.state.a[1] == 6


# -- selection ----------------------------------------------------------------

def test_argmax_selects_highest_index():
    p = hier()
    p.update_index(3, [1, 2])    # W1 = 2.1, W2 = 4
    action = p.select(3)
    assert action == Transmit(2, 3)


def test_argmax_tie_breaks_to_lowest_id():
    scn = Scenario(ues=(
        UeConfig(id=1, cls=UeClass.LATENCY, q=0.2, p=0.8, rho=1.0),
        UeConfig(id=2, cls=UeClass.LATENCY, q=0.2, p=0.8, rho=1.0),
    ), variant=Variant.LATENCY_WEIGHTED)
    p = HierarchicalPolicy(scn, {})
    p.update_index(1, [1, 2])
    assert p.select(1) == Transmit(1, 1)


def test_throughput_tier_served_only_when_pool_empty():
    p = hier()
    p.update_index(3, [1])
    assert p.select(3).ue_id == 1
    p.on_outcome(p.select(3), success=True, t=3)
    assert p.select(4) == Transmit(3, 4)  # pool empty: throughput tier


def test_throughput_index_arithmetic():
    # alpha/p of 0.3 and 0.2, attempts 2 and 0, t=10: indices 1.0 and 2.0
    scn = Scenario(ues=(
        UeConfig(id=1, cls=UeClass.THROUGHPUT, p=1.0, alpha=0.3),
        UeConfig(id=2, cls=UeClass.THROUGHPUT, p=1.0, alpha=0.2),
    ), variant=Variant.LATENCY_WEIGHTED)
    p = HierarchicalPolicy(scn, {})
    p.state.attempts[1] = 2
    assert p.select(10) == Transmit(2, 10)


def test_latency_service_is_newest_first():
    p = hier()
    p.update_index(1, [2])
    p.update_index(5, [2])
    assert p.select(5) == Transmit(2, 5)


def test_latency_index_survives_partial_drain():
    p = hier()
    p.update_index(1, [2])
    p.update_index(2, [2])
    action = p.select(2)
    p.on_outcome(action, success=True, t=2)
    assert p.state.W[2] == pytest.approx(4.0)   # queue still nonempty
    action = p.select(3)
    p.on_outcome(action, success=True, t=3)
    assert p.state.W[2] == 0.0


def test_failure_leaves_packet_in_place():
    p = hier()
    p.update_index(3, [1])
    action = p.select(3)
    p.on_outcome(action, success=False, t=3)
    assert p.state.s_packet[1] == 3
    assert p.select(4) == Transmit(1, 3)


def test_counter_dominates_delivery_count():
    import numpy as np
    rng = np.random.default_rng(3)
    p = hier()
    for t in range(1, 2000):
        arrived = [ue for ue in (1, 2) if rng.random() < (0.9 if ue == 1 else 0.2)]
        p.update_index(t, arrived)
        action = p.select(t)
        if action is not None and action.ue_id != 3:
            p.on_outcome(action, rng.random() < 0.75, t)
        assert p.state.b[1] >= p.state.deliveries[1]


def test_decisions_invariant_under_weight_rescaling():
    import numpy as np

    def trace(scale):
        scn = Scenario(ues=(
            UeConfig(id=1, cls=UeClass.AOI, q=0.9, p=0.7, rho=1.0 * scale),
            UeConfig(id=2, cls=UeClass.LATENCY, q=0.2, p=0.8, rho=1.0 * scale),
            UeConfig(id=3, cls=UeClass.THROUGHPUT, p=0.9, alpha=0.2),
        ), variant=Variant.LATENCY_WEIGHTED)
        p = HierarchicalPolicy(scn, {1: 2})
        rng = np.random.default_rng(17)
        out = []
        for t in range(1, 3000):
            arrived = [ue for ue in (1, 2) if rng.random() < (0.9 if ue == 1 else 0.2)]
            p.update_index(t, arrived)
            action = p.select(t)
            out.append(None if action is None else (action.ue_id, action.g))
            if action is not None:
                p.on_outcome(action, rng.random() < 0.7, t)
        return out

    assert trace(1.0) == trace(7.3)


# -- virtual weights -------------------------------------------------------------

def test_virtual_weights_start_at_one_and_follow_gradient():
    p = HierarchicalPolicy(constrained_scenario(beta=5.0), {1: 2})
    assert p.virtual and p.name == "vw"
    assert p.state.virtual_rho[2] == 1.0
    p.update_virtual_weights({2: 1.4})
    # step: 1 - 0.1 * (5 - 1.4) = 0.64
    assert p.state.virtual_rho[2] == pytest.approx(0.64)


def test_virtual_weight_zero_floor():
    p = HierarchicalPolicy(constrained_scenario(beta=5.0), {1: 2})
    p.state.virtual_rho[2] = 0.1
    p.update_virtual_weights({2: 1.4})
    assert p.state.virtual_rho[2] == 0.0


def test_virtual_weight_fixed_point():
    p = HierarchicalPolicy(constrained_scenario(beta=2.0), {1: 2})
    p.update_virtual_weights({2: 2.0})
    assert p.state.virtual_rho[2] == 1.0


def test_virtual_weight_grows_when_infeasible():
    p = HierarchicalPolicy(constrained_scenario(beta=1.01), {1: 2})
    values = [1.0]
    for _ in range(5):
        p.update_virtual_weights({2: 1.4})
        values.append(p.state.virtual_rho[2])
    assert all(b > a for a, b in zip(values, values[1:]))


def test_zero_weight_latency_queue_still_outranks_throughput_tier():
    p = HierarchicalPolicy(constrained_scenario(beta=5.0), {1: 2})
    p.state.virtual_rho[2] = 0.0
    p.update_index(1, [2])
    assert p.state.W[2] == 0.0
    assert p.select(1) == Transmit(2, 1)  # pool membership, not index, decides the tier


# -- randomised policy -------------------------------------------------------------

def rd(beta=2.0):
    return RandomizedPolicy(constrained_scenario(beta=beta), {1: 2})


def test_rd_probability_partition():
    # theta for (q=0.2, p=0.8, beta=2) is 0.75; the latency interval comes
    # first, the deterministic candidate takes the remainder
    p = rd(beta=2.0)
    p.update_index(1, [2])
    assert p.select(1, draw=0.5) == Transmit(2, 1)
    assert p.select(1, draw=0.74) == Transmit(2, 1)
    assert p.select(1, draw=0.76).ue_id == 3
    assert p.select(1, draw=0.9).ue_id == 3


def test_rd_empty_latency_queue_gives_candidate_probability_one():
    p = rd()
    assert p.select(1, draw=0.0).ue_id == 3
    assert p.select(1, draw=0.999).ue_id == 3


def test_rd_aoi_candidate_outranks_throughput():
    p = rd()
    for t in (1, 2, 3):
        p.update_index(t, [1])
    action = p.select(3, draw=0.99)
    assert action == Transmit(1, 3)


def test_rd_never_idles_with_throughput_ues():
    p = rd()
    assert p.select(1, draw=0.5) is not None


def test_rd_share_clamped_when_ceiling_unattainable():
    # beta below the queueing floor pushes theta above 1; the share clamps
    # so the latency ue is served whenever it has a packet
    p = rd(beta=1.2)
    assert p.theta[2] > 1.0
    p.update_index(1, [2])
    assert p.select(1, draw=0.999999) == Transmit(2, 1)


def test_rd_partition_orders_latency_ues_by_id():
    scn = Scenario(ues=(
        UeConfig(id=2, cls=UeClass.LATENCY, q=0.2, p=0.8, beta=2.0),   # share 0.75
        UeConfig(id=3, cls=UeClass.THROUGHPUT, p=0.9, alpha=0.1),
        UeConfig(id=5, cls=UeClass.LATENCY, q=0.1, p=0.9, beta=10.0),  # share 0.2
    ), variant=Variant.LATENCY_CONSTRAINED)
    p = RandomizedPolicy(scn, {})
    p.update_index(1, [2, 5])
    assert p.select(1, draw=0.4).ue_id == 2    # [0, 0.75)
    assert p.select(1, draw=0.80).ue_id == 5   # [0.75, 0.95)
    assert p.select(1, draw=0.97).ue_id == 3   # leftover to the candidate


def test_rd_latency_ues_have_no_index():
    p = rd()
    p.update_index(1, [2])
    assert 2 not in p.state.W


def test_rd_success_clears_aoi_candidate_only():
    p = rd()
    for t in (1, 2, 3):
        p.update_index(t, [1, 2])
    action = p.select(3, draw=0.99)   # aoi candidate
    assert action.ue_id == 1
    p.on_outcome(action, success=True, t=3)
    assert p.state.s_packet[1] is None and p.state.W[1] == 0.0
    action = p.select(4, draw=0.2)    # latency interval
    assert action.ue_id == 2
    p.on_outcome(action, success=True, t=4)
    assert len(p.state.latency_queues[2]) == 2


# -- weighted-rate rule -------------------------------------------------------------

def cmu_scenario():
    return Scenario(ues=(
        UeConfig(id=1, cls=UeClass.LATENCY, q=0.2, p=0.8, rho=1.0),   # index 4
        UeConfig(id=2, cls=UeClass.LATENCY, q=0.3, p=0.6, rho=1.0),   # index 2
    ), variant=Variant.LATENCY_WEIGHTED)


def test_cmu_serves_highest_weighted_rate():
    p = CmuPolicy(cmu_scenario())
    p.update_index(1, [1, 2])
    assert p.select(1).ue_id == 1


def test_cmu_work_conserving_fifo():
    p = CmuPolicy(cmu_scenario())
    p.update_index(1, [2])
    p.update_index(2, [2])
    assert p.select(2) == Transmit(2, 1)   # oldest first
    p.on_outcome(p.select(2), success=True, t=2)
    assert p.select(3) == Transmit(2, 2)
    p.on_outcome(p.select(3), success=True, t=3)
    assert p.select(4) is None             # idle only when all queues empty


def test_cmu_rejects_mixed_scenarios():
    with pytest.raises(ScenarioError):
        CmuPolicy(weighted_scenario())


# -- construction helpers -------------------------------------------------------------

def test_thresholds_for_reference_scenario():
    scn = weighted_scenario()
    thresholds, sol = thresholds_for(scn, 1 - 0.25 - 0.2 / 0.9)
    assert thresholds == {1: 2}
    assert sol.t_star[1] == pytest.approx(2.7068, abs=1e-4)


def test_thresholds_for_without_aoi_ues():
    scn = Scenario(ues=(UeConfig(id=2, cls=UeClass.LATENCY, q=0.2, p=0.8, rho=1.0),),
                   variant=Variant.LATENCY_WEIGHTED)
    thresholds, sol = thresholds_for(scn, 0.5)
    assert thresholds == {} and sol is None
