import random

import pytest

import sample_catalog as sc
from nsscale.capacity import CapacityVector
from nsscale.descriptors import load_catalog
from nsscale.drpa import (
    ACTION_NONE, ACTION_SCALE, CostModel, DrpaInput, NoFeasibleLevelError,
    NoPlaceableCandidateError, PlacementItem, UnplaceableError,
    candidate_ns_ils, decide, delta_additions, estimate_demand,
    exhaustive_select, plan_placement, select_optimum,
)
from nsscale.descriptors import ns_il_delta
from nsscale.inventory import NfviPop, NsInfo, ResourceZone, capacity_report
from nsscale.monitoring import MetricSample, MetricStore, RuleVerdict


def make_store(samples):
    store = MetricStore()
    for t, subject, name, value in samples:
        store.ingest(MetricSample(t, subject, name, value))
    return store


def verdict(dims, rule_id="r-out", satisfied=False):
    return RuleVerdict(rule_id, satisfied, frozenset(dims), 10)


def make_pop(pop_id="pop-1", vim="vim-1", **totals):
    defaults = dict(vcpu=64, memory=128, storage=256, bandwidth=2000)
    defaults.update(totals)
    zone = ResourceZone("z-" + pop_id, CapacityVector(**defaults))
    return NfviPop(pop_id, vim, [zone])


def test_demand_linear_scaling():
    store = make_store([(10, "s", "cpu_load", 0.9)])
    est = estimate_demand((verdict({"vcpu"}),), store,
                          CapacityVector(vcpu=8, memory=16),
                          0.6, {"cpu_load": "vcpu"})
    assert est.required.vcpu == pytest.approx(12.0)
    # non-violated dimensions keep the current capacity
    assert est.required.memory == 16
    assert est.basis["vcpu"] == (0.9, 8)


def test_demand_fixed_point_at_target():
    store = make_store([(10, "s", "cpu_load", 0.6)])
    est = estimate_demand((verdict({"vcpu"}),), store,
                          CapacityVector(vcpu=8), 0.6, {"cpu_load": "vcpu"})
    assert est.required.vcpu == pytest.approx(8.0)


def test_demand_scale_in_path():
    store = make_store([(10, "s", "cpu_load", 0.2)])
    est = estimate_demand((verdict({"vcpu"}, rule_id="r-in"),), store,
                          CapacityVector(vcpu=8), 0.6, {"cpu_load": "vcpu"})
    assert est.required.vcpu == pytest.approx(0.2 * 8 / 0.6)


def test_demand_without_observation_keeps_capacity():
    est = estimate_demand((verdict({"vcpu"}),), MetricStore(),
                          CapacityVector(vcpu=8), 0.6, {"cpu_load": "vcpu"})
    assert est.required.vcpu == 8


class Est:
    def __init__(self, **dims):
        self.required = CapacityVector(**dims)


def test_candidates_scale_out_excludes_current(catalog, nsd, flavor):
    got = candidate_ns_ils(catalog, nsd, flavor, Est(vcpu=7.5), "scale-out",
                           "level-1")
    assert got == ["level-2", "level-3", "level-4"]


def test_candidates_when_only_top_level_fits(catalog, nsd, flavor):
    got = candidate_ns_ils(catalog, nsd, flavor, Est(vcpu=18), "scale-out",
                           "level-3")
    assert got == ["level-4"]


def test_candidates_empty_is_an_error(catalog, nsd, flavor):
    with pytest.raises(NoFeasibleLevelError):
        candidate_ns_ils(catalog, nsd, flavor, Est(vcpu=100), "scale-out",
                         "level-1")


def test_candidates_scale_in_requires_cheaper(catalog, nsd, flavor):
    got = candidate_ns_ils(catalog, nsd, flavor,
                           Est(vcpu=9.2, memory=11, storage=20,
                               bandwidth=267),
                           "scale-in", "level-4")
    assert got == ["level-3"]


def test_delta_additions_scale_and_vl(catalog, nsd, flavor):
    delta = ns_il_delta(catalog, nsd, flavor, "level-1", "level-3")
    items = delta_additions(catalog, nsd, flavor, delta)
    keys = [i.key for i in items]
    assert keys == ["p-b/scale0/vnfc/vdu-2/0", "vl/vlp-1"]
    assert items[0].spec == CapacityVector(8, 16, 20, 0)
    assert items[1].spec == CapacityVector(bandwidth=300)


def test_delta_additions_whole_instance(catalog, nsd, flavor):
    delta = ns_il_delta(catalog, nsd, flavor, "level-3", "level-4")
    items = delta_additions(catalog, nsd, flavor, delta)
    vnfc_keys = [i.key for i in items if i.kind == "vnfc"]
    assert vnfc_keys == ["p-b/inst0/vnfc/vdu-2/0", "p-b/inst0/vnfc/vdu-3/0"]
    assert all(i.new_instance_index == 0 for i in items if i.kind == "vnfc")


def test_plan_placement_first_fit_by_pop_id():
    items = [PlacementItem("a", CapacityVector(vcpu=8), "vnfc")]
    pops = [make_pop("pop-2"), make_pop("pop-1", vcpu=10)]
    placement = plan_placement(items, pops)
    assert placement.assignments == {"a": "pop-1"}
    assert placement.selected_vims == frozenset({"vim-1"})


def test_plan_placement_skips_full_pops():
    items = [PlacementItem("a", CapacityVector(vcpu=8), "vnfc")]
    pops = [make_pop("pop-1", vcpu=4), make_pop("pop-2")]
    placement = plan_placement(items, pops)
    assert placement.assignments == {"a": "pop-2"}


def test_anti_affinity_forces_distinct_pops():
    items = [
        PlacementItem("a", CapacityVector(vcpu=2), "vnfc", anti_affinity="x"),
        PlacementItem("b", CapacityVector(vcpu=2), "vnfc", anti_affinity="x"),
    ]
    pops = [make_pop("pop-1"), make_pop("pop-2", vim="vim-2")]
    placement = plan_placement(items, pops)
    assert set(placement.assignments.values()) == {"pop-1", "pop-2"}
    assert placement.selected_vims == frozenset({"vim-1", "vim-2"})
    with pytest.raises(UnplaceableError):
        plan_placement(items, [make_pop("pop-1")])


def test_unplaceable_names_item_and_shortfall():
    items = [PlacementItem("big", CapacityVector(vcpu=100), "vnfc")]
    with pytest.raises(UnplaceableError) as err:
        plan_placement(items, [make_pop("pop-1")])
    assert err.value.item_key == "big"
    assert err.value.shortfall == ["vcpu"]


def _ns_info(level="level-1"):
    return NsInfo("ns-1", "nsd-1", "df-1", level, [], [])


def test_select_optimum_minimizes_cost(catalog, nsd, flavor):
    decision = select_optimum(catalog, nsd, flavor,
                              ["level-2", "level-3", "level-4"], CostModel(),
                              [make_pop()], _ns_info())
    assert decision.action == ACTION_SCALE
    assert decision.target_ns_il == "level-2"
    assert [e.ns_il_id for e in decision.rationale] == \
        ["level-2", "level-3", "level-4"]
    assert all(e.feasible for e in decision.rationale)


def test_select_optimum_skips_unplaceable(catalog, nsd, flavor):
    # level-2's extra VNFC fits nowhere, level-3's neither, level-4 neither:
    # a tiny pop fails everything
    with pytest.raises(NoPlaceableCandidateError):
        select_optimum(catalog, nsd, flavor, ["level-2"], CostModel(),
                       [make_pop(vcpu=1, memory=1, storage=1, bandwidth=1)],
                       _ns_info())


def test_select_optimum_tie_breaks_on_instances(catalog, nsd, flavor):
    # weight only storage: level-3 (30) and level-2 (30) tie on cost;
    # both carry 3 VNF instances, so declaration order decides
    cm = CostModel(w_vcpu=0, w_memory=0, w_storage=1, w_bandwidth=0)
    decision = select_optimum(catalog, nsd, flavor, ["level-3", "level-2"],
                              cm, [make_pop()], _ns_info())
    assert decision.target_ns_il == "level-2"


def test_decide_none_when_all_satisfied(catalog):
    inp = DrpaInput(verdicts=(verdict({"vcpu"}, satisfied=True),),
                    ns_info=_ns_info(), vnf_infos=(), catalog=catalog,
                    capacity=capacity_report([make_pop()]),
                    metric_store=MetricStore())
    assert decide(inp, CostModel()).action == ACTION_NONE


def test_decide_full_pipeline(catalog):
    store = make_store([(10, "vnfd-b", "cpu_load", 0.9)])
    inp = DrpaInput(verdicts=(verdict({"vcpu"}),), ns_info=_ns_info(),
                    vnf_infos=(), catalog=catalog,
                    capacity=capacity_report([make_pop()]),
                    metric_store=store)
    decision = decide(inp, CostModel(), 0.6, [make_pop()],
                      dimension_map=sc.DIMENSION_MAP)
    # 0.9 * 6 / 0.6 = 9 vcpu: level-2 (8) is out, level-3 (12) is optimal
    assert decision.target_ns_il == "level-3"
    assert decision.classification == "vnf-scaling"
    assert decision.placement["p-b/scale0/vnfc/vdu-2/0"] == "pop-1"


def test_exhaustive_select_agrees_on_sample(catalog, nsd, flavor):
    rng = random.Random(7)
    pops = [make_pop()]
    for _ in range(200):
        current = rng.choice(list(sc.LEVELS))
        demand = Est(vcpu=rng.uniform(0, 30), memory=rng.uniform(0, 50),
                     storage=rng.uniform(0, 70), bandwidth=rng.uniform(0, 900))
        oracle = exhaustive_select(catalog, nsd, flavor, demand, CostModel(),
                                   pops, current=current, exclude=(current,))
        try:
            candidates = candidate_ns_ils(catalog, nsd, flavor, demand,
                                          "scale-out", current)
        except NoFeasibleLevelError:
            assert oracle is None
            continue
        decision = select_optimum(catalog, nsd, flavor, candidates,
                                  CostModel(), pops, _ns_info(current))
        assert decision.target_ns_il == oracle


def test_weight_increase_never_buys_more_of_that_dimension(catalog, nsd,
                                                           flavor):
    pops = [make_pop()]
    demand = Est(vcpu=7.5, memory=12, storage=20, bandwidth=100)
    candidates = candidate_ns_ils(catalog, nsd, flavor, demand, "scale-out",
                                  "level-1")
    base = select_optimum(catalog, nsd, flavor, candidates, CostModel(),
                          pops, _ns_info())
    from nsscale.descriptors import aggregate_capacity
    for dim, kw in [("vcpu", "w_vcpu"), ("bandwidth", "w_bandwidth")]:
        heavy = select_optimum(catalog, nsd, flavor, candidates,
                               CostModel(**{kw: 10.0}), pops, _ns_info())
        before = aggregate_capacity(catalog, nsd, flavor, base.target_ns_il)
        after = aggregate_capacity(catalog, nsd, flavor, heavy.target_ns_il)
        assert after.get(dim) <= before.get(dim)
