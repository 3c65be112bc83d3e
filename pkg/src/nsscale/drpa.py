"""Scaling decision pipeline: demand estimation, candidate level filtering,
cost-optimal level selection, and infrastructure-site placement.

Every function here is pure over its input snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .capacity import DIMENSIONS, CapacityVector, ZERO
from .descriptors import (
    CLASS_NONE, Catalog, Nsd, NsDeploymentFlavor, NsIlDelta,
    aggregate_capacity, ns_il_delta, vdu_capacity, vnf_il_delta,
)
from .inventory import NsInfo, ZoneReport, pop_available
from .monitoring import MetricStore

ACTION_NONE = "none"
ACTION_SCALE = "scale"

DEFAULT_TARGET_UTILIZATION = 0.6


class DrpaError(RuntimeError):
    pass


class NoFeasibleLevelError(DrpaError):
    """No level in the flavor can satisfy the estimated demand."""


class UnplaceableError(DrpaError):
    def __init__(self, item_key: str, shortfall: list):
        super().__init__("no site fits %s (short on %s)" % (item_key, shortfall))
        self.item_key = item_key
        self.shortfall = shortfall


class NoPlaceableCandidateError(DrpaError):
    def __init__(self, reasons: dict):
        super().__init__("no placeable candidate: %s" % reasons)
        self.reasons = reasons


@dataclass(frozen=True)
class CostModel:
    w_vcpu: float = 1.0
    w_memory: float = 1.0
    w_storage: float = 1.0
    w_bandwidth: float = 1.0

    def cost(self, capacity: CapacityVector) -> float:
        return (self.w_vcpu * capacity.vcpu + self.w_memory * capacity.memory
                + self.w_storage * capacity.storage
                + self.w_bandwidth * capacity.bandwidth)

    @classmethod
    def from_dict(cls, data: dict) -> "CostModel":
        return cls(**{("w_" + k if not k.startswith("w_") else k): v
                      for k, v in data.items()})


@dataclass(frozen=True)
class DemandEstimate:
    required: CapacityVector
    headroom: float  # the target utilization fraction
    basis: dict = field(default_factory=dict)  # dim -> (utilization, capacity)


@dataclass(frozen=True)
class PlacementItem:
    """One resource addition to place: a new VNFC instance or a VL bitrate
    increase."""

    key: str
    spec: CapacityVector
    kind: str  # "vnfc" or "vl"
    profile_id: str = ""
    vdu_ref: str = ""
    vnfc_name: str = ""
    vnf_il_ref: str = ""
    new_instance_index: int = -1  # >= 0 when part of a whole new VNF instance
    retained_instance_index: int = -1  # >= 0 when scaling an existing instance
    vl_profile_id: str = ""
    anti_affinity: str = ""


@dataclass(frozen=True)
class PlacementMap:
    assignments: dict  # item key -> pop id
    selected_vims: frozenset


@dataclass(frozen=True)
class CandidateEval:
    ns_il_id: str
    cost: float
    total_instances: int
    feasible: bool
    reason: str = ""
    placement: PlacementMap | None = None


@dataclass(frozen=True)
class DrpaDecision:
    action: str
    target_ns_il: str = ""
    classification: str = CLASS_NONE
    placement: dict = field(default_factory=dict)
    selected_vims: frozenset = frozenset()
    rationale: tuple = ()
    estimate: DemandEstimate | None = None
    verdicts: tuple = ()


@dataclass(frozen=True)
class DrpaInput:
    verdicts: tuple
    ns_info: NsInfo
    vnf_infos: tuple
    catalog: Catalog
    capacity: list  # capacity_report output
    metric_store: MetricStore


def estimate_demand(verdicts: tuple, store: MetricStore,
                    current_capacity: CapacityVector,
                    target_utilization: float,
                    dimension_map: dict | None = None) -> DemandEstimate:
    """Linear utilization scaling: a violated dimension must end up at the
    target utilization given its observed load; other dimensions keep their
    current capacity."""
    dimension_map = dimension_map or {}
    violated = set()
    for verdict in verdicts:
        violated |= set(verdict.violated_dimensions)
    basis = {}
    required = {}
    for dim in DIMENSIONS:
        capacity = current_capacity.get(dim)
        if dim in violated:
            utilization = _observed_utilization(store, dim, dimension_map)
            if utilization is None:
                required[dim] = capacity
                continue
            basis[dim] = (utilization, capacity)
            required[dim] = utilization * capacity / target_utilization
        else:
            required[dim] = capacity
    return DemandEstimate(CapacityVector(**required), target_utilization, basis)


def _observed_utilization(store: MetricStore, dimension: str,
                          dimension_map: dict):
    values = []
    for (subject, name) in sorted(store.streams()):
        if dimension_map.get(name) == dimension:
            latest = store.latest(subject, name)
            if latest is not None:
                values.append(latest)
    return max(values) if values else None


def candidate_ns_ils(catalog: Catalog, nsd: Nsd, flavor: NsDeploymentFlavor,
                     estimate: DemandEstimate, direction: str, current: str,
                     cost_model: CostModel | None = None) -> list:
    """Levels able to carry the estimated demand, in declaration order.

    Scale-out excludes the current level; scale-in additionally requires a
    cost strictly below the current level's.
    """
    flavor.ns_il(current)  # raises UnknownLevelError for a bad current
    cost_model = cost_model or CostModel()
    current_cost = cost_model.cost(aggregate_capacity(catalog, nsd, flavor, current))
    candidates = []
    for ns_il in flavor.ns_ils:
        if ns_il.id == current:
            continue
        capacity = aggregate_capacity(catalog, nsd, flavor, ns_il.id)
        if not capacity.covers(estimate.required):
            continue
        if direction == "scale-in" and cost_model.cost(capacity) >= current_cost:
            continue
        candidates.append(ns_il.id)
    if not candidates:
        raise NoFeasibleLevelError(
            "no %s level in flavor %s satisfies demand %s"
            % (direction, flavor.id, estimate.required.as_dict()))
    return candidates


def delta_additions(catalog: Catalog, nsd: Nsd, flavor: NsDeploymentFlavor,
                    delta: NsIlDelta, constraints: dict | None = None) -> list:
    """Expand a level delta into concrete placement items (new VNFC
    instances and VL bitrate increases)."""
    anti = (constraints or {}).get("anti_affinity", {})
    items = []
    for pd in delta.profile_deltas:
        profile = flavor.profile(pd.profile_id)
        vnfd = catalog.vnfds[profile.vnfd_ref]
        vnf_flavor = vnfd.flavor(profile.vnf_flavor_ref)
        retained = min(pd.from_count, pd.to_count) if pd.from_il is not None else 0
        if pd.il_changed and retained > 0:
            # Each retained instance moves level in place.
            il_delta = vnf_il_delta(vnfd, vnf_flavor, pd.from_il, pd.to_il)
            for e in range(retained):
                for vdu_id in sorted(il_delta.add):
                    vdu = vnfd.vdu(vdu_id)
                    for i in range(il_delta.add[vdu_id]):
                        items.append(PlacementItem(
                            key="%s/scale%d/vnfc/%s/%d" % (pd.profile_id, e, vdu_id, i),
                            spec=vdu_capacity(vnfd, vdu_id),
                            kind="vnfc", profile_id=pd.profile_id, vdu_ref=vdu_id,
                            vnfc_name=vdu.vnfc_name, vnf_il_ref=pd.to_il,
                            retained_instance_index=e,
                            anti_affinity=anti.get(vdu.vnfc_name,
                                                   anti.get(pd.profile_id, "")),
                        ))
        if pd.count_delta > 0:
            target_il = vnf_flavor.il(pd.to_il)
            for j in range(pd.count_delta):
                for vdu_id in sorted(target_il.counts):
                    vdu = vnfd.vdu(vdu_id)
                    for i in range(target_il.counts[vdu_id]):
                        items.append(PlacementItem(
                            key="%s/inst%d/vnfc/%s/%d" % (pd.profile_id, j, vdu_id, i),
                            spec=vdu_capacity(vnfd, vdu_id),
                            kind="vnfc", profile_id=pd.profile_id, vdu_ref=vdu_id,
                            vnfc_name=vdu.vnfc_name, vnf_il_ref=pd.to_il,
                            new_instance_index=j,
                            anti_affinity=anti.get(vdu.vnfc_name,
                                                   anti.get(pd.profile_id, "")),
                        ))
    for vl_profile_id, (before, after) in sorted(delta.vl_changes.items()):
        if after > before:
            items.append(PlacementItem(
                key="vl/%s" % vl_profile_id,
                spec=CapacityVector(bandwidth=after - before),
                kind="vl", vl_profile_id=vl_profile_id,
            ))
    return items


def plan_placement(items: list, pops: list, constraints: dict | None = None) -> PlacementMap:
    """First-fit over sites in ascending id order, against site-aggregate
    available capacity. Items sharing an anti-affinity label land on
    distinct sites."""
    availability = {pop.id: pop.available() for pop in pops}
    vim_of = {pop.id: pop.vim_ref for pop in pops}
    return _first_fit(items, availability, vim_of)


def _first_fit(items: list, availability: dict, vim_of: dict) -> PlacementMap:
    remaining = dict(availability)
    label_sites = {}  # anti-affinity label -> set of pop ids already used
    assignments = {}
    for item in items:
        placed = False
        best_shortfall = None
        for pop_id in sorted(remaining):
            if item.anti_affinity and pop_id in label_sites.get(item.anti_affinity, set()):
                continue
            if remaining[pop_id].covers(item.spec):
                assignments[item.key] = pop_id
                remaining[pop_id] = remaining[pop_id] - item.spec
                if item.anti_affinity:
                    label_sites.setdefault(item.anti_affinity, set()).add(pop_id)
                placed = True
                break
            shortfall = remaining[pop_id].deficient_dimensions(item.spec)
            if best_shortfall is None or len(shortfall) < len(best_shortfall):
                best_shortfall = shortfall
        if not placed:
            raise UnplaceableError(item.key, best_shortfall or ["anti-affinity"])
    vims = frozenset(vim_of[p] for p in assignments.values())
    return PlacementMap(assignments, vims)


def placement_exists(items: list, availability: dict) -> bool:
    """Exhaustive assignment search; the independent check used by the
    brute-force selector."""
    return _exists_with_exclusions(list(items), dict(availability), {})


def _exists_with_exclusions(items, availability, excluded):
    if not items:
        return True
    item = items[0]
    for pop_id in sorted(availability):
        if item.anti_affinity and pop_id in excluded.get(item.anti_affinity, set()):
            continue
        if not availability[pop_id].covers(item.spec):
            continue
        reduced = dict(availability)
        reduced[pop_id] = reduced[pop_id] - item.spec
        next_excluded = {k: set(v) for k, v in excluded.items()}
        if item.anti_affinity:
            next_excluded.setdefault(item.anti_affinity, set()).add(pop_id)
        if _exists_with_exclusions(items[1:], reduced, next_excluded):
            return True
    return False


def _total_instances(flavor: NsDeploymentFlavor, ns_il_id: str) -> int:
    ns_il = flavor.ns_il(ns_il_id)
    return sum(count for _, count in ns_il.vnf_entries.values())


def select_optimum(catalog: Catalog, nsd: Nsd, flavor: NsDeploymentFlavor,
                   candidates: list, cost_model: CostModel, pops: list,
                   ns_info: NsInfo, constraints: dict | None = None,
                   estimate: DemandEstimate | None = None,
                   verdicts: tuple = ()) -> DrpaDecision:
    """Minimum weighted-capacity cost among placeable candidates.
    Ties break on fewest total VNF instances, then declaration order."""
    if not candidates:
        raise NoFeasibleLevelError("empty candidate set")
    order = {il.id: i for i, il in enumerate(flavor.ns_ils)}
    evaluations = []
    for ns_il_id in candidates:
        cost = cost_model.cost(aggregate_capacity(catalog, nsd, flavor, ns_il_id))
        instances = _total_instances(flavor, ns_il_id)
        delta = ns_il_delta(catalog, nsd, flavor, ns_info.current_ns_il, ns_il_id)
        items = delta_additions(catalog, nsd, flavor, delta, constraints)
        try:
            placement = plan_placement(items, pops, constraints)
            evaluations.append(CandidateEval(ns_il_id, cost, instances, True,
                                             placement=placement))
        except UnplaceableError as exc:
            evaluations.append(CandidateEval(ns_il_id, cost, instances, False,
                                             reason=str(exc)))
    feasible = [e for e in evaluations if e.feasible]
    if not feasible:
        raise NoPlaceableCandidateError(
            {e.ns_il_id: e.reason for e in evaluations})
    best = min(feasible,
               key=lambda e: (e.cost, e.total_instances, order[e.ns_il_id]))
    delta = ns_il_delta(catalog, nsd, flavor, ns_info.current_ns_il, best.ns_il_id)
    return DrpaDecision(
        action=ACTION_SCALE,
        target_ns_il=best.ns_il_id,
        classification=delta.classification,
        placement=dict(best.placement.assignments),
        selected_vims=best.placement.selected_vims,
        rationale=tuple(evaluations),
        estimate=estimate,
        verdicts=tuple(verdicts),
    )


def decide(inp: DrpaInput, cost_model: CostModel,
           target_utilization: float = DEFAULT_TARGET_UTILIZATION,
           pops: list | None = None, constraints: dict | None = None,
           dimension_map: dict | None = None) -> DrpaDecision:
    """Full pipeline: rule verdicts -> demand -> candidates -> optimum."""
    nsd = inp.catalog.nsds[inp.ns_info.nsd_ref]
    flavor = nsd.flavor(inp.ns_info.flavor_ref)
    hints = {rule.id: rule.direction_hint for rule in nsd.auto_scaling_rules}
    fired = [v for v in inp.verdicts if not v.satisfied]
    if not fired:
        return DrpaDecision(action=ACTION_NONE, verdicts=tuple(inp.verdicts))
    if any(hints.get(v.rule_id) == "scale-out" for v in fired):
        direction = "scale-out"
    else:
        direction = "scale-in"
    current_capacity = aggregate_capacity(inp.catalog, nsd, flavor,
                                          inp.ns_info.current_ns_il)
    estimate = estimate_demand(tuple(fired), inp.metric_store, current_capacity,
                               target_utilization, dimension_map)
    candidates = candidate_ns_ils(inp.catalog, nsd, flavor, estimate, direction,
                                  inp.ns_info.current_ns_il, cost_model)
    return select_optimum(inp.catalog, nsd, flavor, candidates, cost_model,
                          pops or [], inp.ns_info, constraints,
                          estimate=estimate, verdicts=tuple(inp.verdicts))


def exhaustive_select(catalog: Catalog, nsd: Nsd, flavor: NsDeploymentFlavor,
                      estimate: DemandEstimate, cost_model: CostModel,
                      pops: list, current: str | None = None,
                      exclude: tuple = (), constraints: dict | None = None):
    """Brute-force selection oracle: enumerate every level, check feasibility
    by direct capacity comparison plus exhaustive placement search, and take
    the argmin under the same tie-breaks as select_optimum. Returns None when
    nothing is feasible."""
    availability = {pop.id: pop.available() for pop in pops}
    best = None
    for index, ns_il in enumerate(flavor.ns_ils):
        if ns_il.id in exclude:
            continue
        capacity = aggregate_capacity(catalog, nsd, flavor, ns_il.id)
        if not capacity.covers(estimate.required):
            continue
        if current is not None:
            delta = ns_il_delta(catalog, nsd, flavor, current, ns_il.id)
            items = delta_additions(catalog, nsd, flavor, delta, constraints)
        else:
            items = [PlacementItem(key="all", spec=capacity, kind="vnfc")]
        if not _exists_with_exclusions(items, dict(availability), {}):
            continue
        key = (cost_model.cost(capacity), _total_instances(flavor, ns_il.id), index)
        if best is None or key < best[0]:
            best = (key, ns_il.id)
    return best[1] if best else None
