"""Deterministic simulation of the MANO functional blocks (NFVO, VNFM, VIM,
EM) executing the VNF-scaling and add/remove-VNF procedures.

Logical time: every message delivery costs one tick; processing is
instantaneous. The run is strictly single-threaded, so identical
(scenario, seed) pairs produce byte-identical traces.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import drpa as drpa_mod
from .capacity import CapacityVector, ZERO
from .descriptors import (
    CLASS_ADD_VNF, CLASS_NONE, CLASS_REMOVE_VNF, CLASS_VNF_SCALING,
    aggregate_capacity, ns_il_delta, vnf_il_delta,
)
from .inventory import (
    ADD_INSTANCES_STOPPED, DELETE_INSTANCES, MARK_STARTED, MARK_STOPPED,
    SET_VNF_IL, STARTED, STOPPED, InventoryError, NsInfo, NS_INSTANTIATED,
    NS_SCALING, VnfcInstance, VnfInfo, capacity_report,
    record_vnf_info_update,
)
from .monitoring import (
    PERF_INFO_AVAILABLE, THRESHOLD_CROSSED, MetricSample, MetricStore,
    evaluate_rules, indicator_change,
)
from .scenario import (
    Scenario, ScenarioValidationError, build_topology, validate_scenario,
)
from .trace import EventRecord, payload_digest

STATUS_COMPLETED = "completed"
STATUS_OPERATION_FAILED = "operation-failed"

PHASE_TRIGGERED = "triggered"
PHASE_RESERVATION = "allocating:reservation"
PHASE_CREATION = "allocating:creation"
PHASE_STARTING = "allocating:starting"
PHASE_STOPPING = "releasing:stopping"
PHASE_DELETION = "releasing:deletion"
PHASE_COMPLETED = "completed"
PHASE_FAILED = "failed"


class NoZoneFitsError(InventoryError):
    pass


class OperationFailure(RuntimeError):
    def __init__(self, step: int, reason: str):
        super().__init__("step %d: %s" % (step, reason))
        self.step = step
        self.reason = reason


def vim_placement(zones: list, spec: CapacityVector,
                  excluded_zone_ids: set | None = None,
                  pending: dict | None = None):
    """First-fit over zones in ascending id order; the chosen zone covers the
    spec and is not excluded by a zone-level anti-affinity label.  `pending`
    (zone id -> capacity) discounts commitments that are placed but not yet
    reserved, so multi-item placement never over-promises a zone."""
    excluded = excluded_zone_ids or set()
    pending = pending or {}
    for zone in sorted(zones, key=lambda z: z.id):
        if zone.id in excluded:
            continue
        if (zone.available - pending.get(zone.id, ZERO)).covers(spec):
            return zone
    raise NoZoneFitsError("no zone fits %s" % spec.as_dict())


@dataclass
class ScalingOperation:
    op_id: str
    kind: str
    phase: str = PHASE_TRIGGERED
    step_log: list = field(default_factory=list)  # [(step, tick)]
    failed_step: int | None = None
    error: str = ""
    # rollback bookkeeping
    handles: list = field(default_factory=list)  # [(zone, handle)]
    reservations: list = field(default_factory=list)  # [(zone, reservation)]
    label_zones: dict = field(default_factory=dict)  # label -> {zone ids}


@dataclass
class RunResult:
    status: str
    trace: list
    final_state: dict
    operations: list
    decisions: list  # [(tick, DrpaDecision | str)]
    transitions: list  # VNFC lifecycle transitions
    failure_reason: str = ""


class Simulator:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        catalog, problems = validate_scenario(scenario)
        if problems:
            raise ScenarioValidationError(problems)
        self.catalog = catalog
        init = scenario.initial_instance
        self.nsd = catalog.nsds[init["nsd_ref"]]
        self.flavor = self.nsd.flavor(init["flavor_ref"])

        vim_ids, self.pops = build_topology(scenario.topology)
        self.vim_actor = {vid: "VIM-%d" % i for i, vid in enumerate(vim_ids)}
        self.vnfm_actor = {}
        self.em_actor = {}
        for i, vnfd_ref in enumerate(self.nsd.vnfd_refs):
            self.vnfm_actor[vnfd_ref] = "VNFM-%d" % i
            self.em_actor[vnfd_ref] = "EM-%d" % i
        self.nfvo = "NFVO-0"

        self.store = MetricStore(self.nsd.monitored_info)
        self.thresholds = scenario.thresholds()
        self.dimension_map = scenario.dimension_map()
        self.constraints = scenario.placement_constraints()
        self.cost_model = scenario.cost_model()
        self.target_utilization = scenario.target_utilization
        self.reservation_enabled = scenario.reservation_enabled

        self.ns_info = NsInfo(
            ns_instance_id="ns-1", nsd_ref=self.nsd.id,
            flavor_ref=self.flavor.id, current_ns_il=init["ns_il_ref"],
            vnf_instance_refs=[], vl_instance_refs=[])
        self.vnf_infos = {}  # vnf instance id -> VnfInfo
        self.profile_instances = {}  # profile id -> [vnf instance ids]
        self.vl_handles = {}  # vl profile id -> [(pop_id, zone, handle)]

        self.trace = []
        self.operations = []
        self.decisions = []
        self.transitions = []
        self.on_event = None  # callback(record, pops) for auditing
        self._clock = 0
        self._seq = 0
        self._op_counter = itertools.count(1)
        self._instance_counter = itertools.count(1)
        self._cooldown_state = {}
        self._failure = ""

        self._instantiate_initial()

    # -- low-level event machinery -----------------------------------------

    def _send(self, src: str, dst: str, message: str, payload: dict,
              step: int | None = None, op: ScalingOperation | None = None):
        self._clock += 1
        self._seq += 1
        record = EventRecord(self._seq, self._clock, step, src, dst, message,
                             payload_digest(payload))
        self.trace.append(record)
        if op is not None and step is not None:
            op.step_log.append((step, self._clock))
        for pop in self.pops:
            for zone in pop.zones:
                zone.check_conservation()
        if self.on_event is not None:
            self.on_event(record, self.pops)
        return record

    def _vim_of_pop(self, pop_id: str) -> str:
        for pop in self.pops:
            if pop.id == pop_id:
                return pop.vim_ref
        raise KeyError(pop_id)

    def _pop(self, pop_id: str):
        for pop in self.pops:
            if pop.id == pop_id:
                return pop
        raise KeyError(pop_id)

    # -- initial instantiation ---------------------------------------------

    def _instantiate_initial(self):
        """Allocate the initial NS level. Pre-run setup: consumes capacity
        and populates repositories but emits no workflow messages."""
        ns_il = self.flavor.ns_il(self.ns_info.current_ns_il)
        try:
            for profile in self.flavor.vnf_profiles:
                if profile.id not in ns_il.vnf_entries:
                    continue
                il_ref, count = ns_il.vnf_entries[profile.id]
                for _ in range(count):
                    self._create_vnf_instance(profile, il_ref)
            for vl_profile in self.flavor.vl_profiles:
                bitrate = ns_il.vl_entries.get(vl_profile.id, 0)
                if bitrate > 0:
                    self._allocate_vl(vl_profile.id,
                                      CapacityVector(bandwidth=bitrate))
        except InventoryError as exc:
            raise ScenarioValidationError(
                ["initial instantiation: %s" % exc])

    def _create_vnf_instance(self, profile, il_ref: str,
                             started: bool = True) -> str:
        vnfd = self.catalog.vnfds[profile.vnfd_ref]
        vnf_flavor = vnfd.flavor(profile.vnf_flavor_ref)
        il = vnf_flavor.il(il_ref)
        vnf_id = "vnf-%s-%d" % (profile.id, next(self._instance_counter))
        instances = []
        anti = self.constraints.get("anti_affinity", {})
        for vdu_id in sorted(il.counts):
            vdu = vnfd.vdu(vdu_id)
            spec = _vdu_capacity(vnfd, vdu_id)
            label = anti.get(vdu.vnfc_name, anti.get(profile.id, ""))
            for i in range(il.counts[vdu_id]):
                pop, zone = self._place_direct(spec, label)
                compute = zone.allocate(spec.restricted("compute"), "compute")
                storage = ()
                if not spec.restricted("storage").is_zero():
                    storage = (zone.allocate(spec.restricted("storage"),
                                             "storage"),)
                instances.append(VnfcInstance(
                    id="%s-c%d" % (vnf_id, len(instances) + 1),
                    vdu_ref=vdu_id,
                    state=STARTED if started else STOPPED,
                    compute_handle=compute, storage_handles=storage,
                    zone_ref=zone.id, pop_ref=pop.id))
        vim_ref = self._vim_of_pop(instances[0].pop_ref) if instances else ""
        info = VnfInfo(
            vnf_instance_id=vnf_id, vnfd_ref=vnfd.id,
            vnf_flavor_ref=vnf_flavor.id, current_vnf_il=il_ref,
            vnfc_instances=tuple(instances), vim_ref=vim_ref,
            audit=(("instantiation", self._clock),))
        self.vnf_infos[vnf_id] = info
        self.profile_instances.setdefault(profile.id, []).append(vnf_id)
        self.ns_info.vnf_instance_refs.append(vnf_id)
        return vnf_id

    def _place_direct(self, spec: CapacityVector, label: str = ""):
        for pop in sorted(self.pops, key=lambda p: p.id):
            try:
                zone = vim_placement(pop.zones, spec)
            except NoZoneFitsError:
                continue
            return pop, zone
        raise NoZoneFitsError("no site fits %s" % spec.as_dict())

    def _allocate_vl(self, vl_profile_id: str, spec: CapacityVector):
        pop, zone = self._place_direct(spec)
        handle = zone.allocate(spec, "network")
        self.vl_handles.setdefault(vl_profile_id, []).append(
            (pop.id, zone, handle))
        return pop, zone, handle

    # -- main loop ----------------------------------------------------------

    def run(self) -> RunResult:
        for record in self._workload_records():
            if record["type"] == "metric":
                self._deliver_metric(record)
            else:
                self._deliver_indicator(record)
        status = STATUS_OPERATION_FAILED if self._failure else STATUS_COMPLETED
        return RunResult(status, self.trace, self.final_state(),
                         self.operations, self.decisions, self.transitions,
                         failure_reason=self._failure)

    def _workload_records(self) -> list:
        records = []
        for i, rec in enumerate(self.scenario.workload.get("metrics", ())):
            tick, subject, metric, value = rec
            records.append({"type": "metric", "tick": tick, "subject": subject,
                            "metric": metric, "value": value, "order": (0, i)})
        for i, rec in enumerate(self.scenario.workload.get("indicators", ())):
            tick, vnf, indicator, value = rec
            records.append({"type": "indicator", "tick": tick, "vnf": vnf,
                            "indicator": indicator, "value": value,
                            "order": (1, i)})
        records.sort(key=lambda r: (r["tick"], r["order"]))
        return records

    def _deliver_metric(self, record):
        self._clock = max(self._clock, record["tick"])
        sample = MetricSample(record["tick"], record["subject"],
                              record["metric"], record["value"])
        src = self.vnfm_actor.get(record["subject"],
                                  next(iter(self.vim_actor.values()), "VIM-0"))
        notifications = self.store.ingest(sample, self.thresholds, origin=src)
        for note in notifications:
            step = 1 if note.variant == PERF_INFO_AVAILABLE else 2
            self._send(src, self.nfvo, note.variant, note.payload, step=step)
            self._on_notification(note)

    def _deliver_indicator(self, record):
        self._clock = max(self._clock, record["tick"])
        subject = record["vnf"]
        vnfd_ref = subject if subject in self.catalog.vnfds else \
            self.vnf_infos[subject].vnfd_ref
        vnfd = self.catalog.vnfds[vnfd_ref]
        note = indicator_change(vnfd, subject, record["indicator"],
                                record["value"], record["tick"],
                                origin=self.em_actor[vnfd_ref])
        if isinstance(record["value"], (int, float)):
            # numeric indicators feed the rule engine like any metric
            self.store.ingest(MetricSample(record["tick"], vnfd_ref,
                                           record["indicator"],
                                           record["value"]))
        em = self.em_actor[vnfd_ref]
        vnfm = self.vnfm_actor[vnfd_ref]
        self._send(em, vnfm, note.variant, note.payload, step=3)
        self._send(vnfm, self.nfvo, note.variant, note.payload, step=3)
        self._on_notification(note)

    def _on_notification(self, note):
        if self.ns_info.state != NS_INSTANTIATED:
            return
        now = note.time
        verdicts = evaluate_rules(self.nsd.auto_scaling_rules, self.store, now,
                                  self.dimension_map, self._cooldown_state)
        if all(v.satisfied for v in verdicts):
            return
        inp = drpa_mod.DrpaInput(
            verdicts=tuple(verdicts), ns_info=self.ns_info,
            vnf_infos=tuple(self.vnf_infos.values()), catalog=self.catalog,
            capacity=capacity_report(self.pops), metric_store=self.store)
        try:
            decision = drpa_mod.decide(
                inp, self.cost_model, self.target_utilization, self.pops,
                self.constraints, self.dimension_map)
        except drpa_mod.DrpaError as exc:
            self._send(self.nfvo, self.nfvo, "DrpaDecision",
                       {"action": "error", "reason": str(exc)}, step=4)
            self.decisions.append((now, str(exc)))
            return
        self._send(self.nfvo, self.nfvo, "DrpaDecision",
                   {"action": decision.action,
                    "target_ns_il": decision.target_ns_il,
                    "classification": decision.classification}, step=4)
        self.decisions.append((now, decision))
        if decision.action == drpa_mod.ACTION_SCALE:
            self._execute_decision(decision)

    # -- procedure execution -------------------------------------------------

    def _execute_decision(self, decision):
        delta = ns_il_delta(self.catalog, self.nsd, self.flavor,
                            self.ns_info.current_ns_il, decision.target_ns_il)
        op = ScalingOperation("op-%d" % next(self._op_counter),
                              delta.classification)
        self.operations.append(op)
        self.ns_info.state = NS_SCALING
        try:
            # VL increases ride the first allocating sub-procedure, decreases
            # the first releasing one; a leftover is applied directly.
            vl_inc = {k: v for k, v in delta.vl_changes.items() if v[1] > v[0]}
            vl_dec = {k: v for k, v in delta.vl_changes.items() if v[1] < v[0]}

            def take(pool):
                taken = dict(pool)
                pool.clear()
                return taken

            def commit():
                # Rollback must never touch resources a finished
                # sub-procedure already handed to running instances.
                op.handles.clear()
                op.reservations.clear()

            for pd in delta.profile_deltas:
                retained = min(pd.from_count, pd.to_count) \
                    if pd.from_il is not None else 0
                if pd.il_changed and retained > 0:
                    for e in range(retained):
                        self._scale_vnf_procedure(
                            op, decision, pd, take(vl_inc), take(vl_dec), e)
                        commit()
                if pd.count_delta > 0:
                    self._add_vnf_procedure(op, decision, pd, take(vl_inc))
                elif pd.count_delta < 0:
                    self._remove_vnf_procedure(op, decision, pd, take(vl_dec))
                commit()
            if vl_inc or vl_dec:
                # VL-only change: adjust bitrates without VNF involvement.
                self._apply_vl_changes_direct(op, {**vl_inc, **vl_dec})
                commit()
            self.ns_info.current_ns_il = decision.target_ns_il
            op.phase = PHASE_COMPLETED
        except (OperationFailure, InventoryError) as exc:
            self._rollback(op)
            op.phase = PHASE_FAILED
            op.failed_step = getattr(exc, "step", 12)
            op.error = getattr(exc, "reason", str(exc))
            self._failure = str(exc)
            self._send(self.nfvo, self.nfvo, "OperationFailed",
                       {"op_id": op.op_id, "step": op.failed_step,
                        "reason": op.error})
        finally:
            self.ns_info.state = NS_INSTANTIATED

    def _rollback(self, op: ScalingOperation):
        for zone, handle in op.handles:
            zone.release(handle)
        op.handles.clear()
        for zone, reservation in op.reservations:
            if reservation.state == "active":
                zone.cancel(reservation)
        op.reservations.clear()

    def _scale_vnf_procedure(self, op, decision, pd, vl_inc, vl_dec, index):
        """Change one VNF instance's level in place: allocation before
        release so the replacement instance is running before the old one
        stops."""
        profile = self.flavor.profile(pd.profile_id)
        vnfd = self.catalog.vnfds[profile.vnfd_ref]
        vnf_flavor = vnfd.flavor(profile.vnf_flavor_ref)
        vnf_id = self.profile_instances[pd.profile_id][index]
        vnfm = self.vnfm_actor[profile.vnfd_ref]
        em = self.em_actor[profile.vnfd_ref]

        self._send(self.nfvo, vnfm, "ScaleVnfToLevelRequest",
                   {"op_id": op.op_id, "vnf_instance": vnf_id,
                    "new_vnf_il": pd.to_il}, step=5, op=op)
        self._send(vnfm, self.nfvo, "ScaleVnfToLevelResponse",
                   {"op_id": op.op_id}, step=5, op=op)

        il_delta = vnf_il_delta(vnfd, vnf_flavor, pd.from_il, pd.to_il)
        add_items = [i for i in self._decision_items(decision)
                     if i.profile_id == pd.profile_id
                     and i.retained_instance_index == index]
        vl_increases = self._vl_items(vl_inc)

        new_ids = []
        release_needed = bool(il_delta.remove) or bool(vl_dec)
        if add_items or vl_increases:
            new_ids = self._allocation_phase(
                op, decision, vnfm, em, vnf_id, add_items, vl_increases,
                finalize_il=None if release_needed else pd.to_il)
        if release_needed:
            remove_ids = self._select_removals(vnf_id, il_delta.remove, new_ids)
            self._release_phase(op, vnfm, em, vnf_id, remove_ids, vl_dec,
                                finalize_il=pd.to_il)
        if not add_items and not vl_increases and not release_needed:
            # Degenerate rename: the levels carry identical counts.
            self._update_vnf_info(vnf_id, SET_VNF_IL, 19, vnf_il=pd.to_il)

    def _add_vnf_procedure(self, op, decision, pd, vl_inc):
        """Add whole VNF instances: full allocation phase for all their VNFC
        instances plus the VL bitrate modification."""
        profile = self.flavor.profile(pd.profile_id)
        vnfm = self.vnfm_actor[profile.vnfd_ref]
        em = self.em_actor[profile.vnfd_ref]
        vl_increases = self._vl_items(vl_inc)
        for j in range(pd.count_delta):
            vnfd = self.catalog.vnfds[profile.vnfd_ref]
            vnf_flavor = vnfd.flavor(profile.vnf_flavor_ref)
            vnf_id = "vnf-%s-%d" % (profile.id, next(self._instance_counter))
            self.vnf_infos[vnf_id] = VnfInfo(
                vnf_instance_id=vnf_id, vnfd_ref=vnfd.id,
                vnf_flavor_ref=vnf_flavor.id, current_vnf_il=pd.to_il,
                vnfc_instances=(), vim_ref="",
                audit=(("instantiation", self._clock),))
            self.profile_instances.setdefault(profile.id, []).append(vnf_id)
            self.ns_info.vnf_instance_refs.append(vnf_id)
            self._send(self.nfvo, vnfm, "ScaleVnfToLevelRequest",
                       {"op_id": op.op_id, "vnf_instance": vnf_id,
                        "new_vnf_il": pd.to_il, "new_instance": True},
                       step=5, op=op)
            self._send(vnfm, self.nfvo, "ScaleVnfToLevelResponse",
                       {"op_id": op.op_id}, step=5, op=op)
            items = [i for i in self._decision_items(decision)
                     if i.profile_id == pd.profile_id
                     and i.new_instance_index == j]
            self._allocation_phase(op, decision, vnfm, em, vnf_id, items,
                                   vl_increases if j == 0 else [],
                                   finalize_il=pd.to_il)

    def _remove_vnf_procedure(self, op, decision, pd, vl_dec):
        """Remove whole VNF instances: full release phase for all their VNFC
        instances plus the VL bitrate modification."""
        profile = self.flavor.profile(pd.profile_id)
        vnfm = self.vnfm_actor[profile.vnfd_ref]
        em = self.em_actor[profile.vnfd_ref]
        for j in range(-pd.count_delta):
            vnf_id = self.profile_instances[pd.profile_id][-1]
            self._send(self.nfvo, vnfm, "ScaleVnfToLevelRequest",
                       {"op_id": op.op_id, "vnf_instance": vnf_id,
                        "remove_instance": True}, step=5, op=op)
            self._send(vnfm, self.nfvo, "ScaleVnfToLevelResponse",
                       {"op_id": op.op_id}, step=5, op=op)
            info = self.vnf_infos[vnf_id]
            remove_ids = [inst.id for inst in info.vnfc_instances]
            self._release_phase(op, vnfm, em, vnf_id, remove_ids,
                                vl_dec if j == 0 else {},
                                delete_vnf=True)

    def _vl_items(self, vl_inc: dict) -> list:
        return [drpa_mod.PlacementItem(
            key="vl/%s" % pid, spec=CapacityVector(bandwidth=after - before),
            kind="vl", vl_profile_id=pid)
            for pid, (before, after) in sorted(vl_inc.items())
            if after > before]

    def _apply_vl_changes_direct(self, op, vl_changes):
        for item in self._vl_items(vl_changes):
            pop, zone, handle = self._allocate_vl(item.vl_profile_id, item.spec)
            op.handles.append((zone, handle))
        decreases = {k: v for k, v in vl_changes.items() if v[1] < v[0]}
        if decreases:
            self._shrink_vls(op, decreases)

    # -- allocation phase ----------------------------------------------------

    def _decision_items(self, decision) -> list:
        delta = ns_il_delta(self.catalog, self.nsd, self.flavor,
                            self.ns_info.current_ns_il, decision.target_ns_il)
        return drpa_mod.delta_additions(self.catalog, self.nsd, self.flavor,
                                        delta, self.constraints)

    def _allocation_phase(self, op, decision, vnfm, em, vnf_id, vnfc_items,
                          vl_items, finalize_il=None) -> list:
        items = list(vnfc_items) + list(vl_items)
        self._send(vnfm, self.nfvo, "GrantRequest",
                   {"op_id": op.op_id, "intent": "allocate",
                    "vdu_ids": sorted(i.vdu_ref for i in vnfc_items),
                    "internal_vl_ids": sorted(i.vl_profile_id for i in vl_items)},
                   step=6, op=op)
        self._grant_check(op, decision, items)

        reservations = {}  # (item key, kind) -> (zone, reservation)
        if self.reservation_enabled:
            op.phase = PHASE_RESERVATION
            reservations = self._reservation_subphase(op, decision, items)
            self._send(self.nfvo, vnfm, "GrantResponse",
                       {"op_id": op.op_id, "granted": True,
                        "reservation_ids": sorted(
                            r.id for _, r in reservations.values()),
                        "vim_connectivity": sorted(decision.selected_vims)},
                       step=10, op=op)
        else:
            self._send(self.nfvo, vnfm, "GrantResponse",
                       {"op_id": op.op_id, "granted": True,
                        "vim_connectivity": sorted(decision.selected_vims)},
                       step=10, op=op)

        op.phase = PHASE_CREATION
        allocated = self._creation_subphase(op, decision, vnfm, items,
                                            reservations)

        new_instances = []
        for item in vnfc_items:
            compute, storage, zone, pop_id = allocated[item.key]
            new_instances.append(VnfcInstance(
                id="%s-c%d" % (vnf_id, self._next_vnfc_index(vnf_id)),
                vdu_ref=item.vdu_ref, state=STOPPED,
                compute_handle=compute, storage_handles=storage,
                zone_ref=zone.id, pop_ref=pop_id))
        new_ids = [inst.id for inst in new_instances]

        if new_instances:
            self._send(vnfm, em, "ConfigureVnfc", {"instance_ids": new_ids},
                       step=14, op=op)
            self._update_vnf_info(vnf_id, ADD_INSTANCES_STOPPED, 15,
                                  instances=tuple(new_instances))
            for inst in new_instances:
                self._log_transition(vnf_id, inst, None, STOPPED, 15)
            if not self.vnf_infos[vnf_id].vim_ref:
                self.vnf_infos[vnf_id] = _with_vim(
                    self.vnf_infos[vnf_id],
                    self._vim_of_pop(new_instances[0].pop_ref))

            op.phase = PHASE_STARTING
            self._send(vnfm, self.nfvo, "OperateVnfRequest",
                       {"op_id": op.op_id, "target_state": STARTED,
                        "instance_ids": new_ids}, step=16, op=op)
            self._send(self.nfvo, vnfm, "OperateVnfGrant",
                       {"op_id": op.op_id}, step=17, op=op)
            self._send(vnfm, em, "AppConfigure", {"instance_ids": new_ids},
                       step=18, op=op)
            peers = self._affected_peers(vnf_id, new_ids)
            if peers:
                self._send(vnfm, em, "AppConfigure",
                           {"instance_ids": peers, "reconfigure": True},
                           step=18, op=op)
            self._update_vnf_info(vnf_id, MARK_STARTED, 19,
                                  instance_ids=tuple(new_ids),
                                  vnf_il=finalize_il)
            for inst_id in new_ids:
                inst = self.vnf_infos[vnf_id].instance(inst_id)
                self._log_transition(vnf_id, inst, STOPPED, STARTED, 19)
        elif finalize_il is not None and vl_items:
            # pure VL growth attached to this VNF's operation
            self._update_vnf_info(vnf_id, SET_VNF_IL, 19, vnf_il=finalize_il)
        # Committed: these resources now belong to running instances and
        # must survive a later sub-procedure's rollback.
        op.handles.clear()
        op.reservations.clear()
        return new_ids

    def _grant_check(self, op, decision, items):
        for item in items:
            if item.key not in decision.placement:
                raise OperationFailure(
                    6, "grant denied: %s not in the scaling decision" % item.key)
        needed = {}
        for item in items:
            pop_id = decision.placement[item.key]
            needed[pop_id] = needed.get(pop_id, ZERO) + item.spec
        for pop_id, spec in sorted(needed.items()):
            if not self._pop(pop_id).available().covers(spec):
                raise OperationFailure(
                    6, "grant denied: capacity at %s no longer covers %s"
                    % (pop_id, spec.as_dict()))

    def _reservation_subphase(self, op, decision, items) -> dict:
        """Three reservation requests (compute, storage, network) per
        selected VIM; the VIM runs zone placement for each item."""
        reservations = {}
        by_vim = {}
        for item in items:
            pop_id = decision.placement[item.key]
            by_vim.setdefault(self._vim_of_pop(pop_id), []).append(item)
        for vim_ref in sorted(decision.selected_vims):
            vim = self.vim_actor[vim_ref]
            # Zone choice is made once per item against its full spec, so an
            # item's compute/storage/network all land in the same zone and a
            # later kind can never outgrow the zone the first one picked.
            item_zone = {}
            pending = {}
            for kind in ("compute", "storage", "network"):
                kind_items = [
                    (item, item.spec.restricted(kind))
                    for item in by_vim.get(vim_ref, ())
                    if not item.spec.restricted(kind).is_zero()]
                self._send(self.nfvo, vim, "ReserveRequest",
                           {"op_id": op.op_id, "kind": kind,
                            "items": [{"key": i.key,
                                       "pop": decision.placement[i.key],
                                       "spec": s.as_dict(),
                                       "anti_affinity": i.anti_affinity}
                                      for i, s in kind_items]},
                           step=7, op=op)
                placed = []
                ids = []
                for item, spec in kind_items:
                    zone = item_zone.get(item.key)
                    if zone is None:
                        pop = self._pop(decision.placement[item.key])
                        excluded = op.label_zones.get(item.anti_affinity,
                                                      set()) \
                            if item.anti_affinity else set()
                        try:
                            zone = vim_placement(pop.zones, item.spec,
                                                 excluded, pending)
                        except NoZoneFitsError as exc:
                            self._send(vim, self.nfvo, "ReserveResponse",
                                       {"op_id": op.op_id, "kind": kind,
                                        "error": str(exc)}, step=9, op=op)
                            raise OperationFailure(7, str(exc))
                        item_zone[item.key] = zone
                        pending[zone.id] = \
                            pending.get(zone.id, ZERO) + item.spec
                        if item.anti_affinity:
                            op.label_zones.setdefault(item.anti_affinity,
                                                      set()).add(zone.id)
                    reservation = zone.reserve(spec, kind)
                    pending[zone.id] = pending[zone.id] - spec
                    op.reservations.append((zone, reservation))
                    reservations[(item.key, kind)] = (zone, reservation)
                    placed.append({"key": item.key, "zone": zone.id})
                    ids.append(reservation.id)
                self._send(vim, vim, "VimPlacement",
                           {"op_id": op.op_id, "kind": kind, "zones": placed},
                           step=8, op=op)
                self._send(vim, self.nfvo, "ReserveResponse",
                           {"op_id": op.op_id, "kind": kind,
                            "reservation_ids": ids}, step=9, op=op)
        return reservations

    def _creation_subphase(self, op, decision, vnfm, items, reservations) -> dict:
        """Allocate every item (steps 11-13); returns per-item handles."""
        allocated = {}
        for item in sorted(items, key=lambda i: i.key):
            pop_id = decision.placement[item.key]
            pop = self._pop(pop_id)
            vim = self.vim_actor[self._vim_of_pop(pop_id)]
            kinds = ["network"] if item.kind == "vl" else ["compute", "storage"]
            handles = {}
            zone = None
            if not self.reservation_enabled:
                # Pick the zone once per item (full spec) so every handle of
                # this VNFC can later be released against the same zone.
                excluded = op.label_zones.get(item.anti_affinity, set()) \
                    if item.anti_affinity else set()
                try:
                    zone = vim_placement(pop.zones, item.spec, excluded)
                except NoZoneFitsError as exc:
                    raise OperationFailure(12, str(exc))
                if item.anti_affinity:
                    op.label_zones.setdefault(item.anti_affinity,
                                              set()).add(zone.id)
            for kind in kinds:
                spec = item.spec.restricted(kind)
                if spec.is_zero():
                    continue
                if self.reservation_enabled:
                    zone, reservation = reservations[(item.key, kind)]
                    self._send(vnfm, vim, "AllocateRequest",
                               {"op_id": op.op_id, "kind": kind,
                                "reservation_id": reservation.id},
                               step=11, op=op)
                    handle = zone.allocate(spec, kind,
                                           from_reservation=reservation)
                else:
                    self._send(vnfm, vim, "AllocateRequest",
                               {"op_id": op.op_id, "kind": kind,
                                "spec": spec.as_dict(), "pop": pop_id,
                                "anti_affinity": item.anti_affinity},
                               step=11, op=op)
                    try:
                        handle = zone.allocate(spec, kind)
                    except InventoryError as exc:
                        raise OperationFailure(12, str(exc))
                self._send(vim, vim, "ResourceAllocation",
                           {"op_id": op.op_id, "kind": kind,
                            "handle": handle.id, "zone": zone.id},
                           step=12, op=op)
                op.handles.append((zone, handle))
                handles[kind] = handle
                self._send(vim, vnfm, "AllocateResponse",
                           {"op_id": op.op_id, "kind": kind,
                            "handles": [handle.id]}, step=13, op=op)
            if item.kind == "vl":
                handle = handles["network"]
                self.vl_handles.setdefault(item.vl_profile_id, []).append(
                    (pop_id, zone, handle))
                allocated[item.key] = (None, (), zone, pop_id)
            else:
                storage = (handles["storage"],) if "storage" in handles else ()
                allocated[item.key] = (handles["compute"], storage, zone, pop_id)
        return allocated

    # -- release phase -------------------------------------------------------

    def _release_phase(self, op, vnfm, em, vnf_id, remove_ids, vl_decreases,
                       finalize_il=None, delete_vnf=False):
        op.phase = PHASE_STOPPING
        self._send(vnfm, self.nfvo, "GrantRequest",
                   {"op_id": op.op_id, "intent": "release",
                    "instance_ids": sorted(remove_ids)}, step=20, op=op)
        self._send(self.nfvo, vnfm, "GrantResponse",
                   {"op_id": op.op_id, "granted": True}, step=20, op=op)
        self._send(vnfm, self.nfvo, "OperateVnfRequest",
                   {"op_id": op.op_id, "target_state": STOPPED,
                    "instance_ids": sorted(remove_ids)}, step=21, op=op)
        self._send(self.nfvo, vnfm, "OperateVnfGrant",
                   {"op_id": op.op_id}, step=22, op=op)
        peers = self._affected_peers(vnf_id, remove_ids)
        self._send(vnfm, em, "AppConfigure",
                   {"instance_ids": peers, "shutdown": sorted(remove_ids)},
                   step=23, op=op)
        self._update_vnf_info(vnf_id, MARK_STOPPED, 24,
                              instance_ids=tuple(sorted(remove_ids)))
        for inst_id in sorted(remove_ids):
            inst = self.vnf_infos[vnf_id].instance(inst_id)
            self._log_transition(vnf_id, inst, STARTED, STOPPED, 24)

        op.phase = PHASE_DELETION
        info = self.vnf_infos[vnf_id]
        by_vim = {}
        for inst_id in sorted(remove_ids):
            inst = info.instance(inst_id)
            vim_ref = self._vim_of_pop(inst.pop_ref)
            entry = by_vim.setdefault(vim_ref, [])
            entry.append((inst.compute_handle, inst.zone_ref))
            for handle in inst.storage_handles:
                entry.append((handle, inst.zone_ref))
        for pid, (before, after) in sorted(vl_decreases.items()):
            for pop_id, zone, handle in self._vl_handles_to_release(pid, before - after):
                by_vim.setdefault(self._vim_of_pop(pop_id), []).append(
                    (handle, zone.id))

        for vim_ref in sorted(by_vim):
            vim = self.vim_actor[vim_ref]
            handle_ids = sorted(h.id for h, _ in by_vim[vim_ref])
            self._send(vnfm, vim, "ReleaseRequest",
                       {"op_id": op.op_id, "handles": handle_ids},
                       step=25, op=op)
            for handle, zone_id in by_vim[vim_ref]:
                zone = self._zone(zone_id)
                zone.release(handle)
            self._send(vim, vim, "ResourceDeletion",
                       {"op_id": op.op_id, "handles": handle_ids},
                       step=26, op=op)
            self._send(vim, vnfm, "ReleaseResponse",
                       {"op_id": op.op_id, "handles": handle_ids},
                       step=27, op=op)
        self._finish_vl_shrink(vl_decreases)
        self._update_vnf_info(vnf_id, DELETE_INSTANCES, 28,
                              instance_ids=tuple(sorted(remove_ids)),
                              vnf_il=finalize_il)
        if delete_vnf:
            info = self.vnf_infos.pop(vnf_id)
            for pid, ids in self.profile_instances.items():
                if vnf_id in ids:
                    ids.remove(vnf_id)
            self.ns_info.vnf_instance_refs.remove(vnf_id)

    def _vl_handles_to_release(self, vl_profile_id: str, delta: float) -> list:
        """Newest-first handles summing to at least the bitrate decrease; a
        remainder is re-allocated by _finish_vl_shrink."""
        handles = self.vl_handles.get(vl_profile_id, [])
        chosen = []
        total = 0
        while handles and total < delta:
            entry = handles.pop()
            chosen.append(entry)
            total += entry[2].spec.bandwidth
        self._vl_shrink_remainder = getattr(self, "_vl_shrink_remainder", {})
        if total > delta:
            self._vl_shrink_remainder[vl_profile_id] = (
                chosen[-1][0], chosen[-1][1], total - delta)
        return chosen

    def _finish_vl_shrink(self, vl_decreases):
        remainder = getattr(self, "_vl_shrink_remainder", {})
        for pid in sorted(vl_decreases):
            if pid in remainder:
                pop_id, zone, bandwidth = remainder.pop(pid)
                handle = zone.allocate(CapacityVector(bandwidth=bandwidth),
                                       "network")
                self.vl_handles.setdefault(pid, []).append(
                    (pop_id, zone, handle))

    def _shrink_vls(self, op, vl_decreases):
        for pid, (before, after) in sorted(vl_decreases.items()):
            for pop_id, zone, handle in self._vl_handles_to_release(
                    pid, before - after):
                zone.release(handle)
        self._finish_vl_shrink(vl_decreases)

    # -- helpers -------------------------------------------------------------

    def _zone(self, zone_id: str):
        for pop in self.pops:
            for zone in pop.zones:
                if zone.id == zone_id:
                    return zone
        raise KeyError(zone_id)

    def _next_vnfc_index(self, vnf_id: str) -> int:
        counter = getattr(self, "_vnfc_counters", None)
        if counter is None:
            counter = self._vnfc_counters = {}
        # Removals leave holes, so the instance count is not a safe index;
        # track the highest suffix ever used for this VNF instead.
        used = [int(inst.id.rsplit("-c", 1)[1])
                for inst in self.vnf_infos[vnf_id].vnfc_instances]
        counter[vnf_id] = max(counter.get(vnf_id, 0), max(used, default=0)) + 1
        return counter[vnf_id]

    def _affected_peers(self, vnf_id: str, changed_ids) -> list:
        """Running VNFC instances of the same VNF whose connectivity changes
        with the new/removed members."""
        info = self.vnf_infos[vnf_id]
        changed = set(changed_ids)
        return sorted(inst.id for inst in info.vnfc_instances
                      if inst.state == STARTED and inst.id not in changed)

    def _select_removals(self, vnf_id: str, remove_counts: dict,
                         protected: list) -> list:
        info = self.vnf_infos[vnf_id]
        protected_set = set(protected)
        chosen = []
        for vdu_id in sorted(remove_counts):
            candidates = [inst for inst in info.vnfc_instances
                          if inst.vdu_ref == vdu_id
                          and inst.state == STARTED
                          and inst.id not in protected_set]
            chosen.extend(inst.id for inst in candidates[:remove_counts[vdu_id]])
        return chosen

    def _update_vnf_info(self, vnf_id: str, change: str, step: int, **kwargs):
        info = record_vnf_info_update(self.vnf_infos[vnf_id], change, step,
                                      self._clock, **kwargs)
        self.vnf_infos[vnf_id] = info
        vnfm = self.vnfm_actor[info.vnfd_ref]
        self._send(vnfm, self.nfvo, "VnfInfoUpdate",
                   {"vnf_instance": vnf_id, "change": change, "step": step},
                   step=step, op=self.operations[-1] if self.operations else None)

    def _log_transition(self, vnf_id, inst, state_from, state_to, step):
        self.transitions.append({
            "vnf_instance": vnf_id, "instance": inst.id,
            "vdu_ref": inst.vdu_ref, "from": state_from, "to": state_to,
            "step": step, "tick": self._clock})

    def final_state(self) -> dict:
        zones = {}
        for pop in self.pops:
            for zone in pop.zones:
                zones["%s/%s" % (pop.id, zone.id)] = zone.snapshot()
        vnf_infos = {}
        for vnf_id, info in sorted(self.vnf_infos.items()):
            vnf_infos[vnf_id] = {
                "vnfd_ref": info.vnfd_ref,
                "vnf_flavor_ref": info.vnf_flavor_ref,
                "current_vnf_il": info.current_vnf_il,
                "vim_ref": info.vim_ref,
                "vnfc_instances": [
                    {"id": inst.id, "vdu_ref": inst.vdu_ref,
                     "state": inst.state, "zone": inst.zone_ref,
                     "pop": inst.pop_ref}
                    for inst in info.vnfc_instances],
                "audit": [[str(step), tick] for step, tick in info.audit],
            }
        vl_bitrates = {
            pid: sum(h.spec.bandwidth for _, _, h in entries)
            for pid, entries in sorted(self.vl_handles.items())}
        return {
            "ns_info": {
                "ns_instance_id": self.ns_info.ns_instance_id,
                "nsd_ref": self.ns_info.nsd_ref,
                "flavor_ref": self.ns_info.flavor_ref,
                "current_ns_il": self.ns_info.current_ns_il,
                "state": self.ns_info.state,
                "vnf_instance_refs": sorted(self.ns_info.vnf_instance_refs),
            },
            "vnf_infos": vnf_infos,
            "zones": zones,
            "vl_bitrates": vl_bitrates,
        }


def _vdu_capacity(vnfd, vdu_id):
    from .descriptors import vdu_capacity
    return vdu_capacity(vnfd, vdu_id)


def _with_vim(info: VnfInfo, vim_ref: str) -> VnfInfo:
    from dataclasses import replace
    return replace(info, vim_ref=vim_ref)


def run_scenario(scenario: Scenario, seed: int | None = None,
                 on_event=None) -> RunResult:
    """Validate and execute a scenario. The seed is recorded for
    reproducibility; the event loop itself is fully deterministic."""
    sim = Simulator(scenario)
    if on_event is not None:
        sim.on_event = on_event
    return sim.run()
