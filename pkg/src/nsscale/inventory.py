"""Runtime repositories: zone capacity accounting (allocated/reserved/
available), reservations, resource handles, and NS/VNF instance records."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from .capacity import DIMENSIONS, KIND_DIMENSIONS, CapacityVector, ZERO

RESERVATION_ACTIVE = "active"
RESERVATION_CONSUMED = "consumed"
RESERVATION_CANCELLED = "cancelled"

STOPPED = "STOPPED"
STARTED = "STARTED"

NS_INSTANTIATED = "instantiated"
NS_SCALING = "scaling"
NS_TERMINATED = "terminated"


class InventoryError(RuntimeError):
    pass


class InsufficientCapacityError(InventoryError):
    def __init__(self, zone_id: str, dimension: str, needed: float, available: float):
        super().__init__(
            "zone %s: need %s %s, only %s available"
            % (zone_id, needed, dimension, available))
        self.zone_id = zone_id
        self.dimension = dimension


class ReservationStateError(InventoryError):
    pass


class DoubleReleaseError(InventoryError):
    pass


class IllegalTransitionError(InventoryError):
    pass


@dataclass
class Reservation:
    id: str
    zone_ref: str
    spec: CapacityVector
    kind: str
    state: str = RESERVATION_ACTIVE


@dataclass(frozen=True)
class ResourceHandle:
    id: str
    zone_ref: str
    spec: CapacityVector
    kind: str


class ResourceZone:
    """One capacity partition of an NFVI-PoP. `available` is always derived,
    never stored."""

    def __init__(self, zone_id: str, total: CapacityVector):
        self.id = zone_id
        self.total = total
        self.allocated = ZERO
        self.reserved = ZERO
        self._counter = itertools.count(1)
        self._outstanding = {}  # handle id -> ResourceHandle
        self.reservations = {}  # reservation id -> Reservation

    @property
    def available(self) -> CapacityVector:
        return self.total - self.allocated - self.reserved

    def _check_fits(self, spec: CapacityVector):
        avail = self.available
        for d in DIMENSIONS:
            if spec.get(d) > avail.get(d):
                raise InsufficientCapacityError(self.id, d, spec.get(d), avail.get(d))

    def _check_kind(self, spec: CapacityVector, kind: str):
        if kind not in KIND_DIMENSIONS:
            raise ValueError("unknown resource kind %r" % kind)
        for d in DIMENSIONS:
            if d not in KIND_DIMENSIONS[kind] and spec.get(d) != 0:
                raise ValueError("%s reservation cannot carry %s" % (kind, d))

    def reserve(self, spec: CapacityVector, kind: str) -> Reservation:
        self._check_kind(spec, kind)
        self._check_fits(spec)
        reservation = Reservation("res-%s-%d" % (self.id, next(self._counter)),
                                  self.id, spec, kind)
        self.reserved = self.reserved + spec
        self.reservations[reservation.id] = reservation
        return reservation

    def cancel(self, reservation: Reservation):
        if reservation.state != RESERVATION_ACTIVE:
            raise ReservationStateError(
                "reservation %s is %s" % (reservation.id, reservation.state))
        reservation.state = RESERVATION_CANCELLED
        self.reserved = self.reserved - reservation.spec

    def allocate(self, spec: CapacityVector, kind: str,
                 from_reservation: Reservation | None = None) -> ResourceHandle:
        self._check_kind(spec, kind)
        if from_reservation is not None:
            if from_reservation.state != RESERVATION_ACTIVE:
                raise ReservationStateError(
                    "reservation %s is %s"
                    % (from_reservation.id, from_reservation.state))
            if from_reservation.zone_ref != self.id or from_reservation.kind != kind:
                raise ReservationStateError(
                    "reservation %s does not match zone %s kind %s"
                    % (from_reservation.id, self.id, kind))
            if not from_reservation.spec.covers(spec):
                raise ReservationStateError(
                    "allocation exceeds reservation %s" % from_reservation.id)
            # Consume the whole reservation; unused remainder returns to
            # available implicitly.
            from_reservation.state = RESERVATION_CONSUMED
            self.reserved = self.reserved - from_reservation.spec
        else:
            self._check_fits(spec)
        handle = ResourceHandle("h-%s-%d" % (self.id, next(self._counter)),
                                self.id, spec, kind)
        self.allocated = self.allocated + spec
        self._outstanding[handle.id] = handle
        return handle

    def release(self, handle: ResourceHandle):
        if handle.id not in self._outstanding:
            raise DoubleReleaseError("handle %s is not outstanding" % handle.id)
        del self._outstanding[handle.id]
        self.allocated = self.allocated - handle.spec

    def outstanding_handles(self) -> list:
        return list(self._outstanding.values())

    def check_conservation(self):
        """allocated + reserved + available == total with every part >= 0."""
        assert self.allocated.is_nonnegative(), self.id
        assert self.reserved.is_nonnegative(), self.id
        assert self.available.is_nonnegative(), self.id
        recomputed = self.total - self.allocated - self.reserved
        assert recomputed == self.available

    def snapshot(self) -> dict:
        return {
            "total": self.total.as_dict(),
            "allocated": self.allocated.as_dict(),
            "reserved": self.reserved.as_dict(),
            "available": self.available.as_dict(),
        }


@dataclass
class NfviPop:
    id: str
    vim_ref: str
    zones: list

    def zone(self, zone_id: str) -> ResourceZone:
        for zone in self.zones:
            if zone.id == zone_id:
                return zone
        raise KeyError(zone_id)

    def available(self) -> CapacityVector:
        total = ZERO
        for zone in self.zones:
            total = total + zone.available
        return total


@dataclass(frozen=True)
class ZoneReport:
    pop_id: str
    vim_ref: str
    zone_id: str
    total: CapacityVector
    allocated: CapacityVector
    reserved: CapacityVector
    available: CapacityVector


def capacity_report(pops: list) -> list:
    """Pure snapshot of every zone's capacity state, in (pop, zone) order."""
    report = []
    for pop in sorted(pops, key=lambda p: p.id):
        for zone in sorted(pop.zones, key=lambda z: z.id):
            report.append(ZoneReport(pop.id, pop.vim_ref, zone.id, zone.total,
                                     zone.allocated, zone.reserved, zone.available))
    return report


def pop_available(report: list, pop_id: str) -> CapacityVector:
    total = ZERO
    for entry in report:
        if entry.pop_id == pop_id:
            total = total + entry.available
    return total


# ---------------------------------------------------------------------------
# Instance records

# Legal VnfInfo changes; see record_vnf_info_update.
ADD_INSTANCES_STOPPED = "add-instances-stopped"
MARK_STARTED = "mark-started"
MARK_STOPPED = "mark-stopped"
DELETE_INSTANCES = "delete-instances"
SET_VNF_IL = "set-vnf-il"


@dataclass(frozen=True)
class VnfcInstance:
    id: str
    vdu_ref: str
    state: str
    compute_handle: ResourceHandle | None = None
    storage_handles: tuple = ()
    zone_ref: str = ""
    pop_ref: str = ""


@dataclass(frozen=True)
class VnfInfo:
    vnf_instance_id: str
    vnfd_ref: str
    vnf_flavor_ref: str
    current_vnf_il: str
    vnfc_instances: tuple
    vim_ref: str
    audit: tuple = ()  # ((step-or-"instantiation", tick), ...)

    def instance(self, instance_id: str) -> VnfcInstance:
        for inst in self.vnfc_instances:
            if inst.id == instance_id:
                return inst
        raise KeyError(instance_id)

    def started_counts(self) -> dict:
        counts = {}
        for inst in self.vnfc_instances:
            if inst.state == STARTED:
                counts[inst.vdu_ref] = counts.get(inst.vdu_ref, 0) + 1
        return counts


@dataclass
class NsInfo:
    ns_instance_id: str
    nsd_ref: str
    flavor_ref: str
    current_ns_il: str
    vnf_instance_refs: list
    vl_instance_refs: list
    state: str = NS_INSTANTIATED


def record_vnf_info_update(info: VnfInfo, change: str, step, tick: int,
                           instances: tuple = (), instance_ids: tuple = (),
                           vnf_il: str | None = None) -> VnfInfo:
    """Apply one repository write and return the new VnfInfo revision with an
    audit entry. Raises IllegalTransitionError on state-machine violations."""
    current = list(info.vnfc_instances)
    if change == ADD_INSTANCES_STOPPED:
        existing = {inst.id for inst in current}
        for inst in instances:
            if inst.id in existing:
                raise IllegalTransitionError("instance id %s reused" % inst.id)
            if inst.state != STOPPED:
                raise IllegalTransitionError(
                    "new instances must be created STOPPED (got %s)" % inst.state)
            current.append(inst)
    elif change in (MARK_STARTED, MARK_STOPPED):
        want_from = STOPPED if change == MARK_STARTED else STARTED
        want_to = STARTED if change == MARK_STARTED else STOPPED
        ids = set(instance_ids)
        for i, inst in enumerate(current):
            if inst.id not in ids:
                continue
            if inst.state != want_from:
                raise IllegalTransitionError(
                    "instance %s is %s, expected %s" % (inst.id, inst.state, want_from))
            current[i] = replace(inst, state=want_to)
            ids.discard(inst.id)
        if ids:
            raise IllegalTransitionError("unknown instances %s" % sorted(ids))
    elif change == DELETE_INSTANCES:
        ids = set(instance_ids)
        for inst in current:
            if inst.id in ids and inst.state != STOPPED:
                raise IllegalTransitionError(
                    "cannot delete %s instance %s" % (inst.state, inst.id))
        remaining = [inst for inst in current if inst.id not in ids]
        if len(current) - len(remaining) != len(ids):
            raise IllegalTransitionError("unknown instances %s" % sorted(ids))
        current = remaining
    elif change == SET_VNF_IL:
        pass
    else:
        raise ValueError("unknown change %r" % change)
    return replace(
        info,
        vnfc_instances=tuple(current),
        current_vnf_il=vnf_il if vnf_il is not None else info.current_vnf_il,
        audit=info.audit + ((step, tick),),
    )
