import pytest

from nsscale.capacity import CapacityVector, ZERO
from nsscale.inventory import (
    ADD_INSTANCES_STOPPED, DELETE_INSTANCES, MARK_STARTED, MARK_STOPPED,
    STARTED, STOPPED, DoubleReleaseError, IllegalTransitionError,
    InsufficientCapacityError, NfviPop, ReservationStateError, ResourceZone,
    VnfcInstance, VnfInfo, capacity_report, pop_available,
    record_vnf_info_update,
)


def make_zone(**totals):
    defaults = dict(vcpu=16, memory=32, storage=100, bandwidth=1000)
    defaults.update(totals)
    return ResourceZone("z1", CapacityVector(**defaults))


def test_reserve_allocate_release_cycle():
    zone = make_zone()
    spec = CapacityVector(vcpu=4, memory=8)
    res = zone.reserve(spec, "compute")
    assert zone.reserved == spec
    assert zone.available == zone.total - spec
    handle = zone.allocate(spec, "compute", from_reservation=res)
    assert zone.reserved == ZERO
    assert zone.allocated == spec
    zone.check_conservation()
    zone.release(handle)
    assert zone.allocated == ZERO
    assert zone.available == zone.total


def test_partial_reservation_consumption_returns_remainder():
    zone = make_zone()
    res = zone.reserve(CapacityVector(vcpu=8, memory=16), "compute")
    zone.allocate(CapacityVector(vcpu=4, memory=8), "compute",
                  from_reservation=res)
    # the unused half of the reservation is available again
    assert zone.available.vcpu == 12
    zone.check_conservation()


def test_reservation_kind_masks():
    zone = make_zone()
    with pytest.raises(ValueError):
        zone.reserve(CapacityVector(vcpu=1, storage=5), "compute")
    with pytest.raises(ValueError):
        zone.allocate(CapacityVector(bandwidth=10), "storage")


def test_insufficient_capacity_names_dimension():
    zone = make_zone(vcpu=2)
    with pytest.raises(InsufficientCapacityError) as err:
        zone.reserve(CapacityVector(vcpu=4), "compute")
    assert err.value.dimension == "vcpu"
    assert zone.reserved == ZERO


def test_reservations_count_against_availability():
    zone = make_zone(vcpu=8)
    zone.reserve(CapacityVector(vcpu=6), "compute")
    with pytest.raises(InsufficientCapacityError):
        zone.allocate(CapacityVector(vcpu=4), "compute")


def test_cancel_and_stale_reservation():
    zone = make_zone()
    res = zone.reserve(CapacityVector(vcpu=2), "compute")
    zone.cancel(res)
    assert zone.reserved == ZERO
    with pytest.raises(ReservationStateError):
        zone.cancel(res)
    with pytest.raises(ReservationStateError):
        zone.allocate(CapacityVector(vcpu=2), "compute", from_reservation=res)


def test_double_release_rejected():
    zone = make_zone()
    handle = zone.allocate(CapacityVector(vcpu=2), "compute")
    zone.release(handle)
    with pytest.raises(DoubleReleaseError):
        zone.release(handle)


def test_capacity_report_is_ordered_and_pure():
    pops = [
        NfviPop("pop-2", "vim-1", [make_zone()]),
        NfviPop("pop-1", "vim-1", [make_zone(vcpu=4)]),
    ]
    report = capacity_report(pops)
    assert [r.pop_id for r in report] == ["pop-1", "pop-2"]
    assert pop_available(report, "pop-1").vcpu == 4
    assert pop_available(report, "pop-2") == pops[0].zones[0].total


def _info(states=("STARTED",)):
    instances = tuple(
        VnfcInstance("c%d" % i, "vdu-1", s) for i, s in enumerate(states))
    return VnfInfo("vnf-1", "vnfd-b", "f1", "il-1", instances, "vim-1",
                   audit=(("instantiation", 0),))


def test_add_instances_must_be_stopped():
    info = _info()
    new = (VnfcInstance("c9", "vdu-2", STOPPED),)
    out = record_vnf_info_update(info, ADD_INSTANCES_STOPPED, 15, 100,
                                 instances=new)
    assert len(out.vnfc_instances) == 2
    assert out.audit[-1] == (15, 100)
    with pytest.raises(IllegalTransitionError):
        record_vnf_info_update(info, ADD_INSTANCES_STOPPED, 15, 100,
                               instances=(VnfcInstance("c8", "vdu-2", STARTED),))


def test_instance_id_reuse_rejected():
    info = _info()
    with pytest.raises(IllegalTransitionError):
        record_vnf_info_update(info, ADD_INSTANCES_STOPPED, 15, 100,
                               instances=(VnfcInstance("c0", "vdu-2", STOPPED),))


def test_start_stop_transitions():
    info = _info(states=(STOPPED,))
    started = record_vnf_info_update(info, MARK_STARTED, 19, 101,
                                     instance_ids=("c0",))
    assert started.vnfc_instances[0].state == STARTED
    stopped = record_vnf_info_update(started, MARK_STOPPED, 24, 102,
                                     instance_ids=("c0",))
    assert stopped.vnfc_instances[0].state == STOPPED
    # wrong-direction transitions are illegal
    with pytest.raises(IllegalTransitionError):
        record_vnf_info_update(info, MARK_STOPPED, 24, 103,
                               instance_ids=("c0",))
    with pytest.raises(IllegalTransitionError):
        record_vnf_info_update(started, MARK_STARTED, 19, 103,
                               instance_ids=("c0",))


def test_delete_requires_stopped():
    info = _info(states=(STARTED, STOPPED))
    with pytest.raises(IllegalTransitionError):
        record_vnf_info_update(info, DELETE_INSTANCES, 28, 104,
                               instance_ids=("c0",))
    out = record_vnf_info_update(info, DELETE_INSTANCES, 28, 104,
                                 instance_ids=("c1",))
    assert [i.id for i in out.vnfc_instances] == ["c0"]


def test_revisions_are_immutable_and_audited():
    info = _info(states=(STOPPED,))
    out = record_vnf_info_update(info, MARK_STARTED, 19, 101,
                                 instance_ids=("c0",), vnf_il="il-3")
    assert info.vnfc_instances[0].state == STOPPED  # original untouched
    assert out.current_vnf_il == "il-3"
    assert info.current_vnf_il == "il-1"
    assert [step for step, _ in out.audit] == ["instantiation", 19]


def test_started_counts():
    info = _info(states=(STARTED, STARTED, STOPPED))
    assert info.started_counts() == {"vdu-1": 2}
