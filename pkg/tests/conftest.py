import pytest

import sample_catalog as sc
from nsscale.descriptors import load_catalog
from nsscale.scenario import scenario_from_dict
from nsscale.simulator import Simulator


@pytest.fixture
def documents():
    return sc.sample_documents()


@pytest.fixture
def catalog(documents):
    return load_catalog(documents)


@pytest.fixture
def nsd(catalog):
    return catalog.nsds["nsd-1"]


@pytest.fixture
def flavor(nsd):
    return nsd.flavor("df-1")


def build_sim(scenario_dict) -> Simulator:
    return Simulator(scenario_from_dict(scenario_dict))


def run_dict(scenario_dict, on_event=None):
    sim = build_sim(scenario_dict)
    if on_event is not None:
        sim.on_event = on_event
    return sim.run()
