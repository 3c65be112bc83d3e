"""Scenario files: catalog references, infrastructure topology, the initial
NS instance, the workload timeline, thresholds, and run options."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .capacity import CapacityVector
from .descriptors import (Catalog, CatalogError, load_catalog, validate_catalog)
from .drpa import DEFAULT_TARGET_UTILIZATION, CostModel
from .inventory import NfviPop, ResourceZone
from .monitoring import ThresholdSpec


class ScenarioValidationError(ValueError):
    def __init__(self, problems: list):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class Scenario:
    documents: list
    topology: dict
    initial_instance: dict
    workload: dict = field(default_factory=dict)
    rules: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    @property
    def reservation_enabled(self) -> bool:
        return bool(self.options.get("reservation_enabled", True))

    @property
    def seed(self) -> int:
        return int(self.options.get("seed", 0))

    @property
    def target_utilization(self) -> float:
        return float(self.options.get("target_utilization",
                                      DEFAULT_TARGET_UTILIZATION))

    def cost_model(self) -> CostModel:
        return CostModel.from_dict(self.options.get("cost_weights", {}))

    def thresholds(self) -> tuple:
        specs = []
        for t in self.rules.get("thresholds", ()):
            specs.append(ThresholdSpec(t["id"], t["subject"], t["metric"],
                                       t["bound"], t["direction"]))
        return tuple(specs)

    def dimension_map(self) -> dict:
        return dict(self.rules.get("metric_dimensions", {}))

    def placement_constraints(self) -> dict:
        return dict(self.rules.get("placement_constraints", {}))


def scenario_from_dict(data: dict, base_dir: str = ".") -> Scenario:
    documents = list(data.get("catalog", ()))
    for ref in data.get("catalog_refs", ()):
        path = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
        with open(path) as fh:
            doc = json.load(fh)
        if isinstance(doc, list):
            documents.extend(doc)
        else:
            documents.append(doc)
    return Scenario(
        documents=documents,
        topology=data.get("topology", {}),
        initial_instance=data.get("initial_instance", {}),
        workload=data.get("workload", {}),
        rules=data.get("rules", {}),
        options=data.get("options", {}),
    )


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        data = json.load(fh)
    return scenario_from_dict(data, os.path.dirname(os.path.abspath(path)))


def build_topology(topology: dict) -> tuple:
    """Returns (vim ids, list of NfviPop with fresh zones)."""
    vims = [v["id"] for v in topology.get("vims", ())]
    pops = []
    for pop in topology.get("pops", ()):
        zones = [ResourceZone(z["id"], CapacityVector.from_dict(z["total"]))
                 for z in pop.get("zones", ())]
        pops.append(NfviPop(pop["id"], pop["vim_ref"], zones))
    return vims, pops


def validate_scenario(scenario: Scenario) -> tuple:
    """Returns (catalog, problems). The catalog is None when it cannot even
    be loaded."""
    problems = []
    try:
        catalog = load_catalog(scenario.documents)
    except CatalogError as exc:
        return None, ["catalog: %s" % exc]
    report = validate_catalog(catalog)
    problems.extend("catalog: " + line for line in report.sorted_lines())

    vim_ids = set()
    for vim in scenario.topology.get("vims", ()):
        if vim["id"] in vim_ids:
            problems.append("topology: duplicate VIM id %r" % vim["id"])
        vim_ids.add(vim["id"])
    pop_ids = set()
    for pop in scenario.topology.get("pops", ()):
        if pop["id"] in pop_ids:
            problems.append("topology: duplicate PoP id %r" % pop["id"])
        pop_ids.add(pop["id"])
        if pop.get("vim_ref") not in vim_ids:
            problems.append("topology: PoP %r references unknown VIM %r"
                            % (pop["id"], pop.get("vim_ref")))
        zone_ids = set()
        for zone in pop.get("zones", ()):
            if zone["id"] in zone_ids:
                problems.append("topology: duplicate zone id %r in PoP %r"
                                % (zone["id"], pop["id"]))
            zone_ids.add(zone["id"])
    if not pop_ids:
        problems.append("topology: at least one PoP required")

    init = scenario.initial_instance
    nsd = catalog.nsds.get(init.get("nsd_ref"))
    if nsd is None:
        problems.append("initial_instance: unknown NSD %r" % init.get("nsd_ref"))
    else:
        try:
            flavor = nsd.flavor(init.get("flavor_ref"))
        except KeyError:
            problems.append("initial_instance: unknown flavor %r"
                            % init.get("flavor_ref"))
        else:
            if init.get("ns_il_ref") not in {il.id for il in flavor.ns_ils}:
                problems.append("initial_instance: unknown NS-IL %r"
                                % init.get("ns_il_ref"))
    return catalog, problems
