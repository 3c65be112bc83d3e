"""Deterministic simulator of automated network-service scaling in an
NFV management-and-orchestration stack: descriptor catalogs, monitoring and
auto-scaling rules, capacity accounting, the scaling decision algorithm, and
the full grant/reserve/allocate/start/stop/release workflow."""

__version__ = "0.1.0"
