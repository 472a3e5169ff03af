"""Navigable small-world networks over geographic point sets."""

__version__ = "0.1.0"

from .augment import (
    PopularityDist,
    ShortcutTable,
    augment_distance,
    augment_rank,
    augment_uniform,
    rank_of,
    sample_target,
)
from .basegraph import BaseGraph, delaunay, lattice, ring
from .population import (
    Metropolis,
    RandomZones,
    Raster,
    RasterGrid,
    Uniform,
    load_raster,
    sample_points,
    zone_weights,
)
from .rewire import (
    RewireConfig,
    RewireReport,
    destination_sampling_step,
    init_self_loops,
    run_destination_sampling,
)
from .routing import Outcome, Route, greedy_route, route_many
