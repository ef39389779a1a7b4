"""Image segmentation as hedonic coalition formation on pixel graphs."""

from hedseg.hedonic import (
    Partition,
    Resolution,
    cpm_quality,
    resolution_from_density,
    run_to_equilibrium,
    verify_equilibrium,
)
from hedseg.pixelgraph import (
    GraphParams,
    RgbImage,
    WeightedGraph,
    build_graph,
    compute_edge_map,
    graph_density,
    image_to_graph,
    load_image,
)
from hedseg.projection import f1, f1_single, f1_union_greedy, f1_union_threshold

__version__ = "0.1.0"

__all__ = [
    "GraphParams", "Partition", "Resolution", "RgbImage", "WeightedGraph",
    "build_graph", "compute_edge_map", "cpm_quality", "f1", "f1_single",
    "f1_union_greedy", "f1_union_threshold", "graph_density", "image_to_graph",
    "load_image", "resolution_from_density", "run_to_equilibrium", "verify_equilibrium",
]
