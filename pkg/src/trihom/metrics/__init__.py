from .feature import (
    attribute_homophily,
    class_controlled_feature_homophily,
    estimate_feature_homophily,
    generalized_edge_homophily,
    local_similarity,
)
from .label import (
    adjusted_homophily,
    class_homophily,
    density_aware_homophily,
    edge_homophily,
    neighbor_homophily,
    node_homophily,
    two_hop_class_similarity,
)
from .structural import (
    aggregation_homophily,
    label_informativeness,
    neighborhood_similarity,
    structural_homophily,
)

__all__ = [
    "attribute_homophily", "class_controlled_feature_homophily", "estimate_feature_homophily",
    "generalized_edge_homophily", "local_similarity", "adjusted_homophily", "class_homophily",
    "density_aware_homophily", "edge_homophily", "neighbor_homophily", "node_homophily",
    "two_hop_class_similarity", "aggregation_homophily", "label_informativeness", "neighborhood_similarity",
    "structural_homophily",
]
