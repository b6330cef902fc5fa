"""Concrete exchangeable-pair models."""

from .base import BitGlauberModel, ExchangeableModel, NotEnumerable
from .graphs import GeneralSubgraph, GraphModel, TriangleWedge, WedgeEdge
from .sequences import EvenOdd11, Pattern01, ToyModel
from .subgraphs import (
    SubgraphCounter, SubgraphSpec, automorphisms, copies_in_complete_graph, count_embeddings,
    edge_index, extension_count, named_subgraph, parse_subgraph,
)
from .urns import DartsModel, MultiDartsModel, ScoreTable, UrnModel

__all__ = [
    "BitGlauberModel", "DartsModel", "EvenOdd11", "ExchangeableModel", "GeneralSubgraph", "GraphModel",
    "MultiDartsModel", "NotEnumerable", "Pattern01", "ScoreTable", "SubgraphCounter", "SubgraphSpec",
    "ToyModel", "TriangleWedge", "UrnModel", "WedgeEdge", "automorphisms", "copies_in_complete_graph",
    "count_embeddings", "edge_index", "extension_count", "named_subgraph", "parse_subgraph",
]
