"""Per-graph message passing plus global pooling: one vector per input graph.

The convolution rule is x'_i = W_self x_i + W_neigh * sum_{j in N(i)} x_j + b,
with the neighbor sum taken over the undirected edge list expanded to both
directions. Pooling (mean or add) then collapses each graph's node rows to a
single representation, so downstream modules see one row per sample.
"""

from dataclasses import dataclass

import numpy as np

from .data import GraphBatch
from .nn import uniform_init
from .tensor import Tensor, neighbor_sum, relu, segment_sum


POOLING_MODES = ("mean", "add")


@dataclass
class NodeLevelConfig:
    layer_dims: list
    pooling: str = "mean"
    output_dim: int = 0  # defaults to layer_dims[-1]

    def __post_init__(self):
        if not self.layer_dims:
            raise ValueError("layer_dims must be non-empty")
        if self.output_dim == 0:
            self.output_dim = self.layer_dims[-1]
        if self.output_dim != self.layer_dims[-1]:
            raise ValueError(
                f"output_dim {self.output_dim} != last layer dim {self.layer_dims[-1]}"
            )
        if self.pooling not in POOLING_MODES:
            raise ValueError(f"pooling must be one of {POOLING_MODES}")


class GraphConvLayer:
    """One graph convolution with separate self and neighbor weights."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, name="conv"):
        self.w_self = Tensor(uniform_init(rng, (d_in, d_out), d_in), requires_grad=True,
                             name=f"{name}.w_self")
        self.w_neigh = Tensor(uniform_init(rng, (d_in, d_out), d_in), requires_grad=True,
                              name=f"{name}.w_neigh")
        self.bias = Tensor(uniform_init(rng, (d_out,), d_in), requires_grad=True,
                           name=f"{name}.bias")

    def forward(self, features: Tensor, batch: GraphBatch) -> Tensor:
        agg = neighbor_sum(features, batch.src, batch.dst, batch.total_nodes)
        return features @ self.w_self + agg @ self.w_neigh + self.bias

    def parameters(self):
        return [self.w_self, self.w_neigh, self.bias]


def graph_conv_forward(layer: GraphConvLayer, batch: GraphBatch, features: Tensor) -> Tensor:
    if features.shape[0] != batch.total_nodes:
        raise ValueError(
            f"features have {features.shape[0]} rows for {batch.total_nodes} nodes"
        )
    return layer.forward(features, batch)


def global_pool(batch: GraphBatch, node_features: Tensor, mode: str) -> Tensor:
    """Reduce node rows to one row per graph using node_offsets."""
    if mode not in POOLING_MODES:
        raise ValueError(f"pooling must be one of {POOLING_MODES}")
    pooled = segment_sum(node_features, batch.node_offsets)
    if mode == "mean":
        counts = np.diff(batch.node_offsets).astype(np.float64)
        pooled = pooled * Tensor((1.0 / counts)[:, None])
    return pooled


class NodeLevelModule:
    """Stack of graph convolutions with relu, followed by global pooling."""

    def __init__(self, config: NodeLevelConfig, input_dim: int, rng: np.random.Generator):
        self.config = config
        dims = [input_dim] + list(config.layer_dims)
        self.layers = [
            GraphConvLayer(dims[i], dims[i + 1], rng, name=f"f1.conv{i}")
            for i in range(len(dims) - 1)
        ]

    def forward(self, batch: GraphBatch) -> Tensor:
        x = Tensor(batch.features)
        for layer in self.layers:
            x = relu(graph_conv_forward(layer, batch, x))
        return global_pool(batch, x, self.config.pooling)

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]


def f1_forward(module: NodeLevelModule, batch: GraphBatch) -> Tensor:
    return module.forward(batch)
