import numpy as np
import pytest

from popgraph.data import Graph, GraphBatch
from popgraph.node_level import (
    GraphConvLayer,
    NodeLevelConfig,
    NodeLevelModule,
    f1_forward,
    global_pool,
    graph_conv_forward,
)
from popgraph.tensor import Tensor, finite_difference_check


def single_graph_batch(n, edges, features, label=0):
    return GraphBatch([Graph(node_count=n, edges=edges, features=np.asarray(features, dtype=float), label=label)])


def dense_adjacency(batch):
    n = batch.total_nodes
    a = np.zeros((n, n))
    a[batch.src, batch.dst] = 1.0
    return a


def test_edgeless_graph_only_self_term():
    rng = np.random.default_rng(0)
    layer = GraphConvLayer(3, 2, rng)
    batch = single_graph_batch(4, [], rng.normal(size=(4, 3)))
    out = graph_conv_forward(layer, batch, Tensor(batch.features))
    expected = batch.features @ layer.w_self.data + layer.bias.data
    np.testing.assert_allclose(out.data, expected, atol=1e-12)


def test_two_node_identity_hand_sum():
    rng = np.random.default_rng(0)
    layer = GraphConvLayer(1, 1, rng)
    layer.w_self.data = np.eye(1)
    layer.w_neigh.data = np.eye(1)
    layer.bias.data = np.zeros(1)
    batch = single_graph_batch(2, [(0, 1)], [[1.0], [2.0]])
    out = graph_conv_forward(layer, batch, Tensor(batch.features))
    np.testing.assert_array_equal(out.data, [[3.0], [3.0]])


def test_graph_conv_matches_dense_oracle():
    rng = np.random.default_rng(1)
    layer = GraphConvLayer(4, 3, rng)
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 4)]
    batch = single_graph_batch(5, edges, rng.normal(size=(5, 4)))
    out = graph_conv_forward(layer, batch, Tensor(batch.features))
    a = dense_adjacency(batch)
    oracle = (
        batch.features @ layer.w_self.data
        + a @ batch.features @ layer.w_neigh.data
        + layer.bias.data
    )
    np.testing.assert_allclose(out.data, oracle, atol=1e-10)


def test_graph_conv_rejects_wrong_rows():
    rng = np.random.default_rng(2)
    layer = GraphConvLayer(2, 2, rng)
    batch = single_graph_batch(3, [(0, 1)], np.zeros((3, 2)))
    with pytest.raises(ValueError, match="rows"):
        graph_conv_forward(layer, batch, Tensor(np.zeros((5, 2))))


def test_global_pool_singletons_identity():
    graphs = [Graph(1, [], np.array([[float(i), 1.0]]), 0) for i in range(3)]
    batch = GraphBatch(graphs)
    feats = Tensor(batch.features)
    for mode in ("mean", "add"):
        np.testing.assert_allclose(global_pool(batch, feats, mode).data, batch.features)


def test_global_pool_arithmetic():
    batch = single_graph_batch(2, [(0, 1)], [[1.0, 1.0], [3.0, 3.0]])
    feats = Tensor(batch.features)
    np.testing.assert_array_equal(global_pool(batch, feats, "mean").data, [[2.0, 2.0]])
    np.testing.assert_array_equal(global_pool(batch, feats, "add").data, [[4.0, 4.0]])


def test_add_pool_scales_with_node_count():
    sizes = [1, 3, 5]
    graphs = [Graph(n, [], np.ones((n, 2)), 0) for n in sizes]
    batch = GraphBatch(graphs)
    pooled = global_pool(batch, Tensor(batch.features), "add").data
    np.testing.assert_array_equal(pooled, np.array(sizes, dtype=float)[:, None] * np.ones(2))


def test_global_pool_rejects_unknown_mode():
    batch = single_graph_batch(2, [(0, 1)], np.ones((2, 1)))
    with pytest.raises(ValueError):
        global_pool(batch, Tensor(batch.features), "max")


def make_module(rng, dims=(5, 4), pooling="mean", input_dim=3):
    config = NodeLevelConfig(layer_dims=list(dims), pooling=pooling)
    return NodeLevelModule(config, input_dim, rng)


def random_graph(rng, n, d, p=0.4, label=0):
    edges = [
        (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p
    ]
    return Graph(n, edges, rng.normal(size=(n, d)), label)


def test_zero_final_layer_gives_zero_h():
    rng = np.random.default_rng(3)
    module = make_module(rng)
    module.layers[-1].w_self.data[:] = 0.0
    module.layers[-1].w_neigh.data[:] = 0.0
    module.layers[-1].bias.data[:] = 0.0
    batch = GraphBatch([random_graph(rng, 5, 3), random_graph(rng, 4, 3)])
    h = f1_forward(module, batch)
    np.testing.assert_array_equal(h.data, np.zeros((2, 4)))


def permute_graph(g, perm):
    inv = {old: new for new, old in enumerate(perm)}
    edges = [(min(inv[u], inv[v]), max(inv[u], inv[v])) for u, v in g.edges]
    feats = g.features[list(perm)]
    return Graph(g.node_count, sorted(edges), feats, g.label)


def test_node_permutation_invariance():
    rng = np.random.default_rng(4)
    module = make_module(rng, pooling="add")
    g = random_graph(rng, 7, 3)
    perm = list(rng.permutation(7))
    h1 = module.forward(GraphBatch([g])).data
    h2 = module.forward(GraphBatch([permute_graph(g, perm)])).data
    np.testing.assert_allclose(h1, h2, atol=1e-9)


def test_isomorphic_graphs_identical_rows():
    rng = np.random.default_rng(5)
    module = make_module(rng)
    g = random_graph(rng, 6, 3)
    twin = permute_graph(g, list(rng.permutation(6)))
    h = module.forward(GraphBatch([g, twin])).data
    np.testing.assert_allclose(h[0], h[1], atol=1e-10)


def test_batch_composition_invariance():
    rng = np.random.default_rng(6)
    module = make_module(rng)
    g = random_graph(rng, 6, 3)
    others = [random_graph(rng, n, 3) for n in (4, 8)]
    alone = module.forward(GraphBatch([g])).data[0]
    stacked = module.forward(GraphBatch([others[0], g, others[1]])).data[1]
    np.testing.assert_allclose(alone, stacked, atol=1e-12)


def test_f1_gradient_check():
    rng = np.random.default_rng(7)
    module = make_module(rng, dims=(4, 3), input_dim=2)
    batch = GraphBatch([random_graph(rng, 4, 2), random_graph(rng, 5, 2)])
    mix = Tensor(rng.normal(size=(2, 3)))
    for param in module.parameters():
        err = finite_difference_check(
            lambda _: (module.forward(batch) * mix).sum(), param
        )
        assert err < 1e-4, f"{param.name}: {err}"


def test_config_validation():
    with pytest.raises(ValueError):
        NodeLevelConfig(layer_dims=[])
    with pytest.raises(ValueError):
        NodeLevelConfig(layer_dims=[8], output_dim=4)
    with pytest.raises(ValueError):
        NodeLevelConfig(layer_dims=[8], pooling="median")
