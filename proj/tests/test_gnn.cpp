#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "lts/gradcheck.hpp"
#include "test_util.hpp"

namespace lts {
namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Three nodes, one relation r: 0 -> 1, 2 -> 1, 1 -> 2.
HeteroGraph toy_graph() {
  HeteroGraph g;
  g.node_types = {{"node", 3}};
  g.features = {mat({{1, 0}, {0, 1}, {1, 1}})};
  g.relations = {{"r", 0, 0}};
  g.edges = {{{0, 1}, {2, 1}, {1, 2}}};
  g.target_type = 0;
  g.labels = {0, 1, 0};
  g.num_classes = 2;
  g.splits.train = {0, 1, 2};
  validate(g);
  return g;
}

RelationalModelParams toy_params(const HeteroGraph& g) {
  auto p = init_params(g, 2, 2, 0);
  p.self_weights[0] = mat({{1, 0}, {0, 1}});
  p.relation_weights[0][0] = mat({{0.5, -1}, {1, 0.5}});
  p.self_weights[1] = mat({{1, -1}, {0, 1}});
  p.relation_weights[1][0] = mat({{0.5, 0}, {0, 0.5}});
  p.output_head = mat({{1, -1}, {2, 0.5}});
  return p;
}

TEST(Forward, ToyGraphMatchesHandComputation) {
  const auto g = toy_graph();
  const auto trace = forward(g, toy_params(g));
  // Layer 0: h = [1, 0], [1, 0.25], [2, 1.5]; layer 1: [1, 0], [1.75, 0], [2.5, 0].
  const Matrix h1 = mat({{1, 0}, {1, 0.25}, {2, 1.5}});
  const Matrix h2 = mat({{1, 0}, {1.75, 0}, {2.5, 0}});
  EXPECT_TRUE(trace.layers[1].input[0].isApprox(h1, 1e-15)) << trace.layers[1].input[0];
  EXPECT_TRUE(trace.final_target.isApprox(h2, 1e-15)) << trace.final_target;
  const Matrix expected = mat({{1, -1}, {1.75, -1.75}, {2.5, -2.5}});
  EXPECT_LT((trace.logits - expected).cwiseAbs().maxCoeff(), 1e-15) << trace.logits;
}

TEST(Forward, ZeroWeightsGiveZeroLogits) {
  const auto g = generate_synthetic(SyntheticSpec::paper_author(30, 3, 4), 1);
  auto p = init_params(g, 6, 2, 1).zeros_like();
  const auto trace = forward(g, p);
  EXPECT_EQ(trace.logits.rows(), 30);
  EXPECT_EQ(trace.logits.cols(), 3);
  EXPECT_EQ(trace.logits.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, NoEdgesUsesOnlySelfPath) {
  auto g = toy_graph();
  g.edges[0].clear();
  const auto p = toy_params(g);
  const Matrix& x = *g.features[0];
  const Matrix h1 = (x * p.self_weights[0]).cwiseMax(0.0);
  const Matrix h2 = (h1 * p.self_weights[1]).cwiseMax(0.0);
  EXPECT_EQ(forward(g, p).logits, h2 * p.output_head);
  // Relation weights are irrelevant without edges.
  auto q = p;
  q.relation_weights[0][0].setConstant(7.0);
  q.relation_weights[1][0].setConstant(-3.0);
  EXPECT_EQ(forward(g, q).logits, forward(g, p).logits);
}

TEST(Forward, FeaturelessTypesUseEmbeddings) {
  const auto g = generate_synthetic(SyntheticSpec::paper_author(20, 2, 4), 3);
  auto p = init_params(g, 4, 2, 3);
  const auto author = g.type_index("author");
  ASSERT_TRUE(p.type_embeddings[author].has_value());
  EXPECT_EQ(p.type_embeddings[author]->rows(), static_cast<Eigen::Index>(g.node_types[author].count));
  EXPECT_EQ(p.type_embeddings[author]->cols(), 4);
  EXPECT_FALSE(p.type_embeddings[g.target_type].has_value());
  const auto before = forward(g, p).logits;
  p.type_embeddings[author]->array() += 0.5;
  EXPECT_NE(forward(g, p).logits, before);
}

TEST(Forward, ShapeMismatchNamesTheLayer) {
  const auto g = toy_graph();
  auto p = toy_params(g);
  p.relation_weights[1][0] = Matrix::Zero(3, 2);
  try {
    forward(g, p);
    FAIL();
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("layer 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("relation 'r'"), std::string::npos) << msg;
  }
  p = toy_params(g);
  p.output_head = Matrix::Zero(2, 3);
  EXPECT_THROW(forward(g, p), ShapeError);
}

TEST(Forward, PermutationEquivariance) {
  const auto g = generate_synthetic(SyntheticSpec::paper_author(40, 3, 4), 8);
  const auto p = init_params(g, 5, 2, 8);
  const auto t = g.target_type;
  const auto n = g.node_types[t].count;

  std::vector<NodeId> perm(n);  // old index -> new index
  std::iota(perm.begin(), perm.end(), NodeId{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(1));

  HeteroGraph h = g;
  for (std::size_t v = 0; v < n; ++v) {
    h.features[t]->row(perm[v]) = g.features[t]->row(static_cast<Eigen::Index>(v));
    h.labels[perm[v]] = g.labels[v];
  }
  for (std::size_t r = 0; r < g.relations.size(); ++r)
    for (auto& e : h.edges[r]) {
      if (g.relations[r].src == t) e.src = perm[e.src];
      if (g.relations[r].dst == t) e.dst = perm[e.dst];
    }
  for (auto* split : {&h.splits.train, &h.splits.val, &h.splits.test})
    for (auto& v : *split) v = perm[v];
  validate(h);

  const auto a = forward(g, p).logits;
  const auto b = forward(h, p).logits;
  for (std::size_t v = 0; v < n; ++v)
    EXPECT_LT((a.row(static_cast<Eigen::Index>(v)) - b.row(perm[v])).cwiseAbs().maxCoeff(), 1e-12) << v;
}

// ---------------------------------------------------------------------------

TEST(PerNodeLosses, Examples) {
  const Matrix logits = mat({{0, 0}, {100, 0}, {1, -1}});
  const std::vector<int> labels = {0, 0, 1};
  const std::vector<NodeId> nodes = {0, 1, 2};
  const auto l = per_node_losses(logits, labels, nodes);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_NEAR(l[0], std::log(2.0), 1e-15);
  EXPECT_LT(l[1], 1e-12);
  EXPECT_GE(l[1], 0.0);
  EXPECT_NEAR(l[2], std::log(1.0 + std::exp(2.0)), 1e-12);
  EXPECT_NEAR(l[2], 2.126928, 1e-6);
}

TEST(PerNodeLosses, OrderFollowsNodeList) {
  const Matrix logits = mat({{0, 0}, {100, 0}, {1, -1}});
  const std::vector<int> labels = {0, 0, 1};
  const std::vector<NodeId> nodes = {2, 0};
  const auto l = per_node_losses(logits, labels, nodes);
  EXPECT_NEAR(l[0], 2.126928, 1e-6);
  EXPECT_NEAR(l[1], std::log(2.0), 1e-15);
}

TEST(PerNodeLosses, StableForHugeLogits) {
  const Matrix logits = mat({{1000, -1000, 0}, {-1000, 1000, 999}});
  const std::vector<int> labels = {1, 2};
  const std::vector<NodeId> nodes = {0, 1};
  const auto l = per_node_losses(logits, labels, nodes);
  EXPECT_NEAR(l[0], 2000.0, 1e-9);
  EXPECT_NEAR(l[1], 1.0 + std::log1p(std::exp(-1.0)), 1e-9);
}

TEST(PerNodeLosses, NonNegativeAndZeroOnlyForPointMass) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 5.0);
  Matrix logits(50, 4);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = nd(rng);
  std::vector<int> labels(50);
  for (int i = 0; i < 50; ++i) labels[static_cast<std::size_t>(i)] = i % 4;
  const auto nodes = test::iota_ids(50);
  for (double l : per_node_losses(logits, labels, nodes)) EXPECT_GT(l, 0.0);
  const Matrix point = mat({{800, 0, 0}});
  const std::vector<int> y = {0};
  const std::vector<NodeId> one = {0};
  EXPECT_EQ(per_node_losses(point, y, one)[0], 0.0);
}

TEST(PerNodeLosses, BadIndexIsIndexError) {
  const Matrix logits = mat({{0, 0}, {1, 0}});
  const std::vector<int> labels = {0, 1};
  const std::vector<NodeId> bad = {2};
  EXPECT_THROW(per_node_losses(logits, labels, bad), IndexError);
  const std::vector<int> bad_label = {0, 5};
  const std::vector<NodeId> ok = {1};
  EXPECT_THROW(per_node_losses(logits, bad_label, ok), IndexError);
}

// ---------------------------------------------------------------------------

TEST(InitParams, GlorotBoundAndDeterminism) {
  EXPECT_DOUBLE_EQ(glorot_bound(3, 3), 1.0);
  const auto g = generate_synthetic(SyntheticSpec::paper_author(30, 2, 4), 1);
  EXPECT_TRUE(init_params(g, 8, 2, 5) == init_params(g, 8, 2, 5));
  EXPECT_FALSE(init_params(g, 8, 2, 5) == init_params(g, 8, 2, 6));
  const auto p = init_params(g, 8, 2, 5);
  p.for_each([](const std::string& name, const Matrix& m) {
    const double a = glorot_bound(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    EXPECT_LE(m.cwiseAbs().maxCoeff(), a) << name;
  });
}

TEST(InitParams, EmpiricalMeanNearZero) {
  ModelDims dims{100, 100, 1, 2};
  ParamLayout layout;
  layout.type_names = {"x"};
  layout.type_counts = {1};
  layout.featureless = {false};
  layout.relation_names = {"r"};
  const auto p = init_params(dims, layout, 42);
  const Matrix& w = p.self_weights[0];
  ASSERT_EQ(w.size(), 10000);
  const double a = glorot_bound(100, 100);
  EXPECT_LT(std::abs(w.mean()), 0.05 * a);
}

TEST(InitParams, ZeroDimensionIsConfigError) {
  const auto g = toy_graph();
  EXPECT_THROW(init_params(g, 0, 2, 1), ConfigError);
  EXPECT_THROW(init_params(g, 4, 0, 1), ConfigError);
}

// ---------------------------------------------------------------------------

TEST(Backward, MatchesFiniteDifferencesOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto g = random_small_graph(seed);
    const auto p = init_params(g, 4, 2, seed + 100);
    const auto n = g.splits.train.size();
    std::vector<NodeId> one = {g.splits.train[seed % n]};
    std::vector<NodeId> half(g.splits.train.begin(), g.splits.train.begin() + static_cast<std::ptrdiff_t>(n / 2 + 1));
    for (const auto& sel : {one, half, g.splits.train}) {
      const auto grads = backward(forward(g, p), sel, g, p);
      EXPECT_LT(test::max_fd_error(g, p, grads, sel), 1e-4) << "seed " << seed << " |sel| " << sel.size();
    }
  }
}

TEST(Backward, ToyGraphFiniteDifferences) {
  const auto g = toy_graph();
  auto p = toy_params(g);
  p.self_weights[0](0, 1) = 0.2;  // move every pre-activation off the ReLU kink
  p.relation_weights[1][0](0, 1) = 0.3;
  p.self_weights[1](1, 1) = 2.0;
  const std::vector<NodeId> sel = {1, 2};
  const auto grads = backward(forward(g, p), sel, g, p);
  EXPECT_LT(test::max_fd_error(g, p, grads, sel), 1e-4);
}

TEST(Backward, LibraryGradcheckAgreesAndCatchesCorruption) {
  const auto g = random_small_graph(21);
  const auto p = init_params(g, 4, 2, 5);
  const auto sel = std::span<const NodeId>(g.splits.train);
  const auto ok = check_gradients(g, p, sel);
  EXPECT_LT(ok.max_relative_error, 1e-4);
  EXPECT_EQ(ok.entries_checked, p.size());
  const auto bad = check_gradients(g, p, sel, 1e-5,
                                   [](const HeteroGraph& gr, const RelationalModelParams& pr, std::span<const NodeId> s) {
                                     auto out = analytic_gradient(gr, pr, s);
                                     out.output_head(0, 0) += 0.1;
                                     return out;
                                   });
  EXPECT_GT(bad.max_relative_error, 1e-4);
  EXPECT_EQ(bad.worst_parameter, "head");
}

TEST(Backward, BitIdenticalOnRepeat) {
  const auto g = random_small_graph(4);
  const auto p = init_params(g, 4, 2, 4);
  const auto a = backward(forward(g, p), g.splits.train, g, p);
  const auto b = backward(forward(g, p), g.splits.train, g, p);
  EXPECT_TRUE(a == b);
}

TEST(Backward, FullSelectionIsOrderIndependent) {
  const auto g = random_small_graph(6);
  const auto p = init_params(g, 4, 2, 6);
  const auto trace = forward(g, p);
  std::vector<NodeId> shuffled = g.splits.train;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto a = backward(trace, g.splits.train, g, p);
  const auto b = backward(trace, shuffled, g, p);
  std::vector<const Matrix*> ma, mb;
  a.for_each([&](const std::string&, const Matrix& m) { ma.push_back(&m); });
  b.for_each([&](const std::string&, const Matrix& m) { mb.push_back(&m); });
  for (std::size_t i = 0; i < ma.size(); ++i) EXPECT_LT((*ma[i] - *mb[i]).cwiseAbs().maxCoeff(), 1e-15);
}

// Changing the label of a node outside the selection leaves the gradient
// unchanged; changing its features does not, because it still sends messages.
TEST(Backward, SelectionMasksLossButNotMessages) {
  auto g = random_small_graph(9);
  // Make node 0 isolated and node 1 a neighbour of node 2.
  for (auto& list : g.edges)
    list.erase(std::remove_if(list.begin(), list.end(), [](const Edge& e) { return e.dst == 0; }), list.end());
  std::erase_if(g.edges[0], [](const Edge& e) { return e.src == 0; });
  g.edges[0].push_back({1, 2});
  std::sort(g.edges[0].begin(), g.edges[0].end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
  });
  g.edges[0].erase(std::unique(g.edges[0].begin(), g.edges[0].end(),
                               [](const Edge& a, const Edge& b) { return a.src == b.src && a.dst == b.dst; }),
                   g.edges[0].end());
  validate(g);
  const auto p = init_params(g, 4, 2, 9);
  const std::vector<NodeId> sel = {2};
  const auto base = backward(forward(g, p), sel, g, p);

  auto relabelled = g;
  relabelled.labels[0] = (g.labels[0] + 1) % g.num_classes;
  relabelled.labels[1] = (g.labels[1] + 1) % g.num_classes;
  EXPECT_TRUE(backward(forward(relabelled, p), sel, relabelled, p) == base);

  auto moved = g;
  moved.features[0]->row(1).array() += 1.0;
  EXPECT_FALSE(backward(forward(moved, p), sel, moved, p) == base);
}

TEST(Backward, Contracts) {
  const auto g = random_small_graph(2);
  auto p = init_params(g, 4, 2, 2);
  const auto trace = forward(g, p);
  EXPECT_THROW(backward(trace, std::span<const NodeId>{}, g, p), ContractError);
  auto q = p;
  q.output_head(0, 0) += 1.0;
  EXPECT_THROW(backward(trace, g.splits.train, g, q), ContractError);
  auto h = g;
  h.features[0]->array() += 1.0;
  EXPECT_THROW(backward(trace, g.splits.train, h, p), ContractError);
}

TEST(Backward, SelectedMeanLossHelperMatchesIndependentLoop) {
  const auto g = random_small_graph(12);
  const auto p = init_params(g, 4, 2, 12);
  EXPECT_NEAR(selected_mean_loss(g, p, g.splits.train), test::mean_loss(g, p, g.splits.train), 1e-14);
}

TEST(RelativeError, FloorHandlesZeroGradients) {
  EXPECT_DOUBLE_EQ(relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 1e-12), 1e-6);
}

}  // namespace
}  // namespace lts
