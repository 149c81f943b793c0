#include "ctxkg/gnn.hpp"
#include "ctxkg/pipeline.hpp"
#include "ctxkg/simgen.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <numeric>

using namespace ctxkg;

namespace {

GatConfig small_config(int layers = 2, std::size_t hidden = 4) {
  GatConfig c;
  c.layers = layers;
  c.hidden_dim = hidden;
  c.seed = 3;
  return c;
}

KnowledgeGraph featured_graph_once(Rng& rng, const test::RandomGraphSpec& spec = {}, bool reverse_variants = false) {
  auto [nodes, edges] = test::random_records(rng, spec);
  std::normal_distribution<double> nd;
  std::vector<FeatureRow> feats;
  const std::map<NodeClass, std::size_t> dims{{NodeClass::Variant, 3}, {NodeClass::Gene, 2}, {NodeClass::Program, 2}};
  for (const auto& n : nodes) {
    FeatureRow r{n.id, {}};
    for (std::size_t j = 0; j < dims.at(n.node_class); ++j) r.values.push_back(nd(rng));
    feats.push_back(r);
  }
  if (reverse_variants) {
    std::stable_partition(nodes.begin(), nodes.end(), [](const NodeRecord& n) { return n.node_class == NodeClass::Variant; });
    const auto nv = std::count_if(nodes.begin(), nodes.end(), [](const NodeRecord& n) { return n.node_class == NodeClass::Variant; });
    std::reverse(nodes.begin(), nodes.begin() + nv);
  }
  BuildOptions opts;
  opts.variant_dim = 3;
  opts.gene_dim = 2;
  opts.program_dim = 2;
  return build_graph(nodes, edges, feats, opts).graph;
}

/// Random graph with at least one edge and random features on every class.
KnowledgeGraph featured_graph(Rng& rng, const test::RandomGraphSpec& spec = {}, bool reverse_variants = false) {
  for (;;) {
    auto g = featured_graph_once(rng, spec, reverse_variants);
    if (g.edge_count() > 0) return g;
  }
}

TrainTarget random_target(Rng& rng, Eigen::Index n) {
  std::gamma_distribution<double> chi(0.5, 2.0);
  std::uniform_real_distribution<double> ld(0.5, 4.0);
  Eigen::VectorXd y(n), l(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = chi(rng), l(i) = ld(rng);
  return make_target(y, l, 0.3, 1);
}

// Naive per-node evaluation of the layer rule:
//   z_v = h_v + mean over relations r with incoming edges at v of
//         sum_u softmax_u(LeakyReLU(a_src . W h_u + a_dst . W h_v)) W h_u
// ReLU between layers, linear head on variants.
Eigen::VectorXd naive_forward(const GatModel& m, const MessageGraph& g) {
  const auto& P = m.params;
  const double slope = m.config.activations ? m.config.leaky_slope : 1.0;
  std::array<std::vector<Eigen::VectorXd>, kNodeClassCount> h;
  for (std::size_t c = 0; c < kNodeClassCount; ++c)
    for (std::size_t i = 0; i < g.node_counts[c]; ++i) {
      const Eigen::VectorXd x = g.features[c].row(static_cast<Eigen::Index>(i)).transpose();
      h[c].push_back(P[m.proj_w[c]].value * x + P[m.proj_b[c]].value.col(0));
    }
  for (int l = 0; l < m.config.layers; ++l) {
    auto next = h;
    for (std::size_t c = 0; c < kNodeClassCount; ++c)
      for (std::size_t v = 0; v < g.node_counts[c]; ++v) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.config.hidden_dim));
        int used = 0;
        for (std::size_t r = 0; r < g.schema.relations.size(); ++r) {
          const auto& rel = g.schema.relations[r];
          if (slot(rel.dst) != c) continue;
          const auto& rp = m.layer_params[static_cast<std::size_t>(l)][r];
          const auto& W = P[rp.w].value;
          std::vector<std::uint32_t> srcs;
          for (std::size_t k = 0; k < g.edges[r].dst.size(); ++k)
            if (g.edges[r].dst[k] == v) srcs.push_back(g.edges[r].src[k]);
          if (srcs.empty()) continue;
          ++used;
          std::vector<double> e;
          for (auto u : srcs) {
            const double pre = P[rp.a_src].value.col(0).dot(W * h[slot(rel.src)][u]) +
                               P[rp.a_dst].value.col(0).dot(W * h[c][v]);
            e.push_back(pre > 0 ? pre : slope * pre);
          }
          const double mx = *std::max_element(e.begin(), e.end());
          double z = 0.0;
          for (double x : e) z += std::exp(x - mx);
          for (std::size_t k = 0; k < srcs.size(); ++k) acc += std::exp(e[k] - mx) / z * (W * h[slot(rel.src)][srcs[k]]);
        }
        Eigen::VectorXd out = h[c][v];
        if (used > 0) out += acc / used;
        if (l + 1 < m.config.layers && m.config.activations) out = out.cwiseMax(0.0);
        next[c][v] = out;
      }
    h = std::move(next);
  }
  const auto vs = slot(NodeClass::Variant);
  Eigen::VectorXd pred(static_cast<Eigen::Index>(h[vs].size()));
  for (std::size_t i = 0; i < h[vs].size(); ++i)
    pred(static_cast<Eigen::Index>(i)) = P[m.head_w].value.col(0).dot(h[vs][i]) + P[m.head_b].value(0, 0);
  return pred;
}

MessageGraph strip_edges(MessageGraph g) {
  for (std::size_t r = 0; r < g.edges.size(); ++r) {
    g.edges[r] = MpEdges{};
    g.edges[r].offsets.assign(g.node_counts[slot(g.schema.relations[r].dst)] + 1, 0);
  }
  for (auto& v : g.incoming_relations) std::fill(v.begin(), v.end(), 0);
  return g;
}

double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  auto ranks = [](const Eigen::VectorXd& x) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return x(i) < x(j); });
    Eigen::VectorXd r(x.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j < idx.size() && x(idx[j]) == x(idx[i])) ++j;
      for (std::size_t k = i; k < j; ++k) r(idx[k]) = 0.5 * static_cast<double>(i + j - 1);
      i = j;
    }
    return r;
  };
  const Eigen::VectorXd ra = ranks(a), rb = ranks(b);
  const Eigen::VectorXd ca = ra.array() - ra.mean(), cb = rb.array() - rb.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

SimScenario planted_scenario(std::uint64_t seed) {
  SimScenario s;
  s.seed = seed;
  s.chromosomes = 4;
  s.blocks = 40;
  s.variants_per_block = 5;
  s.genes = 60;
  s.modules = 4;
  s.module_size = 10;
  s.causal_modules = 2;
  s.programs = 5;
  return s;
}

struct Planted {
  SimWorld world;
  MessageGraph graph;
  TrainTarget target;
  Eigen::VectorXd lambda;
};

Planted planted_fixture(std::uint64_t seed, std::size_t cohort) {
  Planted p;
  p.world = simulate_kg(planted_scenario(seed));
  p.graph = make_message_graph(p.world.graph);
  const auto gwas = simulate_gwas(p.world.truth, cohort, seed);
  std::vector<TargetRow> rows;
  for (const auto& r : gwas) rows.push_back({r.variant_id, r.chi2, r.ld_score});
  p.target = align_targets(p.world.graph, rows, 0.05, seed);
  const auto lam = noncentrality(p.world.truth, cohort);
  std::map<std::string, double> by_id;
  for (std::size_t i = 0; i < lam.size(); ++i) by_id[p.world.truth.variant_ids[i]] = lam[i];
  const auto& vids = p.world.graph.ids[slot(NodeClass::Variant)];
  p.lambda.resize(static_cast<Eigen::Index>(vids.size()));
  for (std::size_t i = 0; i < vids.size(); ++i) p.lambda(static_cast<Eigen::Index>(i)) = by_id.at(vids[i]);
  return p;
}

}  // namespace

TEST_SUITE("gnn") {
  TEST_CASE("init_model") {
    GraphSchema schema;
    schema.feature_dims = {5, 3, 2};
    schema.relations = {{"link", NodeClass::Variant, NodeClass::Gene},
                        {"link__rev", NodeClass::Gene, NodeClass::Variant},
                        {"ppi", NodeClass::Gene, NodeClass::Gene}};
    auto cfg = small_config(2, 8);
    const auto a = init_model(schema, cfg);
    const auto b = init_model(schema, cfg);
    CHECK(a.flat() == b.flat());
    const std::size_t d = 8;
    const std::size_t expected = (d * 5 + d) + (d * 3 + d) + (d * 2 + d)  // input projections
                                 + 2 * 3 * (d * d + 2 * d)                // per layer, per relation
                                 + d + 1;                                 // head
    CHECK(a.parameter_count() == expected);
    cfg.seed = 4;
    CHECK(init_model(schema, cfg).flat() != a.flat());

    GraphSchema empty = schema;
    empty.relations.clear();
    CHECK_THROWS_AS(init_model(empty, cfg), GnnError);
    GraphSchema zero = schema;
    zero.feature_dims[1] = 0;
    CHECK_THROWS_AS(init_model(zero, cfg), GnnError);
    cfg.layers = 4;
    CHECK_THROWS_AS(init_model(schema, cfg), GnnError);
  }

  TEST_CASE("forward on a v -> g -> g chain matches the unrolled computation") {
    const std::vector<NodeRecord> nodes{{"v0", NodeClass::Variant, "1", 10}, {"g0", NodeClass::Gene, "", 0},
                                        {"g1", NodeClass::Gene, "", 0}};
    const std::vector<EdgeRecord> edges{{"v0", "g0", "link", RelationClass::V2G}, {"g0", "g1", "ppi", RelationClass::G2G}};
    const std::vector<FeatureRow> feats{{"v0", {0.3, -1.2}}, {"g0", {0.8, 0.1}}, {"g1", {-0.5, 0.9}}};
    BuildOptions opts;
    opts.variant_dim = 2;
    opts.gene_dim = 2;
    const auto g = build_graph(nodes, edges, feats, opts).graph;
    const auto mg = make_message_graph(g);
    auto m = init_model(mg.schema, small_config(2, 2));
    for (auto& p : m.params) p.value.setRandom();
    const auto fr = forward(m, mg);
    CHECK(std::abs(fr.prediction(0) - naive_forward(m, mg)(0)) < 1e-10);
    for (const auto& rec : fr.attention)
      for (double a : rec.alpha) CHECK(a == 1.0);
    CHECK(fr.prediction == predict(m, mg));
  }

  TEST_CASE("forward with zero edges reduces to the head on own features") {
    Rng rng = make_rng(17);
    const auto g = featured_graph(rng);
    const auto mg = strip_edges(make_message_graph(g));
    auto m = init_model(mg.schema, small_config());
    for (auto& p : m.params) p.value.setRandom();
    const auto pred = predict(m, mg);
    const auto& P = m.params;
    const auto v = slot(NodeClass::Variant);
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
      const Eigen::VectorXd h0 = P[m.proj_w[v]].value * mg.features[v].row(i).transpose() + P[m.proj_b[v]].value.col(0);
      const double want = P[m.head_w].value.col(0).dot(h0.cwiseMax(0.0)) + P[m.head_b].value(0, 0);
      CHECK(std::abs(pred(i) - want) < 1e-12);
    }
  }

  TEST_CASE("property: forward matches the naive evaluation, attention normalises") {
    Rng rng = make_rng(23);
    for (int trial = 0; trial < 40; ++trial) {
      const auto g = featured_graph(rng);
      const auto mg = make_message_graph(g);
      auto cfg = small_config(trial % 2 ? 3 : 2, 3);
      cfg.seed = static_cast<std::uint64_t>(trial);
      const auto m = init_model(mg.schema, cfg);
      const auto fr = forward(m, mg);
      const auto naive = naive_forward(m, mg);
      CHECK((fr.prediction - naive).cwiseAbs().maxCoeff() < 1e-10);
      for (const auto& rec : fr.attention) {
        std::map<std::uint32_t, double> sums;
        for (std::size_t k = 0; k < rec.dst.size(); ++k) sums[rec.dst[k]] += rec.alpha[k];
        for (const auto& [dst, s] : sums) CHECK(std::abs(s - 1.0) < 1e-8);
        for (double lg : rec.logits) CHECK(std::isfinite(lg));
      }
    }
  }

  TEST_CASE("property: a relation without edges leaves predictions unchanged") {
    Rng rng = make_rng(29);
    for (int trial = 0; trial < 20; ++trial) {
      const auto g = featured_graph(rng);
      auto g2 = g;
      g2.relations.push_back({RelationType::of("zz_empty", RelationClass::G2G), {}});
      g2.canonicalize();
      const auto mg = make_message_graph(g), mg2 = make_message_graph(g2);
      const auto a = predict(init_model(mg.schema, small_config()), mg);
      const auto b = predict(init_model(mg2.schema, small_config()), mg2);
      CHECK(a == b);
    }
  }

  TEST_CASE("property: nodes beyond the receptive field do not matter") {
    Rng rng = make_rng(31);
    for (int trial = 0; trial < 30; ++trial) {
      const auto g = featured_graph(rng);
      const auto mg = make_message_graph(g);
      const auto m = init_model(mg.schema, small_config(2 + trial % 2, 3));
      const auto base = predict(m, mg);
      const auto nv = mg.node_counts[slot(NodeClass::Variant)];
      const std::uint32_t root = static_cast<std::uint32_t>(trial) % static_cast<std::uint32_t>(nv);

      // nodes with a directed path of <= layers hops into the root
      std::set<NodeRef> reach{{NodeClass::Variant, root}};
      for (int hop = 0; hop < m.config.layers; ++hop) {
        auto next = reach;
        for (std::size_t r = 0; r < mg.edges.size(); ++r)
          for (std::size_t k = 0; k < mg.edges[r].src.size(); ++k)
            if (reach.count({mg.schema.relations[r].dst, mg.edges[r].dst[k]}))
              next.insert({mg.schema.relations[r].src, mg.edges[r].src[k]});
        reach = std::move(next);
      }
      auto zeroed = mg;
      for (std::size_t c = 0; c < kNodeClassCount; ++c)
        for (std::uint32_t i = 0; i < mg.node_counts[c]; ++i)
          if (!reach.count({static_cast<NodeClass>(c), i})) zeroed.features[c].row(i).setZero();
      CHECK(predict(m, zeroed)(root) == base(root));
    }
  }

  TEST_CASE("property: permuting variant storage permutes predictions") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      Rng r1 = make_rng(seed), r2 = make_rng(seed);
      const auto g = featured_graph(r1);
      const auto h = featured_graph(r2, {}, true);
      const auto mg = make_message_graph(g), mh = make_message_graph(h);
      const auto cfg = small_config();
      const auto pg = predict(init_model(mg.schema, cfg), mg);
      const auto ph = predict(init_model(mh.schema, cfg), mh);
      const auto& ids = g.ids[slot(NodeClass::Variant)];
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto j = h.find_node(ids[i])->index;
        CHECK(std::abs(pg(static_cast<Eigen::Index>(i)) - ph(j)) < 1e-12);
      }
    }
  }

  TEST_CASE("ld_aware_loss") {
    Rng rng = make_rng(37);
    const auto t = random_target(rng, 20);
    Eigen::VectorXd pred(20);
    std::normal_distribution<double> nd(1.0, 2.0);
    for (Eigen::Index i = 0; i < 20; ++i) pred(i) = nd(rng);

    const auto res = ld_aware_loss(pred, t);
    double want = 0.0, n = 0.0;
    for (Eigen::Index i = 0; i < 20; ++i)
      if (t.role[static_cast<std::size_t>(i)] == SplitRole::Train) {
        want += (pred(i) - t.chi2(i)) * (pred(i) - t.chi2(i)) / t.ld_score(i);
        n += 1.0;
      }
    CHECK(std::abs(res.value - want / n) < 1e-12);
    for (Eigen::Index i = 0; i < 20; ++i) {
      const double g = t.role[static_cast<std::size_t>(i)] == SplitRole::Train
                           ? 2.0 * (pred(i) - t.chi2(i)) / (n * t.ld_score(i))
                           : 0.0;
      CHECK(std::abs(res.gradient(i) - g) < 1e-12);
    }

    auto unit = t;
    unit.ld_score.setOnes();
    double mse = 0.0;
    for (Eigen::Index i = 0; i < 20; ++i)
      if (t.role[static_cast<std::size_t>(i)] == SplitRole::Train) mse += (pred(i) - t.chi2(i)) * (pred(i) - t.chi2(i));
    CHECK(std::abs(ld_aware_loss(pred, unit).value - mse / n) < 1e-12);

    const auto exact = ld_aware_loss(t.chi2, t);
    CHECK(exact.value == 0.0);
    CHECK(exact.gradient.isZero(0.0));
  }

  TEST_CASE("make_target splits deterministically with two on each side") {
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(10, 0.0, 9.0);
    const Eigen::VectorXd l = Eigen::VectorXd::Constant(10, 0.2);
    const auto a = make_target(y, l, 0.05, 4);
    CHECK(a.role == make_target(y, l, 0.05, 4).role);
    CHECK(std::count(a.role.begin(), a.role.end(), SplitRole::Validation) == 2);
    CHECK(a.ld_score.minCoeff() == 1.0);
  }

  TEST_CASE("grad_check") {
    Rng rng = make_rng(41);
    SUBCASE("linear special case") {
      auto g = featured_graph(rng);
      while (g.node_count(NodeClass::Variant) < 4 || g.edge_count(RelationClass::V2G) == 0) g = featured_graph(rng);
      std::erase_if(g.relations, [](const Relation& r) { return r.type.relation_class != RelationClass::V2G; });
      g.relations.resize(1);
      const auto mg = make_message_graph(g);
      REQUIRE(mg.schema.relations.size() == 2);
      auto cfg = small_config(2, 3);
      cfg.activations = false;
      const auto m = init_model(mg.schema, cfg);
      const auto t = random_target(rng, static_cast<Eigen::Index>(mg.node_counts[0]));
      CHECK(grad_check(m, mg, t, 50) < 1e-8);
    }
    for (int layers : {2, 3}) {
      CAPTURE(layers);
      test::RandomGraphSpec spec;
      spec.max_variants = 8;
      spec.max_edges = 40;
      Rng r = make_rng(43 + static_cast<std::uint64_t>(layers));
      auto g = featured_graph(r, spec);
      while (g.node_count(NodeClass::Variant) < 4) g = featured_graph(r, spec);
      const auto mg = make_message_graph(g);
      const auto m = init_model(mg.schema, small_config(layers, 4));
      const auto t = random_target(r, static_cast<Eigen::Index>(mg.node_counts[0]));
      CHECK(grad_check(m, mg, t, 50) < 1e-4);
    }
  }

  TEST_CASE("value_and_gradient agrees with predict + backward") {
    Rng rng = make_rng(47);
    auto g = featured_graph(rng);
    while (g.node_count(NodeClass::Variant) < 4) g = featured_graph(rng);
    const auto mg = make_message_graph(g);
    const auto m = init_model(mg.schema, small_config());
    const auto t = random_target(rng, static_cast<Eigen::Index>(mg.node_counts[0]));
    const auto vg = value_and_gradient(m, mg, t);
    const auto loss = ld_aware_loss(predict(m, mg), t);
    const auto grad = backward(m, mg, loss.gradient);
    CHECK(vg.loss.value == loss.value);
    REQUIRE(vg.gradient.size() == grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) CHECK(vg.gradient[i] == grad[i]);
  }

  TEST_CASE("train") {
    const auto p = planted_fixture(1, 100'000);
    auto cfg = GatConfig{};
    cfg.seed = 1;
    SUBCASE("max_epochs 0 returns the initial model") {
      cfg.max_epochs = 0;
      const auto m = init_model(p.graph.schema, cfg);
      const auto res = train(m, p.graph, p.target);
      CHECK(res.history.empty());
      CHECK(res.model.flat() == m.flat());
    }
    SUBCASE("deterministic") {
      cfg.max_epochs = 2;
      const auto m = init_model(p.graph.schema, cfg);
      const auto a = train(m, p.graph, p.target);
      const auto b = train(m, p.graph, p.target);
      CHECK(a.model.flat() == b.model.flat());
      CHECK(a.model.step == b.model.step);
    }
  }

  TEST_CASE("training on planted worlds lowers the loss and tracks true effects") {
    int decreased = 0;
    double rho_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto p = planted_fixture(seed, 100'000);
      REQUIRE(p.graph.node_counts[slot(NodeClass::Variant)] == 200);
      GatConfig cfg;
      cfg.seed = seed;
      const auto res = train(init_model(p.graph.schema, cfg), p.graph, p.target);
      decreased += res.final_train_loss < res.initial_train_loss;
      rho_sum += spearman(predict(res.model, p.graph), p.lambda);
    }
    CHECK(decreased >= 19);
    MESSAGE("mean Spearman(pred, lambda) over 20 planted worlds: " << rho_sum / 20.0);
    CHECK(rho_sum / 20.0 > 0.3);
  }

  TEST_CASE("cross_fit_predict keeps each fold out of its own model") {
    const auto world = simulate_kg(planted_scenario(5));
    const auto gwas = simulate_gwas(world.truth, 100'000, 5);
    std::vector<TargetRow> rows;
    for (const auto& r : gwas) rows.push_back({r.variant_id, r.chi2, r.ld_score});
    GatConfig cfg = small_config(2, 4);
    cfg.max_epochs = 2;
    cfg.steps_per_epoch = 5;

    const auto fit = cross_fit_predict(world.graph, rows, cfg);
    REQUIRE(fit.models.size() == 2);
    const std::map<std::string, std::size_t> want{{"1", 0}, {"2", 1}, {"3", 0}, {"4", 1}};
    for (std::size_t i = 0; i < fit.fold.size(); ++i) CHECK(fit.fold[i] == want.at(world.graph.variant_meta[i].chrom));

    // rewriting fold-0 targets moves only fold-1 predictions
    auto shifted = rows;
    std::map<std::string, std::size_t> fold_of;
    for (std::size_t i = 0; i < fit.fold.size(); ++i) fold_of[world.graph.ids[slot(NodeClass::Variant)][i]] = fit.fold[i];
    for (auto& r : shifted)
      if (fold_of.at(r.variant_id) == 0) r.chi2 = 50.0 + 3.0 * r.chi2;
    const auto moved = cross_fit_predict(world.graph, shifted, cfg);
    std::size_t fold1_changed = 0;
    for (std::size_t i = 0; i < fit.fold.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (fit.fold[i] == 0) CHECK(moved.prediction(k) == fit.prediction(k));
      else fold1_changed += moved.prediction(k) != fit.prediction(k);
    }
    CHECK(fold1_changed > 0);

    SUBCASE("one fold is the in-sample model") {
      cfg.cross_fit_folds = 1;
      const auto one = cross_fit_predict(world.graph, rows, cfg);
      const auto mg = make_message_graph(world.graph);
      const auto target = align_targets(world.graph, rows, cfg.validation_fraction, cfg.seed);
      CHECK(one.prediction == predict(train(init_model(mg.schema, cfg), mg, target).model, mg));
    }
    SUBCASE("folds are capped at the chromosome count") {
      cfg.cross_fit_folds = 10;
      CHECK(cross_fit_predict(world.graph, rows, cfg).models.size() == 4);
    }
  }

  TEST_CASE("checkpoint round trip and schema guard") {
    Rng rng = make_rng(53);
    auto g = featured_graph(rng);
    const auto mg = make_message_graph(g);
    auto m = init_model(mg.schema, small_config());
    for (auto& p : m.params) p.value.setRandom();
    m.step = 7;
    test::TempDir dir("ckpt");
    save_checkpoint(m, dir.path / "m.ckpt");
    const auto back = load_checkpoint(dir.path / "m.ckpt", mg.schema);
    CHECK(back.flat() == m.flat());
    CHECK(back.step == 7);
    CHECK(back.config == m.config);
    CHECK(predict(back, mg) == predict(m, mg));

    auto other = mg.schema;
    other.relations.push_back({"extra", NodeClass::Gene, NodeClass::Gene});
    CHECK_THROWS(load_checkpoint(dir.path / "m.ckpt", other));
  }
}
