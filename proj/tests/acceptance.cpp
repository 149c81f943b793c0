#include "ctxkg/config.hpp"
#include "ctxkg/pipeline.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

using namespace ctxkg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Pair = std::pair<std::string, std::string>;

PipelineConfig desk() { return load_config(fs::path(CTXKG_CONFIGS) / "desk.ini"); }

std::set<Pair> undirected(const std::vector<EdgeRecord>& edges) {
  std::set<Pair> out;
  for (const auto& e : edges) out.insert(std::minmax(e.src_id, e.dst_id));
  return out;
}

KnowledgeGraph featured_graph(Rng& rng, const test::RandomGraphSpec& spec) {
  for (;;) {
    auto [nodes, edges] = test::random_records(rng, spec);
    std::normal_distribution<double> nd;
    std::vector<FeatureRow> feats;
    const std::map<NodeClass, std::size_t> dims{{NodeClass::Variant, 3}, {NodeClass::Gene, 2}, {NodeClass::Program, 2}};
    for (const auto& n : nodes) {
      FeatureRow r{n.id, {}};
      for (std::size_t j = 0; j < dims.at(n.node_class); ++j) r.values.push_back(nd(rng));
      feats.push_back(r);
    }
    BuildOptions opts;
    opts.variant_dim = 3;
    opts.gene_dim = 2;
    opts.program_dim = 2;
    auto g = build_graph(nodes, edges, feats, opts).graph;
    if (g.edge_count() > 0 && g.node_count(NodeClass::Variant) >= 4) return g;
  }
}

Outcome a1() {
  Rng rng = make_rng(1001);
  std::uniform_int_distribution<std::size_t> msize(1, 12);
  std::uniform_real_distribution<double> u(0.0, 1.0), uw(0.1, 3.0);
  std::size_t weighted_bad = 0, plain_bad = 0, rejections = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = msize(rng);
    std::vector<double> p(m), w(m);
    for (auto& x : p) x = u(rng) < 0.4 ? std::pow(u(rng), 4.0) * 0.05 : u(rng);
    for (auto& x : w) x = uw(rng);
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(m);
    for (auto& x : w) x /= mean;
    const double alpha = std::array{0.01, 0.05, 0.1, 0.2}[trial % 4];
    const auto got = weighted_bh(p, w, alpha);
    rejections += got.size();
    weighted_bad += got != test::weighted_bh_oracle(p, w, alpha);
    plain_bad += weighted_bh(p, std::vector<double>(m, 1.0), alpha) != test::plain_bh(p, alpha);
  }
  return {weighted_bad == 0 && plain_bad == 0,
          fmt::format("1000 instances: {} weighted mismatches, {} plain mismatches, {} rejections", weighted_bad,
                      plain_bad, rejections)};
}

Outcome a2() {
  double worst_grad = 0.0, worst_attn = 0.0;
  std::size_t models = 0;
  test::RandomGraphSpec spec;
  spec.max_variants = 8;
  spec.max_edges = 40;
  for (int layers : {2, 3})
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      Rng rng = make_rng(2000 + 100 * static_cast<std::uint64_t>(layers) + seed);
      const auto g = featured_graph(rng, spec);
      const auto mg = make_message_graph(g);
      GatConfig cfg;
      cfg.layers = layers;
      cfg.hidden_dim = 4;
      cfg.seed = seed;
      const auto m = init_model(mg.schema, cfg);
      const auto n = static_cast<Eigen::Index>(mg.node_counts[slot(NodeClass::Variant)]);
      std::gamma_distribution<double> chi(0.5, 2.0);
      std::uniform_real_distribution<double> ld(0.5, 4.0);
      Eigen::VectorXd y(n), l(n);
      for (Eigen::Index i = 0; i < n; ++i) y(i) = chi(rng), l(i) = ld(rng);
      const auto target = make_target(y, l, 0.3, seed);
      worst_grad = std::max(worst_grad, grad_check(m, mg, target, 60, 1e-5, seed));
      for (const auto& rec : forward(m, mg).attention) {
        std::map<std::uint32_t, double> sums;
        for (std::size_t k = 0; k < rec.dst.size(); ++k) sums[rec.dst[k]] += rec.alpha[k];
        for (const auto& [dst, s] : sums) worst_attn = std::max(worst_attn, std::abs(s - 1.0));
      }
      ++models;
    }
  return {worst_grad < 1e-4 && worst_attn < 1e-8,
          fmt::format("{} models (2 and 3 layers): max grad rel err {:.3g}, max |sum alpha - 1| {:.3g}", models,
                      worst_grad, worst_attn)};
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd x = a.array() - a.mean(), y = b.array() - b.mean();
  return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

Outcome a3() {
  std::size_t passing = 0;
  double worst = 1.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng = make_rng(3000 + seed);
    const Eigen::Index n = 1000;
    std::uniform_real_distribution<double> uni(-std::sqrt(3.0), std::sqrt(3.0));
    std::normal_distribution<double> nd;
    std::bernoulli_distribution coin(0.5);
    Eigen::MatrixXd s(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      s(i, 0) = uni(rng);
      s(i, 1) = (coin(rng) ? 1.0 : -1.0) + 0.3 * nd(rng);
    }
    Eigen::MatrixXd mix(2, 5);
    for (Eigen::Index i = 0; i < mix.size(); ++i) mix(i) = nd(rng);
    PerturbMatrix in;
    in.stage = PerturbStage::Selected;
    in.values = s * mix;
    for (Eigen::Index i = 0; i < n; ++i) in.perturbation_ids.push_back(fmt::format("t{:04}", i));
    for (Eigen::Index j = 0; j < 5; ++j) in.column_ids.push_back(fmt::format("f{}", j));
    IcaOptions opts;
    opts.components = 2;
    opts.seed = seed;
    const auto res = fast_ica(in, opts);
    const auto& c = res.scores.values;
    double best = 0.0;
    if (c.cols() == 2) {
      std::array<std::array<double, 2>, 2> r{};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r[i][j] = std::abs(correlation(c.col(i), s.col(j)));
      best = std::max(std::min(r[0][0], r[1][1]), std::min(r[0][1], r[1][0]));
    }
    worst = std::min(worst, best);
    passing += best >= 0.95;
  }
  return {passing >= 19, fmt::format("{}/20 seeds matched both sources with |r| >= 0.95 (worst min |r| {:.4f})", passing,
                                     worst)};
}

Outcome a4() {
  const auto opts = desk().perturb;
  double worst_f1 = 1.0;
  std::size_t fixtures = 0, monotone = 0;
  auto check_monotone = [&](const PerturbResult& res) {
    auto lo = res.similarity, hi = res.similarity;
    const auto loose = undirected(threshold_edges(lo, 0.3));
    const auto tight = undirected(threshold_edges(hi, 0.7));
    ++fixtures;
    monotone += std::includes(loose.begin(), loose.end(), tight.begin(), tight.end());
  };
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SimScenario s;
    s.seed = seed;
    s.perturb_noise = 0.0;
    const auto w = simulate_kg(s);
    const auto res = infer_context_edges(simulate_perturb(w.truth, s), opts);
    const auto got = undirected(res.edges);
    const auto want_v = perturbable_module_edges(w.truth);
    const std::set<Pair> want(want_v.begin(), want_v.end());
    std::size_t tp = 0;
    for (const auto& e : got) tp += want.contains(e);
    const double f1 = got.empty() && want.empty() ? 1.0 : 2.0 * tp / static_cast<double>(got.size() + want.size());
    worst_f1 = std::min(worst_f1, f1);
    check_monotone(res);
  }
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SimScenario s;
    s.seed = seed;
    const auto w = simulate_kg(s);
    check_monotone(infer_context_edges(simulate_perturb(w.truth, s), opts));
  }
  return {worst_f1 == 1.0 && monotone == fixtures,
          fmt::format("noise-0 F1 at tau 0.5: min {:.4f} over 3 seeds; edges(0.7) in edges(0.3) on {}/{} fixtures",
                      worst_f1, monotone, fixtures)};
}

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

Outcome a5() {
  std::map<std::string, std::vector<double>> recall;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto cfg = desk();
    cfg.simulate.seed = seed;
    cfg.matrix.seeds = {seed};
    for (const auto& row : run_matrix(cfg)) {
      if (!row.errors.empty() || row.recall.size() != 1)
        return {false, fmt::format("seed {} variant {} failed: {}", seed, row.variant, fmt::join(row.errors, "; "))};
      recall[row.variant].push_back(row.recall.front());
    }
  }
  const double ctx = mean(recall["context"]), drop = mean(recall["dropped"]), rnd = mean(recall["randomized"]);
  std::size_t wins = 0, losses = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    wins += recall["context"][i] > recall["randomized"][i];
    losses += recall["context"][i] < recall["randomized"][i];
  }
  // one-sided: P(X >= wins), X ~ Binomial(wins + losses, 1/2)
  const std::size_t trials = wins + losses;
  const double p = trials == 0 ? 1.0 : (wins == 0 ? 1.0 : boost::math::cdf(boost::math::complement(
                                                        boost::math::binomial(static_cast<double>(trials), 0.5),
                                                        static_cast<double>(wins) - 1.0)));
  return {ctx >= drop && drop >= rnd && p < 0.05,
          fmt::format("mean top-100 recall context {:.2f}, dropped {:.2f}, randomized {:.2f}; sign test {}-{} p={:.4g}",
                      ctx, drop, rnd, wins, losses, p)};
}

TrainResult train_on(const KnowledgeGraph& g, const GwasStats& stats, GatConfig gat, std::uint64_t seed) {
  std::vector<TargetRow> rows;
  for (const auto& r : stats) rows.push_back({r.variant_id, r.chi2, r.ld_score});
  gat.seed = seed;
  const auto target = align_targets(g, rows, gat.validation_fraction, seed);
  const auto mg = make_message_graph(g);
  return train(init_model(mg.schema, gat), mg, target);
}

std::set<std::string> v2g_sources(const KnowledgeGraph& g) {
  std::set<std::string> out;
  for (const auto& e : edge_records(g))
    if (e.relation_class == RelationClass::V2G) out.insert(e.src_id);
  return out;
}

Outcome a6() {
  std::size_t context_higher = 0;
  std::vector<std::string> scores;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto cfg = desk();
    cfg.simulate.seed = seed;
    const auto small_n = cfg.matrix.cohorts.front();
    const auto exp = prepare_experiment(cfg, {small_n});
    const auto context = build_variant_graph(exp.world.graph, cfg.variants.at("context"), exp.perturb.edges,
                                             exp.perturbed_targets, seed)
                             .graph;
    const auto& dense = exp.world.graph;

    // root: strongest full-cohort causal variant linked to genes in both graphs
    const auto in_ctx = v2g_sources(context), in_dense = v2g_sources(dense);
    std::map<std::string, double> full_chi2;
    for (const auto& r : exp.gwas.at(exp.full_cohort)) full_chi2[r.variant_id] = r.chi2;
    const auto& truth = exp.world.truth;
    std::string root;
    for (std::size_t i = 0; i < truth.variant_ids.size(); ++i) {
      const auto& id = truth.variant_ids[i];
      if (!truth.causal[i] || !in_ctx.contains(id) || !in_dense.contains(id)) continue;
      if (root.empty() || full_chi2.at(id) > full_chi2.at(root)) root = id;
    }
    if (root.empty()) return {false, fmt::format("scenario seed {}: no causal variant with V2G edges in both graphs", seed)};

    const std::set<std::string> ctx_genes(exp.perturbed_targets.begin(), exp.perturbed_targets.end());
    auto consistency = [&](const KnowledgeGraph& g) {
      std::vector<CriticalNetwork> nets;
      for (std::uint64_t m = 1; m <= 3; ++m)
        nets.push_back(critical_network(train_on(g, exp.gwas.at(small_n), cfg.gat, m).model, g, root, cfg.dcn, ctx_genes));
      return consistency_score(merge_seed_networks(nets), 3);
    };
    const double c_ctx = consistency(context), c_dense = consistency(dense);
    context_higher += c_ctx > c_dense;
    scores.push_back(fmt::format("{:.2f}/{:.2f}", c_ctx, c_dense));
  }
  return {context_higher >= 15, fmt::format("context > dense consistency in {}/20 scenario seeds (context/dense: {})",
                                            context_higher, fmt::join(scores, " "))};
}

Outcome a7() {
  const auto kg = paper_proportioned_kg({});
  SparsifyPlan plan;
  plan.steps = {step::RemovePrograms{}, step::RestrictV2G{default_local_v2g()}, step::RestrictG2GMajor{kg.major_threshold},
                step::CollapseClass{RelationClass::G2G, ""}, step::RestrictGenes{kg.expressed_genes, ""}};
  const auto res = apply_plan(kg.graph, plan);
  std::size_t invalid = 0;
  for (const auto* g : {&kg.graph, &res.graph}) invalid += validate(*g).size();
  // every intermediate stage graph, rebuilt step by step
  KnowledgeGraph g = kg.graph;
  for (const auto& s : plan.steps) {
    g = apply_plan(g, SparsifyPlan{{s}}).graph;
    invalid += validate(g).size();
  }
  const auto v2g = static_cast<std::size_t>(RelationClass::V2G);
  const auto& st = res.stages;  // [input, remove_programs, restrict_v2g, restrict_g2g_major, collapse, restrict_genes]
  const double v2g_fold = static_cast<double>(st[1].stats.edges_per_class[v2g]) /
                          static_cast<double>(std::max<std::size_t>(st[2].stats.edges_per_class[v2g], 1));
  const auto genes_before = st[4].stats.total_edges, genes_after = st[5].stats.total_edges;
  std::size_t g2g_relations = 0;
  for (const auto& r : res.graph.relations) g2g_relations += r.type.relation_class == RelationClass::G2G;
  const bool pass = st.size() == 6 && v2g_fold >= 5.0 && genes_after < genes_before && g2g_relations == 1 &&
                    invalid == 0 && g == res.graph;
  return {pass, fmt::format("V2G {} -> {} ({:.1f}x); restrict_genes {} -> {} edges; {} G2G relation(s); {} violations",
                            st[1].stats.edges_per_class[v2g], st[2].stats.edges_per_class[v2g], v2g_fold, genes_before,
                            genes_after, g2g_relations, invalid)};
}

Outcome a8() {
  std::size_t any_rejection = 0, total_rejected = 0;
  double fdp_sum = 0.0;
  std::vector<double> null_p;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto cfg = desk();
    cfg.simulate.seed = seed;
    cfg.simulate.causal_modules = 0;
    const auto small_n = cfg.matrix.cohorts.front();
    const auto exp = prepare_experiment(cfg, {small_n});
    const auto graph = build_variant_graph(exp.world.graph, cfg.variants.at("context"), exp.perturb.edges,
                                           exp.perturbed_targets, seed)
                           .graph;
    GatConfig gat = cfg.gat;
    gat.seed = seed;
    const auto& small = exp.gwas.at(small_n);
    const auto run = run_cell(graph, small, exp.gwas.at(exp.full_cohort), gat, cfg.assoc);
    // every rejection is false under the null
    any_rejection += run.rejected > 0;
    total_rejected += run.rejected;
    fdp_sum += run.rejected > 0 ? 1.0 : 0.0;

    // one variant per LD block keeps the KS sample independent
    std::map<std::string, double> p_by_id;
    for (const auto& r : small) p_by_id[r.variant_id] = r.p;
    const auto& truth = exp.world.truth;
    for (std::size_t i = 0; i < truth.variant_ids.size(); ++i)
      if (i % truth.variants_per_block == 0) null_p.push_back(p_by_id.at(truth.variant_ids[i]));
  }
  const double fdr = fdp_sum / 100.0;
  const double ks_p = test::ks_uniform_p(null_p);
  return {fdr <= 0.075 && ks_p >= 0.01,
          fmt::format("empirical FDR {:.3f} ({} of 100 null worlds with rejections, {} total); KS p {:.3g} on {} p-values",
                      fdr, any_rejection, total_rejected, ks_p, null_p.size())};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CTXKG_CLI) + " " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

/// Every CLI stage into `dir`; returns the first failing command, or empty.
std::string cli_pipeline(const fs::path& dir) {
  const auto d = [&](const std::string& name) { return (dir / name).string(); };
  const auto tiny = test::fixture("tiny.ini").string();
  const std::string cfg = " --config " + tiny;
  std::vector<std::string> cmds{
      "simulate --scenario " + tiny + " --out " + d("sim"),
      "perturb-edges --cells " + d("sim/perturb") + cfg + " --positive-pairs " + d("sim/truth/module_edges.tsv") +
          " --out " + d("pe"),
      "sparsify --graph " + d("sim/kg") + cfg + " --plan 'remove_programs ; restrict_v2g() ; restrict_genes(@perturbed)'" +
          " --genes " + d("pe/perturbed.txt") + " --context-edges " + d("pe/edges.tsv") + " --context-mode replace --out " +
          d("ctx"),
      "train --graph " + d("ctx") + " --targets " + d("sim/targets_10000.tsv") + cfg + " --seed 1 --out " + d("m1.ckpt"),
      "train --graph " + d("ctx") + " --targets " + d("sim/targets_10000.tsv") + cfg + " --seed 2 --out " + d("m2.ckpt"),
      "evaluate --small " + d("sim/gwas_10000.tsv") + " --full " + d("sim/gwas_100000.tsv") + " --pred " +
          d("m1.ckpt.pred.tsv") + " --k 20 --out " + d("eval"),
  };
  for (const auto& c : cmds)
    if (run_cli(c) != 0) return c;

  std::ifstream in(dir / "sim" / "truth" / "causal_variants.tsv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  const std::string root = line.substr(0, line.find('\t'));
  cmds = {
      "dcn --model " + d("m1.ckpt") + " --graph " + d("ctx") + " --variant " + root + cfg + " --out " + d("n1.json"),
      "dcn --model " + d("m2.ckpt") + " --graph " + d("ctx") + " --variant " + root + cfg + " --out " + d("n2.json"),
      "dcn-merge " + d("n1.json") + " " + d("n2.json") + " --out " + d("merged.json"),
      "run-matrix --config " + tiny + " --out " + d("matrix"),
  };
  for (const auto& c : cmds)
    if (run_cli(c) != 0) return c;
  return {};
}

Outcome a9() {
  const fs::path base = fs::temp_directory_path() / fmt::format("ctxkg_acceptance_a9_{}", ::getpid());
  fs::remove_all(base);
  fs::create_directories(base);
  const fs::path work = base / "run";
  // both runs use the same output paths so recorded paths cannot differ
  std::array<std::map<std::string, std::string>, 2> trees;
  for (int k = 0; k < 2; ++k) {
    if (const auto bad = cli_pipeline(work); !bad.empty()) {
      fs::remove_all(base);
      return {false, "command failed: " + bad};
    }
    trees[k] = tree(work);
    fs::remove_all(work);
  }
  fs::remove_all(base);
  std::size_t differing = 0;
  std::vector<std::string> names;
  for (const auto& [name, bytes] : trees[0]) {
    const auto it = trees[1].find(name);
    if (it == trees[1].end() || it->second != bytes) {
      ++differing;
      names.push_back(name);
    }
  }
  const bool same_files = trees[0].size() == trees[1].size();

  auto cfg = load_config(test::fixture("tiny.ini"));
  const auto m1 = matrix_to_tsv(run_matrix(cfg)), m2 = matrix_to_tsv(run_matrix(cfg));
  const bool in_process = m1 == m2;
  return {differing == 0 && same_files && in_process && !trees[0].empty(),
          fmt::format("{} files across all CLI stages, {} differ{}; in-process run_matrix {}", trees[0].size(), differing,
                      names.empty() ? "" : " (" + fmt::format("{}", fmt::join(names, ", ")) + ")",
                      in_process ? "identical" : "differs")};
}

struct Criterion {
  std::string name;
  double budget_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::err);
  const std::vector<Criterion> all{
      {"A1", 10, a1}, {"A2", 30, a2}, {"A3", 20, a3},  {"A4", 30, a4}, {"A5", 900, a5},
      {"A6", 900, a6}, {"A7", 10, a7}, {"A8", 300, a8}, {"A9", 0, a9},
  };
  std::set<std::string> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(argv[i]);
  if (wanted.empty() || wanted.contains("all"))
    for (const auto& c : all) wanted.insert(c.name);
  for (const auto& w : wanted)
    if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return c.name == w || w == "all"; })) {
      std::cerr << "unknown criterion: " << w << "\n";
      return 64;
    }

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.contains(c.name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s <= 0 || secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::cout << fmt::format("{} {} {} [{:.1f} s{}]", c.name, pass ? "PASS" : "FAIL", o.detail, secs,
                             c.budget_s > 0 ? fmt::format(" / {:.0f} s budget", c.budget_s) : "")
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
