#include "ctxkg/pipeline.hpp"
#include "ctxkg/random.hpp"
#include "ctxkg/tsv.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>
#include <unordered_map>

namespace ctxkg {

Experiment prepare_experiment(const PipelineConfig& cfg, const std::vector<std::size_t>& cohorts) {
  Experiment e;
  e.scenario = cfg.simulate;
  e.world = simulate_kg(cfg.simulate);
  e.perturb = infer_context_edges(simulate_perturb(e.world.truth, cfg.simulate), cfg.perturb);
  e.perturbed_targets = e.perturb.lfc.perturbation_ids;
  e.full_cohort = cfg.matrix.full_cohort;
  if (e.full_cohort == 0) {
    if (cfg.simulate.cohort_sizes.empty()) throw ConfigError("no full cohort size: set matrix.full_cohort or simulate.cohort_sizes");
    e.full_cohort = *std::max_element(cfg.simulate.cohort_sizes.begin(), cfg.simulate.cohort_sizes.end());
  }
  std::vector<std::size_t> sizes = cohorts;
  sizes.push_back(e.full_cohort);
  for (auto n : sizes)
    if (!e.gwas.contains(n)) e.gwas[n] = simulate_gwas(e.world.truth, n, cfg.simulate.seed);
  return e;
}

SparsifyPlan resolve_plan(const SparsifyPlan& plan, const std::vector<std::string>& perturbed, std::uint64_t run_seed) {
  SparsifyPlan out = plan;
  for (auto& s : out.steps) {
    if (auto* rg = std::get_if<step::RestrictGenes>(&s); rg && !rg->source.empty()) {
      if (rg->source == "@perturbed") {
        rg->gene_ids = perturbed;
      } else {
        const std::filesystem::path path = rg->source.substr(1);
        std::ifstream in(path);
        if (!in) throw InputError(path, "cannot open gene list");
        rg->gene_ids.clear();
        for (std::string line; std::getline(in, line);) {
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (!line.empty() && line.front() != '#') rg->gene_ids.push_back(line);
        }
      }
    } else if (auto* rw = std::get_if<step::RewireRandom>(&s)) {
      rw->seed = stable_hash(fmt::format("{}:{}", rw->seed, run_seed));
    }
  }
  return out;
}

KnowledgeGraph add_context_edges(const KnowledgeGraph& g, const std::vector<EdgeRecord>& edges, ContextEdges mode) {
  if (mode == ContextEdges::None) return g;
  std::vector<EdgeRecord> usable;
  for (const auto& e : edges)
    if (g.find_node(e.src_id) && g.find_node(e.dst_id)) usable.push_back(e);
  if (usable.size() < edges.size())
    spdlog::info("context edges: {} of {} edges touch genes absent from the graph", edges.size() - usable.size(),
                 edges.size());
  if (mode == ContextEdges::Replace) return add_edges(drop_class(g, RelationClass::G2G), usable);
  if (mode == ContextEdges::Merge) {
    std::vector<std::string> g2g;
    for (const auto& r : g.relations)
      if (r.type.relation_class == RelationClass::G2G) g2g.push_back(r.type.name);
    if (g2g.size() > 1)
      throw GraphError(fmt::format("merge needs a single G2G relation, found {} (collapse the class first)", g2g.size()));
    if (g2g.size() == 1)
      for (auto& e : usable) e.relation_name = g2g.front();
  }
  return add_edges(g, usable);
}

PlanResult build_variant_graph(const KnowledgeGraph& base, const GraphVariantSpec& spec,
                               const std::vector<EdgeRecord>& context_edges, const std::vector<std::string>& perturbed,
                               std::uint64_t run_seed) {
  PlanResult res = apply_plan(base, resolve_plan(spec.steps, perturbed, run_seed));
  if (spec.context_edges != ContextEdges::None) {
    res.graph = add_context_edges(res.graph, context_edges, spec.context_edges);
    res.stages.push_back({fmt::format("context_edges({})", to_string(spec.context_edges)), compute_stats(res.graph)});
  }
  if (!spec.post_steps.steps.empty()) {
    auto post = apply_plan(res.graph, resolve_plan(spec.post_steps, perturbed, run_seed));
    res.graph = std::move(post.graph);
    res.stages.insert(res.stages.end(), post.stages.begin() + 1, post.stages.end());
  }
  return res;
}

CrossFit cross_fit_predict(const KnowledgeGraph& graph, const std::vector<TargetRow>& rows, const GatConfig& gat) {
  gat.check();
  const auto mg = make_message_graph(graph);
  const auto& meta = graph.variant_meta;
  std::vector<std::string> chroms;
  for (const auto& m : meta) chroms.push_back(m.chrom);
  std::sort(chroms.begin(), chroms.end(), chrom_less);
  chroms.erase(std::unique(chroms.begin(), chroms.end()), chroms.end());
  const std::size_t folds = std::max<std::size_t>(1, std::min(gat.cross_fit_folds, chroms.size()));
  if (folds < gat.cross_fit_folds)
    spdlog::warn("cross-fit: {} chromosome(s), using {} fold(s) instead of {}", chroms.size(), folds, gat.cross_fit_folds);
  std::unordered_map<std::string, std::size_t> fold_of_chrom;
  for (std::size_t i = 0; i < chroms.size(); ++i) fold_of_chrom[chroms[i]] = i % folds;

  CrossFit out;
  out.fold.resize(meta.size());
  for (std::size_t i = 0; i < meta.size(); ++i) out.fold[i] = fold_of_chrom.at(meta[i].chrom);
  out.prediction = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(meta.size()));
  if (folds == 1) {
    const auto target = align_targets(graph, rows, gat.validation_fraction, gat.seed);
    out.models.push_back(train(init_model(mg.schema, gat), mg, target));
    out.prediction = predict(out.models.back().model, mg);
    return out;
  }

  std::unordered_map<std::string, std::size_t> fold_of_variant;
  const auto& vids = graph.ids[slot(NodeClass::Variant)];
  for (std::size_t i = 0; i < vids.size(); ++i) fold_of_variant[vids[i]] = out.fold[i];
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<TargetRow> fit_rows;
    for (const auto& r : rows) {
      auto it = fold_of_variant.find(r.variant_id);
      if (it != fold_of_variant.end() && it->second != f) fit_rows.push_back(r);
    }
    GatConfig cfg = gat;
    cfg.seed = stable_hash(fmt::format("{}:fold{}", gat.seed, f));
    const auto target = align_targets(graph, fit_rows, cfg.validation_fraction, cfg.seed);
    out.models.push_back(train(init_model(mg.schema, cfg), mg, target));
    const Eigen::VectorXd pred = predict(out.models.back().model, mg);
    for (std::size_t i = 0; i < out.fold.size(); ++i)
      if (out.fold[i] == f) out.prediction(static_cast<Eigen::Index>(i)) = pred(static_cast<Eigen::Index>(i));
  }
  return out;
}

CellRun run_cell(const KnowledgeGraph& graph, const GwasStats& small, const GwasStats& full, const GatConfig& gat,
                 const RecalibrateOptions& assoc) {
  std::vector<TargetRow> rows;
  rows.reserve(small.size());
  for (const auto& r : small) rows.push_back({r.variant_id, r.chi2, r.ld_score});
  auto fit = cross_fit_predict(graph, rows, gat);
  CellRun out;
  out.edges = graph.edge_count();
  out.training = std::move(fit.models.front());
  const Eigen::VectorXd& pred = fit.prediction;

  std::unordered_map<std::string, double> by_id;
  const auto& vids = graph.ids[slot(NodeClass::Variant)];
  for (std::size_t i = 0; i < vids.size(); ++i) by_id[vids[i]] = pred(static_cast<Eigen::Index>(i));
  out.predictions.reserve(small.size());
  for (const auto& r : small) {
    auto it = by_id.find(r.variant_id);
    out.predictions.push_back(it == by_id.end() ? 0.0 : it->second);
  }
  const auto rep = recalibrate(small, out.predictions, assoc, &full);
  out.recall = rep.recall;
  out.rejected = rep.rejected.size();
  return out;
}

std::vector<MatrixRow> run_matrix(const PipelineConfig& cfg, std::size_t jobs) {
  if (cfg.matrix.variants.empty()) throw ConfigError("matrix: no variants listed");
  if (cfg.matrix.seeds.empty() || cfg.matrix.cohorts.empty()) throw ConfigError("matrix: seeds and cohorts must be non-empty");
  const Experiment exp = prepare_experiment(cfg, cfg.matrix.cohorts);

  struct Task {
    std::size_t row;
    std::string variant;
    std::size_t cohort;
    std::uint64_t seed;
  };
  struct Outcome {
    bool ok = false;
    CellRun run;
    std::string error;
  };
  std::vector<MatrixRow> rows;
  std::vector<Task> tasks;
  for (const auto& v : cfg.matrix.variants)
    for (auto c : cfg.matrix.cohorts) {
      rows.push_back({v, c, 0, {}, {}, {}});
      for (auto s : cfg.matrix.seeds) tasks.push_back({rows.size() - 1, v, c, s});
    }

  std::vector<Outcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& t = tasks[i];
      try {
        const auto graph = build_variant_graph(exp.world.graph, cfg.variants.at(t.variant), exp.perturb.edges,
                                               exp.perturbed_targets, t.seed);
        GatConfig gat = cfg.gat;
        gat.seed = t.seed;
        outcomes[i].run = run_cell(graph.graph, exp.gwas.at(t.cohort), exp.gwas.at(exp.full_cohort), gat, cfg.assoc);
        outcomes[i].ok = true;
        spdlog::info("matrix: {} n={} seed={} recall={}", t.variant, t.cohort, t.seed, outcomes[i].run.recall);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
        spdlog::error("matrix: {} n={} seed={} failed: {}", t.variant, t.cohort, t.seed, e.what());
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(tasks.size(), 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto& row = rows[tasks[i].row];
    if (outcomes[i].ok) {
      row.edges = outcomes[i].run.edges;
      row.recall.push_back(static_cast<double>(outcomes[i].run.recall));
      row.rejected.push_back(static_cast<double>(outcomes[i].run.rejected));
    } else {
      row.errors.push_back(fmt::format("seed {}: {}", tasks[i].seed, outcomes[i].error));
    }
  }
  return rows;
}

namespace {

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

std::string matrix_to_tsv(const std::vector<MatrixRow>& rows) {
  std::string out = "variant\tcohort\tedges\tn_seeds\trecall_mean\trecall_sd\trejected_mean\tstatus\n";
  for (const auto& r : rows) {
    const std::size_t n = r.recall.size();
    std::string mean, sd, rej;
    if (n > 0) {
      const double m = std::accumulate(r.recall.begin(), r.recall.end(), 0.0) / static_cast<double>(n);
      mean = fmt::format("{:.4f}", m);
      rej = fmt::format("{:.4f}", std::accumulate(r.rejected.begin(), r.rejected.end(), 0.0) / static_cast<double>(n));
      if (n > 1) {
        double ss = 0.0;
        for (double x : r.recall) ss += (x - m) * (x - m);
        sd = fmt::format("{:.4f}", std::sqrt(ss / static_cast<double>(n - 1)));
      }
    }
    std::string status = "ok";
    if (!r.errors.empty()) {
      status = fmt::format("failed({})", r.errors.size());
      for (const auto& e : r.errors) status += "; " + sanitize(e);
    }
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", r.variant, r.cohort, r.edges, n, mean, sd, rej, status);
  }
  return out;
}

}  // namespace ctxkg
