#include "ctxkg/commands.hpp"
#include "ctxkg/config.hpp"
#include "ctxkg/graph_io.hpp"
#include "ctxkg/pipeline.hpp"
#include "ctxkg/tsv.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <set>
#include <unordered_map>

namespace ctxkg {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kSubcommands{"simulate", "build-kg", "sparsify", "perturb-edges", "train",
                                            "evaluate", "dcn",      "dcn-merge", "run-matrix"};

void setup_logging() {
  static bool done = false;
  if (!done) {
    auto logger = spdlog::stderr_color_mt("ctxkg");
    spdlog::set_default_logger(logger);
    done = true;
  }
  const char* env = std::getenv("CTXKG_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

std::string usage() {
  std::string s = fmt::format("ctxkg {}\nusage: ctxkg <subcommand> [options]\n\nsubcommands:\n", kVersion);
  for (const auto& c : kSubcommands) s += "  " + c + "\n";
  s += "\nrun `ctxkg <subcommand> --help` for options\n";
  return s;
}

PipelineConfig config_or_default(const std::string& path) {
  return path.empty() ? PipelineConfig{} : load_config(path);
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw InputError(p, "file not found");
}

/// For file outputs the snapshot sits beside the file, sharing its name.
fs::path sibling(const fs::path& out, const std::string& suffix) { return fs::path(out.string() + suffix); }

std::vector<std::string> read_lines(const fs::path& p) {
  std::vector<std::string> out;
  for (const auto& row : read_tsv(p)) out.push_back(row.at(0));
  return out;
}

// ---- subcommands -----------------------------------------------------------

struct SimulateArgs {
  std::string scenario, out;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a) {
  PipelineConfig cfg = config_or_default(a.scenario);
  if (a.seed) cfg.simulate.seed = *a.seed;
  const fs::path out = a.out;
  std::vector<std::string> doublets;
  const auto world = simulate_kg(cfg.simulate);
  const auto cells = simulate_perturb(world.truth, cfg.simulate, &doublets);
  write_bundle(world.graph, out / "kg");
  write_cell_matrix(cells, out / "perturb");
  for (auto n : cfg.simulate.cohort_sizes) {
    const auto stats = simulate_gwas(world.truth, n, cfg.simulate.seed);
    write_text_file(out / fmt::format("gwas_{}.tsv", n), gwas_to_tsv(stats));
    std::vector<TargetRow> rows;
    for (const auto& r : stats) rows.push_back({r.variant_id, r.chi2, r.ld_score});
    write_text_file(out / fmt::format("targets_{}.tsv", n), targets_to_tsv(rows));
  }
  const auto& t = world.truth;
  std::string causal = "# variant_id\tblock\tlambda_ref\n";
  for (std::size_t i = 0; i < t.variant_ids.size(); ++i)
    if (t.causal[i]) causal += fmt::format("{}\t{}\t{}\n", t.variant_ids[i], t.block[i], format_double(t.lambda_ref[i]));
  write_text_file(out / "truth" / "causal_variants.tsv", causal);
  std::set<int> causal_mods(t.causal_module_ids.begin(), t.causal_module_ids.end());
  std::string modules = "# gene_id\tmodule\tcausal_module\n";
  for (std::size_t g = 0; g < t.gene_ids.size(); ++g)
    if (t.gene_module[g] >= 0)
      modules += fmt::format("{}\t{}\t{}\n", t.gene_ids[g], t.gene_module[g], causal_mods.contains(t.gene_module[g]) ? 1 : 0);
  write_text_file(out / "truth" / "modules.tsv", modules);
  std::string pairs = "# gene_a\tgene_b\n";
  for (const auto& [x, y] : t.module_edges) pairs += fmt::format("{}\t{}\n", x, y);
  write_text_file(out / "truth" / "module_edges.tsv", pairs);
  std::string pert;
  for (const auto& g : t.perturbed_genes) pert += g + "\n";
  write_text_file(out / "truth" / "perturbed_genes.txt", pert);
  std::string dbl;
  for (const auto& c : doublets) dbl += c + "\n";
  write_text_file(out / "truth" / "doublets.txt", dbl);
  write_text_file(out / "resolved.ini", format_config(cfg));
  spdlog::info("simulate: {} variants, {} genes, {} edges, {} cells -> {}", t.variant_ids.size(), t.gene_ids.size(),
               world.graph.edge_count(), cells.cell_ids.size(), out.string());
  return kExitOk;
}

struct BuildArgs {
  std::string nodes, edges, features, config, out;
  std::size_t variant_dim = kDefaultVariantFeatureDim, gene_dim = 16, program_dim = 8;
  std::uint64_t seed = 0;
};

int cmd_build_kg(const BuildArgs& a) {
  const auto cfg = config_or_default(a.config);
  BuildOptions bo;
  bo.variant_dim = a.variant_dim;
  bo.gene_dim = a.gene_dim;
  bo.program_dim = a.program_dim;
  bo.program_feature_seed = a.seed;
  const auto nodes = read_nodes_tsv(a.nodes);
  const auto edges = read_edges_tsv(a.edges);
  std::vector<FeatureRow> features;
  if (!a.features.empty()) features = read_features_tsv(a.features);
  const auto built = build_graph(nodes, edges, features, bo);
  write_bundle(built.graph, a.out);
  write_text_file(fs::path(a.out) / "resolved.ini", format_config(cfg));
  spdlog::info("build-kg: {} edges in {} relations", built.stats.total_edges, built.graph.relations.size());
  return kExitOk;
}

struct SparsifyArgs {
  std::string graph, plan, config, genes, context_edges, context_mode = "add", out;
  std::uint64_t seed = 0;
};

int cmd_sparsify(const SparsifyArgs& a) {
  PipelineConfig cfg = config_or_default(a.config);
  if (!a.plan.empty()) {
    try {
      cfg.sparsify = parse_plan(a.plan);
    } catch (const GraphError& e) {
      throw ConfigError(e.what());
    }
  }
  const auto g = read_bundle(a.graph);
  std::vector<std::string> genes;
  if (!a.genes.empty()) genes = read_lines(a.genes);
  GraphVariantSpec spec{"cli", cfg.sparsify, ContextEdges::None, {}};
  std::vector<EdgeRecord> ctx;
  if (!a.context_edges.empty()) {
    ctx = read_edges_tsv(a.context_edges);
    spec.context_edges = parse_context_edges(a.context_mode);
  }
  const auto res = build_variant_graph(g, spec, ctx, genes, a.seed);
  if (auto v = validate(res.graph); !v.empty())
    throw GraphError(fmt::format("sparsified graph violates '{}' at {}", v.front().invariant, v.front().element));
  write_bundle(res.graph, a.out);
  write_text_file(fs::path(a.out) / "stages.tsv", stages_to_tsv(res.stages));
  write_text_file(fs::path(a.out) / "resolved.ini", format_config(cfg));
  for (const auto& st : res.stages) spdlog::info("sparsify: {:<32} {} edges", st.name, st.stats.total_edges);
  return kExitOk;
}

struct PerturbArgs {
  std::string cells, config, positive_pairs, out;
  std::optional<std::uint64_t> seed;
};

int cmd_perturb_edges(const PerturbArgs& a) {
  PipelineConfig cfg = config_or_default(a.config);
  if (a.seed) cfg.perturb.ica.seed = *a.seed;
  const fs::path out = a.out;
  const auto cells = read_cell_matrix(a.cells);
  auto res = infer_context_edges(cells, cfg.perturb);
  write_text_file(out / "edges.tsv", edges_to_tsv(res.edges));
  std::string sim = "# gene_a\tgene_b\tcosine\n";
  const auto& s = res.similarity;
  for (Eigen::Index i = 0; i < s.cosine.rows(); ++i)
    for (Eigen::Index j = i + 1; j < s.cosine.cols(); ++j)
      sim += fmt::format("{}\t{}\t{}\n", s.ids[static_cast<std::size_t>(i)], s.ids[static_cast<std::size_t>(j)],
                         format_double(s.cosine(i, j)));
  write_text_file(out / "similarity.tsv", sim);
  std::string targets;
  for (const auto& id : res.lfc.perturbation_ids) targets += id + "\n";
  write_text_file(out / "perturbed.txt", targets);
  nlohmann::ordered_json ica;
  ica["requested_components"] = res.ica.requested_components;
  ica["rank"] = res.ica.rank;
  ica["components"] = res.ica.scores.values.cols();
  ica["iterations"] = res.ica.iterations;
  ica["converged"] = res.ica.converged;
  ica["notes"] = res.ica.notes;
  ica["excluded"] = s.excluded_ids;
  ica["tau"] = s.tau;
  ica["undirected_edges"] = s.edges.size();
  write_text_file(out / "ica.json", ica.dump(2) + "\n");
  if (!a.positive_pairs.empty()) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& row : read_tsv(a.positive_pairs)) {
      if (row.size() < 2) throw InputError(a.positive_pairs, "expected two gene ids per line");
      pairs.emplace_back(row[0], row[1]);
    }
    const auto rep = separation_diagnostic(s, pairs, std::max<std::size_t>(pairs.size(), 1000), cfg.perturb.ica.seed);
    write_text_file(out / "separation.tsv", separation_to_tsv(rep));
    write_text_file(out / "separation.json", separation_summary_json(rep));
  }
  write_text_file(out / "resolved.ini", format_config(cfg));
  return kExitOk;
}

struct TrainArgs {
  std::string graph, targets, config, out;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a) {
  PipelineConfig cfg = config_or_default(a.config);
  if (a.seed) cfg.gat.seed = *a.seed;
  require_file(a.targets);
  const auto g = read_bundle(a.graph);
  const auto rows = read_targets_tsv(a.targets);
  const auto target = align_targets(g, rows, cfg.gat.validation_fraction, cfg.gat.seed);
  const auto mg = make_message_graph(g);
  const auto res = train(init_model(mg.schema, cfg.gat), mg, target);
  const fs::path out = a.out;
  save_checkpoint(res.model, out);
  // weights come from out-of-fold predictions; the checkpoint sees every target
  const Eigen::VectorXd pred =
      cfg.gat.cross_fit_folds > 1 ? cross_fit_predict(g, rows, cfg.gat).prediction : predict(res.model, mg);
  std::vector<PredictionRow> preds;
  const auto& vids = g.ids[slot(NodeClass::Variant)];
  for (std::size_t i = 0; i < vids.size(); ++i) preds.push_back({vids[i], pred(static_cast<Eigen::Index>(i))});
  write_text_file(sibling(out, ".pred.tsv"), predictions_to_tsv(preds));
  std::string hist = "# epoch\ttrain_loss\tvalidation_mse\n";
  for (const auto& h : res.history)
    hist += fmt::format("{}\t{}\t{}\n", h.epoch, format_double(h.train_loss), format_double(h.validation_mse));
  write_text_file(sibling(out, ".history.tsv"), hist);
  write_text_file(sibling(out, ".resolved.ini"), format_config(cfg));
  spdlog::info("train: loss {:.4g} -> {:.4g}, best epoch {}", res.initial_train_loss, res.final_train_loss, res.best_epoch);
  return kExitOk;
}

struct EvaluateArgs {
  std::string small, full, pred, config, out;
  std::optional<double> alpha;
  std::optional<std::int64_t> window;
  std::optional<std::size_t> k;
};

int cmd_evaluate(const EvaluateArgs& a) {
  PipelineConfig cfg = config_or_default(a.config);
  if (a.alpha) cfg.assoc.alpha = *a.alpha;
  if (a.window) cfg.assoc.window_bp = *a.window;
  if (a.k) cfg.assoc.k = *a.k;
  for (const auto& p : {a.small, a.full, a.pred}) require_file(p);
  const auto small = read_gwas_tsv(a.small);
  const auto full = read_gwas_tsv(a.full);
  std::unordered_map<std::string, double> by_id;
  for (const auto& r : read_predictions_tsv(a.pred)) by_id[r.variant_id] = r.predicted;
  std::vector<double> pred;
  std::size_t missing = 0;
  for (const auto& r : small) {
    auto it = by_id.find(r.variant_id);
    missing += it == by_id.end();
    pred.push_back(it == by_id.end() ? 0.0 : it->second);
  }
  if (missing) spdlog::warn("evaluate: {} variants have no prediction (treated as 0)", missing);
  const auto rep = recalibrate(small, pred, cfg.assoc, &full);
  const fs::path out = a.out;
  write_text_file(out / "loci.tsv", loci_to_tsv(rep.loci));
  write_text_file(out / "full_loci.tsv", loci_to_tsv(rep.full_loci));
  std::string rej = "# variant_id\tp\tweight\tq\n";
  for (auto i : rep.rejected)
    rej += fmt::format("{}\t{}\t{}\t{}\n", small[i].variant_id, format_double(small[i].p), format_double(rep.weights[i]),
                       format_double(rep.q[i]));
  write_text_file(out / "rejected.tsv", rej);
  nlohmann::ordered_json j;
  j["recall"] = rep.recall;
  j["k"] = cfg.assoc.k;
  j["alpha"] = cfg.assoc.alpha;
  j["window_bp"] = cfg.assoc.window_bp;
  j["rejected"] = rep.rejected.size();
  j["variants"] = small.size();
  write_text_file(out / "report.json", j.dump(2) + "\n");
  write_text_file(out / "resolved.ini", format_config(cfg));
  spdlog::info("evaluate: recall {} of top {}, {} rejections at alpha {}", rep.recall, cfg.assoc.k, rep.rejected.size(),
               cfg.assoc.alpha);
  return kExitOk;
}

struct DcnArgs {
  std::string model, graph, variant, config, context_genes, out;
  std::optional<std::size_t> k;
};

int cmd_dcn(const DcnArgs& a) {
  PipelineConfig cfg = config_or_default(a.config);
  if (a.k) cfg.dcn.k = *a.k;
  require_file(a.model);
  const auto g = read_bundle(a.graph);
  const auto model = load_checkpoint(a.model, make_message_graph(g).schema);
  std::set<std::string> ctx;
  if (!a.context_genes.empty())
    for (const auto& id : read_lines(a.context_genes)) ctx.insert(id);
  const auto net = critical_network(model, g, a.variant, cfg.dcn, ctx);
  if (!net.root_has_v2g) spdlog::warn("dcn: variant {} has no V2G edges; network is empty", a.variant);
  const fs::path out = a.out;
  write_text_file(out, network_to_json(net));
  write_text_file(sibling(out, ".tsv"), network_to_tsv(net));
  write_text_file(sibling(out, ".resolved.ini"), format_config(cfg));
  return kExitOk;
}

struct MergeArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int cmd_dcn_merge(const MergeArgs& a) {
  std::vector<CriticalNetwork> nets;
  for (const auto& p : a.inputs) {
    require_file(p);
    nets.push_back(read_network(p));
  }
  const auto merged = merge_seed_networks(nets);
  const fs::path out = a.out;
  write_text_file(out, network_to_json(merged));
  write_text_file(sibling(out, ".tsv"), network_to_tsv(merged));
  nlohmann::ordered_json j;
  j["root"] = merged.root;
  j["seeds"] = merged.seeds;
  j["edges"] = merged.edges.size();
  j["consistency"] = merged.edges.empty() ? 0.0 : consistency_score(merged, merged.seeds);
  write_text_file(sibling(out, ".summary.json"), j.dump(2) + "\n");
  return kExitOk;
}

struct MatrixArgs {
  std::string config, out;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
};

int cmd_run_matrix(const MatrixArgs& a) {
  PipelineConfig cfg = load_config(a.config);
  if (a.seed) cfg.simulate.seed = *a.seed;
  const auto rows = run_matrix(cfg, a.jobs);
  const fs::path out = a.out;
  write_text_file(out / "matrix.tsv", matrix_to_tsv(rows));
  write_text_file(out / "resolved.ini", format_config(cfg));
  for (const auto& r : rows)
    if (!r.errors.empty()) spdlog::warn("run-matrix: {} n={} had {} failed runs", r.variant, r.cohort, r.errors.size());
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  setup_logging();
  if (argc >= 2) {
    const std::string first = argv[1];
    if (!first.starts_with('-') && std::find(kSubcommands.begin(), kSubcommands.end(), first) == kSubcommands.end()) {
      std::cerr << "ctxkg: unknown subcommand '" << first << "'\n\n" << usage();
      return kExitUsage;
    }
  }

  CLI::App app{"Context-aware knowledge-graph GWAS toolkit", "ctxkg"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic world with planted truth");
  c_sim->add_option("--scenario,--config", sim.scenario, "Scenario config file");
  c_sim->add_option("--seed", sim.seed, "Scenario seed (overrides the config)");
  c_sim->add_option("--out", sim.out, "Output directory")->required();

  BuildArgs bk;
  auto* c_build = app.add_subcommand("build-kg", "Build a graph bundle from node/edge/feature tables");
  c_build->add_option("--nodes", bk.nodes, "Node TSV")->required();
  c_build->add_option("--edges", bk.edges, "Edge TSV")->required();
  c_build->add_option("--features", bk.features, "Feature TSV");
  c_build->add_option("--variant-dim", bk.variant_dim, "Variant feature width when absent");
  c_build->add_option("--gene-dim", bk.gene_dim, "Gene feature width when absent");
  c_build->add_option("--program-dim", bk.program_dim, "Program feature width when absent");
  c_build->add_option("--seed", bk.seed, "Seed for generated program features");
  c_build->add_option("--config", bk.config, "Config file");
  c_build->add_option("--out", bk.out, "Output bundle directory")->required();

  SparsifyArgs sp;
  auto* c_sp = app.add_subcommand("sparsify", "Apply a sparsification plan to a graph bundle");
  c_sp->add_option("--graph", sp.graph, "Input bundle directory")->required();
  c_sp->add_option("--plan", sp.plan, "Plan text (overrides [sparsify] plan)");
  c_sp->add_option("--config", sp.config, "Config file");
  c_sp->add_option("--genes", sp.genes, "Gene list resolving restrict_genes(@perturbed)");
  c_sp->add_option("--context-edges", sp.context_edges, "Edge TSV of context-specific G2G edges");
  c_sp->add_option("--context-mode", sp.context_mode, "add | merge | replace");
  c_sp->add_option("--seed", sp.seed, "Mixed into rewire_random seeds");
  c_sp->add_option("--out", sp.out, "Output bundle directory")->required();

  PerturbArgs pe;
  auto* c_pe = app.add_subcommand("perturb-edges", "Infer context-specific G2G edges from a Perturb-seq screen");
  c_pe->add_option("--cells", pe.cells, "Cell matrix directory")->required();
  c_pe->add_option("--config", pe.config, "Config file");
  c_pe->add_option("--positive-pairs", pe.positive_pairs, "Known interacting gene pairs for the separation check");
  c_pe->add_option("--seed", pe.seed, "ICA seed (overrides the config)");
  c_pe->add_option("--out", pe.out, "Output directory")->required();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train the graph attention regressor");
  c_tr->add_option("--graph", tr.graph, "Graph bundle directory")->required();
  c_tr->add_option("--targets", tr.targets, "Targets TSV (variant_id chi2 ld_score)")->required();
  c_tr->add_option("--config", tr.config, "Config file");
  c_tr->add_option("--seed", tr.seed, "Model seed (overrides the config)");
  c_tr->add_option("--out", tr.out, "Checkpoint path (predictions go to <out>.pred.tsv, out of fold)")->required();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Recalibrate small-cohort GWAS and score loci recall");
  c_ev->add_option("--small", ev.small, "Small-cohort stats TSV")->required();
  c_ev->add_option("--full", ev.full, "Full-cohort stats TSV")->required();
  c_ev->add_option("--pred", ev.pred, "Predicted chi2 TSV")->required();
  c_ev->add_option("--alpha", ev.alpha, "FDR level");
  c_ev->add_option("--window", ev.window, "Clump window (bp)");
  c_ev->add_option("--k", ev.k, "Top loci compared");
  c_ev->add_option("--config", ev.config, "Config file");
  c_ev->add_option("--out", ev.out, "Output directory")->required();

  DcnArgs dc;
  auto* c_dc = app.add_subcommand("dcn", "Extract a disease-critical network for one variant");
  c_dc->add_option("--model", dc.model, "Checkpoint")->required();
  c_dc->add_option("--graph", dc.graph, "Graph bundle directory")->required();
  c_dc->add_option("--variant", dc.variant, "Root variant id")->required();
  c_dc->add_option("--k", dc.k, "Genes kept per hop");
  c_dc->add_option("--context-genes", dc.context_genes, "Genes flagged as context-relevant");
  c_dc->add_option("--config", dc.config, "Config file");
  c_dc->add_option("--out", dc.out, "Network JSON path")->required();

  MergeArgs mg;
  auto* c_mg = app.add_subcommand("dcn-merge", "Merge networks from several seeds");
  c_mg->add_option("inputs", mg.inputs, "Network JSON files")->required();
  c_mg->add_option("--out", mg.out, "Merged network JSON path")->required();

  MatrixArgs mx;
  auto* c_mx = app.add_subcommand("run-matrix", "Run the variant x cohort x seed experiment matrix");
  c_mx->add_option("--config", mx.config, "Config file")->required();
  c_mx->add_option("--jobs", mx.jobs, "Parallel workers");
  c_mx->add_option("--seed", mx.seed, "Scenario seed (overrides the config)");
  c_mx->add_option("--out", mx.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*c_sim) return cmd_simulate(sim);
    if (*c_build) return cmd_build_kg(bk);
    if (*c_sp) return cmd_sparsify(sp);
    if (*c_pe) return cmd_perturb_edges(pe);
    if (*c_tr) return cmd_train(tr);
    if (*c_ev) return cmd_evaluate(ev);
    if (*c_dc) return cmd_dcn(dc);
    if (*c_mg) return cmd_dcn_merge(mg);
    if (*c_mx) return cmd_run_matrix(mx);
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return kExitValidation;
  } catch (const ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kExitValidation;
  } catch (const GraphError& e) {
    spdlog::error("graph: {}", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  std::cerr << usage();
  return kExitUsage;
}

}  // namespace ctxkg
