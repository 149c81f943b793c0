#pragma once

#include "ctxkg/config.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ctxkg {

/// Everything a matrix cell needs that does not depend on the variant or the
/// model seed: the simulated world, its perturb edges and GWAS draws.
struct Experiment {
  SimScenario scenario;
  SimWorld world;
  PerturbResult perturb;
  std::vector<std::string> perturbed_targets;  // rows of the LFC matrix
  std::map<std::size_t, GwasStats> gwas;       // by cohort size
  std::size_t full_cohort = 0;
};

Experiment prepare_experiment(const PipelineConfig& cfg, const std::vector<std::size_t>& cohorts);

/// Fills restrict_genes sources: "@perturbed" from `perturbed`, "@<path>" from
/// a file with one gene id per line. Rewire seeds are mixed with `run_seed`.
SparsifyPlan resolve_plan(const SparsifyPlan& plan, const std::vector<std::string>& perturbed, std::uint64_t run_seed);

KnowledgeGraph add_context_edges(const KnowledgeGraph& g, const std::vector<EdgeRecord>& edges, ContextEdges mode);

/// steps -> context edges -> post_steps, with every stage recorded.
PlanResult build_variant_graph(const KnowledgeGraph& base, const GraphVariantSpec& spec,
                               const std::vector<EdgeRecord>& context_edges, const std::vector<std::string>& perturbed,
                               std::uint64_t run_seed);

struct CrossFit {
  Eigen::VectorXd prediction;     // one per graph variant, out of fold
  std::vector<std::size_t> fold;  // per graph variant
  std::vector<TrainResult> models;
};

/// Chromosomes are dealt round-robin (numeric order) into gat.cross_fit_folds
/// folds; each fold is predicted by a model trained only on the targets of the
/// other folds. With one fold (or one chromosome) a single model trained on
/// every target predicts in-sample.
CrossFit cross_fit_predict(const KnowledgeGraph& graph, const std::vector<TargetRow>& rows, const GatConfig& gat);

struct CellRun {
  std::size_t recall = 0;
  std::size_t rejected = 0;
  std::size_t edges = 0;
  std::vector<double> predictions;
  TrainResult training;  // fold 0 model
};

/// Cross-fit on `small` (chi2 + LD score targets), recalibrate with the
/// out-of-fold predictions, score recall against the full-cohort loci.
CellRun run_cell(const KnowledgeGraph& graph, const GwasStats& small, const GwasStats& full, const GatConfig& gat,
                 const RecalibrateOptions& assoc);

struct MatrixRow {
  std::string variant;
  std::size_t cohort = 0;
  std::size_t edges = 0;
  std::vector<double> recall;  // one per successful seed
  std::vector<double> rejected;
  std::vector<std::string> errors;
};

std::vector<MatrixRow> run_matrix(const PipelineConfig& cfg, std::size_t jobs = 1);
std::string matrix_to_tsv(const std::vector<MatrixRow>& rows);

}  // namespace ctxkg
