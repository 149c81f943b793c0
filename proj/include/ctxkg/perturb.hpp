#pragma once

#include "ctxkg/graph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ctxkg {

class PerturbError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GuideRecord {
  std::uint32_t cell = 0;
  std::string target;
  std::string guide_id;
  bool operator==(const GuideRecord&) const = default;
};

/// Cells x feature-genes raw counts with guide assignments.
struct CellMatrix {
  std::vector<std::string> cell_ids;
  std::vector<std::string> feature_ids;
  Eigen::MatrixXd counts;  // cells x features, non-negative integers
  std::vector<GuideRecord> guides;
  std::set<std::string> control_labels;
};

enum class PerturbStage { LFC, ZScored, Selected, ProgramSpace };

struct PerturbMatrix {
  PerturbStage stage = PerturbStage::LFC;
  Eigen::MatrixXd values;  // perturbations x columns
  std::vector<std::string> perturbation_ids;
  std::vector<std::string> column_ids;
  // Per-column variance of the LFC values (n-1 denominator); carried through
  // z-scoring for highly-variable selection.
  std::vector<double> lfc_variance;
  std::vector<bool> zero_variance;  // ZScored: flagged constant columns
};

enum class Normalization { MedianTotal, None };

struct LfcOptions {
  Normalization normalization = Normalization::MedianTotal;
  double pseudo_count = 1.0;
};

/// Keeps cells carrying exactly one guide record.
CellMatrix filter_cells(const CellMatrix& cells);

/// log2((mean normalized expr in perturbation + eps) / (mean in controls + eps)).
/// Rows are target genes in lexicographic order.
PerturbMatrix compute_lfc(const CellMatrix& cells, const LfcOptions& opts = {});

PerturbMatrix zscore(const PerturbMatrix& lfc);

/// Binomial deviance per feature against a constant-rate null.
std::vector<double> binomial_deviance(const CellMatrix& cells);

struct SelectionOptions {
  std::size_t n_dev = 3000;
  std::size_t n_hvg = 2000;
};

PerturbMatrix select_features(const CellMatrix& cells, const PerturbMatrix& zscored, const SelectionOptions& opts);
/// Same selection given precomputed deviance scores.
PerturbMatrix select_features(const std::vector<double>& deviance, const PerturbMatrix& zscored,
                              const SelectionOptions& opts);

struct IcaOptions {
  std::size_t components = 60;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;
  std::size_t max_iterations = 500;
};

struct IcaResult {
  PerturbMatrix scores;          // ProgramSpace, rows x k
  Eigen::MatrixXd unmixing;      // k x input columns; scores = centered input * unmixing^T
  Eigen::RowVectorXd mean;       // column means removed before whitening
  std::size_t requested_components = 0;
  std::size_t rank = 0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::string> notes;
};

/// Symmetric FastICA with tanh contrast; rows are observations.
IcaResult fast_ica(const PerturbMatrix& selected, const IcaOptions& opts);

struct SimilarityGraph {
  std::vector<std::string> ids;           // rows kept
  std::vector<std::string> excluded_ids;  // all-zero rows
  Eigen::MatrixXd cosine;
  double tau = 0.0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // i < j
};

SimilarityGraph program_similarity(const PerturbMatrix& programs);

inline constexpr const char* kPerturbRelation = "perturb_similarity";

/// Fills `sim.edges` for |cos| >= tau and returns both directions as G2G records.
std::vector<EdgeRecord> threshold_edges(SimilarityGraph& sim, double tau);

struct SeparationReport {
  std::vector<double> positive;
  std::vector<double> random;
  double auc = 0.0;
  double rank_sum_p = 1.0;  // one-sided: positives greater
};

SeparationReport separation_diagnostic(const SimilarityGraph& sim,
                                       const std::vector<std::pair<std::string, std::string>>& positive_pairs,
                                       std::size_t n_random, std::uint64_t seed);

struct PerturbOptions {
  LfcOptions lfc;
  SelectionOptions selection;
  IcaOptions ica;
  double tau = 0.5;
};

struct PerturbResult {
  CellMatrix filtered;
  PerturbMatrix lfc;
  PerturbMatrix zscored;
  PerturbMatrix selected;
  IcaResult ica;
  SimilarityGraph similarity;
  std::vector<EdgeRecord> edges;
};

/// filter -> LFC -> z-score -> select -> ICA -> cosine -> threshold.
PerturbResult infer_context_edges(const CellMatrix& cells, const PerturbOptions& opts);

// ---- files ----------------------------------------------------------------
// <dir>/counts.tsv    cell_id  feature_id  count   (sparse triplets)
// <dir>/guides.tsv    cell_id  target_id  guide_id
// <dir>/controls.txt  one control target id per line
CellMatrix read_cell_matrix(const std::filesystem::path& dir);
void write_cell_matrix(const CellMatrix& cells, const std::filesystem::path& dir);

std::string separation_to_tsv(const SeparationReport& r);
std::string separation_summary_json(const SeparationReport& r);

}  // namespace ctxkg
