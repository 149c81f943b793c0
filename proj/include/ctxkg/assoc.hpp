#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctxkg {

class AssocError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GwasRecord {
  std::string variant_id;
  std::string chrom;
  std::int64_t pos = 0;
  double chi2 = 0.0;
  double p = 1.0;
  double ld_score = 1.0;
  bool operator==(const GwasRecord&) const = default;
};

using GwasStats = std::vector<GwasRecord>;

/// Upper tail of a central chi-square with one degree of freedom, floored at
/// the smallest normal double so p stays in (0, 1].
double chi2_sf_1df(double chi2);

/// Orders chromosome names numerically where both are integers ("2" < "10"),
/// lexicographically otherwise.
bool chrom_less(const std::string& a, const std::string& b);

/// Sort by (chromosome, position, id).
void sort_canonical(GwasStats& stats);

struct WeightOptions {
  double w_min = 0.05;
  double w_max = 20.0;
};

std::vector<double> prediction_weights(const std::vector<double>& predicted_chi2, const WeightOptions& opts = {});

/// Indices (ascending) rejected by weighted Benjamini-Hochberg with q = p / w.
std::vector<std::size_t> weighted_bh(const std::vector<double>& p, const std::vector<double>& w, double alpha);

struct Locus {
  std::string lead_variant;
  std::string chrom;
  std::int64_t pos = 0;
  double lead_p = 1.0;
  double lead_score = 1.0;  // ranking key (p, or q when clumping on q)
  std::vector<std::string> members;
  bool operator==(const Locus&) const = default;
};

/// Greedy clumping by ascending score; `score` defaults to the p column.
std::vector<Locus> clump_loci(const GwasStats& stats, std::int64_t window_bp, std::size_t max_loci = 100,
                              const std::vector<double>* score = nullptr);

/// Number of the first k small-cohort loci whose lead lies within window_bp
/// of a not-yet-matched lead among the first k full-cohort loci.
std::size_t loci_recall(const std::vector<Locus>& small, const std::vector<Locus>& full, std::size_t k,
                        std::int64_t window_bp);

struct RecalibrateOptions {
  WeightOptions weights;
  double alpha = 0.05;
  std::int64_t window_bp = 500000;
  std::size_t k = 100;
};

struct RecalibrateReport {
  std::vector<double> weights;
  std::vector<double> q;
  std::vector<std::size_t> rejected;
  std::vector<Locus> loci;  // clumped on q over all variants
  std::vector<Locus> full_loci;
  std::size_t recall = 0;
  bool has_full = false;
};

/// prediction_weights -> weighted_bh -> clump on q; recall against full-cohort
/// loci when given.
RecalibrateReport recalibrate(const GwasStats& stats, const std::vector<double>& predicted_chi2,
                              const RecalibrateOptions& opts, const GwasStats* full = nullptr);

// ---- files ----------------------------------------------------------------
GwasStats read_gwas_tsv(const std::filesystem::path& path);
std::string gwas_to_tsv(const GwasStats& stats);
std::string loci_to_tsv(const std::vector<Locus>& loci);

struct PredictionRow {
  std::string variant_id;
  double predicted = 0.0;
};
std::vector<PredictionRow> read_predictions_tsv(const std::filesystem::path& path);
std::string predictions_to_tsv(const std::vector<PredictionRow>& rows);

}  // namespace ctxkg
