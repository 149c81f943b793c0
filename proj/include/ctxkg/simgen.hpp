#pragma once

#include "ctxkg/assoc.hpp"
#include "ctxkg/graph.hpp"
#include "ctxkg/perturb.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ctxkg {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimScenario {
  std::uint64_t seed = 0;

  // genome
  std::size_t chromosomes = 20;
  std::size_t blocks = 400;
  std::size_t variants_per_block = 5;
  std::int64_t block_spacing_bp = 1'000'000;
  std::int64_t variant_spacing_bp = 10'000;
  double ld_rho = 0.7;

  // genes and modules
  std::size_t genes = 300;
  std::size_t modules = 10;
  std::size_t module_size = 15;
  std::size_t causal_modules = 3;

  // association signal: noncentrality of a causal variant at cohort n_ref
  double lambda_ref = 30.0;
  std::size_t n_ref = 100'000;
  std::vector<std::size_t> cohort_sizes{100'000, 10'000};

  // knowledge graph
  std::size_t max_v2g_links = 3;
  std::size_t tss_neighbors = 8;
  double g2g_noise_rate = 3.0;  // noise G2G pairs per module clique pair
  std::size_t minor_g2g_types = 6;
  std::size_t programs = 20;
  std::size_t variant_dim = kDefaultVariantFeatureDim;
  double variant_signal = 0.5;
  std::size_t gene_dim = 16;
  double module_signal = 0.5;
  double trait_signal = 1.0;  // last gene coordinate, causal-module genes only

  // perturb-seq
  std::size_t feature_genes = 400;
  std::size_t unassigned_perturbed = 30;
  std::size_t cells_per_perturbation = 25;
  std::size_t control_cells = 200;
  std::size_t response_support = 40;
  double response_log2 = 1.0;
  double baseline_mean = 20.0;
  double perturb_noise = 1.0;  // 0: counts are exact expectations
  double doublet_rate = 0.0;

  void check() const;
};

struct SimTruth {
  std::vector<std::string> variant_ids;
  std::vector<std::string> chrom;
  std::vector<std::int64_t> pos;
  std::vector<std::size_t> block;
  std::vector<bool> causal;
  std::vector<double> lambda_ref;  // direct noncentrality at n_ref (0 unless causal)
  std::size_t n_ref = 0;
  double ld_rho = 0.7;
  std::size_t variants_per_block = 0;

  std::vector<std::string> gene_ids;
  std::vector<int> gene_module;  // -1: none
  std::vector<int> causal_module_ids;
  std::vector<std::pair<std::string, std::string>> module_edges;  // undirected, a < b
  std::vector<std::vector<std::string>> v2g;                      // per variant, true linked genes
  std::vector<std::string> perturbed_genes;                       // sorted
};

struct SimWorld {
  KnowledgeGraph graph;  // dense graph
  SimTruth truth;
};

/// Local V2G relation names carry the true links; every other relation is noise.
SimWorld simulate_kg(const SimScenario& s);

/// Effective per-variant noncentrality at cohort size n, including LD smearing
/// from causal variants in the same block.
std::vector<double> noncentrality(const SimTruth& truth, std::size_t cohort_n);

std::vector<double> ld_scores(const SimTruth& truth);

GwasStats simulate_gwas(const SimTruth& truth, std::size_t cohort_n, std::uint64_t seed);

/// Planted doublet cell ids (two guides each) are reported through `doublets`.
CellMatrix simulate_perturb(const SimTruth& truth, const SimScenario& s, std::vector<std::string>* doublets = nullptr);

/// Causal blocks covered by the top loci (lead within the block).
std::size_t causal_blocks_hit(const SimTruth& truth, const std::vector<Locus>& loci);

/// Module clique edges restricted to perturbed genes (the pairs perturb edge
/// inference should recover).
std::vector<std::pair<std::string, std::string>> perturbable_module_edges(const SimTruth& truth);

struct ProportionedOptions {
  std::uint64_t seed = 0;
  std::size_t variants = 4000;
  std::size_t genes = 1200;
  std::size_t programs = 60;
  std::size_t v2g_edges = 60'000;
  std::size_t major_threshold = 100;  // plays the role of the 10,000-edge cut
  double expressed_fraction = 0.41;
};

struct ProportionedKg {
  KnowledgeGraph graph;
  std::vector<std::string> expressed_genes;
  std::size_t major_threshold = 0;
};

/// Scaled-down graph with the relation mix of a full functional KG: 14 V2G
/// types dominated by TSS proximity, 46 G2G types (12 above the threshold)
/// each with a self-loop per gene, 10 G2P types.
ProportionedKg paper_proportioned_kg(const ProportionedOptions& opts);

}  // namespace ctxkg
