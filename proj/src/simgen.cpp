#include "ctxkg/simgen.hpp"
#include "ctxkg/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

namespace ctxkg {

namespace {

const std::vector<std::string>& major_g2g_names() {
  static const std::vector<std::string> names{"physical_association", "reaction", "catalysis", "binding",
                                              "literature",           "signaling", "complexes", "activation",
                                              "binary",               "inhibition", "kinase",   "metabolic"};
  return names;
}

const char* kControlTarget = "non-targeting";

template <class T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  std::shuffle(v.begin(), v.end(), rng);
}

}  // namespace

void SimScenario::check() const {
  if (chromosomes == 0 || blocks == 0 || variants_per_block == 0) throw SimError("simulate: empty genome layout");
  if (blocks < chromosomes) throw SimError("simulate: fewer blocks than chromosomes");
  if (genes == 0) throw SimError("simulate: no genes");
  if (modules * module_size > genes)
    throw SimError(fmt::format("simulate: {} modules of {} genes exceed {} genes", modules, module_size, genes));
  if (causal_modules > modules) throw SimError("simulate: more causal modules than modules");
  if (n_ref == 0) throw SimError("simulate: n_ref must be positive");
  for (auto n : cohort_sizes)
    if (n == 0) throw SimError("simulate: cohort sizes must be positive");
  if (!(ld_rho >= 0.0 && ld_rho < 1.0)) throw SimError("simulate: ld_rho must lie in [0, 1)");
  if (max_v2g_links == 0) throw SimError("simulate: max_v2g_links must be positive");
  if (variant_dim == 0 || gene_dim == 0) throw SimError("simulate: feature widths must be positive");
  if (response_support == 0 || response_support > feature_genes)
    throw SimError("simulate: response_support must lie in [1, feature_genes]");
  if (perturb_noise < 0.0 || doublet_rate < 0.0 || doublet_rate >= 1.0) throw SimError("simulate: invalid noise levels");
  if (cells_per_perturbation == 0 || control_cells == 0) throw SimError("simulate: cell counts must be positive");
}

SimWorld simulate_kg(const SimScenario& s) {
  s.check();
  SimWorld world;
  SimTruth& t = world.truth;
  t.n_ref = s.n_ref;
  t.ld_rho = s.ld_rho;
  t.variants_per_block = s.variants_per_block;

  // Genome layout: contiguous runs of blocks per chromosome.
  std::vector<std::size_t> block_chrom(s.blocks), block_rank(s.blocks);
  {
    std::vector<std::size_t> per(s.chromosomes, 0);
    for (std::size_t b = 0; b < s.blocks; ++b) {
      block_chrom[b] = b * s.chromosomes / s.blocks;
      block_rank[b] = per[block_chrom[b]]++;
    }
  }
  std::vector<NodeRecord> nodes;
  for (std::size_t b = 0; b < s.blocks; ++b) {
    for (std::size_t k = 0; k < s.variants_per_block; ++k) {
      const auto id = fmt::format("snp{:05d}", t.variant_ids.size());
      const auto chrom = std::to_string(block_chrom[b] + 1);
      const auto pos = static_cast<std::int64_t>(block_rank[b] + 1) * s.block_spacing_bp +
                       static_cast<std::int64_t>(k) * s.variant_spacing_bp;
      t.variant_ids.push_back(id);
      t.chrom.push_back(chrom);
      t.pos.push_back(pos);
      t.block.push_back(b);
      nodes.push_back({id, NodeClass::Variant, chrom, pos});
    }
  }
  const std::size_t n_var = t.variant_ids.size();

  // Genes sit in blocks; modules are random gene subsets.
  auto layout_rng = make_rng(s.seed, {stable_hash("sim_layout")});
  std::vector<std::size_t> gene_block(s.genes);
  {
    std::vector<std::size_t> perm(s.blocks);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle_vec(perm, layout_rng);
    for (std::size_t g = 0; g < s.genes; ++g) gene_block[g] = perm[g % s.blocks];
  }
  for (std::size_t g = 0; g < s.genes; ++g) {
    t.gene_ids.push_back(fmt::format("G{:04d}", g));
    nodes.push_back({t.gene_ids.back(), NodeClass::Gene, {}, 0});
  }
  t.gene_module.assign(s.genes, -1);
  {
    std::vector<std::size_t> perm(s.genes);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle_vec(perm, layout_rng);
    for (std::size_t i = 0; i < s.modules * s.module_size; ++i) t.gene_module[perm[i]] = static_cast<int>(i / s.module_size);
    std::vector<int> mods(s.modules);
    std::iota(mods.begin(), mods.end(), 0);
    shuffle_vec(mods, layout_rng);
    t.causal_module_ids.assign(mods.begin(), mods.begin() + static_cast<std::ptrdiff_t>(s.causal_modules));
    std::sort(t.causal_module_ids.begin(), t.causal_module_ids.end());
  }
  std::vector<std::vector<std::size_t>> module_members(s.modules);
  for (std::size_t g = 0; g < s.genes; ++g)
    if (t.gene_module[g] >= 0) module_members[static_cast<std::size_t>(t.gene_module[g])].push_back(g);

  // Genes per chromosome ordered by block, for nearest-gene lookups.
  std::vector<std::vector<std::size_t>> chrom_genes(s.chromosomes);
  for (std::size_t g = 0; g < s.genes; ++g) chrom_genes[block_chrom[gene_block[g]]].push_back(g);
  auto nearest = [&](std::size_t v, std::size_t count) {
    const auto b = t.block[v];
    std::vector<std::size_t> cand = chrom_genes[block_chrom[b]];
    auto dist = [&](std::size_t g) {
      return gene_block[g] > b ? gene_block[g] - b : b - gene_block[g];
    };
    std::sort(cand.begin(), cand.end(), [&](std::size_t x, std::size_t y) {
      return std::make_pair(dist(x), x) < std::make_pair(dist(y), y);
    });
    if (cand.size() > count) cand.resize(count);
    return cand;
  };

  auto v2g_rng = make_rng(s.seed, {stable_hash("sim_v2g")});
  std::uniform_int_distribution<std::size_t> n_links(1, s.max_v2g_links);
  std::vector<std::vector<std::size_t>> links(n_var);
  for (std::size_t v = 0; v < n_var; ++v) links[v] = nearest(v, n_links(v2g_rng));

  // One causal variant per causal-module gene, inside the gene's own block.
  t.causal.assign(n_var, false);
  t.lambda_ref.assign(n_var, 0.0);
  auto causal_rng = make_rng(s.seed, {stable_hash("sim_causal")});
  std::uniform_real_distribution<double> effect(0.5, 1.5);
  for (int m : t.causal_module_ids) {
    for (auto g : module_members[static_cast<std::size_t>(m)]) {
      const std::size_t first = gene_block[g] * s.variants_per_block;
      const auto v = first + std::uniform_int_distribution<std::size_t>(0, s.variants_per_block - 1)(causal_rng);
      if (std::find(links[v].begin(), links[v].end(), g) == links[v].end()) links[v].push_back(g);
      t.causal[v] = true;
      t.lambda_ref[v] += s.lambda_ref * effect(causal_rng);
    }
  }

  std::vector<EdgeRecord> edges;
  const std::vector<std::string> local{"eqtl", "eqtlgen_finemap", "exon", "promoter"};
  std::uniform_int_distribution<std::size_t> pick_local(0, local.size() - 1);
  t.v2g.resize(n_var);
  for (std::size_t v = 0; v < n_var; ++v) {
    std::sort(links[v].begin(), links[v].end());
    for (auto g : links[v]) {
      t.v2g[v].push_back(t.gene_ids[g]);
      edges.push_back({t.variant_ids[v], t.gene_ids[g], local[pick_local(v2g_rng)], RelationClass::V2G});
    }
  }
  // Broad, weakly informative V2G evidence.
  auto noise_rng = make_rng(s.seed, {stable_hash("sim_noise_edges")});
  for (std::size_t v = 0; v < n_var; ++v) {
    for (auto g : nearest(v, s.tss_neighbors))
      edges.push_back({t.variant_ids[v], t.gene_ids[g], "tss_proximity", RelationClass::V2G});
    const auto& cg = chrom_genes[block_chrom[t.block[v]]];
    if (!cg.empty() && std::bernoulli_distribution(0.5)(noise_rng)) {
      const auto g = cg[std::uniform_int_distribution<std::size_t>(0, cg.size() - 1)(noise_rng)];
      edges.push_back({t.variant_ids[v], t.gene_ids[g], "distal_contact", RelationClass::V2G});
    }
  }

  // G2G: module cliques spread over the major types, plus noise pairs.
  const auto& major = major_g2g_names();
  std::vector<std::string> all_types = major;
  for (std::size_t i = 0; i < s.minor_g2g_types; ++i) all_types.push_back(fmt::format("minor_{:02d}", i));
  auto g2g_rng = make_rng(s.seed, {stable_hash("sim_g2g")});
  std::uniform_int_distribution<std::size_t> pick_major(0, major.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_any(0, all_types.size() - 1);
  std::set<std::pair<std::size_t, std::size_t>> used;
  for (const auto& members : module_members) {
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        const auto a = std::min(members[i], members[j]);
        const auto b = std::max(members[i], members[j]);
        used.insert({a, b});
        t.module_edges.emplace_back(t.gene_ids[a], t.gene_ids[b]);
        const auto& type = major[pick_major(g2g_rng)];
        edges.push_back({t.gene_ids[a], t.gene_ids[b], type, RelationClass::G2G});
        edges.push_back({t.gene_ids[b], t.gene_ids[a], type, RelationClass::G2G});
      }
  }
  std::sort(t.module_edges.begin(), t.module_edges.end());
  const auto n_noise = static_cast<std::size_t>(std::llround(s.g2g_noise_rate * static_cast<double>(used.size())));
  const std::size_t max_pairs = s.genes * (s.genes - 1) / 2;
  std::uniform_int_distribution<std::size_t> pick_gene(0, s.genes - 1);
  for (std::size_t added = 0; added < n_noise && used.size() < max_pairs;) {
    auto a = pick_gene(g2g_rng), b = pick_gene(g2g_rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!used.insert({a, b}).second) continue;
    const auto& type = all_types[pick_any(g2g_rng)];
    edges.push_back({t.gene_ids[a], t.gene_ids[b], type, RelationClass::G2G});
    edges.push_back({t.gene_ids[b], t.gene_ids[a], type, RelationClass::G2G});
    ++added;
  }

  // Programs.
  const std::vector<std::string> g2p_types{"g2p_cell_state", "g2p_pathway", "g2p_tissue"};
  for (std::size_t p = 0; p < s.programs; ++p) nodes.push_back({fmt::format("P{:03d}", p), NodeClass::Program, {}, 0});
  if (s.programs > 0) {
    auto prog_rng = make_rng(s.seed, {stable_hash("sim_programs")});
    std::uniform_int_distribution<std::size_t> pick_prog(0, s.programs - 1);
    std::uniform_int_distribution<std::size_t> pick_type(0, g2p_types.size() - 1);
    for (std::size_t g = 0; g < s.genes; ++g) {
      const std::size_t n = 1 + std::bernoulli_distribution(0.5)(prog_rng);
      for (std::size_t i = 0; i < n; ++i)
        edges.push_back({t.gene_ids[g], fmt::format("P{:03d}", pick_prog(prog_rng)), g2p_types[pick_type(prog_rng)],
                         RelationClass::G2P});
    }
  }

  // Features.
  auto feat_rng = make_rng(s.seed, {stable_hash("sim_features")});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<FeatureRow> features;
  for (std::size_t v = 0; v < n_var; ++v) {
    FeatureRow row{t.variant_ids[v], std::vector<double>(s.variant_dim)};
    for (auto& x : row.values) x = normal(feat_rng);
    if (t.causal[v]) row.values[0] += s.variant_signal;
    features.push_back(std::move(row));
  }
  for (std::size_t g = 0; g < s.genes; ++g) {
    FeatureRow row{t.gene_ids[g], std::vector<double>(s.gene_dim)};
    for (auto& x : row.values) x = normal(feat_rng);
    if (t.gene_module[g] >= 0) row.values[static_cast<std::size_t>(t.gene_module[g]) % s.gene_dim] += s.module_signal;
    if (t.gene_module[g] >= 0 &&
        std::binary_search(t.causal_module_ids.begin(), t.causal_module_ids.end(), t.gene_module[g]))
      row.values.back() += s.trait_signal;
    features.push_back(std::move(row));
  }

  // Perturbed set: every module gene plus a few unassigned genes.
  {
    std::vector<std::size_t> unassigned;
    for (std::size_t g = 0; g < s.genes; ++g) {
      if (t.gene_module[g] >= 0)
        t.perturbed_genes.push_back(t.gene_ids[g]);
      else
        unassigned.push_back(g);
    }
    auto pr = make_rng(s.seed, {stable_hash("sim_perturbed")});
    shuffle_vec(unassigned, pr);
    for (std::size_t i = 0; i < std::min(s.unassigned_perturbed, unassigned.size()); ++i)
      t.perturbed_genes.push_back(t.gene_ids[unassigned[i]]);
    std::sort(t.perturbed_genes.begin(), t.perturbed_genes.end());
  }

  BuildOptions bo;
  bo.variant_dim = s.variant_dim;
  bo.gene_dim = s.gene_dim;
  bo.program_feature_seed = s.seed;
  world.graph = build_graph(nodes, edges, features, bo).graph;
  return world;
}

std::vector<double> noncentrality(const SimTruth& t, std::size_t cohort_n) {
  const std::size_t n = t.variant_ids.size();
  std::vector<double> base(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    if (!t.causal[c]) continue;
    const std::size_t first = c - c % t.variants_per_block;
    for (std::size_t i = first; i < first + t.variants_per_block && i < n; ++i) {
      const double d = static_cast<double>(i > c ? i - c : c - i);
      base[i] += t.lambda_ref[c] * std::pow(t.ld_rho, d);
    }
  }
  const double scale = static_cast<double>(cohort_n) / static_cast<double>(t.n_ref);
  for (double& x : base) x *= scale;
  return base;
}

std::vector<double> ld_scores(const SimTruth& t) {
  const std::size_t n = t.variant_ids.size();
  std::vector<double> out(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t first = i - i % t.variants_per_block;
    for (std::size_t j = first; j < first + t.variants_per_block && j < n; ++j)
      if (j != i) out[i] += std::pow(t.ld_rho, static_cast<double>(j > i ? j - i : i - j));
  }
  return out;
}

GwasStats simulate_gwas(const SimTruth& t, std::size_t cohort_n, std::uint64_t seed) {
  if (cohort_n == 0) throw SimError("simulate_gwas: cohort size must be positive");
  const auto lambda = noncentrality(t, cohort_n);
  const auto ld = ld_scores(t);
  auto rng = make_rng(seed, {stable_hash("sim_gwas"), cohort_n});
  std::normal_distribution<double> normal(0.0, 1.0);
  GwasStats stats;
  stats.reserve(t.variant_ids.size());
  for (std::size_t i = 0; i < t.variant_ids.size(); ++i) {
    const double z = normal(rng) + std::sqrt(lambda[i]);
    const double chi2 = z * z;
    stats.push_back({t.variant_ids[i], t.chrom[i], t.pos[i], chi2, chi2_sf_1df(chi2), ld[i]});
  }
  sort_canonical(stats);
  return stats;
}

CellMatrix simulate_perturb(const SimTruth& t, const SimScenario& s, std::vector<std::string>* doublets) {
  s.check();
  auto rng = make_rng(s.seed, {stable_hash("sim_perturb")});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  const std::size_t p = s.feature_genes;

  CellMatrix cm;
  for (std::size_t j = 0; j < p; ++j) cm.feature_ids.push_back(fmt::format("feat{:04d}", j));
  std::vector<double> baseline(p);
  for (auto& b : baseline) b = s.baseline_mean * std::exp(0.5 * normal(rng));

  auto direction = [&] {
    std::vector<double> d(p, 0.0);
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), 0);
    shuffle_vec(idx, rng);
    for (std::size_t i = 0; i < s.response_support; ++i)
      d[idx[i]] = (std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0) * s.response_log2 * mag(rng);
    return d;
  };
  int n_modules = 0;
  for (int m : t.gene_module) n_modules = std::max(n_modules, m + 1);
  std::vector<std::vector<double>> module_dir;
  for (int m = 0; m < n_modules; ++m) module_dir.push_back(direction());

  std::unordered_map<std::string, std::size_t> gene_index;
  for (std::size_t g = 0; g < t.gene_ids.size(); ++g) gene_index[t.gene_ids[g]] = g;
  std::map<std::string, std::vector<double>> effect;  // target -> log2 effect per feature
  for (const auto& id : t.perturbed_genes) {
    const int m = t.gene_module[gene_index.at(id)];
    effect[id] = m >= 0 ? module_dir[static_cast<std::size_t>(m)] : direction();
  }
  effect[kControlTarget] = std::vector<double>(p, 0.0);

  struct Plan {
    std::vector<std::string> targets;
  };
  std::vector<Plan> plan;
  for (std::size_t c = 0; c < s.control_cells; ++c) plan.push_back({{kControlTarget}});
  for (const auto& id : t.perturbed_genes)
    for (std::size_t c = 0; c < s.cells_per_perturbation; ++c) plan.push_back({{id}});
  const auto n_doublets = static_cast<std::size_t>(std::llround(s.doublet_rate * static_cast<double>(plan.size())));
  std::uniform_int_distribution<std::size_t> pick_target(0, t.perturbed_genes.size() - 1);
  for (std::size_t d = 0; d < n_doublets && t.perturbed_genes.size() >= 2; ++d) {
    auto a = pick_target(rng), b = pick_target(rng);
    while (b == a) b = pick_target(rng);
    plan.push_back({{t.perturbed_genes[a], t.perturbed_genes[b]}});
  }
  shuffle_vec(plan, rng);

  cm.counts.resize(static_cast<Eigen::Index>(plan.size()), static_cast<Eigen::Index>(p));
  const double cell_sd = 0.3 * s.perturb_noise;
  for (std::size_t c = 0; c < plan.size(); ++c) {
    cm.cell_ids.push_back(fmt::format("cell{:06d}", c));
    const double size_factor = s.perturb_noise > 0.0 ? std::exp(cell_sd * normal(rng)) : 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      double e = 0.0;
      for (const auto& tg : plan[c].targets) e += effect.at(tg)[j];
      const double mean = baseline[j] * std::exp2(e) * size_factor;
      double count = std::round(mean);
      if (s.perturb_noise > 0.0) count = static_cast<double>(std::poisson_distribution<long long>(mean)(rng));
      cm.counts(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) = count;
    }
    for (std::size_t k = 0; k < plan[c].targets.size(); ++k) {
      const auto& tg = plan[c].targets[k];
      const auto guide = tg == kControlTarget ? fmt::format("NTC_{}", c % 2 + 1) : fmt::format("{}_g{}", tg, c % 2 + 1);
      cm.guides.push_back({static_cast<std::uint32_t>(c), tg, guide});
    }
    if (doublets && plan[c].targets.size() > 1) doublets->push_back(cm.cell_ids.back());
  }
  cm.control_labels.insert(kControlTarget);
  return cm;
}

std::size_t causal_blocks_hit(const SimTruth& t, const std::vector<Locus>& loci) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < t.variant_ids.size(); ++i) index[t.variant_ids[i]] = i;
  std::set<std::size_t> causal_blocks, hit;
  for (std::size_t i = 0; i < t.causal.size(); ++i)
    if (t.causal[i]) causal_blocks.insert(t.block[i]);
  for (const auto& l : loci) {
    auto it = index.find(l.lead_variant);
    if (it != index.end() && causal_blocks.contains(t.block[it->second])) hit.insert(t.block[it->second]);
  }
  return hit.size();
}

std::vector<std::pair<std::string, std::string>> perturbable_module_edges(const SimTruth& t) {
  std::set<std::string> pert(t.perturbed_genes.begin(), t.perturbed_genes.end());
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : t.module_edges)
    if (pert.contains(e.first) && pert.contains(e.second)) out.push_back(e);
  return out;
}

ProportionedKg paper_proportioned_kg(const ProportionedOptions& o) {
  auto rng = make_rng(o.seed, {stable_hash("proportioned_kg")});
  std::vector<NodeRecord> nodes;
  std::vector<std::string> vids, gids, pids;
  for (std::size_t i = 0; i < o.variants; ++i) {
    vids.push_back(fmt::format("rs{:07d}", i));
    nodes.push_back({vids.back(), NodeClass::Variant, std::to_string(i % 22 + 1), static_cast<std::int64_t>(1000 * (i + 1))});
  }
  for (std::size_t i = 0; i < o.genes; ++i) {
    gids.push_back(fmt::format("GENE{:05d}", i));
    nodes.push_back({gids.back(), NodeClass::Gene, {}, 0});
  }
  for (std::size_t i = 0; i < o.programs; ++i) {
    pids.push_back(fmt::format("PROG{:03d}", i));
    nodes.push_back({pids.back(), NodeClass::Program, {}, 0});
  }
  std::uniform_int_distribution<std::size_t> pv(0, o.variants - 1), pg(0, o.genes - 1), pp(0, o.programs - 1);

  std::vector<EdgeRecord> edges;
  // V2G mix: TSS proximity dominates; the four local types are a small slice.
  const std::vector<std::pair<std::string, double>> v2g_mix{
      {"tss_proximity", 0.67},   {"eqtl", 0.03},        {"eqtlgen_finemap", 0.02}, {"exon", 0.02},
      {"promoter", 0.02},        {"abc_enhancer", 0.04}, {"chromatin_loop", 0.03}, {"coding_nonsyn", 0.02},
      {"dhs_correlation", 0.03}, {"fantom5", 0.03},      {"pchic", 0.03},          {"roadmap_enhancer", 0.03},
      {"splice_qtl", 0.01},      {"utr", 0.02}};
  for (const auto& [name, share] : v2g_mix) {
    const auto n = static_cast<std::size_t>(std::llround(share * static_cast<double>(o.v2g_edges)));
    for (std::size_t i = 0; i < n; ++i) edges.push_back({vids[pv(rng)], gids[pg(rng)], name, RelationClass::V2G});
  }
  // G2G: 12 major types above the threshold, 34 minor at or below it.
  const std::size_t th = o.major_threshold;
  auto add_g2g = [&](const std::string& name, std::size_t n) {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    while (seen.size() < n) {
      auto a = pg(rng), b = pg(rng);
      if (a == b || !seen.insert({a, b}).second) continue;
      edges.push_back({gids[a], gids[b], name, RelationClass::G2G});
    }
  };
  for (const auto& name : major_g2g_names())
    add_g2g(name, std::uniform_int_distribution<std::size_t>(th + 50, 20 * th)(rng));
  for (std::size_t i = 0; i < 34; ++i)
    add_g2g(fmt::format("minor_{:02d}", i), std::uniform_int_distribution<std::size_t>(5, th)(rng));
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t k = 0; k < o.genes; ++k)
      edges.push_back({gids[pg(rng)], pids[pp(rng)], fmt::format("g2p_{:02d}", i), RelationClass::G2P});

  BuildOptions bo;
  bo.program_feature_seed = o.seed;
  ProportionedKg out;
  out.graph = add_self_loops(build_graph(nodes, edges, {}, bo).graph, RelationClass::G2G);
  out.major_threshold = th;
  std::vector<std::string> genes = gids;
  std::shuffle(genes.begin(), genes.end(), rng);
  genes.resize(static_cast<std::size_t>(std::llround(o.expressed_fraction * static_cast<double>(o.genes))));
  std::sort(genes.begin(), genes.end());
  out.expressed_genes = std::move(genes);
  return out;
}

}  // namespace ctxkg
