#include "ctxkg/perturb.hpp"

#include "ctxkg/random.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace ctxkg {

namespace {

std::vector<std::size_t> guide_counts(const CellMatrix& cells) {
  std::vector<std::size_t> n(cells.cell_ids.size(), 0);
  for (const auto& g : cells.guides) {
    if (g.cell >= n.size()) throw PerturbError(fmt::format("guide record references cell index {}", g.cell));
    ++n[g.cell];
  }
  return n;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double xlogy_ratio(double y, double mu) {
  // y * ln(y / mu) with 0 ln 0 := 0
  return y > 0.0 ? y * std::log(y / mu) : 0.0;
}

}  // namespace

CellMatrix filter_cells(const CellMatrix& cells) {
  if (cells.guides.empty()) throw PerturbError("filter_cells: no guide records");
  auto n = guide_counts(cells);
  std::vector<std::uint32_t> remap(cells.cell_ids.size(), UINT32_MAX);
  std::vector<Eigen::Index> rows;
  CellMatrix out;
  out.feature_ids = cells.feature_ids;
  out.control_labels = cells.control_labels;
  for (std::uint32_t i = 0; i < cells.cell_ids.size(); ++i)
    if (n[i] == 1) {
      remap[i] = static_cast<std::uint32_t>(rows.size());
      rows.push_back(i);
      out.cell_ids.push_back(cells.cell_ids[i]);
    }
  if (rows.empty()) throw PerturbError("filter_cells: no cell carries exactly one guide");
  out.counts.resize(static_cast<Eigen::Index>(rows.size()), cells.counts.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.counts.row(static_cast<Eigen::Index>(r)) = cells.counts.row(rows[r]);
  for (const auto& g : cells.guides)
    if (remap[g.cell] != UINT32_MAX) out.guides.push_back({remap[g.cell], g.target, g.guide_id});
  return out;
}

PerturbMatrix compute_lfc(const CellMatrix& cells, const LfcOptions& opts) {
  const auto n_cells = static_cast<Eigen::Index>(cells.cell_ids.size());
  const auto n_feat = cells.counts.cols();
  auto n_guides = guide_counts(cells);

  std::map<std::string, std::vector<Eigen::Index>> by_target;
  std::vector<Eigen::Index> controls;
  std::set<std::string> all_targets;
  for (const auto& g : cells.guides) {
    if (cells.control_labels.contains(g.target)) {
      if (n_guides[g.cell] == 1) controls.push_back(g.cell);
      continue;
    }
    all_targets.insert(g.target);
    if (n_guides[g.cell] == 1) by_target[g.target].push_back(g.cell);
  }
  if (controls.empty()) throw PerturbError("compute_lfc: zero control cells");
  for (const auto& t : all_targets)
    if (!by_target.contains(t)) throw PerturbError(fmt::format("compute_lfc: perturbation '{}' has zero cells", t));

  Eigen::VectorXd scale = Eigen::VectorXd::Ones(n_cells);
  if (opts.normalization == Normalization::MedianTotal) {
    std::vector<double> totals;
    std::vector<bool> used(static_cast<std::size_t>(n_cells), false);
    for (auto c : controls) used[static_cast<std::size_t>(c)] = true;
    for (const auto& [t, cs] : by_target)
      for (auto c : cs) used[static_cast<std::size_t>(c)] = true;
    Eigen::VectorXd tot = cells.counts.rowwise().sum();
    for (Eigen::Index i = 0; i < n_cells; ++i)
      if (used[static_cast<std::size_t>(i)]) totals.push_back(tot(i));
    const double med = median(totals);
    for (Eigen::Index i = 0; i < n_cells; ++i) scale(i) = tot(i) > 0.0 ? med / tot(i) : 0.0;
  }

  auto mean_of = [&](const std::vector<Eigen::Index>& cs) {
    Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(n_feat);
    for (auto c : cs) m += scale(c) * cells.counts.row(c);
    return Eigen::RowVectorXd(m / static_cast<double>(cs.size()));
  };
  const Eigen::RowVectorXd ctrl = mean_of(controls);

  PerturbMatrix out;
  out.stage = PerturbStage::LFC;
  out.column_ids = cells.feature_ids;
  out.values.resize(static_cast<Eigen::Index>(by_target.size()), n_feat);
  Eigen::Index r = 0;
  const double eps = opts.pseudo_count;
  for (const auto& [t, cs] : by_target) {
    const Eigen::RowVectorXd m = mean_of(cs);
    for (Eigen::Index j = 0; j < n_feat; ++j) out.values(r, j) = std::log2((m(j) + eps) / (ctrl(j) + eps));
    out.perturbation_ids.push_back(t);
    ++r;
  }
  out.lfc_variance.resize(static_cast<std::size_t>(n_feat));
  const auto n = out.values.rows();
  for (Eigen::Index j = 0; j < n_feat; ++j) {
    const double mu = out.values.col(j).mean();
    out.lfc_variance[static_cast<std::size_t>(j)] =
        n > 1 ? (out.values.col(j).array() - mu).square().sum() / static_cast<double>(n - 1) : 0.0;
  }
  out.zero_variance.assign(static_cast<std::size_t>(n_feat), false);
  return out;
}

PerturbMatrix zscore(const PerturbMatrix& lfc) {
  const auto n = lfc.values.rows();
  if (n < 2) throw PerturbError("zscore: need at least two perturbations");
  PerturbMatrix out = lfc;
  out.stage = PerturbStage::ZScored;
  out.zero_variance.assign(static_cast<std::size_t>(lfc.values.cols()), false);
  for (Eigen::Index j = 0; j < lfc.values.cols(); ++j) {
    const double mu = lfc.values.col(j).mean();
    const double var = (lfc.values.col(j).array() - mu).square().sum() / static_cast<double>(n - 1);
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mu)))) {
      out.values.col(j).setZero();
      out.zero_variance[static_cast<std::size_t>(j)] = true;
    } else {
      out.values.col(j) = (lfc.values.col(j).array() - mu) / sd;
    }
  }
  return out;
}

std::vector<double> binomial_deviance(const CellMatrix& cells) {
  const Eigen::VectorXd totals = cells.counts.rowwise().sum();
  for (Eigen::Index i = 0; i < totals.size(); ++i)
    if (!(totals(i) > 0.0)) throw PerturbError(fmt::format("binomial_deviance: cell '{}' has zero total", cells.cell_ids[static_cast<std::size_t>(i)]));
  const double grand = totals.sum();
  std::vector<double> dev(static_cast<std::size_t>(cells.counts.cols()), 0.0);
  for (Eigen::Index j = 0; j < cells.counts.cols(); ++j) {
    const double pi = cells.counts.col(j).sum() / grand;
    if (pi <= 0.0 || pi >= 1.0) continue;
    double d = 0.0;
    for (Eigen::Index i = 0; i < totals.size(); ++i) {
      const double y = cells.counts(i, j);
      const double ni = totals(i);
      d += xlogy_ratio(y, ni * pi) + xlogy_ratio(ni - y, ni - ni * pi);
    }
    dev[static_cast<std::size_t>(j)] = 2.0 * d;
  }
  return dev;
}

PerturbMatrix select_features(const CellMatrix& cells, const PerturbMatrix& zscored, const SelectionOptions& opts) {
  if (cells.feature_ids != zscored.column_ids)
    throw PerturbError("select_features: cell matrix and z-scored matrix disagree on feature ids");
  return select_features(binomial_deviance(cells), zscored, opts);
}

PerturbMatrix select_features(const std::vector<double>& deviance, const PerturbMatrix& zscored,
                              const SelectionOptions& opts) {
  if (zscored.stage != PerturbStage::ZScored) throw PerturbError("select_features: expects a z-scored matrix");
  const std::size_t p = zscored.column_ids.size();
  if (deviance.size() != p) throw PerturbError("select_features: deviance length mismatch");
  std::vector<std::size_t> eligible;
  for (std::size_t j = 0; j < p; ++j)
    if (!zscored.zero_variance[j]) eligible.push_back(j);
  if (opts.n_dev + opts.n_hvg > eligible.size())
    throw PerturbError(fmt::format("select_features: requested {} features but only {} are non-constant",
                                   opts.n_dev + opts.n_hvg, eligible.size()));

  auto ranked = [&](const std::vector<double>& score, std::vector<std::size_t> cand) {
    std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
      if (score[a] != score[b]) return score[a] > score[b];
      return zscored.column_ids[a] < zscored.column_ids[b];
    });
    return cand;
  };
  std::vector<bool> chosen(p, false);
  auto by_dev = ranked(deviance, eligible);
  for (std::size_t i = 0; i < opts.n_dev; ++i) chosen[by_dev[i]] = true;
  std::vector<std::size_t> rest;
  for (auto j : eligible)
    if (!chosen[j]) rest.push_back(j);
  auto by_var = ranked(zscored.lfc_variance, rest);
  for (std::size_t i = 0; i < opts.n_hvg; ++i) chosen[by_var[i]] = true;

  PerturbMatrix out;
  out.stage = PerturbStage::Selected;
  out.perturbation_ids = zscored.perturbation_ids;
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < p; ++j)
    if (chosen[j]) {
      cols.push_back(static_cast<Eigen::Index>(j));
      out.column_ids.push_back(zscored.column_ids[j]);
      out.lfc_variance.push_back(zscored.lfc_variance[j]);
    }
  out.values.resize(zscored.values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.values.col(static_cast<Eigen::Index>(c)) = zscored.values.col(cols[c]);
  out.zero_variance.assign(cols.size(), false);
  return out;
}

SimilarityGraph program_similarity(const PerturbMatrix& programs) {
  const auto n = programs.values.rows();
  Eigen::VectorXd norms = programs.values.rowwise().norm();
  const double max_norm = n > 0 ? norms.maxCoeff() : 0.0;
  SimilarityGraph sim;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& id = programs.perturbation_ids[static_cast<std::size_t>(i)];
    if (norms(i) > 1e-12 * max_norm && norms(i) > 0.0) {
      keep.push_back(i);
      sim.ids.push_back(id);
    } else {
      sim.excluded_ids.push_back(id);
    }
  }
  if (!sim.excluded_ids.empty())
    spdlog::warn("program_similarity: excluded {} all-zero rows", sim.excluded_ids.size());
  const auto m = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd unit(m, programs.values.cols());
  for (Eigen::Index r = 0; r < m; ++r) unit.row(r) = programs.values.row(keep[static_cast<std::size_t>(r)]) / norms(keep[static_cast<std::size_t>(r)]);
  sim.cosine = unit * unit.transpose();
  for (Eigen::Index i = 0; i < m; ++i) {
    sim.cosine(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      double c = std::clamp(sim.cosine(i, j), -1.0, 1.0);
      sim.cosine(i, j) = c;
      sim.cosine(j, i) = c;
    }
  }
  return sim;
}

std::vector<EdgeRecord> threshold_edges(SimilarityGraph& sim, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw PerturbError(fmt::format("threshold_edges: tau must be in (0, 1], got {}", tau));
  sim.tau = tau;
  sim.edges.clear();
  std::vector<EdgeRecord> out;
  const auto m = sim.cosine.rows();
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      if (std::abs(sim.cosine(i, j)) >= tau) {
        sim.edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
        const auto& a = sim.ids[static_cast<std::size_t>(i)];
        const auto& b = sim.ids[static_cast<std::size_t>(j)];
        out.push_back({a, b, kPerturbRelation, RelationClass::G2G});
        out.push_back({b, a, kPerturbRelation, RelationClass::G2G});
      }
  return out;
}

SeparationReport separation_diagnostic(const SimilarityGraph& sim,
                                       const std::vector<std::pair<std::string, std::string>>& positive_pairs,
                                       std::size_t n_random, std::uint64_t seed) {
  if (positive_pairs.size() < 2) throw PerturbError("separation_diagnostic: need at least two positive pairs");
  std::map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < sim.ids.size(); ++i) index[sim.ids[i]] = static_cast<Eigen::Index>(i);
  SeparationReport rep;
  for (const auto& [a, b] : positive_pairs) {
    auto ia = index.find(a), ib = index.find(b);
    if (ia == index.end() || ib == index.end())
      throw PerturbError(fmt::format("separation_diagnostic: unknown perturbation in pair ({}, {})", a, b));
    rep.positive.push_back(sim.cosine(ia->second, ib->second));
  }
  const auto m = sim.cosine.rows();
  if (m < 2) throw PerturbError("separation_diagnostic: need at least two perturbations");
  auto rng = make_rng(seed, {stable_hash("separation")});
  std::uniform_int_distribution<Eigen::Index> pick(0, m - 1);
  while (rep.random.size() < n_random) {
    auto i = pick(rng), j = pick(rng);
    if (i != j) rep.random.push_back(sim.cosine(i, j));
  }

  // Mann-Whitney U with midranks.
  const std::size_t n1 = rep.positive.size(), n2 = rep.random.size();
  if (n2 == 0) return rep;
  std::vector<std::pair<double, int>> all;
  for (double v : rep.positive) all.emplace_back(v, 1);
  for (double v : rep.random) all.emplace_back(v, 0);
  std::sort(all.begin(), all.end());
  double rank_pos = 0.0, tie_term = 0.0;
  const double big_n = static_cast<double>(all.size());
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j + 1);
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second == 1) rank_pos += midrank;
    i = j;
  }
  const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2);
  const double u = rank_pos - dn1 * (dn1 + 1.0) / 2.0;
  rep.auc = u / (dn1 * dn2);
  const double var = dn1 * dn2 / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
  if (var > 0.0) {
    const double z = (u - dn1 * dn2 / 2.0 - 0.5) / std::sqrt(var);
    rep.rank_sum_p = 0.5 * std::erfc(z / std::sqrt(2.0));
  }
  return rep;
}

PerturbResult infer_context_edges(const CellMatrix& cells, const PerturbOptions& opts) {
  PerturbResult r;
  r.filtered = filter_cells(cells);
  r.lfc = compute_lfc(r.filtered, opts.lfc);
  r.zscored = zscore(r.lfc);
  r.selected = select_features(r.filtered, r.zscored, opts.selection);
  r.ica = fast_ica(r.selected, opts.ica);
  r.similarity = program_similarity(r.ica.scores);
  r.edges = threshold_edges(r.similarity, opts.tau);
  spdlog::info("perturb: {} perturbations, {} selected features, k={}, {} undirected edges at tau={}",
               r.lfc.values.rows(), r.selected.values.cols(), r.ica.scores.values.cols(), r.similarity.edges.size(),
               opts.tau);
  return r;
}

}  // namespace ctxkg
