#include "ctxkg/assoc.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace ctxkg {

double chi2_sf_1df(double chi2) {
  if (!(chi2 > 0.0)) return 1.0;
  return std::max(std::erfc(std::sqrt(chi2 / 2.0)), std::numeric_limits<double>::min());
}

namespace {

bool as_int(const std::string& s, long long& v) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

bool chrom_less(const std::string& a, const std::string& b) {
  long long x = 0, y = 0;
  const bool ia = as_int(a, x);
  const bool ib = as_int(b, y);
  if (ia && ib) return x < y;
  if (ia != ib) return ia;  // numbered chromosomes first
  return a < b;
}

void sort_canonical(GwasStats& stats) {
  std::sort(stats.begin(), stats.end(), [](const GwasRecord& a, const GwasRecord& b) {
    if (a.chrom != b.chrom) return chrom_less(a.chrom, b.chrom);
    if (a.pos != b.pos) return a.pos < b.pos;
    return a.variant_id < b.variant_id;
  });
}

std::vector<double> prediction_weights(const std::vector<double>& predicted_chi2, const WeightOptions& opts) {
  if (predicted_chi2.empty()) throw AssocError("prediction_weights: empty prediction vector");
  if (!(opts.w_min > 0.0) || !(opts.w_max >= opts.w_min)) throw AssocError("prediction_weights: invalid clip bounds");
  const auto n = static_cast<double>(predicted_chi2.size());
  bool all_zero = true;
  for (double v : predicted_chi2) {
    if (!std::isfinite(v)) throw AssocError("prediction_weights: non-finite prediction");
    all_zero &= v <= 0.0;
  }
  std::vector<double> w(predicted_chi2.size(), 1.0);
  if (all_zero) return w;
  constexpr double eps = 1e-6;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::max(predicted_chi2[i], eps);
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / n;
  for (double& x : w) x = std::clamp(x / mean, opts.w_min, opts.w_max);
  const double mean2 = std::accumulate(w.begin(), w.end(), 0.0) / n;
  for (double& x : w) x /= mean2;
  return w;
}

std::vector<std::size_t> weighted_bh(const std::vector<double>& p, const std::vector<double>& w, double alpha) {
  if (p.size() != w.size()) throw AssocError("weighted_bh: p and w differ in length");
  if (!(alpha > 0.0 && alpha < 1.0)) throw AssocError("weighted_bh: alpha must lie in (0, 1)");
  const std::size_t m = p.size();
  if (m == 0) return {};
  double wsum = 0.0;
  for (double x : w) {
    if (!(x > 0.0)) throw AssocError("weighted_bh: weights must be positive");
    wsum += x;
  }
  if (std::abs(wsum / static_cast<double>(m) - 1.0) > 1e-6) throw AssocError("weighted_bh: weights must have mean 1");

  std::vector<double> q(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0)) throw AssocError("weighted_bh: p-values must lie in [0, 1]");
    q[i] = p[i] / w[i];
  }
  std::vector<double> sorted = q;
  std::sort(sorted.begin(), sorted.end());
  double cutoff = -1.0;
  for (std::size_t k = m; k >= 1; --k) {
    if (sorted[k - 1] <= static_cast<double>(k) * alpha / static_cast<double>(m)) {
      cutoff = sorted[k - 1];
      break;
    }
  }
  std::vector<std::size_t> out;
  if (cutoff < 0.0) return out;
  for (std::size_t i = 0; i < m; ++i)
    if (q[i] <= cutoff) out.push_back(i);
  return out;
}

std::vector<Locus> clump_loci(const GwasStats& stats, std::int64_t window_bp, std::size_t max_loci,
                              const std::vector<double>* score) {
  if (window_bp <= 0) throw AssocError("clump_loci: window must be positive");
  if (score && score->size() != stats.size()) throw AssocError("clump_loci: score length mismatch");
  const std::size_t n = stats.size();
  auto key = [&](std::size_t i) { return score ? (*score)[i] : stats[i].p; };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key(a) != key(b)) return key(a) < key(b);
    if (stats[a].chrom != stats[b].chrom) return chrom_less(stats[a].chrom, stats[b].chrom);
    if (stats[a].pos != stats[b].pos) return stats[a].pos < stats[b].pos;
    return stats[a].variant_id < stats[b].variant_id;
  });

  // Per chromosome, indices sorted by position for range scans.
  std::map<std::string, std::vector<std::size_t>> by_chrom;
  for (std::size_t i = 0; i < n; ++i) by_chrom[stats[i].chrom].push_back(i);
  for (auto& [c, v] : by_chrom)
    std::sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(stats[a].pos, stats[a].variant_id) < std::tie(stats[b].pos, stats[b].variant_id);
    });

  std::vector<bool> assigned(n, false);
  std::vector<Locus> loci;
  for (std::size_t lead : order) {
    if (loci.size() >= max_loci) break;
    if (assigned[lead]) continue;
    const auto& s = stats[lead];
    Locus locus{s.variant_id, s.chrom, s.pos, s.p, key(lead), {}};
    const auto& same = by_chrom[s.chrom];
    auto it = std::lower_bound(same.begin(), same.end(), s.pos - window_bp,
                               [&](std::size_t i, std::int64_t v) { return stats[i].pos < v; });
    for (; it != same.end() && stats[*it].pos <= s.pos + window_bp; ++it) {
      if (assigned[*it]) continue;
      assigned[*it] = true;
      locus.members.push_back(stats[*it].variant_id);
    }
    loci.push_back(std::move(locus));
  }
  return loci;
}

std::size_t loci_recall(const std::vector<Locus>& small, const std::vector<Locus>& full, std::size_t k,
                        std::int64_t window_bp) {
  const std::size_t ks = std::min(k, small.size());
  const std::size_t kf = std::min(k, full.size());
  std::vector<bool> used(kf, false);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ks; ++i) {
    for (std::size_t j = 0; j < kf; ++j) {
      if (used[j] || full[j].chrom != small[i].chrom) continue;
      if (std::llabs(full[j].pos - small[i].pos) > window_bp) continue;
      used[j] = true;
      ++hits;
      break;
    }
  }
  return hits;
}

RecalibrateReport recalibrate(const GwasStats& stats, const std::vector<double>& predicted_chi2,
                              const RecalibrateOptions& opts, const GwasStats* full) {
  if (stats.empty()) throw AssocError("recalibrate: empty variant set");
  if (predicted_chi2.size() != stats.size()) throw AssocError("recalibrate: prediction length does not match stats");
  RecalibrateReport r;
  r.weights = prediction_weights(predicted_chi2, opts.weights);
  std::vector<double> p(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) p[i] = stats[i].p;
  r.rejected = weighted_bh(p, r.weights, opts.alpha);
  r.q.resize(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) r.q[i] = p[i] / r.weights[i];
  r.loci = clump_loci(stats, opts.window_bp, opts.k, &r.q);
  if (full) {
    r.full_loci = clump_loci(*full, opts.window_bp, opts.k);
    r.recall = loci_recall(r.loci, r.full_loci, opts.k, opts.window_bp);
    r.has_full = true;
  }
  return r;
}

}  // namespace ctxkg
