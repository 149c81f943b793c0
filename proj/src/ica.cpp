#include "ctxkg/perturb.hpp"
#include "ctxkg/random.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>

namespace ctxkg {

namespace {

// (W W^T)^{-1/2} W
Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w * w.transpose());
  Eigen::VectorXd inv_sqrt = es.eigenvalues().array().max(1e-300).rsqrt();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

}  // namespace

IcaResult fast_ica(const PerturbMatrix& selected, const IcaOptions& opts) {
  const Eigen::MatrixXd& x = selected.values;
  const auto n = x.rows();
  const auto p = x.cols();
  if (opts.components == 0) throw PerturbError("fast_ica: components must be positive");
  if (static_cast<std::size_t>(n) < opts.components)
    throw PerturbError(fmt::format("fast_ica: {} rows but {} components requested", n, opts.components));
  if (n < 2 || p < 1) throw PerturbError("fast_ica: input too small");

  IcaResult res;
  res.requested_components = opts.components;
  res.mean = x.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - res.mean;
  const double dof = static_cast<double>(n - 1);

  // Whitening: K (k x p) with Z = Xc K^T having identity covariance.
  Eigen::VectorXd eigval;
  Eigen::MatrixXd k_mat;
  if (p <= n) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xc.transpose() * xc / dof);
    eigval = es.eigenvalues().reverse();
    const Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
    const double top = std::max(eigval(0), 0.0);
    Eigen::Index rank = 0;
    while (rank < eigval.size() && eigval(rank) > 1e-10 * top && eigval(rank) > 0.0) ++rank;
    res.rank = static_cast<std::size_t>(rank);
    const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(opts.components), rank);
    k_mat = (vecs.leftCols(k) * eigval.head(k).array().rsqrt().matrix().asDiagonal()).transpose();
  } else {
    // Fewer observations than columns: eigen-decompose the Gram matrix instead.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xc * xc.transpose());
    eigval = es.eigenvalues().reverse();
    const Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
    const double top = std::max(eigval(0), 0.0);
    Eigen::Index rank = 0;
    while (rank < eigval.size() && eigval(rank) > 1e-10 * top && eigval(rank) > 0.0) ++rank;
    res.rank = static_cast<std::size_t>(rank);
    const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(opts.components), rank);
    Eigen::VectorXd scale = std::sqrt(dof) * eigval.head(k).array().inverse();
    k_mat = (xc.transpose() * vecs.leftCols(k) * scale.asDiagonal()).transpose();
  }
  const auto k = k_mat.rows();
  if (k == 0) throw PerturbError("fast_ica: input has rank zero");
  if (static_cast<std::size_t>(k) < opts.components) {
    auto note = fmt::format("reduced components from {} to rank {}", opts.components, k);
    spdlog::warn("fast_ica: {}", note);
    res.notes.push_back(note);
  }

  Eigen::MatrixXd z = xc * k_mat.transpose();
  // Sign convention: the largest-magnitude entry of each whitened column is positive.
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    z.col(c).cwiseAbs().maxCoeff(&arg);
    if (z(arg, c) < 0.0) {
      z.col(c) *= -1.0;
      k_mat.row(c) *= -1.0;
    }
  }

  auto rng = make_rng(opts.seed, {stable_hash("fast_ica")});
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd w(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) w(i, j) = normal(rng);
  w = symmetric_decorrelation(w);

  Eigen::MatrixXd best = w;
  double best_lim = std::numeric_limits<double>::infinity();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    const Eigen::MatrixXd y = z * w.transpose();
    const Eigen::MatrixXd g = y.array().tanh().matrix();
    const Eigen::RowVectorXd g_prime_mean = (1.0 - g.array().square()).matrix().colwise().mean();
    Eigen::MatrixXd w_new = inv_n * g.transpose() * z - g_prime_mean.transpose().asDiagonal() * w;
    w_new = symmetric_decorrelation(w_new);
    const double lim = (1.0 - (w_new * w.transpose()).diagonal().array().abs()).abs().maxCoeff();
    w = w_new;
    res.iterations = it;
    if (lim < best_lim) {
      best_lim = lim;
      best = w;
    }
    if (lim < opts.tolerance) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged) {
    w = best;
    auto note = fmt::format("no convergence after {} iterations (best change {:.3g})", opts.max_iterations, best_lim);
    spdlog::warn("fast_ica: {}", note);
    res.notes.push_back(note);
  }

  res.unmixing = w * k_mat;
  res.scores.stage = PerturbStage::ProgramSpace;
  res.scores.values = z * w.transpose();
  res.scores.perturbation_ids = selected.perturbation_ids;
  for (Eigen::Index c = 0; c < k; ++c) res.scores.column_ids.push_back(fmt::format("program_{}", c));
  res.scores.zero_variance.assign(static_cast<std::size_t>(k), false);
  return res;
}

}  // namespace ctxkg
