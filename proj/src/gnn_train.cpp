#include "ctxkg/gnn.hpp"
#include "ctxkg/random.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctxkg {

TrainTarget make_target(const Eigen::VectorXd& chi2, const Eigen::VectorXd& ld_score, double validation_fraction,
                        std::uint64_t seed) {
  if (chi2.size() != ld_score.size()) throw GnnError("make_target: chi2 and ld_score differ in length");
  const auto n = static_cast<std::size_t>(chi2.size());
  if (n < 4) throw GnnError("make_target: need at least four variants");
  TrainTarget t;
  t.chi2 = chi2;
  t.ld_score = ld_score.cwiseMax(1.0);
  t.role.assign(n, SplitRole::Train);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, {stable_hash("validation_split")});
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 2, n - 2);
  for (std::size_t i = 0; i < n_val; ++i) t.role[order[i]] = SplitRole::Validation;
  return t;
}

LossResult ld_aware_loss(const Eigen::VectorXd& prediction, const TrainTarget& target, SplitRole role) {
  LossResult res;
  res.gradient = Eigen::VectorXd::Zero(prediction.size());
  std::size_t count = 0;
  for (std::size_t i = 0; i < target.role.size(); ++i) count += target.role[i] == role;
  if (count == 0) return res;
  const double inv_n = 1.0 / static_cast<double>(count);
  for (Eigen::Index i = 0; i < prediction.size(); ++i) {
    if (target.role[static_cast<std::size_t>(i)] != role) continue;
    const double r = prediction(i) - target.chi2(i);
    const double l = target.ld_score(i);
    res.value += r * r / l;
    res.gradient(i) = 2.0 * r / l * inv_n;
  }
  res.value *= inv_n;
  return res;
}

namespace {

double validation_mse(const Eigen::VectorXd& pred, const TrainTarget& target) {
  double s = 0.0;
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (target.role[static_cast<std::size_t>(i)] != SplitRole::Validation) continue;
    const double r = pred(i) - target.chi2(i);
    s += r * r;
    ++n;
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

void adam_step(GatModel& m, const std::vector<Eigen::MatrixXd>& grad) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ++m.step;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(m.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(m.step));
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    m.adam_m[i] = b1 * m.adam_m[i] + (1.0 - b1) * grad[i];
    m.adam_v[i] = b2 * m.adam_v[i] + (1.0 - b2) * grad[i].cwiseAbs2();
    m.params[i].value.array() -=
        m.config.learning_rate * (m.adam_m[i].array() / c1) / ((m.adam_v[i].array() / c2).sqrt() + eps);
  }
}

}  // namespace

TrainResult train(const GatModel& model, const MessageGraph& graph, const TrainTarget& target) {
  model.config.check();
  const auto n = static_cast<Eigen::Index>(graph.node_counts[slot(NodeClass::Variant)]);
  if (target.chi2.size() != n || target.ld_score.size() != n || static_cast<Eigen::Index>(target.role.size()) != n)
    throw GnnError("train: target length does not match variant count");
  if (std::count(target.role.begin(), target.role.end(), SplitRole::Train) == 0)
    throw GnnError("train: no training variants");

  TrainResult res;
  res.model = model;
  GatModel& m = res.model;

  // Start the head at the loss-optimal constant so early steps learn structure
  // rather than the mean.
  if (m.step == 0 && m.config.max_epochs > 0) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (target.role[static_cast<std::size_t>(i)] != SplitRole::Train) continue;
      num += target.chi2(i) / target.ld_score(i);
      den += 1.0 / target.ld_score(i);
    }
    m.params[m.head_b].value(0, 0) = num / den;
  }
  res.initial_train_loss = ld_aware_loss(predict(m, graph), target).value;
  res.final_train_loss = res.initial_train_loss;
  if (m.config.max_epochs == 0) return res;

  GatModel best = m;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t waited = 0;
  for (std::size_t epoch = 1; epoch <= m.config.max_epochs; ++epoch) {
    for (std::size_t s = 0; s < m.config.steps_per_epoch; ++s) {
      const auto vg = value_and_gradient(m, graph, target);
      if (!std::isfinite(vg.loss.value))
        throw TrainError(fmt::format("training diverged at epoch {} step {}", epoch, s), res.history);
      const auto& grad = vg.gradient;
      for (const auto& gm : grad)
        if (!gm.allFinite()) throw TrainError(fmt::format("non-finite gradient at epoch {}", epoch), res.history);
      adam_step(m, grad);
    }
    const Eigen::VectorXd pred = predict(m, graph);
    EpochLog log{epoch, ld_aware_loss(pred, target).value, validation_mse(pred, target)};
    if (!std::isfinite(log.train_loss) || !std::isfinite(log.validation_mse)) {
      res.history.push_back(log);
      throw TrainError(fmt::format("training diverged at epoch {}", epoch), res.history);
    }
    res.history.push_back(log);
    spdlog::debug("gat epoch {}: train {:.6g} val {:.6g}", epoch, log.train_loss, log.validation_mse);
    if (log.validation_mse < best_val) {
      best_val = log.validation_mse;
      best = m;
      res.best_epoch = epoch;
      res.final_train_loss = log.train_loss;
      waited = 0;
    } else if (++waited >= m.config.patience) {
      break;
    }
  }
  res.model = std::move(best);
  return res;
}

double grad_check(const GatModel& model, const MessageGraph& graph, const TrainTarget& target, std::size_t n_sample,
                  double h, std::uint64_t seed) {
  GatModel m = model;
  auto loss_at = [&](const GatModel& mm) { return ld_aware_loss(predict(mm, graph), target).value; };
  const auto lr = ld_aware_loss(predict(m, graph), target);
  const auto grad = backward(m, graph, lr.gradient);

  std::vector<std::pair<std::size_t, Eigen::Index>> coords;
  for (std::size_t p = 0; p < m.params.size(); ++p)
    for (Eigen::Index k = 0; k < m.params[p].value.size(); ++k) coords.emplace_back(p, k);
  if (coords.size() > n_sample) {
    auto rng = make_rng(seed, {stable_hash("grad_check")});
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(n_sample);
    std::sort(coords.begin(), coords.end());
  }

  double worst = 0.0;
  std::size_t skipped = 0;
  for (const auto& [p, k] : coords) {
    double& x = m.params[p].value.data()[k];
    const double orig = x;
    x = orig + h;
    const double up = loss_at(m);
    x = orig - h;
    const double down = loss_at(m);
    x = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grad[p].data()[k];
    const double scale = std::max(std::abs(numeric), std::abs(analytic));
    // below this the central difference is dominated by loss roundoff
    if (scale < std::max(1e-9, 1e-6 * std::abs(lr.value))) {
      ++skipped;
      continue;
    }
    worst = std::max(worst, std::abs(numeric - analytic) / scale);
  }
  spdlog::debug("grad_check: {} of {} coordinates below the roundoff floor", skipped, coords.size());
  return worst;
}

}  // namespace ctxkg
