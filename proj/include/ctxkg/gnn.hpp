#pragma once

#include "ctxkg/graph.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ctxkg {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class GnnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GatConfig {
  int layers = 2;
  std::size_t hidden_dim = 16;
  double leaky_slope = 0.2;
  double learning_rate = 0.003;
  std::size_t max_epochs = 10;
  // Full-batch Adam steps per epoch; validation is scored at epoch ends.
  std::size_t steps_per_epoch = 50;
  double validation_fraction = 0.05;
  std::size_t patience = 2;
  std::uint64_t seed = 0;
  // false: identity in place of ReLU / LeakyReLU (linear special case).
  bool activations = true;
  // Chromosome folds for out-of-fold predictions used as weights; 1 predicts
  // in-sample from a single model.
  std::size_t cross_fit_folds = 2;

  void check() const;
  bool operator==(const GatConfig&) const = default;
};

/// A message-passing relation: a stored relation, or the reverse of a stored
/// V2G / G2P relation (suffix "__rev") so variants can hear from genes.
struct MpRelation {
  std::string name;
  NodeClass src = NodeClass::Gene;
  NodeClass dst = NodeClass::Gene;
  bool operator==(const MpRelation&) const = default;
};

inline constexpr const char* kReverseSuffix = "__rev";

struct GraphSchema {
  std::array<std::size_t, kNodeClassCount> feature_dims{};
  std::vector<MpRelation> relations;
  std::uint64_t hash() const;
  bool operator==(const GraphSchema&) const = default;
};

/// Edges of one message-passing relation grouped by destination (CSR).
struct MpEdges {
  std::vector<std::uint32_t> src;
  std::vector<std::uint32_t> dst;
  std::vector<std::size_t> offsets;  // size n_dst + 1
};

struct MessageGraph {
  GraphSchema schema;
  std::array<std::size_t, kNodeClassCount> node_counts{};
  std::array<RowMatrix, kNodeClassCount> features;
  std::vector<MpEdges> edges;  // parallel to schema.relations
  // Number of relations delivering at least one message to each node.
  std::array<std::vector<int>, kNodeClassCount> incoming_relations;
};

MessageGraph make_message_graph(const KnowledgeGraph& g);

struct Param {
  std::string name;
  Eigen::MatrixXd value;
};

struct RelationParams {
  int w = -1;      // hidden x hidden
  int a_src = -1;  // hidden x 1
  int a_dst = -1;  // hidden x 1
};

struct GatModel {
  GatConfig config;
  GraphSchema schema;
  std::vector<Param> params;
  std::array<int, kNodeClassCount> proj_w{-1, -1, -1};
  std::array<int, kNodeClassCount> proj_b{-1, -1, -1};
  std::vector<std::vector<RelationParams>> layer_params;  // [layer][relation]
  int head_w = -1;
  int head_b = -1;
  // Adam state
  std::vector<Eigen::MatrixXd> adam_m;
  std::vector<Eigen::MatrixXd> adam_v;
  std::size_t step = 0;

  std::size_t parameter_count() const;
  /// Flat copy of all parameter values in declaration order.
  Eigen::VectorXd flat() const;
  void set_flat(const Eigen::VectorXd& v);
};

GatModel init_model(const GraphSchema& schema, const GatConfig& config);

/// Pre-softmax logits of one (layer, relation) block, one per directed edge in
/// destination-grouped order.
struct AttentionRecord {
  int layer = 0;
  std::string relation;
  NodeClass src_class = NodeClass::Gene;
  NodeClass dst_class = NodeClass::Gene;
  std::vector<std::uint32_t> src;
  std::vector<std::uint32_t> dst;
  std::vector<double> logits;
  std::vector<double> alpha;
};

struct ForwardResult {
  Eigen::VectorXd prediction;  // one per variant
  std::vector<AttentionRecord> attention;
};

ForwardResult forward(const GatModel& model, const MessageGraph& graph, bool record_attention = true);
Eigen::VectorXd predict(const GatModel& model, const MessageGraph& graph);

/// Gradient of a scalar loss w.r.t. every parameter, given dLoss/dPrediction.
std::vector<Eigen::MatrixXd> backward(const GatModel& model, const MessageGraph& graph, const Eigen::VectorXd& d_pred,
                                      Eigen::VectorXd* prediction_out = nullptr);

enum class SplitRole : std::uint8_t { Train = 0, Validation = 1, Unused = 2 };

struct TrainTarget {
  Eigen::VectorXd chi2;
  Eigen::VectorXd ld_score;  // clamped to >= 1
  std::vector<SplitRole> role;
};

/// Seeded split; at least two variants land in each side.
TrainTarget make_target(const Eigen::VectorXd& chi2, const Eigen::VectorXd& ld_score, double validation_fraction,
                        std::uint64_t seed);

struct LossResult {
  double value = 0.0;
  Eigen::VectorXd gradient;  // w.r.t. every prediction (zero outside the mask)
};

/// (1/N) sum_i (pred_i - y_i)^2 / ld_i over variants with role == `role`.
LossResult ld_aware_loss(const Eigen::VectorXd& prediction, const TrainTarget& target, SplitRole role = SplitRole::Train);

struct ValueAndGradient {
  LossResult loss;
  std::vector<Eigen::MatrixXd> gradient;  // empty when the loss is not finite
};

// Training loss and its parameter gradient from a single forward pass.
ValueAndGradient value_and_gradient(const GatModel& model, const MessageGraph& graph, const TrainTarget& target);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_mse = 0.0;
};

struct TrainResult {
  GatModel model;
  std::vector<EpochLog> history;
  double initial_train_loss = 0.0;
  double final_train_loss = 0.0;
  std::size_t best_epoch = 0;
};

class TrainError : public GnnError {
 public:
  TrainError(const std::string& what, std::vector<EpochLog> history) : GnnError(what), history_(std::move(history)) {}
  const std::vector<EpochLog>& history() const { return history_; }

 private:
  std::vector<EpochLog> history_;
};

TrainResult train(const GatModel& model, const MessageGraph& graph, const TrainTarget& target);

/// Central finite differences on up to `n_sample` parameters (all, if fewer).
/// Returns the max relative error against the analytic gradient; coordinates
/// whose gradient is under 1e-6 of the loss (unresolvable at h) are skipped.
double grad_check(const GatModel& model, const MessageGraph& graph, const TrainTarget& target, std::size_t n_sample = 50,
                  double h = 1e-5, std::uint64_t seed = 0);

// ---- files ----------------------------------------------------------------
struct TargetRow {
  std::string variant_id;
  double chi2 = 0.0;
  double ld_score = 1.0;
};
std::vector<TargetRow> read_targets_tsv(const std::filesystem::path& path);
std::string targets_to_tsv(const std::vector<TargetRow>& rows);

/// Align target rows with graph variant order; variants lacking a row get
/// role Unused.
TrainTarget align_targets(const KnowledgeGraph& g, const std::vector<TargetRow>& rows, double validation_fraction,
                          std::uint64_t seed);

void save_checkpoint(const GatModel& model, const std::filesystem::path& path);
/// Throws if the stored schema hash differs from `expected`.
GatModel load_checkpoint(const std::filesystem::path& path, const GraphSchema& expected);

}  // namespace ctxkg
