#include "ctxkg/gnn.hpp"
#include "ctxkg/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctxkg {

void GatConfig::check() const {
  if (layers < 2 || layers > 3) throw GnnError("gat: layers must be 2 or 3");
  if (hidden_dim == 0) throw GnnError("gat: hidden_dim must be positive");
  if (!(learning_rate > 0.0)) throw GnnError("gat: learning_rate must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw GnnError("gat: validation_fraction must lie in (0, 1)");
  if (steps_per_epoch == 0) throw GnnError("gat: steps_per_epoch must be positive");
  if (patience == 0) throw GnnError("gat: patience must be positive");
  if (cross_fit_folds == 0) throw GnnError("gat: cross_fit_folds must be positive");
}

std::uint64_t GraphSchema::hash() const {
  std::string s;
  for (auto d : feature_dims) s += fmt::format("{};", d);
  for (const auto& r : relations) s += fmt::format("{}|{}|{};", r.name, to_string(r.src), to_string(r.dst));
  return stable_hash(s);
}

MessageGraph make_message_graph(const KnowledgeGraph& g) {
  MessageGraph mg;
  for (std::size_t c = 0; c < kNodeClassCount; ++c) {
    mg.node_counts[c] = g.ids[c].size();
    mg.features[c] = g.features[c];
    mg.schema.feature_dims[c] = static_cast<std::size_t>(g.features[c].cols());
    mg.incoming_relations[c].assign(mg.node_counts[c], 0);
  }

  auto add = [&](std::string name, NodeClass src, NodeClass dst, std::vector<std::pair<std::uint32_t, std::uint32_t>> e) {
    // group by destination, then source
    std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) {
      return std::tie(a.second, a.first) < std::tie(b.second, b.first);
    });
    MpEdges out;
    const auto n_dst = mg.node_counts[slot(dst)];
    out.offsets.assign(n_dst + 1, 0);
    for (const auto& [s, d] : e) {
      out.src.push_back(s);
      out.dst.push_back(d);
      ++out.offsets[d + 1];
    }
    std::partial_sum(out.offsets.begin(), out.offsets.end(), out.offsets.begin());
    for (std::size_t v = 0; v < n_dst; ++v)
      if (out.offsets[v + 1] > out.offsets[v]) ++mg.incoming_relations[slot(dst)][v];
    mg.schema.relations.push_back({std::move(name), src, dst});
    mg.edges.push_back(std::move(out));
  };

  for (const auto& rel : g.relations) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> fwd;
    fwd.reserve(rel.edges.size());
    for (const auto& e : rel.edges) fwd.emplace_back(e.src, e.dst);
    add(rel.type.name, rel.type.src_class, rel.type.dst_class, fwd);
    if (rel.type.relation_class != RelationClass::G2G) {
      for (auto& p : fwd) std::swap(p.first, p.second);
      add(rel.type.name + kReverseSuffix, rel.type.dst_class, rel.type.src_class, std::move(fwd));
    }
  }
  return mg;
}

std::size_t GatModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += static_cast<std::size_t>(p.value.size());
  return n;
}

Eigen::VectorXd GatModel::flat() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index o = 0;
  for (const auto& p : params) {
    v.segment(o, p.value.size()) = p.value.reshaped();
    o += p.value.size();
  }
  return v;
}

void GatModel::set_flat(const Eigen::VectorXd& v) {
  if (static_cast<std::size_t>(v.size()) != parameter_count()) throw GnnError("set_flat: size mismatch");
  Eigen::Index o = 0;
  for (auto& p : params) {
    p.value.reshaped() = v.segment(o, p.value.size());
    o += p.value.size();
  }
}

GatModel init_model(const GraphSchema& schema, const GatConfig& config) {
  config.check();
  if (schema.relations.empty()) throw GnnError("init_model: graph schema has no relations");
  for (std::size_t c = 0; c < kNodeClassCount; ++c)
    if (schema.feature_dims[c] == 0)
      throw GnnError(fmt::format("init_model: {} features have zero width", to_string(static_cast<NodeClass>(c))));
  GatModel m;
  m.config = config;
  m.schema = schema;
  const auto d = static_cast<Eigen::Index>(config.hidden_dim);

  // Each parameter has its own stream keyed by name, so adding a relation
  // leaves every other initial value unchanged.
  auto glorot = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out) {
    auto rng = make_rng(config.seed, {stable_hash("gat_init"), stable_hash(name)});
    const double b = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-b, b);
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = u(rng);
    m.params.push_back({name, std::move(w)});
    return static_cast<int>(m.params.size() - 1);
  };
  auto zeros = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    m.params.push_back({name, Eigen::MatrixXd::Zero(rows, cols)});
    return static_cast<int>(m.params.size() - 1);
  };

  for (std::size_t c = 0; c < kNodeClassCount; ++c) {
    const auto in = static_cast<Eigen::Index>(schema.feature_dims[c]);
    const auto cls = std::string(to_string(static_cast<NodeClass>(c)));
    m.proj_w[c] = glorot("proj." + cls + ".w", d, in, static_cast<double>(in), static_cast<double>(d));
    m.proj_b[c] = zeros("proj." + cls + ".b", d, 1);
  }
  m.layer_params.resize(static_cast<std::size_t>(config.layers));
  for (int l = 0; l < config.layers; ++l) {
    for (const auto& r : schema.relations) {
      const auto prefix = fmt::format("layer{}.{}", l, r.name);
      RelationParams rp;
      rp.w = glorot(prefix + ".w", d, d, static_cast<double>(d), static_cast<double>(d));
      rp.a_src = glorot(prefix + ".a_src", d, 1, 2.0 * static_cast<double>(d), 1.0);
      rp.a_dst = glorot(prefix + ".a_dst", d, 1, 2.0 * static_cast<double>(d), 1.0);
      m.layer_params[static_cast<std::size_t>(l)].push_back(rp);
    }
  }
  m.head_w = glorot("head.w", d, 1, static_cast<double>(d), 1.0);
  m.head_b = zeros("head.b", 1, 1);
  for (const auto& p : m.params) {
    m.adam_m.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    m.adam_v.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
  }
  return m;
}

namespace {

struct RelTape {
  RowMatrix m;  // n_src x d : W h_u
  std::vector<double> pre;
  std::vector<double> alpha;
};

struct LayerTape {
  std::array<RowMatrix, kNodeClassCount> h;  // input to the layer
  std::array<RowMatrix, kNodeClassCount> z;  // pre-activation output
  std::vector<RelTape> rels;
};

struct Tape {
  std::vector<LayerTape> layers;
  std::array<RowMatrix, kNodeClassCount> out;
  Eigen::VectorXd prediction;
};

void check_schema(const GatModel& model, const MessageGraph& graph) {
  if (model.schema.hash() != graph.schema.hash())
    throw GnnError("graph schema does not match the model (relations or feature widths differ)");
  for (std::size_t c = 0; c < kNodeClassCount; ++c)
    if (static_cast<std::size_t>(graph.features[c].rows()) != graph.node_counts[c])
      throw GnnError(fmt::format("feature rows for {} do not match node count", to_string(static_cast<NodeClass>(c))));
}

void require_finite(const RowMatrix& m, int layer, const std::string& where) {
  if (!m.allFinite()) throw GnnError(fmt::format("non-finite activation at layer {} ({})", layer, where));
}

Tape run_forward(const GatModel& model, const MessageGraph& graph) {
  check_schema(model, graph);
  const auto& P = model.params;
  const double slope = model.config.activations ? model.config.leaky_slope : 1.0;
  const auto d = static_cast<Eigen::Index>(model.config.hidden_dim);
  Tape tape;

  std::array<RowMatrix, kNodeClassCount> h;
  for (std::size_t c = 0; c < kNodeClassCount; ++c) {
    const auto n = static_cast<Eigen::Index>(graph.node_counts[c]);
    if (n == 0) {
      h[c].resize(0, d);
      continue;
    }
    h[c] = graph.features[c] * P[model.proj_w[c]].value.transpose();
    h[c].rowwise() += P[model.proj_b[c]].value.col(0).transpose();
    require_finite(h[c], 0, "input projection");
  }

  for (int l = 0; l < model.config.layers; ++l) {
    LayerTape lt;
    lt.h = h;
    std::array<RowMatrix, kNodeClassCount> acc;
    for (std::size_t c = 0; c < kNodeClassCount; ++c) acc[c] = RowMatrix::Zero(h[c].rows(), d);

    const auto& lp = model.layer_params[static_cast<std::size_t>(l)];
    for (std::size_t r = 0; r < graph.schema.relations.size(); ++r) {
      const auto& rel = graph.schema.relations[r];
      const auto& e = graph.edges[r];
      RelTape rt;
      if (e.src.empty()) {
        lt.rels.push_back(std::move(rt));
        continue;
      }
      const auto s = slot(rel.src);
      const auto t = slot(rel.dst);
      const auto& W = P[lp[r].w].value;
      const Eigen::VectorXd a_src = P[lp[r].a_src].value.col(0);
      const Eigen::VectorXd a_dst = P[lp[r].a_dst].value.col(0);
      rt.m = h[s] * W.transpose();
      require_finite(rt.m, l, rel.name);
      const Eigen::VectorXd ss = rt.m * a_src;
      // a_dst . W h_v without forming W h_v
      const Eigen::VectorXd td = h[t] * (W.transpose() * a_dst);
      const std::size_t ne = e.src.size();
      rt.pre.resize(ne);
      rt.alpha.resize(ne);
      const auto n_dst = graph.node_counts[t];
      for (std::size_t v = 0; v < n_dst; ++v) {
        const auto b = e.offsets[v];
        const auto end = e.offsets[v + 1];
        if (b == end) continue;
        double mx = -std::numeric_limits<double>::infinity();
        for (auto k = b; k < end; ++k) {
          rt.pre[k] = ss(e.src[k]) + td(static_cast<Eigen::Index>(v));
          const double lg = rt.pre[k] > 0.0 ? rt.pre[k] : slope * rt.pre[k];
          rt.alpha[k] = lg;
          mx = std::max(mx, lg);
        }
        double sum = 0.0;
        for (auto k = b; k < end; ++k) sum += (rt.alpha[k] = std::exp(rt.alpha[k] - mx));
        const double inv_r = 1.0 / static_cast<double>(graph.incoming_relations[t][v]);
        auto row = acc[t].row(static_cast<Eigen::Index>(v));
        for (auto k = b; k < end; ++k) {
          rt.alpha[k] /= sum;
          row.noalias() += (rt.alpha[k] * inv_r) * rt.m.row(e.src[k]);
        }
      }
      lt.rels.push_back(std::move(rt));
    }

    const bool last = l + 1 == model.config.layers;
    for (std::size_t c = 0; c < kNodeClassCount; ++c) {
      lt.z[c] = h[c] + acc[c];
      require_finite(lt.z[c], l, "layer output");
      h[c] = (last || !model.config.activations) ? lt.z[c] : RowMatrix(lt.z[c].cwiseMax(0.0));
    }
    tape.layers.push_back(std::move(lt));
  }
  tape.out = h;
  const auto v = slot(NodeClass::Variant);
  tape.prediction = h[v] * P[model.head_w].value.col(0);
  tape.prediction.array() += P[model.head_b].value(0, 0);
  return tape;
}

}  // namespace

ForwardResult forward(const GatModel& model, const MessageGraph& graph, bool record_attention) {
  Tape tape = run_forward(model, graph);
  ForwardResult res;
  res.prediction = std::move(tape.prediction);
  if (!record_attention) return res;
  const double slope = model.config.activations ? model.config.leaky_slope : 1.0;
  for (int l = 0; l < model.config.layers; ++l) {
    for (std::size_t r = 0; r < graph.schema.relations.size(); ++r) {
      const auto& rel = graph.schema.relations[r];
      const auto& rt = tape.layers[static_cast<std::size_t>(l)].rels[r];
      AttentionRecord rec;
      rec.layer = l;
      rec.relation = rel.name;
      rec.src_class = rel.src;
      rec.dst_class = rel.dst;
      rec.src = graph.edges[r].src;
      rec.dst = graph.edges[r].dst;
      rec.logits.reserve(rt.pre.size());
      for (double p : rt.pre) rec.logits.push_back(p > 0.0 ? p : slope * p);
      rec.alpha = rt.alpha;
      res.attention.push_back(std::move(rec));
    }
  }
  return res;
}

Eigen::VectorXd predict(const GatModel& model, const MessageGraph& graph) { return run_forward(model, graph).prediction; }

namespace {

std::vector<Eigen::MatrixXd> backward_from_tape(const GatModel& model, const MessageGraph& graph, const Tape& tape,
                                                const Eigen::VectorXd& d_pred) {
  const auto& P = model.params;
  const double slope = model.config.activations ? model.config.leaky_slope : 1.0;
  const auto d = static_cast<Eigen::Index>(model.config.hidden_dim);
  std::vector<Eigen::MatrixXd> grad;
  grad.reserve(P.size());
  for (const auto& p : P) grad.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));

  const auto vs = slot(NodeClass::Variant);
  if (d_pred.size() != static_cast<Eigen::Index>(graph.node_counts[vs])) throw GnnError("backward: gradient size mismatch");
  grad[model.head_b](0, 0) = d_pred.sum();
  grad[model.head_w].col(0) = tape.out[vs].transpose() * d_pred;

  std::array<RowMatrix, kNodeClassCount> dh;
  for (std::size_t c = 0; c < kNodeClassCount; ++c) dh[c] = RowMatrix::Zero(tape.out[c].rows(), d);
  dh[vs] = d_pred * P[model.head_w].value.col(0).transpose();

  for (int l = model.config.layers - 1; l >= 0; --l) {
    const auto& lt = tape.layers[static_cast<std::size_t>(l)];
    const bool last = l + 1 == model.config.layers;
    std::array<RowMatrix, kNodeClassCount> dz;
    for (std::size_t c = 0; c < kNodeClassCount; ++c) {
      dz[c] = dh[c];
      if (!last && model.config.activations) dz[c] = (lt.z[c].array() > 0.0).select(dz[c], 0.0);
      dh[c] = dz[c];  // residual path
    }
    const auto& lp = model.layer_params[static_cast<std::size_t>(l)];
    for (std::size_t r = 0; r < graph.schema.relations.size(); ++r) {
      const auto& e = graph.edges[r];
      if (e.src.empty()) continue;
      const auto& rel = graph.schema.relations[r];
      const auto s = slot(rel.src);
      const auto t = slot(rel.dst);
      const auto& rt = lt.rels[r];
      const auto& W = P[lp[r].w].value;
      const Eigen::VectorXd a_src = P[lp[r].a_src].value.col(0);
      const Eigen::VectorXd a_dst = P[lp[r].a_dst].value.col(0);

      RowMatrix d_m = RowMatrix::Zero(rt.m.rows(), d);
      Eigen::VectorXd d_ss = Eigen::VectorXd::Zero(rt.m.rows());
      Eigen::VectorXd d_td = Eigen::VectorXd::Zero(lt.h[t].rows());
      Eigen::RowVectorXd d_agg(d);
      std::vector<double> d_alpha;
      for (std::size_t v = 0; v < graph.node_counts[t]; ++v) {
        const auto b = e.offsets[v];
        const auto end = e.offsets[v + 1];
        if (b == end) continue;
        const double inv_r = 1.0 / static_cast<double>(graph.incoming_relations[t][v]);
        d_agg.noalias() = dz[t].row(static_cast<Eigen::Index>(v)) * inv_r;
        d_alpha.assign(end - b, 0.0);
        double weighted = 0.0;
        for (auto k = b; k < end; ++k) {
          d_alpha[k - b] = d_agg.dot(rt.m.row(e.src[k]));
          d_m.row(e.src[k]) += rt.alpha[k] * d_agg;
          weighted += rt.alpha[k] * d_alpha[k - b];
        }
        for (auto k = b; k < end; ++k) {
          const double de = rt.alpha[k] * (d_alpha[k - b] - weighted);
          const double dp = de * (rt.pre[k] > 0.0 ? 1.0 : slope);
          d_ss(e.src[k]) += dp;
          d_td(static_cast<Eigen::Index>(v)) += dp;
        }
      }
      d_m.noalias() += d_ss * a_src.transpose();
      // destination side through u = W^T a_dst: td = h_t u
      const Eigen::RowVectorXd ht_td = d_td.transpose() * lt.h[t];
      grad[lp[r].a_src].col(0) += rt.m.transpose() * d_ss;
      grad[lp[r].a_dst].col(0) += W * ht_td.transpose();
      grad[lp[r].w].noalias() += d_m.transpose() * lt.h[s];
      grad[lp[r].w].noalias() += a_dst * ht_td;
      dh[s].noalias() += d_m * W;
      dh[t].noalias() += d_td * (a_dst.transpose() * W);
    }
  }

  for (std::size_t c = 0; c < kNodeClassCount; ++c) {
    if (graph.node_counts[c] == 0) continue;
    grad[model.proj_w[c]] += dh[c].transpose() * graph.features[c];
    grad[model.proj_b[c]].col(0) += dh[c].colwise().sum().transpose();
  }
  return grad;
}

}  // namespace

std::vector<Eigen::MatrixXd> backward(const GatModel& model, const MessageGraph& graph, const Eigen::VectorXd& d_pred,
                                      Eigen::VectorXd* prediction_out) {
  const Tape tape = run_forward(model, graph);
  if (prediction_out) *prediction_out = tape.prediction;
  return backward_from_tape(model, graph, tape, d_pred);
}

ValueAndGradient value_and_gradient(const GatModel& model, const MessageGraph& graph, const TrainTarget& target) {
  const Tape tape = run_forward(model, graph);
  ValueAndGradient out;
  out.loss = ld_aware_loss(tape.prediction, target);
  if (std::isfinite(out.loss.value)) out.gradient = backward_from_tape(model, graph, tape, out.loss.gradient);
  return out;
}

}  // namespace ctxkg
