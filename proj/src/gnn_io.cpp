#include "ctxkg/gnn.hpp"
#include "ctxkg/tsv.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <unordered_map>

namespace ctxkg {

std::vector<TargetRow> read_targets_tsv(const std::filesystem::path& path) {
  std::vector<TargetRow> rows;
  for (const auto& r : read_tsv(path)) {
    if (r.size() != 3) throw InputError(path, "expected variant_id, chi2, ld_score");
    rows.push_back({r[0], parse_double(r[1], path), parse_double(r[2], path)});
  }
  return rows;
}

std::string targets_to_tsv(const std::vector<TargetRow>& rows) {
  std::string s = "# variant_id\tchi2\tld_score\n";
  for (const auto& r : rows) s += fmt::format("{}\t{}\t{}\n", r.variant_id, format_double(r.chi2), format_double(r.ld_score));
  return s;
}

TrainTarget align_targets(const KnowledgeGraph& g, const std::vector<TargetRow>& rows, double validation_fraction,
                          std::uint64_t seed) {
  std::unordered_map<std::string, const TargetRow*> by_id;
  for (const auto& r : rows) by_id[r.variant_id] = &r;
  const auto& vids = g.ids[slot(NodeClass::Variant)];
  const auto n = static_cast<Eigen::Index>(vids.size());
  Eigen::VectorXd chi2 = Eigen::VectorXd::Zero(n), ld = Eigen::VectorXd::Ones(n);
  std::vector<bool> present(vids.size(), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto it = by_id.find(vids[static_cast<std::size_t>(i)]);
    if (it == by_id.end()) continue;
    chi2(i) = it->second->chi2;
    ld(i) = it->second->ld_score;
    present[static_cast<std::size_t>(i)] = true;
  }
  TrainTarget t = make_target(chi2, ld, validation_fraction, seed);
  for (std::size_t i = 0; i < present.size(); ++i)
    if (!present[i]) t.role[i] = SplitRole::Unused;
  return t;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data(m.data(), m.data() + m.size());
  j["data"] = data;
  return j;
}

Eigen::MatrixXd matrix_from(const nlohmann::json& j) {
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != m.size()) throw GnnError("checkpoint: matrix size mismatch");
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

}  // namespace

void save_checkpoint(const GatModel& model, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["format"] = 1;
  j["schema_hash"] = fmt::format("{:016x}", model.schema.hash());
  j["feature_dims"] = model.schema.feature_dims;
  auto& rels = j["relations"];
  rels = nlohmann::json::array();
  for (const auto& r : model.schema.relations)
    rels.push_back({{"name", r.name}, {"src", std::string(to_string(r.src))}, {"dst", std::string(to_string(r.dst))}});
  const auto& c = model.config;
  j["config"] = {{"layers", c.layers},
                 {"hidden_dim", c.hidden_dim},
                 {"leaky_slope", c.leaky_slope},
                 {"learning_rate", c.learning_rate},
                 {"max_epochs", c.max_epochs},
                 {"steps_per_epoch", c.steps_per_epoch},
                 {"validation_fraction", c.validation_fraction},
                 {"patience", c.patience},
                 {"seed", c.seed},
                 {"activations", c.activations},
                 {"cross_fit_folds", c.cross_fit_folds}};
  j["step"] = model.step;
  auto& ps = j["params"];
  ps = nlohmann::json::array();
  for (std::size_t i = 0; i < model.params.size(); ++i)
    ps.push_back({{"name", model.params[i].name},
                  {"value", matrix_json(model.params[i].value)},
                  {"adam_m", matrix_json(model.adam_m[i])},
                  {"adam_v", matrix_json(model.adam_v[i])}});
  write_text_file(path, j.dump() + "\n");
}

GatModel load_checkpoint(const std::filesystem::path& path, const GraphSchema& expected) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path, fmt::format("invalid checkpoint: {}", e.what()));
  }
  const auto want = fmt::format("{:016x}", expected.hash());
  const auto got = j.at("schema_hash").get<std::string>();
  if (got != want)
    throw GnnError(fmt::format("checkpoint {} was trained on a different graph schema ({} vs {})", path.string(), got, want));
  GatConfig c;
  const auto& jc = j.at("config");
  c.layers = jc.at("layers").get<int>();
  c.hidden_dim = jc.at("hidden_dim").get<std::size_t>();
  c.leaky_slope = jc.at("leaky_slope").get<double>();
  c.learning_rate = jc.at("learning_rate").get<double>();
  c.max_epochs = jc.at("max_epochs").get<std::size_t>();
  c.steps_per_epoch = jc.at("steps_per_epoch").get<std::size_t>();
  c.validation_fraction = jc.at("validation_fraction").get<double>();
  c.patience = jc.at("patience").get<std::size_t>();
  c.seed = jc.at("seed").get<std::uint64_t>();
  c.activations = jc.at("activations").get<bool>();
  c.cross_fit_folds = jc.at("cross_fit_folds").get<std::size_t>();

  GatModel m = init_model(expected, c);
  m.step = j.at("step").get<std::size_t>();
  const auto& ps = j.at("params");
  if (ps.size() != m.params.size()) throw GnnError("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (ps[i].at("name").get<std::string>() != m.params[i].name)
      throw GnnError(fmt::format("checkpoint: unexpected parameter '{}'", ps[i].at("name").get<std::string>()));
    m.params[i].value = matrix_from(ps[i].at("value"));
    m.adam_m[i] = matrix_from(ps[i].at("adam_m"));
    m.adam_v[i] = matrix_from(ps[i].at("adam_v"));
  }
  return m;
}

}  // namespace ctxkg
