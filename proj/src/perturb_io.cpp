#include "ctxkg/perturb.hpp"
#include "ctxkg/tsv.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>

namespace ctxkg {

CellMatrix read_cell_matrix(const std::filesystem::path& dir) {
  const auto counts_path = dir / "counts.tsv";
  const auto guides_path = dir / "guides.tsv";
  const auto controls_path = dir / "controls.txt";
  auto triplets = read_tsv(counts_path);
  auto guides = read_tsv(guides_path);

  // Canonical order: ids sorted lexicographically.
  std::map<std::string, Eigen::Index> cells, features;
  for (const auto& row : triplets) {
    if (row.size() != 3) throw InputError(counts_path, "expected cell_id, feature_id, count");
    cells.emplace(row[0], 0);
    features.emplace(row[1], 0);
  }
  for (const auto& row : guides) {
    if (row.size() != 3) throw InputError(guides_path, "expected cell_id, target_id, guide_id");
    cells.emplace(row[0], 0);
  }
  CellMatrix m;
  Eigen::Index i = 0;
  for (auto& [id, idx] : cells) {
    idx = i++;
    m.cell_ids.push_back(id);
  }
  i = 0;
  for (auto& [id, idx] : features) {
    idx = i++;
    m.feature_ids.push_back(id);
  }
  m.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(features.size()));
  for (const auto& row : triplets) {
    const double v = parse_double(row[2], counts_path);
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError(counts_path, fmt::format("invalid count '{}'", row[2]));
    m.counts(cells.at(row[0]), features.at(row[1])) += v;
  }
  for (const auto& row : guides)
    m.guides.push_back({static_cast<std::uint32_t>(cells.at(row[0])), row[1], row[2]});

  std::ifstream in(controls_path);
  if (!in) throw InputError(controls_path, "cannot open file");
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() != '#') m.control_labels.insert(line);
  }
  return m;
}

void write_cell_matrix(const CellMatrix& cells, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string counts = "# cell_id\tfeature_id\tcount\n";
  for (Eigen::Index i = 0; i < cells.counts.rows(); ++i)
    for (Eigen::Index j = 0; j < cells.counts.cols(); ++j)
      if (cells.counts(i, j) != 0.0)
        counts += fmt::format("{}\t{}\t{}\n", cells.cell_ids[static_cast<std::size_t>(i)],
                              cells.feature_ids[static_cast<std::size_t>(j)], format_double(cells.counts(i, j)));
  write_text_file(dir / "counts.tsv", counts);
  std::string guides = "# cell_id\ttarget_id\tguide_id\n";
  for (const auto& g : cells.guides) guides += fmt::format("{}\t{}\t{}\n", cells.cell_ids[g.cell], g.target, g.guide_id);
  write_text_file(dir / "guides.tsv", guides);
  std::string controls;
  for (const auto& c : cells.control_labels) controls += c + "\n";
  write_text_file(dir / "controls.txt", controls);
}

std::string separation_to_tsv(const SeparationReport& r) {
  std::string s = "# group\tcosine\n";
  for (double v : r.positive) s += fmt::format("positive\t{}\n", format_double(v));
  for (double v : r.random) s += fmt::format("random\t{}\n", format_double(v));
  return s;
}

std::string separation_summary_json(const SeparationReport& r) {
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  nlohmann::ordered_json j;
  j["n_positive"] = r.positive.size();
  j["n_random"] = r.random.size();
  j["mean_positive"] = mean(r.positive);
  j["mean_random"] = mean(r.random);
  j["auc"] = r.auc;
  j["rank_sum_p"] = r.rank_sum_p;
  return j.dump(2) + "\n";
}

}  // namespace ctxkg
