#include "ctxkg/graph_io.hpp"

#include "ctxkg/tsv.hpp"

#include <fmt/format.h>
#include <json.hpp>

namespace ctxkg {

namespace {
constexpr int kBundleFormat = 1;
}

std::vector<NodeRecord> read_nodes_tsv(const std::filesystem::path& path) {
  std::vector<NodeRecord> out;
  for (const auto& row : read_tsv(path)) {
    if (row.size() < 2) throw InputError(path, "node row needs at least node_id and node_class");
    NodeRecord n;
    n.id = row[0];
    try {
      n.node_class = parse_node_class(row[1]);
    } catch (const GraphError& e) {
      throw InputError(path, e.what());
    }
    if (row.size() > 2) n.chrom = row[2];
    if (row.size() > 3 && !row[3].empty()) n.pos = parse_int(row[3], path);
    out.push_back(std::move(n));
  }
  return out;
}

std::vector<EdgeRecord> read_edges_tsv(const std::filesystem::path& path) {
  std::vector<EdgeRecord> out;
  for (const auto& row : read_tsv(path)) {
    if (row.size() != 4) throw InputError(path, fmt::format("edge row has {} columns, expected 4", row.size()));
    try {
      out.push_back({row[0], row[1], row[2], parse_relation_class(row[3])});
    } catch (const GraphError& e) {
      throw InputError(path, e.what());
    }
  }
  return out;
}

std::vector<FeatureRow> read_features_tsv(const std::filesystem::path& path) {
  std::vector<FeatureRow> out;
  for (const auto& row : read_tsv(path)) {
    FeatureRow fr;
    fr.id = row.at(0);
    for (std::size_t j = 1; j < row.size(); ++j) fr.values.push_back(parse_double(row[j], path));
    out.push_back(std::move(fr));
  }
  return out;
}

std::string nodes_to_tsv(const KnowledgeGraph& g) {
  std::string s = "# node_id\tnode_class\tchrom\tpos\n";
  for (std::size_t c = 0; c < kNodeClassCount; ++c) {
    const auto cls = static_cast<NodeClass>(c);
    for (std::size_t i = 0; i < g.ids[c].size(); ++i) {
      if (cls == NodeClass::Variant)
        s += fmt::format("{}\t{}\t{}\t{}\n", g.ids[c][i], to_string(cls), g.variant_meta[i].chrom, g.variant_meta[i].pos);
      else
        s += fmt::format("{}\t{}\t\t\n", g.ids[c][i], to_string(cls));
    }
  }
  return s;
}

std::string edges_to_tsv(const std::vector<EdgeRecord>& edges) {
  std::string s = "# src_id\tdst_id\trelation_name\trelation_class\n";
  for (const auto& e : edges)
    s += fmt::format("{}\t{}\t{}\t{}\n", e.src_id, e.dst_id, e.relation_name, to_string(e.relation_class));
  return s;
}

std::string features_to_tsv(const KnowledgeGraph& g) {
  std::string s = "# node_id\tvalues...\n";
  for (std::size_t c = 0; c < kNodeClassCount; ++c) {
    const auto& m = g.features[c];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      s += g.ids[c][static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        s += '\t';
        s += format_double(m(i, j));
      }
      s += '\n';
    }
  }
  return s;
}

std::string manifest_json(const KnowledgeGraph& g) {
  auto stats = compute_stats(g);
  nlohmann::ordered_json j;
  j["format"] = kBundleFormat;
  j["node_counts"] = {{"variant", stats.node_counts[0]}, {"gene", stats.node_counts[1]}, {"program", stats.node_counts[2]}};
  j["feature_dims"] = {{"variant", g.features[0].cols()}, {"gene", g.features[1].cols()}, {"program", g.features[2].cols()}};
  j["program_feature_seed"] = g.program_feature_seed;
  j["collapsed_duplicates"] = g.collapsed_duplicates;
  j["total_edges"] = stats.total_edges;
  auto rels = nlohmann::ordered_json::array();
  for (const auto& r : g.relations) {
    rels.push_back({{"name", r.type.name},
                    {"relation_class", to_string(r.type.relation_class)},
                    {"src_class", to_string(r.type.src_class)},
                    {"dst_class", to_string(r.type.dst_class)},
                    {"edges", r.edges.size()},
                    {"self_loops", stats.self_loops_per_relation[r.type.name]}});
  }
  j["relations"] = rels;
  return j.dump(2) + "\n";
}

void write_bundle(const KnowledgeGraph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "nodes.tsv", nodes_to_tsv(g));
  write_text_file(dir / "edges.tsv", edges_to_tsv(edge_records(g)));
  write_text_file(dir / "features.tsv", features_to_tsv(g));
  write_text_file(dir / "manifest.json", manifest_json(g));
}

KnowledgeGraph read_bundle(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(manifest_path, e.what());
  }
  BuildOptions opts;
  opts.variant_dim = m.at("feature_dims").at("variant").get<std::size_t>();
  opts.gene_dim = m.at("feature_dims").at("gene").get<std::size_t>();
  opts.program_dim = m.at("feature_dims").at("program").get<std::size_t>();
  opts.program_feature_seed = m.at("program_feature_seed").get<std::uint64_t>();

  auto nodes = read_nodes_tsv(dir / "nodes.tsv");
  auto edges = read_edges_tsv(dir / "edges.tsv");
  auto features = read_features_tsv(dir / "features.tsv");
  KnowledgeGraph g;
  try {
    g = build_graph(nodes, edges, features, opts).graph;
  } catch (const GraphError& e) {
    throw InputError(dir, e.what());
  }
  // Relations without edges only live in the manifest.
  for (const auto& r : m.at("relations")) {
    auto name = r.at("name").get<std::string>();
    if (g.find_relation(name)) continue;
    RelationType t{name, parse_relation_class(r.at("relation_class").get<std::string>()),
                   parse_node_class(r.at("src_class").get<std::string>()),
                   parse_node_class(r.at("dst_class").get<std::string>())};
    g.relations.push_back({t, {}});
  }
  g.collapsed_duplicates = m.at("collapsed_duplicates").get<std::size_t>();
  g.canonicalize();
  return g;
}

}  // namespace ctxkg
