#pragma once

#include "ctxkg/graph.hpp"
#include "ctxkg/graph_io.hpp"
#include "ctxkg/random.hpp"

#include <unistd.h>

#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace ctxkg::test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(CTXKG_FIXTURES) / name; }

inline KnowledgeGraph toy_graph() {
  return build_graph(read_nodes_tsv(fixture("toy_kg_nodes.tsv")), read_edges_tsv(fixture("toy_kg.tsv")), {}).graph;
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() / ("ctxkg_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                                                     std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

using Triple = std::tuple<std::string, std::string, std::string>;

/// Id-level edge set of a graph.
inline std::set<Triple> triples(const KnowledgeGraph& g) {
  std::set<Triple> out;
  for (const auto& e : edge_records(g)) out.insert({e.src_id, e.dst_id, e.relation_name});
  return out;
}

struct RandomGraphSpec {
  std::size_t max_variants = 12;
  std::size_t max_genes = 10;
  std::size_t max_programs = 4;
  std::size_t max_edges = 60;
};

/// Random well-formed node/edge records: 1..3 relations per class, endpoints
/// uniform, duplicates and self-loops allowed.
inline std::pair<std::vector<NodeRecord>, std::vector<EdgeRecord>> random_records(Rng& rng,
                                                                                  const RandomGraphSpec& spec = {}) {
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  const std::size_t nv = pick(1, spec.max_variants), ng = pick(1, spec.max_genes), np = pick(0, spec.max_programs);
  std::vector<NodeRecord> nodes;
  for (std::size_t i = 0; i < nv; ++i)
    nodes.push_back({"v" + std::to_string(i), NodeClass::Variant, std::to_string(1 + i % 3),
                     static_cast<std::int64_t>(1000 * i)});
  for (std::size_t i = 0; i < ng; ++i) nodes.push_back({"g" + std::to_string(i), NodeClass::Gene, "", 0});
  for (std::size_t i = 0; i < np; ++i) nodes.push_back({"p" + std::to_string(i), NodeClass::Program, "", 0});

  std::vector<std::pair<std::string, RelationClass>> rels;
  for (std::size_t i = 0, n = pick(1, 3); i < n; ++i) rels.push_back({"v2g_" + std::to_string(i), RelationClass::V2G});
  for (std::size_t i = 0, n = pick(1, 3); i < n; ++i) rels.push_back({"g2g_" + std::to_string(i), RelationClass::G2G});
  if (np > 0)
    for (std::size_t i = 0, n = pick(1, 2); i < n; ++i) rels.push_back({"g2p_" + std::to_string(i), RelationClass::G2P});

  std::vector<EdgeRecord> edges;
  for (std::size_t i = 0, n = pick(0, spec.max_edges); i < n; ++i) {
    const auto& [name, rc] = rels[pick(0, rels.size() - 1)];
    const std::string src = rc == RelationClass::V2G ? "v" + std::to_string(pick(0, nv - 1)) : "g" + std::to_string(pick(0, ng - 1));
    const std::string dst = rc == RelationClass::G2P ? "p" + std::to_string(pick(0, np - 1)) : "g" + std::to_string(pick(0, ng - 1));
    edges.push_back({src, dst, name, rc});
  }
  return {nodes, edges};
}

inline KnowledgeGraph random_graph(Rng& rng, const RandomGraphSpec& spec = {}) {
  auto [nodes, edges] = random_records(rng, spec);
  BuildOptions opts;
  opts.variant_dim = 3;
  opts.gene_dim = 2;
  opts.program_dim = 2;
  return build_graph(nodes, edges, {}, opts).graph;
}

}  // namespace ctxkg::test
