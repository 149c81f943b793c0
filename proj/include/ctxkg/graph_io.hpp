#pragma once

#include "ctxkg/graph.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ctxkg {

// Node file:    node_id  node_class  chrom  pos
// Edge file:    src_id  dst_id  relation_name  relation_class
// Feature file: node_id  value...
std::vector<NodeRecord> read_nodes_tsv(const std::filesystem::path& path);
std::vector<EdgeRecord> read_edges_tsv(const std::filesystem::path& path);
std::vector<FeatureRow> read_features_tsv(const std::filesystem::path& path);

std::string nodes_to_tsv(const KnowledgeGraph& g);
std::string edges_to_tsv(const std::vector<EdgeRecord>& edges);
std::string features_to_tsv(const KnowledgeGraph& g);
std::string manifest_json(const KnowledgeGraph& g);

/// Graph bundle: nodes.tsv, edges.tsv, features.tsv, manifest.json.
void write_bundle(const KnowledgeGraph& g, const std::filesystem::path& dir);
KnowledgeGraph read_bundle(const std::filesystem::path& dir);

}  // namespace ctxkg
