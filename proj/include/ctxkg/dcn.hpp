#pragma once

#include "ctxkg/gnn.hpp"
#include "ctxkg/graph.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ctxkg {

class DcnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScoreNormalization { MinMax, Rank };

/// Score per directed message pair (src, dst): the message from src to dst,
/// i.e. how strongly dst attends to src.
using PooledScores = std::map<std::pair<NodeRef, NodeRef>, double>;

/// Per-relation normalization of the logits of one layer (0-based), then a
/// max over relations for each node pair.
PooledScores pooled_scores(const std::vector<AttentionRecord>& records, int layer,
                           ScoreNormalization norm = ScoreNormalization::MinMax);

struct NetworkNode {
  std::string id;
  NodeClass node_class = NodeClass::Gene;
  bool context_flag = false;
  bool operator==(const NetworkNode&) const = default;
};

struct NetworkEdge {
  std::string src;
  std::string dst;
  int hop = 1;
  double score = 0.0;
  std::size_t occurrence = 1;
  bool operator==(const NetworkEdge&) const = default;
};

struct CriticalNetwork {
  std::string root;
  std::vector<NetworkNode> nodes;  // sorted by id
  std::vector<NetworkEdge> edges;  // hop-1 edges first, each block ordered by score
  bool root_has_v2g = true;
  std::size_t seeds = 1;  // > 1 for merged networks
  bool operator==(const CriticalNetwork&) const = default;
};

struct DcnOptions {
  std::size_t k = 5;
  // 1-based layers; 0 picks the default (V2G from the last layer, G2G from
  // the one before it).
  int v2g_layer = 0;
  int g2g_layer = 0;
  ScoreNormalization normalization = ScoreNormalization::MinMax;
};

/// Top-k genes attended by the root variant (hop 1), then for each of them the
/// top-k genes it attends over G2G relations (hop 2). Ties: lexicographic id.
CriticalNetwork extract_network(const PooledScores& v2g, const PooledScores& g2g, const KnowledgeGraph& g,
                                const std::string& root_id, std::size_t k,
                                const std::set<std::string>& context_genes = {});

/// Runs forward on `model`, pools the configured layers and extracts.
CriticalNetwork critical_network(const GatModel& model, const KnowledgeGraph& g, const std::string& root_id,
                                 const DcnOptions& opts, const std::set<std::string>& context_genes = {});

/// Union over seed networks with occurrence counts and mean scores. Already
/// merged inputs contribute their counts and seed totals, so merging is
/// associative.
CriticalNetwork merge_seed_networks(const std::vector<CriticalNetwork>& nets);

/// Mean over edges of occurrence / S.
double consistency_score(const CriticalNetwork& merged, std::size_t s);

std::string network_to_json(const CriticalNetwork& net);
CriticalNetwork network_from_json(const std::string& text);
std::string network_to_tsv(const CriticalNetwork& net);
CriticalNetwork read_network(const std::filesystem::path& path);

}  // namespace ctxkg
