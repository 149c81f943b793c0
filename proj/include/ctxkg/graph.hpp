#pragma once

#include <Eigen/Dense>

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ctxkg {

enum class NodeClass : std::uint8_t { Variant = 0, Gene = 1, Program = 2 };
enum class RelationClass : std::uint8_t { V2G = 0, G2G = 1, G2P = 2 };

inline constexpr std::size_t kNodeClassCount = 3;
inline constexpr std::size_t kDefaultVariantFeatureDim = 70;

std::string_view to_string(NodeClass c);
std::string_view to_string(RelationClass c);
NodeClass parse_node_class(std::string_view s);
RelationClass parse_relation_class(std::string_view s);

/// Endpoint classes implied by a relation class.
NodeClass expected_src_class(RelationClass rc);
NodeClass expected_dst_class(RelationClass rc);

inline std::size_t slot(NodeClass c) { return static_cast<std::size_t>(c); }

struct NodeRef {
  NodeClass node_class = NodeClass::Variant;
  std::uint32_t index = 0;
  auto operator<=>(const NodeRef&) const = default;
};

struct RelationType {
  std::string name;
  RelationClass relation_class = RelationClass::G2G;
  NodeClass src_class = NodeClass::Gene;
  NodeClass dst_class = NodeClass::Gene;

  static RelationType of(std::string name, RelationClass rc) {
    return {std::move(name), rc, expected_src_class(rc), expected_dst_class(rc)};
  }
  bool operator==(const RelationType&) const = default;
};

struct Edge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  auto operator<=>(const Edge&) const = default;
};

struct Relation {
  RelationType type;
  std::vector<Edge> edges;
  bool operator==(const Relation&) const = default;
};

struct VariantMeta {
  std::string chrom;
  std::int64_t pos = 0;
  bool operator==(const VariantMeta&) const = default;
};

/// Error raised for malformed graph input (unknown ids, class mismatches, ...).
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Typed heterogeneous graph. Treated as an immutable value: every transform
/// in this library takes a const reference and returns a new graph.
///
/// Canonical form: relations sorted by name, edges within a relation sorted by
/// (src, dst) and unique. Node indices are dense per class in first-seen order.
struct KnowledgeGraph {
  std::array<std::vector<std::string>, kNodeClassCount> ids;
  std::array<Eigen::MatrixXd, kNodeClassCount> features;
  std::vector<VariantMeta> variant_meta;
  std::vector<Relation> relations;
  std::uint64_t program_feature_seed = 0;
  std::size_t collapsed_duplicates = 0;

  std::size_t node_count(NodeClass c) const { return ids[slot(c)].size(); }
  std::size_t edge_count() const;
  std::size_t edge_count(RelationClass rc) const;

  const Relation* find_relation(std::string_view name) const;
  std::optional<NodeRef> find_node(std::string_view id) const;
  const std::string& id_of(NodeRef ref) const { return ids[slot(ref.node_class)][ref.index]; }

  /// Rebuild the id -> index lookup after mutating `ids`.
  void reindex();
  /// Sort relations and edges, dropping duplicate edges (counted in
  /// `collapsed_duplicates`).
  void canonicalize();

  bool operator==(const KnowledgeGraph& o) const;

 private:
  std::unordered_map<std::string, NodeRef> lookup_;
};

struct GraphStats {
  std::array<std::size_t, kNodeClassCount> node_counts{};
  std::map<std::string, std::size_t> edges_per_relation;
  std::map<std::string, std::size_t> self_loops_per_relation;
  std::array<std::size_t, 3> edges_per_class{};
  std::size_t total_edges = 0;
  std::size_t collapsed_duplicates = 0;
  bool operator==(const GraphStats&) const = default;
};

GraphStats compute_stats(const KnowledgeGraph& g);

// ---- construction -------------------------------------------------------

struct NodeRecord {
  std::string id;
  NodeClass node_class = NodeClass::Gene;
  std::string chrom;
  std::int64_t pos = 0;
};

struct EdgeRecord {
  std::string src_id;
  std::string dst_id;
  std::string relation_name;
  RelationClass relation_class = RelationClass::G2G;
};

struct FeatureRow {
  std::string id;
  std::vector<double> values;
};

struct BuildOptions {
  std::size_t variant_dim = kDefaultVariantFeatureDim;
  std::size_t gene_dim = 16;
  std::size_t program_dim = 8;
  std::uint64_t program_feature_seed = 0;
};

struct BuildResult {
  KnowledgeGraph graph;
  GraphStats stats;
};

/// Construct a canonical graph. Classes whose feature rows are absent are
/// zero-filled, except programs, which draw from a seeded standard normal.
/// A class with some rows present must cover every node of that class.
BuildResult build_graph(const std::vector<NodeRecord>& nodes, const std::vector<EdgeRecord>& edges,
                        const std::vector<FeatureRow>& features, const BuildOptions& opts = {});

struct Violation {
  std::string invariant;
  std::string element;
};

std::vector<Violation> validate(const KnowledgeGraph& g);

/// Adds (g, g, r) for every gene g and every G2G relation r.
KnowledgeGraph add_self_loops(const KnowledgeGraph& g, RelationClass rc);

struct KeepSets {
  std::array<std::vector<std::uint32_t>, kNodeClassCount> indices;
};

KeepSets keep_all(const KnowledgeGraph& g);

/// Restrict to the given nodes, re-indexing densely in original order.
KnowledgeGraph induced_subgraph(const KnowledgeGraph& g, const KeepSets& keep);

/// Merge extra edge records into a graph (ids must exist). Used to add the
/// context-specific relation produced by the perturb module.
KnowledgeGraph add_edges(const KnowledgeGraph& g, const std::vector<EdgeRecord>& edges);

/// Edge list of a graph as id-level records, canonical order.
std::vector<EdgeRecord> edge_records(const KnowledgeGraph& g);

}  // namespace ctxkg
