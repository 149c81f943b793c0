#include "ctxkg/graph.hpp"

#include "ctxkg/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace ctxkg {

std::string_view to_string(NodeClass c) {
  switch (c) {
    case NodeClass::Variant: return "variant";
    case NodeClass::Gene: return "gene";
    case NodeClass::Program: return "program";
  }
  return "?";
}

std::string_view to_string(RelationClass c) {
  switch (c) {
    case RelationClass::V2G: return "V2G";
    case RelationClass::G2G: return "G2G";
    case RelationClass::G2P: return "G2P";
  }
  return "?";
}

NodeClass parse_node_class(std::string_view s) {
  if (s == "variant") return NodeClass::Variant;
  if (s == "gene") return NodeClass::Gene;
  if (s == "program") return NodeClass::Program;
  throw GraphError(fmt::format("unknown node class '{}'", s));
}

RelationClass parse_relation_class(std::string_view s) {
  if (s == "V2G") return RelationClass::V2G;
  if (s == "G2G") return RelationClass::G2G;
  if (s == "G2P") return RelationClass::G2P;
  throw GraphError(fmt::format("unknown relation class '{}'", s));
}

NodeClass expected_src_class(RelationClass rc) {
  return rc == RelationClass::V2G ? NodeClass::Variant : NodeClass::Gene;
}

NodeClass expected_dst_class(RelationClass rc) {
  return rc == RelationClass::G2P ? NodeClass::Program : NodeClass::Gene;
}

std::size_t KnowledgeGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& r : relations) n += r.edges.size();
  return n;
}

std::size_t KnowledgeGraph::edge_count(RelationClass rc) const {
  std::size_t n = 0;
  for (const auto& r : relations)
    if (r.type.relation_class == rc) n += r.edges.size();
  return n;
}

const Relation* KnowledgeGraph::find_relation(std::string_view name) const {
  auto it = std::lower_bound(relations.begin(), relations.end(), name,
                             [](const Relation& r, std::string_view n) { return r.type.name < n; });
  if (it != relations.end() && it->type.name == name) return &*it;
  // Fall back for graphs that are not yet canonical.
  for (const auto& r : relations)
    if (r.type.name == name) return &r;
  return nullptr;
}

std::optional<NodeRef> KnowledgeGraph::find_node(std::string_view id) const {
  auto it = lookup_.find(std::string(id));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

void KnowledgeGraph::reindex() {
  lookup_.clear();
  for (std::size_t c = 0; c < kNodeClassCount; ++c)
    for (std::uint32_t i = 0; i < ids[c].size(); ++i)
      lookup_.emplace(ids[c][i], NodeRef{static_cast<NodeClass>(c), i});
}

void KnowledgeGraph::canonicalize() {
  std::stable_sort(relations.begin(), relations.end(),
                   [](const Relation& a, const Relation& b) { return a.type.name < b.type.name; });
  for (auto& r : relations) {
    std::sort(r.edges.begin(), r.edges.end());
    auto last = std::unique(r.edges.begin(), r.edges.end());
    collapsed_duplicates += static_cast<std::size_t>(r.edges.end() - last);
    r.edges.erase(last, r.edges.end());
  }
}

bool KnowledgeGraph::operator==(const KnowledgeGraph& o) const {
  if (ids != o.ids || variant_meta != o.variant_meta || relations != o.relations ||
      program_feature_seed != o.program_feature_seed || collapsed_duplicates != o.collapsed_duplicates)
    return false;
  for (std::size_t c = 0; c < kNodeClassCount; ++c) {
    if (features[c].rows() != o.features[c].rows() || features[c].cols() != o.features[c].cols()) return false;
    if (features[c] != o.features[c]) return false;
  }
  return true;
}

GraphStats compute_stats(const KnowledgeGraph& g) {
  GraphStats s;
  for (std::size_t c = 0; c < kNodeClassCount; ++c) s.node_counts[c] = g.ids[c].size();
  for (const auto& r : g.relations) {
    s.edges_per_relation[r.type.name] = r.edges.size();
    std::size_t loops = 0;
    for (const auto& e : r.edges)
      if (r.type.src_class == r.type.dst_class && e.src == e.dst) ++loops;
    s.self_loops_per_relation[r.type.name] = loops;
    s.edges_per_class[static_cast<std::size_t>(r.type.relation_class)] += r.edges.size();
    s.total_edges += r.edges.size();
  }
  s.collapsed_duplicates = g.collapsed_duplicates;
  return s;
}

BuildResult build_graph(const std::vector<NodeRecord>& nodes, const std::vector<EdgeRecord>& edges,
                        const std::vector<FeatureRow>& features, const BuildOptions& opts) {
  KnowledgeGraph g;
  g.program_feature_seed = opts.program_feature_seed;
  for (const auto& n : nodes) {
    auto& list = g.ids[slot(n.node_class)];
    list.push_back(n.id);
    if (n.node_class == NodeClass::Variant) g.variant_meta.push_back({n.chrom, n.pos});
  }
  g.reindex();
  std::size_t declared = 0;
  for (const auto& l : g.ids) declared += l.size();
  if (declared != nodes.size()) throw GraphError("duplicate node id in node records");

  std::map<std::string, std::size_t> rel_index;
  for (const auto& rec : edges) {
    auto src = g.find_node(rec.src_id);
    if (!src) throw GraphError(fmt::format("unknown node id '{}'", rec.src_id));
    auto dst = g.find_node(rec.dst_id);
    if (!dst) throw GraphError(fmt::format("unknown node id '{}'", rec.dst_id));
    auto type = RelationType::of(rec.relation_name, rec.relation_class);
    if (src->node_class != type.src_class || dst->node_class != type.dst_class)
      throw GraphError(fmt::format("relation '{}' ({}) does not accept {} -> {} edge {} -> {}", rec.relation_name,
                                   to_string(rec.relation_class), to_string(src->node_class),
                                   to_string(dst->node_class), rec.src_id, rec.dst_id));
    auto [it, inserted] = rel_index.try_emplace(rec.relation_name, g.relations.size());
    if (inserted) {
      g.relations.push_back({type, {}});
    } else if (g.relations[it->second].type != type) {
      throw GraphError(fmt::format("relation '{}' declared with conflicting classes", rec.relation_name));
    }
    g.relations[it->second].edges.push_back({src->index, dst->index});
  }

  const std::array<std::size_t, kNodeClassCount> default_dims{opts.variant_dim, opts.gene_dim, opts.program_dim};
  std::array<std::vector<const FeatureRow*>, kNodeClassCount> rows;
  for (auto& r : rows) r.clear();
  for (std::size_t c = 0; c < kNodeClassCount; ++c) rows[c].assign(g.ids[c].size(), nullptr);
  std::array<std::size_t, kNodeClassCount> seen{};
  std::array<std::optional<std::size_t>, kNodeClassCount> width;
  for (const auto& fr : features) {
    auto ref = g.find_node(fr.id);
    if (!ref) throw GraphError(fmt::format("feature row for unknown node id '{}'", fr.id));
    auto c = slot(ref->node_class);
    if (width[c] && *width[c] != fr.values.size())
      throw GraphError(fmt::format("feature row '{}' has {} values, expected {}", fr.id, fr.values.size(), *width[c]));
    width[c] = fr.values.size();
    if (rows[c][ref->index] != nullptr) throw GraphError(fmt::format("duplicate feature row '{}'", fr.id));
    rows[c][ref->index] = &fr;
    ++seen[c];
  }
  for (std::size_t c = 0; c < kNodeClassCount; ++c) {
    const auto n = static_cast<Eigen::Index>(g.ids[c].size());
    if (seen[c] == 0) {
      const auto d = static_cast<Eigen::Index>(default_dims[c]);
      if (static_cast<NodeClass>(c) == NodeClass::Program) {
        auto rng = make_rng(opts.program_feature_seed, {stable_hash("program_features")});
        std::normal_distribution<double> normal(0.0, 1.0);
        g.features[c].resize(n, d);
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index j = 0; j < d; ++j) g.features[c](i, j) = normal(rng);
      } else {
        g.features[c] = Eigen::MatrixXd::Zero(n, d);
      }
      continue;
    }
    if (seen[c] != g.ids[c].size())
      throw GraphError(fmt::format("feature table for class {} covers {} of {} nodes",
                                   to_string(static_cast<NodeClass>(c)), seen[c], g.ids[c].size()));
    const auto d = static_cast<Eigen::Index>(*width[c]);
    g.features[c].resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) g.features[c](i, j) = rows[c][i]->values[j];
  }

  g.canonicalize();
  auto stats = compute_stats(g);
  return {std::move(g), std::move(stats)};
}

std::vector<Violation> validate(const KnowledgeGraph& g) {
  std::vector<Violation> out;
  std::set<std::string> names;
  for (const auto& r : g.relations) {
    const auto& t = r.type;
    if (!names.insert(t.name).second) out.push_back({"unique relation names", t.name});
    if (t.src_class != expected_src_class(t.relation_class) || t.dst_class != expected_dst_class(t.relation_class))
      out.push_back({"class mismatch", fmt::format("relation '{}' is {} but declared {} -> {}", t.name,
                                                   to_string(t.relation_class), to_string(t.src_class),
                                                   to_string(t.dst_class))});
    const auto ns = g.node_count(t.src_class);
    const auto nd = g.node_count(t.dst_class);
    for (std::size_t i = 0; i < r.edges.size(); ++i) {
      const auto& e = r.edges[i];
      if (e.src >= ns || e.dst >= nd)
        out.push_back({"dangling endpoint", fmt::format("relation '{}' edge ({}, {})", t.name, e.src, e.dst)});
      if (i > 0) {
        if (r.edges[i - 1] == e)
          out.push_back({"duplicate edge", fmt::format("relation '{}' edge ({}, {})", t.name, e.src, e.dst)});
        else if (e < r.edges[i - 1])
          out.push_back({"canonical order", fmt::format("relation '{}' edge ({}, {})", t.name, e.src, e.dst)});
      }
    }
  }
  for (std::size_t i = 1; i < g.relations.size(); ++i)
    if (g.relations[i].type.name < g.relations[i - 1].type.name)
      out.push_back({"canonical order", fmt::format("relation '{}'", g.relations[i].type.name)});
  for (std::size_t c = 0; c < kNodeClassCount; ++c)
    if (static_cast<std::size_t>(g.features[c].rows()) != g.ids[c].size())
      out.push_back({"feature row count", std::string(to_string(static_cast<NodeClass>(c)))});
  if (g.variant_meta.size() != g.ids[slot(NodeClass::Variant)].size())
    out.push_back({"variant metadata count", "variant"});
  return out;
}

KnowledgeGraph add_self_loops(const KnowledgeGraph& g, RelationClass rc) {
  if (rc != RelationClass::G2G) throw GraphError("self-loops are only defined for G2G relations");
  KnowledgeGraph out = g;
  const auto n = static_cast<std::uint32_t>(g.node_count(NodeClass::Gene));
  for (auto& r : out.relations) {
    if (r.type.relation_class != RelationClass::G2G) continue;
    std::vector<Edge> merged;
    merged.reserve(r.edges.size() + n);
    std::vector<Edge> loops;
    loops.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) loops.push_back({i, i});
    std::set_union(r.edges.begin(), r.edges.end(), loops.begin(), loops.end(), std::back_inserter(merged));
    r.edges = std::move(merged);
  }
  return out;
}

KeepSets keep_all(const KnowledgeGraph& g) {
  KeepSets k;
  for (std::size_t c = 0; c < kNodeClassCount; ++c) {
    k.indices[c].resize(g.ids[c].size());
    for (std::uint32_t i = 0; i < g.ids[c].size(); ++i) k.indices[c][i] = i;
  }
  return k;
}

KnowledgeGraph induced_subgraph(const KnowledgeGraph& g, const KeepSets& keep) {
  constexpr auto kDropped = std::numeric_limits<std::uint32_t>::max();
  std::array<std::vector<std::uint32_t>, kNodeClassCount> remap;
  for (std::size_t c = 0; c < kNodeClassCount; ++c) {
    remap[c].assign(g.ids[c].size(), kDropped);
    for (auto i : keep.indices[c]) {
      if (i >= g.ids[c].size())
        throw GraphError(fmt::format("keep set references unknown {} index {}", to_string(static_cast<NodeClass>(c)), i));
      remap[c][i] = 0;
    }
    std::uint32_t next = 0;
    for (auto& m : remap[c])
      if (m != kDropped) m = next++;
  }

  KnowledgeGraph out;
  out.program_feature_seed = g.program_feature_seed;
  out.collapsed_duplicates = g.collapsed_duplicates;
  for (std::size_t c = 0; c < kNodeClassCount; ++c) {
    std::vector<Eigen::Index> rows;
    for (std::uint32_t i = 0; i < g.ids[c].size(); ++i)
      if (remap[c][i] != kDropped) {
        out.ids[c].push_back(g.ids[c][i]);
        rows.push_back(i);
        if (c == slot(NodeClass::Variant)) out.variant_meta.push_back(g.variant_meta[i]);
      }
    out.features[c].resize(static_cast<Eigen::Index>(rows.size()), g.features[c].cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.features[c].row(static_cast<Eigen::Index>(r)) = g.features[c].row(rows[r]);
  }
  for (const auto& r : g.relations) {
    Relation nr{r.type, {}};
    const auto& ms = remap[slot(r.type.src_class)];
    const auto& md = remap[slot(r.type.dst_class)];
    for (const auto& e : r.edges)
      if (ms[e.src] != kDropped && md[e.dst] != kDropped) nr.edges.push_back({ms[e.src], md[e.dst]});
    out.relations.push_back(std::move(nr));
  }
  out.reindex();
  out.canonicalize();
  return out;
}

KnowledgeGraph add_edges(const KnowledgeGraph& g, const std::vector<EdgeRecord>& edges) {
  KnowledgeGraph out = g;
  for (const auto& rec : edges) {
    auto src = out.find_node(rec.src_id);
    auto dst = out.find_node(rec.dst_id);
    if (!src) throw GraphError(fmt::format("unknown node id '{}'", rec.src_id));
    if (!dst) throw GraphError(fmt::format("unknown node id '{}'", rec.dst_id));
    auto type = RelationType::of(rec.relation_name, rec.relation_class);
    if (src->node_class != type.src_class || dst->node_class != type.dst_class)
      throw GraphError(fmt::format("relation '{}' does not accept {} -> {}", rec.relation_name, rec.src_id, rec.dst_id));
    auto it = std::find_if(out.relations.begin(), out.relations.end(),
                           [&](const Relation& r) { return r.type.name == rec.relation_name; });
    if (it == out.relations.end()) {
      out.relations.push_back({type, {}});
      it = std::prev(out.relations.end());
    } else if (it->type != type) {
      throw GraphError(fmt::format("relation '{}' declared with conflicting classes", rec.relation_name));
    }
    it->edges.push_back({src->index, dst->index});
  }
  out.canonicalize();
  return out;
}

std::vector<EdgeRecord> edge_records(const KnowledgeGraph& g) {
  std::vector<EdgeRecord> out;
  out.reserve(g.edge_count());
  for (const auto& r : g.relations)
    for (const auto& e : r.edges)
      out.push_back({g.ids[slot(r.type.src_class)][e.src], g.ids[slot(r.type.dst_class)][e.dst], r.type.name,
                     r.type.relation_class});
  return out;
}

}  // namespace ctxkg
