#pragma once

#include "ctxkg/graph.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace ctxkg {

namespace step {
struct RemovePrograms {
  bool operator==(const RemovePrograms&) const = default;
};
struct RestrictV2G {
  std::vector<std::string> allowed;
  bool operator==(const RestrictV2G&) const = default;
};
struct RestrictG2GMajor {
  std::size_t min_count = 10000;
  bool operator==(const RestrictG2GMajor&) const = default;
};
struct CollapseClass {
  RelationClass relation_class = RelationClass::G2G;
  std::string merged_name;  // empty -> "<class>_collapsed"
  bool operator==(const CollapseClass&) const = default;
};
struct RestrictGenes {
  std::vector<std::string> gene_ids;
  // "@perturbed" or "@<file>" when the ids come from elsewhere; resolved by the caller.
  std::string source;
  bool operator==(const RestrictGenes&) const = default;
};
struct RewireRandom {
  RelationClass relation_class = RelationClass::G2G;
  std::uint64_t seed = 0;
  bool operator==(const RewireRandom&) const = default;
};
struct DropClass {
  RelationClass relation_class = RelationClass::G2G;
  bool operator==(const DropClass&) const = default;
};
}  // namespace step

using SparsifyStep = std::variant<step::RemovePrograms, step::RestrictV2G, step::RestrictG2GMajor, step::CollapseClass,
                                  step::RestrictGenes, step::RewireRandom, step::DropClass>;

struct SparsifyPlan {
  std::vector<SparsifyStep> steps;
  bool operator==(const SparsifyPlan&) const = default;
};

/// exon, promoter, eqtl, eqtlgen_finemap
const std::vector<std::string>& default_local_v2g();

KnowledgeGraph remove_program_nodes(const KnowledgeGraph& g);

/// Allowed names missing from the graph are reported through `missing`
/// (non-fatal).
KnowledgeGraph restrict_v2g(const KnowledgeGraph& g, const std::vector<std::string>& allowed,
                            std::vector<std::string>* missing = nullptr);

/// Removes G2G relation types with edge count <= min_count. Counts are taken
/// once, before removal. Self-loops are excluded from the count unless
/// `count_self_loops` is set.
KnowledgeGraph restrict_g2g_major(const KnowledgeGraph& g, std::size_t min_count, bool count_self_loops = false);

KnowledgeGraph collapse_class(const KnowledgeGraph& g, RelationClass rc, std::string merged_name = {});
KnowledgeGraph restrict_genes(const KnowledgeGraph& g, const std::vector<std::string>& gene_ids);

/// Resamples each edge's endpoints uniformly over valid node pairs, keeping
/// per-relation counts and rejecting duplicates.
KnowledgeGraph rewire_random(const KnowledgeGraph& g, RelationClass rc, std::uint64_t seed);

KnowledgeGraph drop_class(const KnowledgeGraph& g, RelationClass rc);

struct StageReport {
  std::string name;
  GraphStats stats;
};

struct PlanResult {
  KnowledgeGraph graph;
  std::vector<StageReport> stages;  // stages[0] is the input graph
};

PlanResult apply_plan(const KnowledgeGraph& g, const SparsifyPlan& plan);

std::string step_name(const SparsifyStep& s);

// Text form, one step per entry, e.g.
//   restrict_v2g(exon,promoter) ; restrict_g2g_major(10000) ; collapse_class(G2G,G2G_collapsed)
std::string format_plan(const SparsifyPlan& plan);
SparsifyPlan parse_plan(std::string_view text);

/// TSV with one row per stage and relation: stage, relation, edges, self_loops.
std::string stages_to_tsv(const std::vector<StageReport>& stages);

}  // namespace ctxkg
