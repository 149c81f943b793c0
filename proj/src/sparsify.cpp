#include "ctxkg/sparsify.hpp"

#include "ctxkg/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_set>

namespace ctxkg {

const std::vector<std::string>& default_local_v2g() {
  static const std::vector<std::string> names{"exon", "promoter", "eqtl", "eqtlgen_finemap"};
  return names;
}

namespace {

KnowledgeGraph without_relations(const KnowledgeGraph& g, auto&& drop) {
  KnowledgeGraph out = g;
  std::erase_if(out.relations, drop);
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_args(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto pos = s.find(',', start);
    auto part = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!part.empty()) out.push_back(part);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += v[i];
  }
  return s;
}

}  // namespace

KnowledgeGraph remove_program_nodes(const KnowledgeGraph& g) {
  auto keep = keep_all(g);
  keep.indices[slot(NodeClass::Program)].clear();
  auto out = induced_subgraph(g, keep);
  std::erase_if(out.relations, [](const Relation& r) { return r.type.relation_class == RelationClass::G2P; });
  return out;
}

KnowledgeGraph restrict_v2g(const KnowledgeGraph& g, const std::vector<std::string>& allowed,
                            std::vector<std::string>* missing) {
  if (allowed.empty()) throw GraphError("restrict_v2g needs at least one allowed relation name");
  std::set<std::string> allow(allowed.begin(), allowed.end());
  if (missing) {
    missing->clear();
    for (const auto& name : allowed) {
      const auto* r = g.find_relation(name);
      if (!r || r->type.relation_class != RelationClass::V2G) missing->push_back(name);
    }
  }
  return without_relations(g, [&](const Relation& r) {
    return r.type.relation_class == RelationClass::V2G && !allow.contains(r.type.name);
  });
}

KnowledgeGraph restrict_g2g_major(const KnowledgeGraph& g, std::size_t min_count, bool count_self_loops) {
  std::set<std::string> minor;
  for (const auto& r : g.relations) {
    if (r.type.relation_class != RelationClass::G2G) continue;
    std::size_t n = 0;
    for (const auto& e : r.edges)
      if (count_self_loops || e.src != e.dst) ++n;
    if (n <= min_count && min_count > 0) minor.insert(r.type.name);
  }
  return without_relations(g, [&](const Relation& r) { return minor.contains(r.type.name); });
}

KnowledgeGraph collapse_class(const KnowledgeGraph& g, RelationClass rc, std::string merged_name) {
  if (merged_name.empty()) merged_name = fmt::format("{}_collapsed", to_string(rc));
  Relation merged{RelationType::of(merged_name, rc), {}};
  bool any = false;
  for (const auto& r : g.relations)
    if (r.type.relation_class == rc) {
      any = true;
      merged.edges.insert(merged.edges.end(), r.edges.begin(), r.edges.end());
    }
  if (!any) throw GraphError(fmt::format("collapse_class: no {} relations present", to_string(rc)));
  std::sort(merged.edges.begin(), merged.edges.end());
  merged.edges.erase(std::unique(merged.edges.begin(), merged.edges.end()), merged.edges.end());

  KnowledgeGraph out = g;
  std::erase_if(out.relations, [&](const Relation& r) { return r.type.relation_class == rc; });
  if (out.find_relation(merged_name)) throw GraphError(fmt::format("collapse_class: name '{}' already used", merged_name));
  out.relations.push_back(std::move(merged));
  out.canonicalize();
  return out;
}

KnowledgeGraph restrict_genes(const KnowledgeGraph& g, const std::vector<std::string>& gene_ids) {
  auto keep = keep_all(g);
  auto& genes = keep.indices[slot(NodeClass::Gene)];
  genes.clear();
  for (const auto& id : gene_ids) {
    auto ref = g.find_node(id);
    if (!ref || ref->node_class != NodeClass::Gene) throw GraphError(fmt::format("restrict_genes: unknown gene id '{}'", id));
    genes.push_back(ref->index);
  }
  std::sort(genes.begin(), genes.end());
  genes.erase(std::unique(genes.begin(), genes.end()), genes.end());
  return induced_subgraph(g, keep);
}

KnowledgeGraph rewire_random(const KnowledgeGraph& g, RelationClass rc, std::uint64_t seed) {
  KnowledgeGraph out = g;
  bool any = false;
  for (auto& r : out.relations) {
    if (r.type.relation_class != rc) continue;
    any = true;
    const std::uint64_t ns = g.node_count(r.type.src_class);
    const std::uint64_t nd = g.node_count(r.type.dst_class);
    const std::uint64_t n = r.edges.size();
    if (n > ns * nd)
      throw GraphError(fmt::format("rewire_random: relation '{}' has {} edges but only {} distinct pairs", r.type.name, n,
                                   ns * nd));
    auto rng = make_rng(seed, {stable_hash("rewire"), stable_hash(r.type.name)});
    std::vector<Edge> edges;
    edges.reserve(n);
    if (2 * n > ns * nd) {
      // Dense request: partial Fisher-Yates over all pairs.
      std::vector<std::uint64_t> pairs(ns * nd);
      for (std::uint64_t i = 0; i < pairs.size(); ++i) pairs[i] = i;
      for (std::uint64_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::uint64_t> pick(i, pairs.size() - 1);
        std::swap(pairs[i], pairs[pick(rng)]);
        edges.push_back({static_cast<std::uint32_t>(pairs[i] / nd), static_cast<std::uint32_t>(pairs[i] % nd)});
      }
    } else {
      std::uniform_int_distribution<std::uint32_t> src(0, static_cast<std::uint32_t>(ns - 1));
      std::uniform_int_distribution<std::uint32_t> dst(0, static_cast<std::uint32_t>(nd - 1));
      std::unordered_set<std::uint64_t> seen;
      while (edges.size() < n) {
        Edge e{src(rng), dst(rng)};
        if (seen.insert(std::uint64_t{e.src} * nd + e.dst).second) edges.push_back(e);
      }
    }
    std::sort(edges.begin(), edges.end());
    r.edges = std::move(edges);
  }
  if (!any) throw GraphError(fmt::format("rewire_random: no {} relations present", to_string(rc)));
  return out;
}

KnowledgeGraph drop_class(const KnowledgeGraph& g, RelationClass rc) {
  return without_relations(g, [&](const Relation& r) { return r.type.relation_class == rc; });
}

std::string step_name(const SparsifyStep& s) {
  return std::visit(
      [](const auto& st) -> std::string {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, step::RemovePrograms>) return "remove_programs";
        else if constexpr (std::is_same_v<T, step::RestrictV2G>) return "restrict_v2g";
        else if constexpr (std::is_same_v<T, step::RestrictG2GMajor>) return "restrict_g2g_major";
        else if constexpr (std::is_same_v<T, step::CollapseClass>) return "collapse_class";
        else if constexpr (std::is_same_v<T, step::RestrictGenes>) return "restrict_genes";
        else if constexpr (std::is_same_v<T, step::RewireRandom>) return "rewire_random";
        else return "drop_class";
      },
      s);
}

PlanResult apply_plan(const KnowledgeGraph& g, const SparsifyPlan& plan) {
  PlanResult res{g, {{"input", compute_stats(g)}}};
  for (const auto& s : plan.steps) {
    res.graph = std::visit(
        [&](const auto& st) -> KnowledgeGraph {
          using T = std::decay_t<decltype(st)>;
          const auto& cur = res.graph;
          if constexpr (std::is_same_v<T, step::RemovePrograms>) return remove_program_nodes(cur);
          else if constexpr (std::is_same_v<T, step::RestrictV2G>) return restrict_v2g(cur, st.allowed);
          else if constexpr (std::is_same_v<T, step::RestrictG2GMajor>) return restrict_g2g_major(cur, st.min_count);
          else if constexpr (std::is_same_v<T, step::CollapseClass>) return collapse_class(cur, st.relation_class, st.merged_name);
          else if constexpr (std::is_same_v<T, step::RestrictGenes>) {
            if (!st.source.empty() && st.gene_ids.empty())
              throw GraphError(fmt::format("restrict_genes source '{}' was not resolved", st.source));
            return restrict_genes(cur, st.gene_ids);
          } else if constexpr (std::is_same_v<T, step::RewireRandom>) return rewire_random(cur, st.relation_class, st.seed);
          else return drop_class(cur, st.relation_class);
        },
        s);
    res.stages.push_back({step_name(s), compute_stats(res.graph)});
  }
  return res;
}

std::string format_plan(const SparsifyPlan& plan) {
  std::vector<std::string> parts;
  for (const auto& s : plan.steps) {
    parts.push_back(std::visit(
        [](const auto& st) -> std::string {
          using T = std::decay_t<decltype(st)>;
          if constexpr (std::is_same_v<T, step::RemovePrograms>) return "remove_programs";
          else if constexpr (std::is_same_v<T, step::RestrictV2G>) return fmt::format("restrict_v2g({})", join(st.allowed, ","));
          else if constexpr (std::is_same_v<T, step::RestrictG2GMajor>) return fmt::format("restrict_g2g_major({})", st.min_count);
          else if constexpr (std::is_same_v<T, step::CollapseClass>) {
            if (st.merged_name.empty()) return fmt::format("collapse_class({})", to_string(st.relation_class));
            return fmt::format("collapse_class({},{})", to_string(st.relation_class), st.merged_name);
          } else if constexpr (std::is_same_v<T, step::RestrictGenes>) {
            if (!st.source.empty()) return fmt::format("restrict_genes({})", st.source);
            return fmt::format("restrict_genes({})", join(st.gene_ids, ","));
          } else if constexpr (std::is_same_v<T, step::RewireRandom>)
            return fmt::format("rewire_random({},{})", to_string(st.relation_class), st.seed);
          else return fmt::format("drop_class({})", to_string(st.relation_class));
        },
        s));
  }
  return join(parts, " ; ");
}

SparsifyPlan parse_plan(std::string_view text) {
  SparsifyPlan plan;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find(';', start);
    auto item = trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    start = pos == std::string_view::npos ? text.size() + 1 : pos + 1;
    if (item.empty()) continue;
    std::string name = item;
    std::vector<std::string> args;
    if (auto open = item.find('('); open != std::string::npos) {
      auto close = item.rfind(')');
      if (close == std::string::npos || close < open) throw GraphError(fmt::format("malformed plan step '{}'", item));
      name = trim(std::string_view(item).substr(0, open));
      args = split_args(std::string_view(item).substr(open + 1, close - open - 1));
    }
    auto need = [&](std::size_t lo, std::size_t hi) {
      if (args.size() < lo || args.size() > hi)
        throw GraphError(fmt::format("plan step '{}' takes {}..{} arguments, got {}", name, lo, hi, args.size()));
    };
    auto to_size = [&](const std::string& s) -> std::uint64_t {
      try {
        if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
          throw std::invalid_argument(s);
        std::size_t used = 0;
        auto v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw GraphError(fmt::format("plan step '{}': '{}' is not a non-negative integer", name, s));
      }
    };
    if (name == "remove_programs") {
      need(0, 0);
      plan.steps.emplace_back(step::RemovePrograms{});
    } else if (name == "restrict_v2g") {
      plan.steps.emplace_back(step::RestrictV2G{args.empty() ? default_local_v2g() : args});
    } else if (name == "restrict_g2g_major") {
      need(1, 1);
      plan.steps.emplace_back(step::RestrictG2GMajor{to_size(args[0])});
    } else if (name == "collapse_class") {
      need(1, 2);
      plan.steps.emplace_back(step::CollapseClass{parse_relation_class(args[0]), args.size() > 1 ? args[1] : ""});
    } else if (name == "restrict_genes") {
      step::RestrictGenes st;
      if (args.size() == 1 && args[0].starts_with('@')) st.source = args[0];
      else st.gene_ids = args;
      plan.steps.emplace_back(std::move(st));
    } else if (name == "rewire_random") {
      need(2, 2);
      plan.steps.emplace_back(step::RewireRandom{parse_relation_class(args[0]), to_size(args[1])});
    } else if (name == "drop_class") {
      need(1, 1);
      plan.steps.emplace_back(step::DropClass{parse_relation_class(args[0])});
    } else {
      throw GraphError(fmt::format("unknown plan step '{}'", name));
    }
  }
  return plan;
}

std::string stages_to_tsv(const std::vector<StageReport>& stages) {
  std::string s = "# stage_index\tstage\trelation\tedges\tself_loops\n";
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& st = stages[i];
    for (const auto& [rel, n] : st.stats.edges_per_relation)
      s += fmt::format("{}\t{}\t{}\t{}\t{}\n", i, st.name, rel, n, st.stats.self_loops_per_relation.at(rel));
    s += fmt::format("{}\t{}\t{}\t{}\t\n", i, st.name, "__total__", st.stats.total_edges);
  }
  return s;
}

}  // namespace ctxkg
