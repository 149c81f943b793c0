#include "ctxkg/dcn.hpp"
#include "ctxkg/tsv.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <numeric>

namespace ctxkg {

namespace {

std::vector<double> normalize(const std::vector<double>& x, ScoreNormalization norm) {
  std::vector<double> out(x.size(), 0.5);
  if (x.empty()) return out;
  if (norm == ScoreNormalization::MinMax) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*hi > *lo)
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - *lo) / (*hi - *lo);
    return out;
  }
  // Average ranks scaled to [0, 1].
  if (x.size() == 1) return out;
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  const double denom = static_cast<double>(x.size() - 1);
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) / denom;
    for (std::size_t t = i; t <= j; ++t) out[idx[t]] = r;
    i = j + 1;
  }
  return out;
}

struct Candidate {
  std::string id;
  double score;
};

std::vector<Candidate> top_k(std::vector<Candidate> c, std::size_t k) {
  std::sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (c.size() > k) c.resize(k);
  return c;
}

}  // namespace

PooledScores pooled_scores(const std::vector<AttentionRecord>& records, int layer, ScoreNormalization norm) {
  PooledScores out;
  for (const auto& rec : records) {
    if (rec.layer != layer || rec.logits.empty()) continue;
    const auto scores = normalize(rec.logits, norm);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const std::pair key{NodeRef{rec.src_class, rec.src[i]}, NodeRef{rec.dst_class, rec.dst[i]}};
      auto [it, fresh] = out.emplace(key, scores[i]);
      if (!fresh) it->second = std::max(it->second, scores[i]);
    }
  }
  return out;
}

CriticalNetwork extract_network(const PooledScores& v2g, const PooledScores& g2g, const KnowledgeGraph& g,
                                const std::string& root_id, std::size_t k, const std::set<std::string>& context_genes) {
  if (k == 0) throw DcnError("extract_network: k must be >= 1");
  const auto root = g.find_node(root_id);
  if (!root || root->node_class != NodeClass::Variant) throw DcnError(fmt::format("unknown variant '{}'", root_id));

  CriticalNetwork net;
  net.root = root_id;
  std::map<std::string, NetworkNode> nodes;
  nodes[root_id] = {root_id, NodeClass::Variant, false};
  auto add_gene = [&](const std::string& id) { nodes.try_emplace(id, NetworkNode{id, NodeClass::Gene, context_genes.contains(id)}); };

  std::vector<Candidate> hop1;
  for (const auto& [key, score] : v2g)
    if (key.second == *root && key.first.node_class == NodeClass::Gene) hop1.push_back({g.id_of(key.first), score});
  if (hop1.empty()) {
    net.root_has_v2g = false;
    net.nodes.push_back(nodes[root_id]);
    return net;
  }
  hop1 = top_k(std::move(hop1), k);

  // dst gene -> attended source genes
  std::map<std::uint32_t, std::vector<Candidate>> attended;
  for (const auto& [key, score] : g2g)
    if (key.first.node_class == NodeClass::Gene && key.second.node_class == NodeClass::Gene && key.first != key.second)
      attended[key.second.index].push_back({g.id_of(key.first), score});

  std::vector<NetworkEdge> second;
  for (const auto& c : hop1) {
    add_gene(c.id);
    net.edges.push_back({root_id, c.id, 1, c.score, 1});
    const auto gi = g.find_node(c.id)->index;
    auto it = attended.find(gi);
    if (it == attended.end()) continue;
    for (const auto& c2 : top_k(it->second, k)) {
      add_gene(c2.id);
      second.push_back({c.id, c2.id, 2, c2.score, 1});
    }
  }
  net.edges.insert(net.edges.end(), second.begin(), second.end());
  for (auto& [id, n] : nodes) net.nodes.push_back(n);
  return net;
}

CriticalNetwork critical_network(const GatModel& model, const KnowledgeGraph& g, const std::string& root_id,
                                 const DcnOptions& opts, const std::set<std::string>& context_genes) {
  const int layers = model.config.layers;
  const int v2g_layer = opts.v2g_layer > 0 ? opts.v2g_layer : layers;
  const int g2g_layer = opts.g2g_layer > 0 ? opts.g2g_layer : layers - 1;
  if (v2g_layer > layers || g2g_layer > layers || g2g_layer < 1)
    throw DcnError(fmt::format("dcn layers ({}, {}) outside a {}-layer model", v2g_layer, g2g_layer, layers));
  const auto fr = forward(model, make_message_graph(g), true);
  const auto v2g = pooled_scores(fr.attention, v2g_layer - 1, opts.normalization);
  const auto g2g = pooled_scores(fr.attention, g2g_layer - 1, opts.normalization);
  return extract_network(v2g, g2g, g, root_id, opts.k, context_genes);
}

CriticalNetwork merge_seed_networks(const std::vector<CriticalNetwork>& nets) {
  if (nets.empty()) throw DcnError("merge_seed_networks: no networks");
  CriticalNetwork out;
  out.root = nets.front().root;
  out.seeds = 0;
  std::map<std::string, NetworkNode> nodes;
  // (score, occurrence) per input edge; merged inputs carry their counts
  struct Acc {
    int hop = 2;
    std::vector<std::pair<double, std::size_t>> scores;
  };
  std::map<std::pair<std::string, std::string>, Acc> edges;
  out.root_has_v2g = false;
  for (const auto& n : nets) {
    if (n.root != out.root) throw DcnError(fmt::format("cannot merge networks rooted at '{}' and '{}'", out.root, n.root));
    out.root_has_v2g |= n.root_has_v2g;
    out.seeds += n.seeds;
    for (const auto& node : n.nodes) {
      auto [it, fresh] = nodes.emplace(node.id, node);
      if (!fresh) it->second.context_flag |= node.context_flag;
    }
    for (const auto& e : n.edges) {
      auto& a = edges[{e.src, e.dst}];
      a.hop = std::min(a.hop, e.hop);
      a.scores.push_back({e.score, e.occurrence});
    }
  }
  for (auto& [id, n] : nodes) out.nodes.push_back(n);
  for (auto& [key, a] : edges) {
    // order-independent weighted mean
    std::sort(a.scores.begin(), a.scores.end());
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& [score, occ] : a.scores) {
      sum += score * static_cast<double>(occ);
      count += occ;
    }
    out.edges.push_back({key.first, key.second, a.hop, sum / static_cast<double>(count), count});
  }
  std::stable_sort(out.edges.begin(), out.edges.end(),
                   [](const NetworkEdge& x, const NetworkEdge& y) { return x.hop < y.hop; });
  return out;
}

double consistency_score(const CriticalNetwork& merged, std::size_t s) {
  if (s == 0) throw DcnError("consistency_score: S must be >= 1");
  if (merged.edges.empty()) throw DcnError("consistency_score: empty network");
  double sum = 0.0;
  for (const auto& e : merged.edges) sum += static_cast<double>(e.occurrence);
  return sum / static_cast<double>(merged.edges.size()) / static_cast<double>(s);
}

std::string network_to_json(const CriticalNetwork& net) {
  nlohmann::ordered_json j;
  j["root"] = net.root;
  j["root_has_v2g"] = net.root_has_v2g;
  j["seeds"] = net.seeds;
  auto& nodes = j["nodes"];
  nodes = nlohmann::json::array();
  for (const auto& n : net.nodes)
    nodes.push_back({{"id", n.id}, {"class", std::string(to_string(n.node_class))}, {"context_flag", n.context_flag}});
  auto& edges = j["edges"];
  edges = nlohmann::json::array();
  for (const auto& e : net.edges)
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"hop", e.hop}, {"score", e.score}, {"occurrence", e.occurrence}});
  return j.dump(2) + "\n";
}

CriticalNetwork network_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  CriticalNetwork net;
  net.root = j.at("root").get<std::string>();
  net.root_has_v2g = j.value("root_has_v2g", true);
  net.seeds = j.value("seeds", std::size_t{1});
  for (const auto& n : j.at("nodes"))
    net.nodes.push_back({n.at("id").get<std::string>(), parse_node_class(n.at("class").get<std::string>()),
                         n.value("context_flag", false)});
  for (const auto& e : j.at("edges"))
    net.edges.push_back({e.at("src").get<std::string>(), e.at("dst").get<std::string>(), e.at("hop").get<int>(),
                         e.at("score").get<double>(), e.value("occurrence", std::size_t{1})});
  return net;
}

std::string network_to_tsv(const CriticalNetwork& net) {
  std::string s = "# src\tdst\thop\tscore\toccurrence\n";
  for (const auto& e : net.edges)
    s += fmt::format("{}\t{}\t{}\t{}\t{}\n", e.src, e.dst, e.hop, format_double(e.score), e.occurrence);
  return s;
}

CriticalNetwork read_network(const std::filesystem::path& path) {
  try {
    return network_from_json(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path, fmt::format("invalid network JSON: {}", e.what()));
  }
}

}  // namespace ctxkg
