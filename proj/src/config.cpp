#include "ctxkg/config.hpp"
#include "ctxkg/tsv.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <fmt/format.h>

#include <charconv>
#include <functional>
#include <sstream>

namespace ctxkg {

ContextEdges parse_context_edges(const std::string& s) {
  if (s == "none") return ContextEdges::None;
  if (s == "add") return ContextEdges::Add;
  if (s == "merge") return ContextEdges::Merge;
  if (s == "replace") return ContextEdges::Replace;
  throw ConfigError(fmt::format("context_edges must be none, add, merge or replace (got '{}')", s));
}

std::string to_string(ContextEdges c) {
  switch (c) {
    case ContextEdges::None: return "none";
    case ContextEdges::Add: return "add";
    case ContextEdges::Merge: return "merge";
    case ContextEdges::Replace: return "replace";
  }
  return "none";
}

namespace {

struct Field {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};
using Fields = std::vector<std::pair<std::string, Field>>;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

template <class T>
T parse_number(const std::string& s) {
  T v{};
  const auto t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) throw ConfigError(fmt::format("invalid number '{}'", s));
  return v;
}

template <class T>
Field num(T& x) {
  return {[&x](const std::string& s) { x = parse_number<T>(s); },
          [&x] {
            if constexpr (std::is_floating_point_v<T>) return format_double(x);
            else return std::to_string(x);
          }};
}

Field flag(bool& x) {
  return {[&x](const std::string& s) {
            const auto t = trim(s);
            if (t == "true" || t == "1") x = true;
            else if (t == "false" || t == "0") x = false;
            else throw ConfigError(fmt::format("invalid boolean '{}'", s));
          },
          [&x] { return std::string(x ? "true" : "false"); }};
}

template <class T>
Field num_list(std::vector<T>& x) {
  return {[&x](const std::string& s) {
            x.clear();
            for (const auto& item : split_list(s)) x.push_back(parse_number<T>(item));
          },
          [&x] {
            std::string out;
            for (std::size_t i = 0; i < x.size(); ++i) out += (i ? "," : "") + std::to_string(x[i]);
            return out;
          }};
}

Field str_list(std::vector<std::string>& x) {
  return {[&x](const std::string& s) { x = split_list(s); },
          [&x] {
            std::string out;
            for (std::size_t i = 0; i < x.size(); ++i) out += (i ? "," : "") + x[i];
            return out;
          }};
}

Field plan(SparsifyPlan& x) {
  return {[&x](const std::string& s) {
            try {
              x = parse_plan(s);
            } catch (const GraphError& e) {
              throw ConfigError(e.what());
            }
          },
          [&x] { return format_plan(x); }};
}

Fields simulate_fields(SimScenario& s) {
  return {{"seed", num(s.seed)},
          {"chromosomes", num(s.chromosomes)},
          {"blocks", num(s.blocks)},
          {"variants_per_block", num(s.variants_per_block)},
          {"block_spacing_bp", num(s.block_spacing_bp)},
          {"variant_spacing_bp", num(s.variant_spacing_bp)},
          {"ld_rho", num(s.ld_rho)},
          {"genes", num(s.genes)},
          {"modules", num(s.modules)},
          {"module_size", num(s.module_size)},
          {"causal_modules", num(s.causal_modules)},
          {"lambda_ref", num(s.lambda_ref)},
          {"n_ref", num(s.n_ref)},
          {"cohort_sizes", num_list(s.cohort_sizes)},
          {"max_v2g_links", num(s.max_v2g_links)},
          {"tss_neighbors", num(s.tss_neighbors)},
          {"g2g_noise_rate", num(s.g2g_noise_rate)},
          {"minor_g2g_types", num(s.minor_g2g_types)},
          {"programs", num(s.programs)},
          {"variant_dim", num(s.variant_dim)},
          {"variant_signal", num(s.variant_signal)},
          {"gene_dim", num(s.gene_dim)},
          {"module_signal", num(s.module_signal)},
          {"trait_signal", num(s.trait_signal)},
          {"feature_genes", num(s.feature_genes)},
          {"unassigned_perturbed", num(s.unassigned_perturbed)},
          {"cells_per_perturbation", num(s.cells_per_perturbation)},
          {"control_cells", num(s.control_cells)},
          {"response_support", num(s.response_support)},
          {"response_log2", num(s.response_log2)},
          {"baseline_mean", num(s.baseline_mean)},
          {"perturb_noise", num(s.perturb_noise)},
          {"doublet_rate", num(s.doublet_rate)}};
}

Fields perturb_fields(PerturbOptions& p) {
  Field norm{[&p](const std::string& s) {
               const auto t = trim(s);
               if (t == "median_total") p.lfc.normalization = Normalization::MedianTotal;
               else if (t == "none") p.lfc.normalization = Normalization::None;
               else throw ConfigError(fmt::format("normalization must be median_total or none (got '{}')", s));
             },
             [&p] { return std::string(p.lfc.normalization == Normalization::MedianTotal ? "median_total" : "none"); }};
  return {{"normalization", norm},
          {"pseudo_count", num(p.lfc.pseudo_count)},
          {"n_dev", num(p.selection.n_dev)},
          {"n_hvg", num(p.selection.n_hvg)},
          {"components", num(p.ica.components)},
          {"ica_seed", num(p.ica.seed)},
          {"tolerance", num(p.ica.tolerance)},
          {"max_iterations", num(p.ica.max_iterations)},
          {"tau", num(p.tau)}};
}

Fields gat_fields(GatConfig& g) {
  return {{"layers", num(g.layers)},
          {"hidden_dim", num(g.hidden_dim)},
          {"leaky_slope", num(g.leaky_slope)},
          {"learning_rate", num(g.learning_rate)},
          {"max_epochs", num(g.max_epochs)},
          {"steps_per_epoch", num(g.steps_per_epoch)},
          {"validation_fraction", num(g.validation_fraction)},
          {"patience", num(g.patience)},
          {"seed", num(g.seed)},
          {"activations", flag(g.activations)},
          {"cross_fit_folds", num(g.cross_fit_folds)}};
}

Fields assoc_fields(RecalibrateOptions& a) {
  return {{"alpha", num(a.alpha)},
          {"window_bp", num(a.window_bp)},
          {"k", num(a.k)},
          {"w_min", num(a.weights.w_min)},
          {"w_max", num(a.weights.w_max)}};
}

Fields dcn_fields(DcnOptions& d) {
  Field norm{[&d](const std::string& s) {
               const auto t = trim(s);
               if (t == "minmax") d.normalization = ScoreNormalization::MinMax;
               else if (t == "rank") d.normalization = ScoreNormalization::Rank;
               else throw ConfigError(fmt::format("normalization must be minmax or rank (got '{}')", s));
             },
             [&d] { return std::string(d.normalization == ScoreNormalization::MinMax ? "minmax" : "rank"); }};
  return {{"k", num(d.k)}, {"v2g_layer", num(d.v2g_layer)}, {"g2g_layer", num(d.g2g_layer)}, {"normalization", norm}};
}

Fields matrix_fields(MatrixSpec& m) {
  return {{"variants", str_list(m.variants)},
          {"cohorts", num_list(m.cohorts)},
          {"seeds", num_list(m.seeds)},
          {"full_cohort", num(m.full_cohort)}};
}

Fields variant_fields(GraphVariantSpec& v) {
  Field ctx{[&v](const std::string& s) { v.context_edges = parse_context_edges(trim(s)); },
            [&v] { return to_string(v.context_edges); }};
  return {{"steps", plan(v.steps)}, {"context_edges", ctx}, {"post_steps", plan(v.post_steps)}};
}

Fields sparsify_fields(SparsifyPlan& p) { return {{"plan", plan(p)}}; }

Fields section_fields(PipelineConfig& c, const std::string& section) {
  if (section == "simulate") return simulate_fields(c.simulate);
  if (section == "sparsify") return sparsify_fields(c.sparsify);
  if (section == "perturb") return perturb_fields(c.perturb);
  if (section == "gat") return gat_fields(c.gat);
  if (section == "assoc") return assoc_fields(c.assoc);
  if (section == "dcn") return dcn_fields(c.dcn);
  if (section == "matrix") return matrix_fields(c.matrix);
  if (section.starts_with("variant.") && section.size() > 8) {
    auto& v = c.variants[section.substr(8)];
    v.name = section.substr(8);
    return variant_fields(v);
  }
  throw ConfigError(fmt::format("unknown section [{}]", section));
}

const std::vector<std::string> kSections{"simulate", "sparsify", "perturb", "gat", "assoc", "dcn", "matrix"};

}  // namespace

PipelineConfig parse_config(const std::string& text, const std::string& origin) {
  boost::property_tree::ptree pt;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}:{}: {}", origin, e.line(), e.message()));
  }
  PipelineConfig c;
  for (const auto& [section, body] : pt) {
    if (!body.data().empty()) throw ConfigError(fmt::format("{}: key '{}' outside any section", origin, section));
    Fields fields;
    try {
      fields = section_fields(c, section);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}: {}", origin, e.what()));
    }
    for (const auto& [key, value] : body) {
      auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.first == key; });
      if (it == fields.end()) throw ConfigError(fmt::format("{}: unknown key '{}' in [{}]", origin, key, section));
      try {
        it->second.set(value.data());
      } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: [{}] {}: {}", origin, section, key, e.what()));
      }
    }
  }
  for (const auto& v : c.matrix.variants)
    if (!c.variants.contains(v)) throw ConfigError(fmt::format("{}: matrix variant '{}' has no [variant.{}] section", origin, v, v));
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError(path, "config file not found");
  return parse_config(read_text_file(path), path.string());
}

std::string format_config(const PipelineConfig& cfg) {
  PipelineConfig c = cfg;
  std::string out;
  auto emit = [&](const std::string& section) {
    out += fmt::format("[{}]\n", section);
    for (const auto& [key, f] : section_fields(c, section)) out += fmt::format("{} = {}\n", key, f.get());
    out += "\n";
  };
  for (const auto& s : kSections) emit(s);
  std::vector<std::string> names;
  for (const auto& [name, v] : cfg.variants) names.push_back(name);
  for (const auto& name : names) emit("variant." + name);
  return out;
}

}  // namespace ctxkg
