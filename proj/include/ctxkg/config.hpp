#pragma once

#include "ctxkg/assoc.hpp"
#include "ctxkg/dcn.hpp"
#include "ctxkg/gnn.hpp"
#include "ctxkg/perturb.hpp"
#include "ctxkg/simgen.hpp"
#include "ctxkg/sparsify.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctxkg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ContextEdges { None, Add, Merge, Replace };

ContextEdges parse_context_edges(const std::string& s);
std::string to_string(ContextEdges c);

/// One graph variant of the experiment matrix: `steps`, then the perturb
/// edges (per `context_edges`), then `post_steps`.
struct GraphVariantSpec {
  std::string name;
  SparsifyPlan steps;
  ContextEdges context_edges = ContextEdges::None;
  SparsifyPlan post_steps;
};

struct MatrixSpec {
  std::vector<std::string> variants;
  std::vector<std::size_t> cohorts{10'000};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::size_t full_cohort = 0;  // 0: largest simulated cohort
};

struct PipelineConfig {
  SimScenario simulate;
  SparsifyPlan sparsify;
  PerturbOptions perturb;
  GatConfig gat;
  RecalibrateOptions assoc;
  DcnOptions dcn;
  MatrixSpec matrix;
  std::map<std::string, GraphVariantSpec> variants;
};

/// Flat-sectioned key = value text. Unknown sections or keys are errors.
PipelineConfig parse_config(const std::string& text, const std::string& origin = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);

/// Every key with its resolved value; parse_config(format_config(c)) == c.
std::string format_config(const PipelineConfig& c);

}  // namespace ctxkg
