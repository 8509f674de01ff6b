#ifndef PMX_IO_HPP
#define PMX_IO_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "pmx/common.hpp"
#include "pmx/frozen.hpp"
#include "pmx/kato.hpp"
#include "pmx/model.hpp"
#include "pmx/parametrix.hpp"

namespace pmx::io {

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

struct OracleConfig {
  int n_paths = 20000;
  double t = 0.5;
  double eps = 0.05;
  double x0 = 0.0;
  int y_stride = 8;  // column stride for the p(t, x0, .) row
};

struct KatoMeasureConfig {
  std::string name;
  kato::MeasureSpec spec;
};

struct ScenarioConfig {
  std::string name;
  bool has_model = false;
  model::LevyTypeModel model;
  frozen::SpatialGrid grid;
  double t_min = 0.01, t_max = 1.0;
  int pts_per_decade = 8;
  double lambda = 0.5;  // Holder exponent used by solve/envelope
  parametrix::SolveOptions solve;
  std::vector<std::string> stages;
  std::uint64_t seed = 1;
  OracleConfig oracle;
  std::vector<double> kato_alphas;
  std::vector<KatoMeasureConfig> kato_measures;
  std::map<std::string, double> tolerances;
  nlohmann::json raw;

  double tol(const std::string& key, double fallback) const;
  bool has_stage(const std::string& s) const;
};

// Parse/validate; every malformed input maps to CONFIG_INVALID.
ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::string& path);

// Apply "key=value" tolerance overrides (repeatable), CONFIG_INVALID on parse.
void apply_tol_override(ScenarioConfig& cfg, const std::vector<std::string>& overrides);

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

std::string format_g17(double v);
std::uint64_t fnv1a(const std::string& s);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

// rows of %.17g-formatted doubles under a comma-separated header
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_csv(
    const std::string& path);

// run-dir manifest: config hash, version, grid/mesh summary.  No timings, so
// identical runs are byte-identical.
nlohmann::json make_manifest(const ScenarioConfig& cfg);

}  // namespace pmx::io

#endif
