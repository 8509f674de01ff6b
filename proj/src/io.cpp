#include "pmx/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pmx::io {

using nlohmann::json;

double ScenarioConfig::tol(const std::string& key, double fallback) const {
  auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

bool ScenarioConfig::has_stage(const std::string& s) const {
  for (const auto& st : stages)
    if (st == s) return true;
  return false;
}

namespace {

[[noreturn]] void bad_config(const std::string& what) {
  throw PmxError(ErrorCode::CONFIG_INVALID, what);
}

model::LevyTypeModel parse_model(const json& j) {
  const std::string kind = j.value("kind", "");
  const double alpha = j.value("alpha", 1.0);
  if (!(alpha > 0) || !(alpha < 2)) bad_config("model.alpha must lie in (0,2)");
  if (kind == "stable")
    return model::make_stable_model(j.value("dim", 1), alpha, j.value("scale", 1.0));
  if (kind == "modulated")
    return model::make_modulated_stable_model(alpha, j.value("bump", 0.4), j.value("lambda", 0.5));
  if (kind == "truncated")
    return model::make_truncated_stable_model(alpha, j.value("cutoff", 1.0));
  bad_config("model.kind must be stable | modulated | truncated");
}

kato::MeasureSpec parse_measure(const json& j) {
  const std::string type = j.value("type", "");
  if (type == "point") return kato::make_point_mass(j.value("x", 0.0), j.value("w", 1.0));
  if (type == "uniform")
    return kato::make_uniform_measure(j.value("lo", -1.0), j.value("hi", 1.0),
                                      j.value("value", 1.0));
  if (type == "cantor") return kato::make_cantor_measure(j.value("depth", 10));
  bad_config("measure.type must be point | uniform | cantor");
}

}  // namespace

ScenarioConfig parse_scenario(const json& j) {
  if (!j.is_object()) bad_config("scenario must be a JSON object");
  ScenarioConfig cfg;
  cfg.raw = j;
  cfg.name = j.value("name", "");
  if (cfg.name.empty()) bad_config("scenario.name required");

  if (j.contains("model")) {
    cfg.model = parse_model(j.at("model"));
    cfg.has_model = true;
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    cfg.grid.dim = cfg.has_model ? cfg.model.dim() : 1;
    cfg.grid.n = g.value("n", 512);
    cfg.grid.R = g.value("R", 16.0);
    if (cfg.grid.n < 8 || (cfg.grid.n & (cfg.grid.n - 1)) != 0)
      bad_config("grid.n must be a power of two >= 8");
    if (!(cfg.grid.R > 0)) bad_config("grid.R must be positive");
  }
  if (j.contains("mesh")) {
    const auto& m = j.at("mesh");
    cfg.t_min = m.value("t_min", 0.01);
    cfg.t_max = m.value("t_max", 1.0);
    cfg.pts_per_decade = m.value("pts_per_decade", 8);
    if (!(cfg.t_min > 0) || !(cfg.t_max > cfg.t_min) || cfg.pts_per_decade < 2)
      bad_config("mesh: need 0 < t_min < t_max and pts_per_decade >= 2");
  }
  cfg.lambda = j.value("lambda", 0.5);

  cfg.solve.mesh = parametrix::TimeMesh::geometric(cfg.t_min, cfg.t_max, cfg.pts_per_decade);
  if (j.contains("solve")) {
    const auto& s = j.at("solve");
    cfg.solve.y_stride = s.value("y_stride", cfg.solve.y_stride);
    cfg.solve.delta = s.value("delta", cfg.solve.delta);
    cfg.solve.sigma = s.value("sigma", cfg.solve.sigma);
    cfg.solve.max_terms = s.value("max_terms", cfg.solve.max_terms);
    cfg.solve.k0 = s.value("k0", cfg.solve.k0);
  }

  if (j.contains("stages")) {
    for (const auto& s : j.at("stages")) cfg.stages.push_back(s.get<std::string>());
  }
  const std::vector<std::string> known = {"validate", "profile", "solve",
                                          "envelope", "kato",    "oracle"};
  for (const auto& s : cfg.stages) {
    bool ok = false;
    for (const auto& k : known) ok = ok || s == k;
    if (!ok) bad_config("unknown stage: " + s);
  }
  for (const auto& s : cfg.stages)
    if ((s == "validate" || s == "profile" || s == "solve" || s == "envelope" || s == "oracle") &&
        !cfg.has_model)
      bad_config("stage '" + s + "' requires a model");
  if (cfg.has_stage("envelope") && !cfg.has_stage("solve"))
    bad_config("stage 'envelope' requires stage 'solve'");

  cfg.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("oracle")) {
    const auto& o = j.at("oracle");
    cfg.oracle.n_paths = o.value("n_paths", cfg.oracle.n_paths);
    cfg.oracle.t = o.value("t", cfg.oracle.t);
    cfg.oracle.eps = o.value("eps", cfg.oracle.eps);
    cfg.oracle.x0 = o.value("x0", cfg.oracle.x0);
    cfg.oracle.y_stride = o.value("y_stride", cfg.oracle.y_stride);
    if (cfg.oracle.n_paths < 1 || !(cfg.oracle.eps > 0) || !(cfg.oracle.t > 0))
      bad_config("oracle: need n_paths >= 1, eps > 0, t > 0");
  }
  if (j.contains("kato")) {
    const auto& k = j.at("kato");
    for (const auto& a : k.value("alphas", std::vector<double>{1.0}))
      cfg.kato_alphas.push_back(a);
    if (k.contains("measures"))
      for (const auto& m : k.at("measures"))
        cfg.kato_measures.push_back({m.value("name", "measure"), parse_measure(m)});
  }
  if (j.contains("tolerances")) {
    for (const auto& [key, v] : j.at("tolerances").items()) {
      if (!v.is_number()) bad_config("tolerances must be numeric");
      cfg.tolerances[key] = v.get<double>();
    }
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad_config("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    bad_config(std::string("config parse error: ") + e.what());
  }
  return parse_scenario(j);
}

void apply_tol_override(ScenarioConfig& cfg, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) bad_config("tolerance override must be key=value");
    try {
      cfg.tolerances[o.substr(0, eq)] = std::stod(o.substr(eq + 1));
    } catch (const std::exception&) {
      bad_config("tolerance override value not numeric: " + o);
    }
  }
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_text(const std::string& path, const std::string& content) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PmxError(ErrorCode::STAGE_FAILED, "cannot write " + path);
  out << content;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PmxError(ErrorCode::STAGE_FAILED, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const std::exception& e) {
    throw PmxError(ErrorCode::STAGE_FAILED, path + ": " + e.what());
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < header.size(); ++i) ss << (i ? "," : "") << header[i];
  ss << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) ss << (i ? "," : "") << format_g17(row[i]);
    ss << "\n";
  }
  write_text(path, ss.str());
}

std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_csv(
    const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  if (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return {header, rows};
}

json make_manifest(const ScenarioConfig& cfg) {
  json m;
  m["scenario"] = cfg.name;
  m["version"] = "0.1.0";
  {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(cfg.raw.dump())));
    m["config_hash"] = std::string(buf);
  }
  m["grid"] = {{"n", cfg.grid.n}, {"R", cfg.grid.R}, {"dim", cfg.grid.dim}};
  m["mesh"] = {{"t_min", cfg.t_min}, {"t_max", cfg.t_max}, {"pts_per_decade", cfg.pts_per_decade}};
  m["seed"] = cfg.seed;
  m["stages"] = cfg.stages;
  return m;
}

}  // namespace pmx::io
