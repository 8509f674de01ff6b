#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pmx/envelopes.hpp"
#include "pmx/frozen.hpp"
#include "pmx/io.hpp"
#include "pmx/kato.hpp"
#include "pmx/model.hpp"
#include "pmx/oracle.hpp"
#include "pmx/parametrix.hpp"

using nlohmann::json;
using namespace pmx;

namespace {

struct RunState {
  io::ScenarioConfig cfg;
  std::string out;
  std::optional<model::ScaleProfile> profile;
  std::optional<parametrix::ParametrixSolver> solver;
  json summary = json::object();

  const model::ScaleProfile& get_profile() {
    if (!profile) profile = model::build_profile(cfg.model, cfg.t_min, cfg.pts_per_decade);
    return *profile;
  }
  parametrix::ParametrixSolver& get_solver() {
    if (!solver) solver.emplace(cfg.model, cfg.grid, cfg.solve);
    return *solver;
  }
};

// stage failures carry the inner error code in the message
[[noreturn]] void stage_failed(const std::string& stage, const std::string& inner) {
  throw PmxError(ErrorCode::STAGE_FAILED, stage + ": " + inner);
}

void stage_validate(RunState& st) {
  auto plan = model::SamplePlan::standard(st.cfg.model.dim());
  auto rep = model::validate_model(st.cfg.model, plan);
  json j;
  j["passed"] = rep.passed;
  j["a1"] = rep.a1;
  j["a2"] = rep.a2;
  j["a3"] = rep.a3;
  j["symmetry_ok"] = rep.symmetry_ok;
  j["beta_hat"] = rep.beta_hat;
  j["levy_integral"] = rep.levy_integral;
  j["qstar_growth"] = rep.qstar_growth;
  j["failures"] = rep.failures;
  io::write_json(st.out + "/validate.json", j);
  st.summary["validate"] = rep.passed ? "pass" : "fail";
  if (!rep.passed) stage_failed("validate", "assumptions not satisfied");
}

void stage_profile(RunState& st) {
  const auto& pr = st.get_profile();
  json j;
  j["alpha"] = pr.alpha;
  j["sigma"] = pr.sigma;
  j["c1"] = pr.c1;
  j["c2"] = pr.c2;
  j["beta_declared"] = pr.beta_declared;
  io::write_json(st.out + "/profile.json", j);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < pr.t_ladder.size(); ++i)
    rows.push_back({pr.t_ladder[i], pr.rho_table[i]});
  io::write_csv(st.out + "/profile.csv", {"t", "rho"}, rows);
  st.summary["profile"] = "pass";
}

// evaluation ladder: mesh times clear of the mesh floor, where the time
// quadrature has full support
std::vector<double> eval_ladder(const parametrix::TimeMesh& mesh) {
  std::vector<double> ts;
  for (double t : mesh.t)
    if (t >= 30 * mesh.t.front()) ts.push_back(t);
  if (ts.empty()) ts.assign(mesh.t.end() - std::max(1, mesh.size() / 2), mesh.t.end());
  return ts;
}

void stage_solve(RunState& st) {
  auto& solver = st.get_solver();
  const int y_mid = static_cast<int>(solver.y_indices().size()) / 2;
  const int N = st.cfg.grid.n;

  std::vector<std::string> header = {"t"};
  for (int j = 0; j < N; ++j) header.push_back("x" + std::to_string(j));
  std::vector<std::vector<double>> prows, diag;
  bool ok = true;
  const double mass_tol = st.cfg.tol("mass", 1e-3);
  for (double t : eval_ladder(st.cfg.solve.mesh)) {
    auto p = solver.solve_column(t, y_mid);
    auto mass = solver.mass_column(t);
    double mdef = 0, pmin = 0, pmax = 0;
    for (double m : mass) mdef = std::max(mdef, std::abs(m - 1.0));
    for (double v : p) {
      pmin = std::min(pmin, v);
      pmax = std::max(pmax, v);
    }
    ok = ok && mdef < mass_tol && pmin >= -1e-6 * pmax;
    std::vector<double> row = {t};
    row.insert(row.end(), p.begin(), p.end());
    prows.push_back(std::move(row));
    diag.push_back({t, mdef, pmin, pmax});
  }
  io::write_csv(st.out + "/solve_p.csv", header, prows);
  io::write_csv(st.out + "/solve_diag.csv", {"t", "mass_defect", "p_min", "p_max"}, diag);
  json j;
  j["terms"] = solver.phi().terms;
  j["term_sup"] = solver.phi().term_sup;
  j["y_index"] = solver.y_indices()[y_mid];
  j["checks_ok"] = ok;
  io::write_json(st.out + "/solve_summary.json", j);
  st.summary["solve"] = ok ? "pass" : "fail";
  if (!ok) stage_failed("solve", "mass/positivity checks failed");
}

void stage_envelope(RunState& st) {
  auto& solver = st.get_solver();
  const auto& pr = st.get_profile();
  const auto& mesh = st.cfg.solve.mesh;
  auto h = envelopes::g_hierarchy(st.cfg.model, pr, mesh, st.cfg.grid, st.cfg.lambda);
  const int y_mid = static_cast<int>(solver.y_indices().size()) / 2;
  const double y = st.cfg.grid.coord(solver.y_indices()[y_mid]);

  std::vector<int> eval;
  for (int i = 0; i < mesh.size(); ++i)
    if (mesh.t[i] >= 30 * mesh.t.front()) eval.push_back(i);
  if (eval.size() < 4)
    for (int i = std::max(0, mesh.size() - 4); i < mesh.size(); ++i) eval.push_back(i);

  std::vector<envelopes::FitSample> fits;
  std::vector<int> holdout;
  for (std::size_t k = 0; k < eval.size(); ++k) {
    const int i = eval[k];
    if (k % 2 == 0)
      fits.push_back({mesh.t[i], y, solver.solve_column(mesh.t[i], y_mid)});
    else
      holdout.push_back(i);
  }
  auto par = envelopes::fit_envelope_constants(fits, h, pr);

  double worst_lower = 1e300, worst_upper = 1e300;
  for (int i : holdout) {
    const double t = mesh.t[i];
    auto p = solver.solve_column(t, y_mid);
    const double rho = pr.rho(t);
    int ti = 0;
    for (int k = 0; k < mesh.size(); ++k)
      if (std::abs(mesh.t[k] - t) < std::abs(mesh.t[ti] - t)) ti = k;
    auto expq = envelopes::exp_measure(h.Q[ti], 12);
    auto upper = envelopes::upper_envelope_row(rho, par, expq);
    for (int jx = 0; jx < st.cfg.grid.n; ++jx) {
      const double x = st.cfg.grid.coord(jx);
      const double lo = envelopes::eval_lower_bound(x - y, rho, par);
      const int off = ((jx - solver.y_indices()[y_mid]) % st.cfg.grid.n + st.cfg.grid.n +
                       st.cfg.grid.n / 2) %
                      st.cfg.grid.n;
      const double up = upper[off];
      if (lo > 0) worst_lower = std::min(worst_lower, p[jx] / lo);
      if (p[jx] > 1e-12 * rho) worst_upper = std::min(worst_upper, up / p[jx]);
    }
  }
  const bool ok = worst_lower > 0.95 && worst_upper > 0.95;
  json j;
  j["a1"] = par.a1;
  j["a2"] = par.a2;
  j["a3"] = par.a3;
  j["a4"] = par.a4;
  j["holdout_lower_ratio"] = worst_lower;
  j["holdout_upper_ratio"] = worst_upper;
  j["checks_ok"] = ok;
  io::write_json(st.out + "/envelope.json", j);
  st.summary["envelope"] = ok ? "pass" : "fail";
  if (!ok) stage_failed("envelope", "held-out sandwich violated");
}

void stage_kato(RunState& st) {
  json out = json::array();
  std::vector<double> deltas;
  for (int k = 1; k <= 8; ++k) deltas.push_back(std::pow(2.0, -k));
  std::vector<double> ts;
  for (int k = 1; k <= 7; ++k) ts.push_back(std::pow(2.0, -k));

  auto alphas = st.cfg.kato_alphas.empty() ? std::vector<double>{1.0} : st.cfg.kato_alphas;
  for (double alpha : alphas) {
    auto prof = model::build_profile(model::make_stable_model(1, alpha));
    for (const auto& mc : st.cfg.kato_measures) {
      auto xs = kato::default_x_samples(mc.spec);
      auto dyn = kato::dynkin_criterion(prof, mc.spec, xs);
      auto kat = kato::kato_criterion(prof, mc.spec, xs, deltas);
      auto suf = kato::sufficient_condition_check(mc.spec, xs, alpha, 1);
      json e;
      e["measure"] = mc.name;
      e["alpha"] = alpha;
      e["dynkin"] = {{"value", dyn.value}, {"divergent", dyn.divergent}};
      e["kato"] = {{"vanishing", kat.vanishing}, {"divergent", kat.divergent}};
      e["sufficient"] = {{"d_hat", suf.d_hat}, {"holds", suf.holds}};
      switch (kato::classify(dyn, kat)) {
        case kato::ClassVerdict::IN_SK: e["verdict"] = "IN_SK"; break;
        case kato::ClassVerdict::IN_SD_ONLY: e["verdict"] = "IN_SD_ONLY"; break;
        case kato::ClassVerdict::OUT: e["verdict"] = "OUT"; break;
        case kato::ClassVerdict::INCONCLUSIVE: e["verdict"] = "INCONCLUSIVE"; break;
      }
      // direct check against the reference kernel: closed form at alpha = 1,
      // quadrature oracle (atomic measures only) otherwise
      const bool direct_ok = std::abs(alpha - 1.0) < 1e-12 ||
                             (mc.spec.density == kato::DensityPart::NONE &&
                              mc.spec.atoms.size() <= 4);
      if (direct_ok) {
        auto p = [alpha](double s, double x, double y) {
          return oracle::closed_form_stable(alpha, 1.0, s, x - y);
        };
        auto rep = kato::direct_class_check(p, mc.spec, ts, xs);
        e["direct"] = {{"divergent", rep.divergent}, {"vanishing", rep.vanishing}};
        e["finiteness_agreement"] = rep.divergent == dyn.divergent;
      }
      out.push_back(std::move(e));
    }
  }
  bool ok = true;
  for (const auto& e : out)
    if (e.contains("finiteness_agreement")) ok = ok && e["finiteness_agreement"].get<bool>();
  io::write_json(st.out + "/kato.json", json{{"entries", out}, {"checks_ok", ok}});
  st.summary["kato"] = ok ? "pass" : "fail";
  if (!ok) stage_failed("kato", "criterion vs direct finiteness disagreement");
}

void stage_oracle(RunState& st) {
  const auto& cfg = st.cfg;
  // dedicated solver with the oracle stride: p(t, x0, .) needs a dense y-row
  auto opt = cfg.solve;
  opt.y_stride = cfg.oracle.y_stride;
  parametrix::ParametrixSolver solver(cfg.model, cfg.grid, opt);
  const auto& yi = solver.y_indices();
  const int M = static_cast<int>(yi.size()), N = cfg.grid.n, s = opt.y_stride;

  // coarse row p(t, x0, y_i), then periodic cubic interpolation to the grid
  std::vector<double> coarse(M);
  for (int i = 0; i < M; ++i) {
    auto col = solver.solve_column(cfg.oracle.t, i);
    const int jx = static_cast<int>(std::llround((cfg.oracle.x0 + cfg.grid.R) / cfg.grid.h()));
    coarse[i] = col[((jx % N) + N) % N];
  }
  std::vector<double> row(N);
  for (int j = 0; j < N; ++j) {
    const double pos = static_cast<double>(j) / s;
    const int i = static_cast<int>(pos);
    const double x = pos - i;
    auto cv = [&](int k) { return coarse[((k % M) + M) % M]; };
    row[j] = -x * (x - 1) * (x - 2) / 6 * cv(i - 1) + (x + 1) * (x - 1) * (x - 2) / 2 * cv(i) -
             (x + 1) * x * (x - 2) / 2 * cv(i + 1) + (x + 1) * x * (x - 1) / 6 * cv(i + 2);
  }

  auto ens = oracle::simulate_paths(cfg.model, {cfg.oracle.t}, pt(cfg.oracle.x0),
                                    cfg.oracle.n_paths, cfg.oracle.eps, cfg.seed);
  auto samples = ens.axis(0);
  auto rep = oracle::empirical_vs_kernel(samples, cfg.grid, row);
  const double ks_tol = cfg.tol("ks", 0.02);
  const bool ok = rep.ks < ks_tol;

  std::vector<std::vector<double>> rows;
  rows.reserve(samples.size());
  for (double x : samples) rows.push_back({x});
  io::write_csv(st.out + "/oracle_positions.csv", {"x"}, rows);
  json j;
  j["ks"] = rep.ks;
  j["sup_bulk"] = rep.sup_bulk;
  j["tail_model"] = rep.tail_model;
  j["tail_empirical"] = rep.tail_empirical;
  j["n_paths"] = rep.n;
  j["ks_tol"] = ks_tol;
  j["checks_ok"] = ok;
  io::write_json(st.out + "/oracle.json", j);
  st.summary["oracle"] = ok ? "pass" : "fail";
  if (!ok) stage_failed("oracle", "KS distance above tolerance");
}

void run_stages(RunState& st, const std::vector<std::string>& stages) {
  io::write_json(st.out + "/manifest.json", io::make_manifest(st.cfg));
  for (const auto& s : stages) {
    try {
      if (s == "validate") stage_validate(st);
      else if (s == "profile") stage_profile(st);
      else if (s == "solve") stage_solve(st);
      else if (s == "envelope") stage_envelope(st);
      else if (s == "kato") stage_kato(st);
      else if (s == "oracle") stage_oracle(st);
      else throw PmxError(ErrorCode::CONFIG_INVALID, "unknown stage: " + s);
    } catch (const PmxError& e) {
      if (st.summary.find(s) == st.summary.end()) st.summary[s] = "fail";
      io::write_json(st.out + "/summary.json", st.summary);
      throw;
    }
  }
  io::write_json(st.out + "/summary.json", st.summary);
}

int do_compare(const std::string& dir_a, const std::string& dir_b, double tol) {
  auto ma = io::read_json(dir_a + "/manifest.json");
  auto mb = io::read_json(dir_b + "/manifest.json");
  const int na = ma["grid"]["n"], nb = mb["grid"]["n"];
  // a refinement by 2 in n is comparable on the shared nodes
  const int stride = (nb == 2 * na) ? 2 : 1;
  if (ma["grid"]["R"] != mb["grid"]["R"] || ma["grid"]["dim"] != mb["grid"]["dim"] ||
      (na != nb && stride == 1) || ma["mesh"] != mb["mesh"])
    throw PmxError(ErrorCode::GRID_MISMATCH, "run directories use different grids/meshes");

  json diff;
  bool large = false;
  auto [ha, ra] = io::read_csv(dir_a + "/solve_p.csv");
  auto [hb, rb] = io::read_csv(dir_b + "/solve_p.csv");
  if (ra.size() != rb.size() || (stride == 1 && ha != hb))
    throw PmxError(ErrorCode::GRID_MISMATCH, "solve_p.csv layouts differ");
  double sup = 0, mass = 0, pmax = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    double mrow = 0;
    for (std::size_t j = 1; j < ra[i].size(); ++j) {
      const double b = rb[i][1 + (j - 1) * stride];
      sup = std::max(sup, std::abs(ra[i][j] - b));
      pmax = std::max(pmax, std::abs(ra[i][j]));
      mrow += ra[i][j] - b;
    }
    mass = std::max(mass, std::abs(mrow));
  }
  diff["p_sup_diff"] = sup;
  diff["p_sup_rel"] = pmax > 0 ? sup / pmax : 0.0;
  diff["mass_row_diff"] = mass;
  large = large || (pmax > 0 && sup / pmax > tol);
  diff["large"] = large;
  std::cout << diff.dump(2) << std::endl;
  return 0;
}

int code_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::CONFIG_INVALID: return 2;
    case ErrorCode::STAGE_FAILED: return 3;
    case ErrorCode::GRID_MISMATCH: return 4;
    default: return 5;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parametrix pipeline runner"};
  app.require_subcommand(1);

  std::string config, out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> stages_flag, tol_overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "scenario JSON file")->required();
    sub->add_option("--out", out, "artifact directory");
    sub->add_option("--seed", seed, "override the scenario seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--stages", stages_flag, "override the stage list")->delimiter(',');
    sub->add_option("--tol-override", tol_overrides, "tolerance overrides, key=value");
  };

  const std::vector<std::string> stage_names = {"validate", "profile", "solve",
                                                "envelope", "kato",    "oracle"};
  std::map<std::string, CLI::App*> subs;
  for (const auto& s : stage_names) {
    subs[s] = app.add_subcommand(s, "run the " + s + " stage");
    add_common(subs[s]);
  }

  auto* cmp = app.add_subcommand("compare", "diff two artifact directories");
  std::string dir_a, dir_b;
  double cmp_tol = 1e-2;
  cmp->add_option("run_a", dir_a)->required();
  cmp->add_option("run_b", dir_b)->required();
  cmp->add_option("--tol", cmp_tol, "relative sup-diff flag threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmp->parsed()) return do_compare(dir_a, dir_b, cmp_tol);
    RunState st;
    st.cfg = io::load_scenario(config);
    if (seed_set) st.cfg.seed = seed;
    io::apply_tol_override(st.cfg, tol_overrides);
    st.out = out.empty() ? "runs/" + st.cfg.name : out;

    std::vector<std::string> stages = stages_flag;
    if (stages.empty()) {
      for (const auto& s : stage_names)
        if (subs[s]->parsed()) stages = {s};
    }
    // stage dependency: envelope builds on solve artifacts
    if (stages == std::vector<std::string>{"envelope"} && !st.cfg.has_model)
      throw PmxError(ErrorCode::CONFIG_INVALID, "envelope requires a model");
    run_stages(st, stages);
    return 0;
  } catch (const PmxError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return code_of(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 5;
  }
}
