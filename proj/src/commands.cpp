#include "fickkin/commands.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <numbers>
#include <random>

#include "fickkin/cache.hpp"
#include "fickkin/collision.hpp"
#include "fickkin/errors.hpp"
#include "fickkin/fick_matrix.hpp"
#include "fickkin/fick_solver.hpp"
#include "fickkin/kinetic.hpp"
#include "fickkin/linear_operator.hpp"

namespace fickkin {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Context {
  const RunConfig& cfg;
  std::string stage;
  Json exit_extra = Json::object();
  std::unique_ptr<OperatorBundle> bundle;
  std::unique_ptr<LinearizedOperator> op;

  std::string out(const std::string& name) const { return cfg.out_dir + "/" + name; }

  OperatorBundle& operator_bundle() {
    if (!bundle) {
      stage = "operator";
      bundle = load_or_build(cfg, cfg.cache_dir);
      for (const auto& w : bundle->warnings) std::cerr << "warning: " << w << '\n';
    }
    return *bundle;
  }

  LinearizedOperator& linear_operator() {
    if (!op) {
      OperatorBundle& b = operator_bundle();
      op = std::make_unique<LinearizedOperator>(b.blocks, b.mix, b.grid, concentrations(cfg));
    }
    return *op;
  }
};

Json operator_json(const OperatorBundle& b) {
  Json j;
  j["cache_hit"] = b.blocks_cached;
  j["assembly_seconds"] = b.assembly_seconds;
  j["kept_events"] = b.kept_events;
  j["truncated_events"] = b.truncated_events;
  j["warnings"] = b.warnings;
  return j;
}

ConcentrationField initial_field(const RunConfig& cfg, const Eigen::VectorXd& m, int dim, int cells, double amplitude,
                                 int mode) {
  ConcentrationField f{TorusGrid(dim, cells), Eigen::MatrixXd(), concentrations(cfg), m};
  const Eigen::VectorXd w = amplitude * closure_direction(m);
  f.n.resize(m.size(), f.grid.size());
  for (int r = 0; r < f.grid.size(); ++r) {
    double prof = std::sin(kTwoPi * mode * f.grid.coord(r, 0));
    if (dim == 2) prof += 0.5 * std::sin(kTwoPi * mode * f.grid.coord(r, 1));
    f.n.col(r) = f.n_inf + prof * w;
  }
  return f;
}

FickReference kinetic_reference(const RunConfig& cfg, const FickAssembly& fa, const Eigen::VectorXd& m) {
  FickReference ref(fa.n, fa.a);
  ref.add_mode(cfg.kin_mode, cfg.kin_amplitude * closure_direction(m), Eigen::VectorXd::Zero(m.size()));
  return ref;
}

void cmd_constants(Context& cx, Json& rep) {
  cx.stage = "constants";
  const RunConfig& cfg = cx.cfg;
  Mixture mix = make_mixture(cfg);
  VelocityGrid grid = make_grid(cfg, mix);
  SpectralInputs in;
  in.c2 = cfg.c2;
  in.c_phi = cfg.cphi_lower;
  in.c_b = cfg.c_b;
  in.r = cfg.r;
  const LinearizedOperator* op = cfg.constants_operator ? &cx.linear_operator() : nullptr;
  cx.stage = "constants";
  const SpectralConstants c = explicit_constants(mix, concentrations(cfg), grid, in, op);
  rep["lambda0"] = c.lambda0;
  rep["lambda_i"] = c.lambda_i;
  rep["Lambda"] = c.Lambda;
  rep["eta0"] = c.eta0;
  rep["lambda_L"] = c.lambda_L;
  rep["C_L"] = c.C_L;
  rep["C_0"] = c.C_0;
  rep["C_2"] = c.C_2;
  rep["C_2_note"] = "C_2 is an external input, not derived (default 1)";
  rep["nu_min"] = c.nu_min;
  rep["c_inf"] = c.c_inf;
  rep["rho_inf"] = c.rho_inf;
  rep["c_b"] = c.c_b;
  if (op) {
    rep["lambda_num"] = c.lambda_num;
    rep["gap_ratio"] = c.lambda_L > 0.0 ? c.lambda_num / c.lambda_L : 0.0;
    rep["gap_bound_ok"] = c.lambda_num >= 0.9 * c.lambda_L;
  }
}

void cmd_operator(Context& cx, Json& rep) {
  const RunConfig& cfg = cx.cfg;
  LinearizedOperator& op = cx.linear_operator();
  cx.stage = "spectrum";
  const Spectrum& sp = op.spectrum();
  const int expected = cfg.species() + cfg.d + 1;
  rep["size"] = op.size();
  rep["near_zero"] = sp.near_zero;
  rep["expected_kernel_dim"] = expected;
  rep["lambda_num"] = sp.lambda_num;
  rep["principal_angle"] = sp.principal_angle;
  rep["op_norm"] = op.op_norm();
  rep["raw_kernel_residual"] = op.raw_kernel_residual();
  rep["analytic_gram_defect"] = op.analytic_gram_defect();
  rep["eigenvalues_top"] = to_json(Eigen::VectorXd(sp.eigenvalues.tail(std::min<Eigen::Index>(12, sp.eigenvalues.size()))));
  rep["operator"] = operator_json(*cx.bundle);
  if (sp.near_zero != expected)
    throw structural_error("kernel dimension " + std::to_string(sp.near_zero) + ", expected " + std::to_string(expected));
  if (sp.principal_angle > 1e-6) throw structural_error("near-null space deviates from the analytic kernel basis");
}

void cmd_fick_matrix(Context& cx, Json& rep) {
  const RunConfig& cfg = cx.cfg;
  LinearizedOperator& op = cx.linear_operator();
  cx.stage = "fick-matrix";
  const FickAssembly fa = assemble_fick(op);
  const EigenReport er = eigen_report(fa, op);
  const int N = cfg.species();
  CsvWriter csv(cx.out("fick_matrix.csv"), [&] {
    std::vector<std::string> h = {"species"};
    for (int j = 0; j < N; ++j) h.push_back("abar_" + std::to_string(j + 1));
    for (int j = 0; j < N; ++j) h.push_back("a_" + std::to_string(j + 1));
    return h;
  }());
  for (int i = 0; i < N; ++i) {
    std::vector<double> row = {static_cast<double>(i + 1)};
    for (int j = 0; j < N; ++j) row.push_back(fa.abar(i, j));
    for (int j = 0; j < N; ++j) row.push_back(fa.a(i, j));
    csv.row(row);
  }
  csv.close();
  rep["abar"] = to_json(fa.abar);
  rep["a"] = to_json(fa.a);
  rep["eigenvalues"] = to_json(fa.eigenvalues);
  rep["beta"] = to_json(er.beta);
  rep["a_beta"] = to_json(er.a_beta);
  rep["zero_eigenvalue"] = er.zero_eigenvalue;
  rep["kernel_residual"] = fa.kernel_residual;
  rep["symmetry_defect"] = fa.symmetry_defect;
  rep["C1"] = er.C1;
  rep["lambda_num"] = er.lambda_used;
  rep["lambda_A"] = er.lambda_A;
  rep["bound_ok"] = er.bound_ok;
  rep["negative_count"] = er.negative_count;
  rep["spread"] = er.spread;
  rep["a_spread"] = er.a_spread;
  const bool equal_beta = er.a_beta.size() > 0 && er.a_spread <= 1e-8;
  rep["spectrum"] = equal_beta ? "degenerate spectrum: equal β" : "distinct β";
  if (cfg.d == 2) {
    const LemmaReport lr = verify_lemma_cij(op);
    rep["lemma_cross_defect"] = lr.cross_defect;
    rep["lemma_k_defect"] = lr.k_defect;
    rep["lemma_diag_negative"] = lr.diag_negative;
  }
  rep["operator"] = operator_json(*cx.bundle);
  if (fa.kernel_residual > 1e-8) throw structural_error("abar (n o m) residual above 1e-8");
  if (fa.symmetry_defect > 1e-10) throw structural_error("abar is not symmetric");
  if (!er.ok()) throw structural_error("eigenvalue signature violated");
}

void cmd_verify(Context& cx, Json& rep) {
  const RunConfig& cfg = cx.cfg;
  OperatorBundle& b = cx.operator_bundle();
  const Eigen::VectorXd n = concentrations(cfg);
  std::vector<std::string> failures;

  cx.stage = "hypotheses";
  const HypothesisReport hr = validate_hypotheses(b.mix);
  rep["hypotheses"] = hr.summary();
  if (!hr.ok()) failures.push_back("hypotheses");

  cx.stage = "collision";
  CollisionStencil stencil(b.mix, b.grid);
  const GridFunction M = maxwellian_vector(b.mix, n, b.grid);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  GridFunction F = M;
  for (Eigen::Index k = 0; k < F.size(); ++k) F(k) *= 1.0 + u(rng);
  const CollisionResult qr = apply_Q(F, stencil, true);
  const double inv = invariant_defect(qr.Q, b.mix, b.grid);
  const CollisionResult qm = apply_Q(M, stencil, true);
  const double eq = qm.Q.cwiseAbs().maxCoeff() / M.cwiseAbs().maxCoeff();
  const double ent = entropy_sign(F, stencil);
  rep["invariant_defect"] = inv;
  rep["raw_invariant_defect"] = qr.raw_invariant_defect;
  rep["equilibrium_residual"] = eq;
  rep["entropy_dissipation"] = ent;
  if (inv > 1e-10) failures.push_back("collision invariants");
  if (eq > 1e-6) failures.push_back("equilibrium residual");
  if (ent > 1e-12) failures.push_back("entropy sign");

  cx.stage = "operator";
  LinearizedOperator& op = cx.linear_operator();
  const Spectrum& sp = op.spectrum();
  rep["near_zero"] = sp.near_zero;
  rep["principal_angle"] = sp.principal_angle;
  if (sp.near_zero != cfg.species() + cfg.d + 1 || sp.principal_angle > 1e-6) failures.push_back("kernel structure");

  cx.stage = "flux";
  const FickAssembly fa = assemble_fick(op);
  const Eigen::VectorXd g = closure_direction(b.mix.masses());
  const Eigen::VectorXd J = kinetic_flux(op, g);
  const double flux = (J - fa.a * g).norm() / std::max(J.norm(), 1e-300);
  rep["flux_consistency"] = flux;
  rep["symmetry_defect"] = fa.symmetry_defect;
  rep["kernel_residual"] = fa.kernel_residual;
  if (flux > 1e-8) failures.push_back("flux consistency");
  if (fa.symmetry_defect > 1e-10 || fa.kernel_residual > 1e-8) failures.push_back("fick matrix structure");
  rep["failures"] = failures;
  rep["seed"] = cfg.seed;
  if (!failures.empty()) throw structural_error("verification failed: " + failures.front());
}

Json decay_json(const DecayReport& d) {
  Json j;
  j["rate"] = d.rate;
  j["efold_time"] = d.efold_time;
  j["monotone"] = d.monotone;
  j["trivial"] = d.trivial;
  j["min_positivity"] = d.min_positivity;
  j["max_closure_drift"] = d.max_closure_drift;
  j["max_mean_drift"] = d.max_mean_drift;
  j["hs_initial"] = d.hs.front();
  j["hs_final"] = d.hs.back();
  j["s"] = d.s;
  return j;
}

DecayReport run_solve(Context& cx, Json& rep) {
  const RunConfig& cfg = cx.cfg;
  OperatorBundle& b = cx.operator_bundle();
  LinearizedOperator& op = cx.linear_operator();
  cx.stage = "solve";
  const FickAssembly fa = assemble_fick(op);
  ConcentrationField field = initial_field(cfg, b.mix.masses(), cfg.dx, cfg.cells, cfg.amplitude, cfg.mode);
  const InitialReport ir = validate_initial(field, cfg.delta, cfg.delta_s, cfg.s);
  rep["initial_hs"] = ir.hs;
  rep["initial_min"] = ir.min_value;
  if (!ir.ok()) throw domain_error("initial datum rejected: " + ir.failures.front());
  std::unique_ptr<QuasilinearProvider> ql;
  AbarProvider provider;
  const bool frozen = cfg.matrix_mode == "frozen";
  if (frozen) {
    provider = frozen_provider(fa.abar);
  } else {
    ql = std::make_unique<QuasilinearProvider>(b.blocks, b.mix, b.grid, cfg.quant_step);
    provider = [p = ql.get()](const Eigen::VectorXd& n) { return (*p)(n); };
  }
  FickSolver solver(provider, frozen);
  const DecayReport d = run_fick(field, solver, cfg.t_end, cfg.dt, cfg.s);

  const int N = cfg.species();
  std::vector<std::string> h = {"t"};
  for (int i = 0; i < N; ++i) h.push_back("l2_" + std::to_string(i + 1));
  h.insert(h.end(), {"hs", "closure_drift", "positivity"});
  CsvWriter ts(cx.out("fick_timeseries.csv"), h);
  for (std::size_t k = 0; k < d.t.size(); ++k) {
    std::vector<double> row = {d.t[k]};
    for (int i = 0; i < N; ++i) row.push_back(d.l2_species[k](i));
    row.insert(row.end(), {d.hs[k], d.closure[k], d.positivity[k]});
    ts.row(row);
  }
  ts.close();
  std::vector<std::string> hf = {"x"};
  if (cfg.dx == 2) hf.push_back("y");
  for (int i = 0; i < N; ++i) hf.push_back("n_" + std::to_string(i + 1));
  CsvWriter fin(cx.out("fick_final.csv"), hf);
  for (int r = 0; r < field.grid.size(); ++r) {
    std::vector<double> row = {field.grid.coord(r, 0)};
    if (cfg.dx == 2) row.push_back(field.grid.coord(r, 1));
    for (int i = 0; i < N; ++i) row.push_back(field.n(i, r));
    fin.row(row);
  }
  fin.close();
  rep["matrix_mode"] = cfg.matrix_mode;
  if (ql) rep["quasilinear_assemblies"] = ql->misses();
  rep["decay"] = decay_json(d);
  return d;
}

void cmd_solve(Context& cx, Json& rep) {
  const DecayReport d = run_solve(cx, rep);
  cx.exit_extra["degenerate"] = d.trivial;
}

void write_trajectory(const std::string& path, const Trajectory& tr) {
  CsvWriter csv(path, {"t", "l2", "dx", "dv", "surrogate", "flux_residual"});
  for (std::size_t k = 0; k < tr.t.size(); ++k)
    csv.row({tr.t[k], tr.parts[k].l2, tr.parts[k].dx, tr.parts[k].dv, tr.surrogate[k], tr.flux_error[k]});
  csv.close();
}

void cmd_kinetic(Context& cx, Json& rep) {
  const RunConfig& cfg = cx.cfg;
  OperatorBundle& b = cx.operator_bundle();
  LinearizedOperator& op = cx.linear_operator();
  cx.stage = "kinetic";
  const FickAssembly fa = assemble_fick(op);
  const FickReference ref = kinetic_reference(cfg, fa, b.mix.masses());
  const double eps = cfg.eps.front();
  KineticSimulator sim(op, fa, ref, eps, cfg.kin_cells);
  if (cfg.well_prepared) sim.set_well_prepared();
  const Trajectory tr = sim.run(cfg.kin_t_end, cfg.dt_factor * eps * eps, 1);
  write_trajectory(cx.out("kinetic_trajectory.csv"), tr);
  rep["eps"] = eps;
  rep["sup_flux_error"] = tr.sup_flux_error;
  rep["max_surrogate_ratio"] = tr.max_surrogate_ratio;
  rep["stable"] = tr.max_surrogate_ratio <= 2.0;

  cx.stage = "source";
  ConcentrationField field = initial_field(cfg, b.mix.masses(), 1, cfg.kin_cells, cfg.kin_amplitude, cfg.kin_mode);
  FickSolver solver(frozen_provider(fa.abar), true);
  const SourceReport sr =
      source_structure_run(field, solver, fa, eps, op, cfg.kin_t_end, cfg.kin_t_end / 200.0, 11, cfg.s);
  double control_max = 0.0;
  for (double c : sr.fluid_control) control_max = std::max(control_max, c);
  rep["pi_source_ratio"] = sr.max_pi_ratio;
  rep["pi_source_ok"] = sr.max_pi_ratio <= 1e-8;
  rep["fluid_control"] = sr.fluid_control;
  rep["fluid_control_decreasing"] = sr.control_decreasing;
  rep["fluid_control_threshold"] = cfg.c_fluid * cfg.delta_fluid;
  rep["fluid_control_margin"] = cfg.c_fluid * cfg.delta_fluid - control_max;
  cx.exit_extra["degenerate"] = ref.trivial();
}

void cmd_study(Context& cx, Json& rep) {
  const RunConfig& cfg = cx.cfg;
  if (cfg.eps.size() < 3) throw config_error("kinetic.eps needs at least 3 values");
  Json solve_rep;
  const DecayReport d = run_solve(cx, solve_rep);
  rep["solve"] = solve_rep;
  cx.stage = "kinetic";
  LinearizedOperator& op = cx.linear_operator();
  const FickAssembly fa = assemble_fick(op);
  const FickReference ref = kinetic_reference(cfg, fa, cx.bundle->mix.masses());
  const EpsStudy st = eps_convergence_study(op, fa, ref, cfg.eps, cfg.kin_t_end, cfg.kin_cells, cfg.dt_factor,
                                            cfg.well_prepared);
  for (std::size_t k = 0; k < st.runs.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "kinetic_eps_%g.csv", st.eps[k]);
    write_trajectory(cx.out(name), st.runs[k]);
  }
  rep["eps"] = st.eps;
  rep["flux_error"] = st.flux_error;
  rep["order"] = st.order;
  rep["stability_margins"] = st.stability;
  rep["monotone"] = st.monotone;
  rep["inconclusive"] = !st.monotone;
  rep["degenerate"] = st.degenerate;
  rep["well_prepared"] = st.well_prepared;
  cx.exit_extra["degenerate"] = st.degenerate || d.trivial;
  cx.exit_extra["order"] = st.order;
  for (double s : st.stability)
    if (s > 2.0) throw numerical_error("surrogate norm exceeded twice its initial value");
}

}  // namespace

CommandResult run_command(const std::string& verb, const RunConfig& cfg) {
  CommandResult res;
  Context cx{cfg, verb, Json::object(), nullptr, nullptr};
  res.report = report_header(verb, cfg.hash);
  try {
    if (verb == "constants")
      cmd_constants(cx, res.report);
    else if (verb == "operator")
      cmd_operator(cx, res.report);
    else if (verb == "fick-matrix")
      cmd_fick_matrix(cx, res.report);
    else if (verb == "verify")
      cmd_verify(cx, res.report);
    else if (verb == "solve")
      cmd_solve(cx, res.report);
    else if (verb == "kinetic")
      cmd_kinetic(cx, res.report);
    else if (verb == "study")
      cmd_study(cx, res.report);
    else
      throw config_error("unknown verb '" + verb + "'");
  } catch (const Error& e) {
    res.exit_code = exit_code(e.kind());
    res.stage = cx.stage;
    res.message = e.what();
  } catch (const std::exception& e) {
    res.exit_code = 4;
    res.stage = cx.stage;
    res.message = e.what();
  }
  Json ex = report_header(verb, cfg.hash);
  ex["status"] = res.exit_code == 0 ? "ok" : "failed";
  ex["exit_code"] = res.exit_code;
  if (res.exit_code != 0) {
    ex["stage"] = res.stage;
    ex["error"] = res.message;
  }
  for (auto& [k, v] : cx.exit_extra.items()) ex[k] = v;
  try {
    if (res.exit_code == 0) write_json(cx.out(verb + ".json"), res.report);
    write_json(cx.out("exit.json"), ex);
  } catch (const Error& e) {
    if (res.exit_code == 0) {
      res.exit_code = exit_code(e.kind());
      res.stage = "output";
      res.message = e.what();
    }
  }
  return res;
}

}  // namespace fickkin
