#include "magtopt/cli.hpp"

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "magtopt/cell_problems.hpp"
#include "magtopt/errors.hpp"
#include "magtopt/parallel.hpp"
#include "magtopt/topo_derivative.hpp"
#include "magtopt/util.hpp"
#include "magtopt/vtk.hpp"

namespace magtopt::cli {

namespace fs = std::filesystem;

RunConfig load_run_config(const config::Config& c) {
  RunConfig rc;
  rc.kind = problem::benchmark_from_string(c.get_string("problem", "square"));
  rc.resolution = c.get_int("resolution", 32, 8, 1024);
  rc.params = problem::default_params(rc.kind);
  auto& p = rc.params;
  p.magnetization = c.get_double("magnetization", p.magnetization, -1e8, 1e8);
  p.coil_current = c.get_double("coil_current", p.coil_current, -1e10, 1e10);
  p.b_max = c.get_double("b_max", p.b_max, -100.0, 100.0);
  p.target_width = c.get_double("target_width", p.target_width, 1e-6, 10.0);
  p.target_p0 = c.get_double("target_p0", p.target_p0, -10.0, 10.0);
  p.target_p1 = c.get_double("target_p1", p.target_p1, -10.0, 10.0);
  if (!(p.target_p0 < p.target_p1)) throw ConfigError("target_p0 must be below target_p1");
  rc.target_path = c.get_path("target.path");

  rc.curve = c.get_string("curve", "marrocco");
  if (rc.curve != "marrocco" && rc.curve != "linear" && rc.curve != "spline")
    throw ConfigError("curve must be marrocco, linear or spline");
  rc.marrocco.alpha = c.get_double("marrocco.alpha", rc.marrocco.alpha, 0.5, 50.0);
  rc.marrocco.c = c.get_double("marrocco.c", rc.marrocco.c, 1e-8, 1.0);
  rc.marrocco.tau = c.get_double("marrocco.tau", rc.marrocco.tau, 1e-12, 1e30);
  rc.linear_nu = c.get_double("linear.nu", rc.linear_nu, 1e-12, material::kNuAir);
  rc.spline_path = c.get_path("spline.path");
  if (rc.curve == "spline" && rc.spline_path.empty()) throw ConfigError("curve = spline needs spline.path");
  rc.validate_s_max = c.get_double("validate.s_max", rc.validate_s_max, 1e-3, 1e6);

  rc.j2_enabled = c.get_bool("j2", true);
  rc.table_case1 = c.get_path("tables.case1");
  rc.table_case2 = c.get_path("tables.case2");
  rc.t_max = c.get_double("tables.t_max", rc.t_max, 0.0, 100.0);
  rc.t_samples = c.get_int("tables.samples", rc.t_samples, 2, 100000);
  rc.disc.radius = c.get_double("tables.radius", rc.disc.radius, 2.0, 1e6);
  rc.disc.h0 = c.get_double("tables.h0", rc.disc.h0, 1e-3, 0.5);
  rc.disc.grading = c.get_double("tables.grading", rc.disc.grading, 1.0, 2.0);

  rc.optimizer.kappa_start = c.get_double("kappa_start", rc.optimizer.kappa_start, 1e-12, 1.0);
  rc.optimizer.kappa_min = c.get_double("kappa_min", rc.optimizer.kappa_min, 1e-300, 1.0);
  rc.optimizer.theta_tol_deg = c.get_double("theta_tol", rc.optimizer.theta_tol_deg, 1e-12, 180.0);
  rc.optimizer.max_iter = c.get_int("max_iter", rc.optimizer.max_iter, 0, 1000000);
  rc.newton.tol_abs = c.get_double("newton.tol_abs", rc.newton.tol_abs, 0.0, 1.0);
  rc.newton.tol_rel = c.get_double("newton.tol_rel", rc.newton.tol_rel, 0.0, 1.0);
  rc.newton.max_iter = c.get_int("newton.max_iter", rc.newton.max_iter, 1, 10000);
  rc.snapshot_every = c.get_int("snapshot_every", rc.snapshot_every, 0, 1000000);
  rc.design_psi = c.get_path("design.psi");

  rc.out_dir = c.get_path("out");
  if (rc.out_dir.empty()) rc.out_dir = "magtopt_out";
  rc.seed = static_cast<std::uint64_t>(c.get_double("seed", 1.0, 0.0, 9.007199254740992e15));
  rc.workers = c.get_int("workers", 0, 0, 4096);

  if (const auto unused = c.unused_keys(); !unused.empty()) {
    std::string list;
    for (const auto& k : unused) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("unknown config keys: " + list);
  }
  rc.hash = c.hash({"out", "workers"});
  return rc;
}

material::ReluctivityCurve make_curve(const RunConfig& rc) {
  if (rc.curve == "linear") return material::ReluctivityCurve::linear(rc.linear_nu);
  if (rc.curve == "spline") return material::ReluctivityCurve::load_spline_csv(rc.spline_path);
  return material::ReluctivityCurve::marrocco(rc.marrocco);
}

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SolverError& e) {
    throw SolverError(fmt::format("[{}] {}", name, e.what()));
  } catch (const IoError& e) {
    throw IoError(fmt::format("[{}] {}", name, e.what()));
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("[{}] {}", name, e.what()));
  }
}

void setup_logging() {
  auto logger = spdlog::get("magtopt");
  if (!logger) logger = spdlog::stderr_color_mt("magtopt");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("MAGTOPT_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

std::string header_comment(const RunConfig& rc, std::string_view what) {
  return fmt::format("magtopt {} config={}", what, rc.hash);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::vector<double> read_psi(const fs::path& path, const mesh::TriMesh& m) {
  const auto csv = read_numeric_csv(path);
  if (csv.header.size() != 1 || csv.header[0] != "psi") throw IoError(path.string() + ": expected header 'psi'");
  if (csv.rows.size() != m.nodes.size())
    throw ConfigError(fmt::format("{}: {} values for a mesh with {} nodes", path.string(), csv.rows.size(),
                                  m.nodes.size()));
  std::vector<double> psi(csv.rows.size());
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = csv.rows[i][0];
  return psi;
}

void write_psi(const fs::path& path, const std::vector<double>& psi, const std::string& comment) {
  std::string out = "# " + comment + "\npsi\n";
  for (double v : psi) out += fmt17(v) + "\n";
  write_text_file(path, out);
}

std::vector<double> element_field(const mesh::TriMesh& m, const topo::TopoDerivField& f) {
  std::vector<double> out(m.tris.size(), 0.0);
  for (std::size_t i = 0; i < f.design_elements.size(); ++i) out[f.design_elements[i]] = f.element_values[i];
  return out;
}

std::vector<double> as_double(const std::vector<char>& v) { return {v.begin(), v.end()}; }

struct Tables {
  std::optional<cell::J2Table> case1;
  std::optional<cell::J2Table> case2;
  topo::J2Tables view() const { return {case1 ? &*case1 : nullptr, case2 ? &*case2 : nullptr}; }
};

cell::J2Table obtain_table(const RunConfig& rc, const material::ReluctivityCurve& curve, cell::Case c,
                           const fs::path& path) {
  if (!path.empty()) {
    auto t = cell::read_j2_table(path);
    if (t.cell_case != c) throw ConfigError(path.string() + ": table is for the other case");
    if (t.curve_hash != curve.hash())
      throw ConfigError(path.string() + ": table was built for curve " + t.curve_hash + ", not " + curve.hash());
    return t;
  }
  spdlog::info("building case {} table: {} samples up to t = {}", cell::to_string(c), rc.t_samples, rc.t_max);
  return cell::build_j2_table(curve, c, cell::make_t_grid(rc.t_max, rc.t_samples), rc.disc);
}

Tables obtain_tables(const RunConfig& rc, const material::ReluctivityCurve& curve) {
  Tables t;
  if (!rc.j2_enabled) {
    spdlog::info("J2 term disabled");
    return t;
  }
  stage("tables", [&] {
    t.case1 = obtain_table(rc, curve, cell::Case::I, rc.table_case1);
    t.case2 = obtain_table(rc, curve, cell::Case::II, rc.table_case2);
  });
  return t;
}

problem::BenchmarkProblem make_problem(const RunConfig& rc) {
  return stage("setup", [&] {
    auto bp = problem::build_benchmark_problem(rc.kind, rc.resolution, rc.params);
    if (!rc.target_path.empty()) problem::load_target_csv(bp.objective, rc.target_path);
    return bp;
  });
}

int cmd_validate_material(const RunConfig& rc) {
  const auto curve = stage("curve", [&] { return make_curve(rc); });
  const auto grid = material::log_grid(1e-6, rc.validate_s_max, 10000);
  const auto report = material::validate_assumptions(curve, grid);
  ensure_dir(rc.out_dir);
  std::string text = "# " + header_comment(rc, "material-report") + "\n";
  text += "curve = " + curve.kind() + "\ncurve_hash = " + curve.hash() + "\n" + report.to_text();
  write_text_file(rc.out_dir / "material_report.txt", text);
  std::cout << text;
  if (!report.assumption4_ok)
    spdlog::warn("delta_nu = {} does not exceed max(R1, R2) = {}; continuing", report.delta_nu,
                 std::max(report.threshold_r1, report.threshold_r2));
  if (!report.bounds_ok || !report.c3_smoothness_ok) {
    spdlog::error("curve violates the reluctivity bounds or smoothness on [{}, {}]", report.s_min, report.s_max);
    return kConfigError;
  }
  return kOk;
}

int cmd_build_tables(const RunConfig& rc) {
  const auto curve = stage("curve", [&] { return make_curve(rc); });
  const auto grid = cell::make_t_grid(rc.t_max, rc.t_samples);
  ensure_dir(rc.out_dir);
  for (const auto c : {cell::Case::I, cell::Case::II}) {
    const auto table = stage("tables", [&] { return cell::build_j2_table(curve, c, grid, rc.disc); });
    const auto path = rc.out_dir / fmt::format("j2_case{}.csv", c == cell::Case::I ? 1 : 2);
    cell::write_j2_table(table, path, header_comment(rc, "j2-table"));
    spdlog::info("wrote {} ({} rows)", path.string(), table.t.size());
  }
  return kOk;
}

struct Evaluation {
  std::vector<double> psi;
  fem::StateSolution state;
  std::vector<double> adjoint;
  topo::TopoDerivField field;
  double J = 0.0;
};

Evaluation evaluate_design(const RunConfig& rc, const problem::BenchmarkProblem& bp,
                           const material::ReluctivityCurve& curve, const Tables& tables, bool with_derivative) {
  opt::TopologyProblem tp(bp, curve, tables.view(), rc.newton);
  Evaluation ev;
  ev.psi = rc.design_psi.empty() ? opt::initial_levelset(tp.space()) : read_psi(rc.design_psi, bp.mesh);
  ev.J = stage("state", [&] { return tp.objective(ev.psi); });
  ev.state = tp.state(ev.psi);
  if (with_derivative) {
    ev.adjoint = stage("adjoint", [&] { return tp.adjoint(ev.psi); });
    ev.field = stage("derivative", [&] { return tp.derivative_field(ev.psi); });
  }
  return ev;
}

int cmd_solve(const RunConfig& rc) {
  const auto curve = stage("curve", [&] { return make_curve(rc); });
  const auto bp = make_problem(rc);
  const auto ev = evaluate_design(rc, bp, curve, {}, false);
  ensure_dir(rc.out_dir);
  const fem::FemSystem sys(bp.mesh);
  io::write_vtk(rc.out_dir / "state.vtk", bp.mesh, header_comment(rc, "state"), {{"psi", ev.psi}, {"u", ev.state.u}},
                {{"ferro", as_double(ev.state.ferro)}, {"B", fem::flux_density_magnitude(sys, ev.state.u)}});
  const auto summary = fmt::format("# {}\nJ = {}\nnewton_iterations = {}\nnodes = {}\nelements = {}\n",
                                   header_comment(rc, "solve"), fmt17(ev.J), ev.state.newton_iterations,
                                   bp.mesh.nodes.size(), bp.mesh.tris.size());
  write_text_file(rc.out_dir / "solve.txt", summary);
  std::cout << summary;
  return kOk;
}

int cmd_export(const RunConfig& rc) {
  const auto curve = stage("curve", [&] { return make_curve(rc); });
  const auto bp = make_problem(rc);
  const auto tables = obtain_tables(rc, curve);
  const auto ev = evaluate_design(rc, bp, curve, tables, true);
  ensure_dir(rc.out_dir);
  mesh::write_mesh(bp.mesh, rc.out_dir / "mesh.txt", header_comment(rc, "mesh"));
  const fem::FemSystem sys(bp.mesh);
  io::write_vtk(rc.out_dir / "fields.vtk", bp.mesh, header_comment(rc, "fields"),
                {{"psi", ev.psi}, {"u", ev.state.u}, {"p", ev.adjoint}, {"td_nodal", ev.field.nodal}},
                {{"ferro", as_double(ev.state.ferro)},
                 {"B", fem::flux_density_magnitude(sys, ev.state.u)},
                 {"td", element_field(bp.mesh, ev.field)}});
  spdlog::info("exported {} nodes, {} elements, J = {}", bp.mesh.nodes.size(), bp.mesh.tris.size(), ev.J);
  return kOk;
}

bool dir_nonempty(const fs::path& dir) {
  std::error_code ec;
  if (!fs::exists(dir, ec)) return false;
  if (!fs::is_directory(dir, ec)) return true;
  return fs::directory_iterator(dir, ec) != fs::directory_iterator();
}

int cmd_optimize(const RunConfig& rc, bool force) {
  if (dir_nonempty(rc.out_dir) && !force) {
    spdlog::error("output directory {} is not empty; pass --force to overwrite", rc.out_dir.string());
    return kIoError;
  }
  ensure_dir(rc.out_dir);
  const auto curve = stage("curve", [&] { return make_curve(rc); });
  const auto bp = make_problem(rc);
  const auto tables = obtain_tables(rc, curve);
  opt::TopologyProblem tp(bp, curve, tables.view(), rc.newton);
  const auto psi0 = rc.design_psi.empty() ? opt::initial_levelset(tp.space()) : read_psi(rc.design_psi, bp.mesh);

  const auto log_path = rc.out_dir / "iterations.csv";
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw IoError("cannot open " + log_path.string());
  log << "# " << header_comment(rc, "iterations") << "\nk,J,theta_deg,kappa,ferro_fraction\n";
  const fem::FemSystem& sys = tp.system();
  auto snapshot = [&](const std::string& name, const std::vector<double>& psi) {
    const auto& s = tp.state(psi);
    io::write_vtk(rc.out_dir / name, bp.mesh, header_comment(rc, "snapshot"), {{"psi", psi}, {"u", s.u}},
                  {{"ferro", as_double(s.ferro)}, {"B", fem::flux_density_magnitude(sys, s.u)}});
  };
  auto on_iteration = [&](const opt::OptState& st, const opt::IterationRecord& r) {
    log << r.k << ',' << fmt17(r.J) << ',' << fmt17(r.theta_deg) << ',' << fmt17(r.kappa) << ','
        << fmt17(r.ferro_fraction) << '\n';
    log.flush();
    spdlog::info("k = {:4d}  J = {:.6e}  theta = {:8.4f} deg  kappa = {:.3e}  ferro = {:.4f}", r.k, r.J, r.theta_deg,
                 r.kappa, r.ferro_fraction);
    if (rc.snapshot_every > 0 && r.k % rc.snapshot_every == 0) snapshot(fmt::format("snapshot_{:05d}.vtk", r.k), st.psi);
  };
  const auto result = stage("optimize", [&] { return opt::run(tp, psi0, rc.optimizer, on_iteration); });
  if (!log) throw IoError("failed writing " + log_path.string());

  const auto field = stage("derivative", [&] { return tp.derivative_field(result.psi); });
  const auto& s = tp.state(result.psi);
  write_psi(rc.out_dir / "final_psi.csv", result.psi, header_comment(rc, "final-psi"));
  io::write_vtk(rc.out_dir / "final_design.vtk", bp.mesh, header_comment(rc, "final-design"),
                {{"psi", result.psi}, {"u", s.u}, {"td_nodal", field.nodal}},
                {{"ferro", as_double(s.ferro)},
                 {"B", fem::flux_density_magnitude(sys, s.u)},
                 {"td", element_field(bp.mesh, field)}});
  const auto& h = result.history;
  const auto summary = fmt::format(
      "# {}\nstatus = {}\niterations = {}\nJ_initial = {}\nJ_final = {}\nferro_fraction = {}\nstate_solves = {}\n"
      "j2_enabled = {}\nmax_abs_j2 = {}\nclamped_lookups = {}\n",
      header_comment(rc, "summary"), opt::to_string(result.status), result.k, fmt17(h.front().J), fmt17(h.back().J),
      fmt17(h.back().ferro_fraction), tp.state_solves(), rc.j2_enabled ? "true" : "false", fmt17(tp.max_abs_j2()),
      tp.clamped_lookups());
  write_text_file(rc.out_dir / "summary.txt", summary);
  spdlog::info("J2 contribution: max |J2| = {} over the run ({} clamped lookups)", tp.max_abs_j2(),
               tp.clamped_lookups());
  spdlog::info("{} after {} iterations, J {} -> {}", opt::to_string(result.status), result.k, h.front().J,
               h.back().J);
  return kOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Topological-derivative topology optimization for 2D nonlinear magnetostatics"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  bool force = false, linear = false;
  int workers = -1;
  app.add_option("--config", config_path, "flat key = value configuration file");
  app.add_option("--out", out_dir, "output directory (overrides the config key 'out')");
  app.add_flag("--force", force, "allow writing into a non-empty output directory");
  app.add_option("--workers", workers, "worker threads for parallel kernels")->check(CLI::Range(1, 4096));
  app.add_flag("--linear", linear, "replace the material law by the linear stub");
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : std::vector<std::pair<const char*, const char*>>{
           {"validate-material", "check the reluctivity curve against the material assumptions"},
           {"build-tables", "precompute the J2 lookup tables for both cases"},
           {"solve", "solve the state equation for one design"},
           {"optimize", "run the level-set descent"},
           {"export", "write mesh, state, adjoint and derivative fields"},
           {"selftest", "run the randomized property checks"}}) {
    subs.push_back(app.add_subcommand(name, help));
    subs.back()->fallthrough();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    config::Config cfg = config_path.empty() ? config::Config{} : config::Config::load(config_path);
    if (linear) cfg.set("curve", "linear");
    if (!out_dir.empty()) cfg.set("out", fs::absolute(out_dir).string());
    RunConfig rc = load_run_config(cfg);
    if (workers > 0) rc.workers = workers;
    if (rc.workers > 0) set_worker_count(rc.workers);
    spdlog::debug("config hash {}, {} workers", rc.hash, worker_count());
    if (cmd == "validate-material") return cmd_validate_material(rc);
    if (cmd == "build-tables") return cmd_build_tables(rc);
    if (cmd == "solve") return cmd_solve(rc);
    if (cmd == "optimize") return cmd_optimize(rc, force);
    if (cmd == "export") return cmd_export(rc);
    const int failures = run_selftest(rc.seed, std::cout);
    return failures == 0 ? kOk : kSolverError;
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kConfigError;
  } catch (const IoError& e) {
    spdlog::error("I/O error: {}", e.what());
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("I/O error: {}", e.what());
    return kIoError;
  } catch (const SolverError& e) {
    spdlog::error("solver failure: {}", e.what());
    return kSolverError;
  } catch (const std::invalid_argument& e) {
    spdlog::error("configuration error: {}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("solver failure: {}", e.what());
    return kSolverError;
  }
}

}  // namespace magtopt::cli
