#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dhmpc/bench_hvac.hpp"
#include "dhmpc/closed_loop.hpp"
#include "dhmpc/coarsening.hpp"
#include "dhmpc/eds.hpp"
#include "dhmpc/instance_io.hpp"
#include "dhmpc/lp_solver.hpp"
#include "dhmpc/mpc_model.hpp"
#include "run_manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitModel = 1;   // infeasible / solver / model errors
constexpr int kExitUsage = 2;

int thread_count() {
  if (const char* env = std::getenv("DHMPC_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string num(double v) {
  if (v == 0.0) v = 0.0;  // normalize negative zero
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string z_header(int nx, int nu) {
  std::string h;
  for (int c = 0; c < nx; ++c) h += ",x" + std::to_string(c + 1);
  for (int c = 0; c < nu; ++c) h += ",u" + std::to_string(c + 1);
  return h;
}

std::string z_row(const dhmpc::Vector& z) {
  std::string row;
  for (int c = 0; c < z.size(); ++c) row += "," + num(z[c]);
  return row;
}

void write_solution_csv(const std::string& path, const dhmpc::Vector& z, int N, int nx,
                        int nu) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "stage" << z_header(nx, nu) << "\n";
  const int n = nx + nu;
  for (int i = 0; i < N; ++i)
    out << i + 1 << z_row(z.segment(static_cast<Eigen::Index>(i) * n, n)) << "\n";
}

struct CmdTimer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// ---- solve ---------------------------------------------------------------

struct SolveArgs {
  std::string instance;
  std::string out;
};

int cmd_solve(const SolveArgs& args, const std::vector<std::string>& argv) {
  CmdTimer timer;
  const dhmpc::MpcProblem problem = dhmpc::load_instance(args.instance);
  const dhmpc::CompactLp lp = dhmpc::to_compact(problem);
  const dhmpc::PrimalDualSolution sol = dhmpc::solve(lp);
  if (sol.status != dhmpc::SolveStatus::Optimal) {
    std::cerr << "solve: " << dhmpc::to_string(sol.status) << "\n";
    return kExitModel;
  }
  const dhmpc::Dims dims = problem.dims();
  write_solution_csv(args.out, sol.z, dims.N, dims.nx, dims.nu);

  dhmpc::tools::RunManifest manifest;
  manifest.command = "solve";
  manifest.argv = argv;
  manifest.config = {{"instance", args.instance},
                     {"objective", sol.objective},
                     {"iterations", sol.iterations}};
  manifest.wall_time_s = timer.seconds();
  manifest.outputs = {fs::path(args.out).filename().string()};
  const fs::path dir = fs::path(args.out).parent_path();
  manifest.write(dir.empty() ? "." : dir.string());

  std::cout << "objective " << num(sol.objective) << "\n";
  return kExitOk;
}

// ---- coarsen ---------------------------------------------------------------

struct CoarsenArgs {
  std::string instance;
  std::string grid = "diffusing";
  int K = 0;
  bool guard = false;
  std::string out;
};

int cmd_coarsen(const CoarsenArgs& args, const std::vector<std::string>& argv) {
  CmdTimer timer;
  if (args.grid == "full" && args.K > 0) {
    std::cerr << "coarsen: --K conflicts with --grid full\n";
    return kExitUsage;
  }
  const dhmpc::MpcProblem problem = dhmpc::load_instance(args.instance);
  const dhmpc::CompactLp lp = dhmpc::to_compact(problem);

  dhmpc::CoarseGrid grid;
  if (args.grid == "full") {
    grid = dhmpc::grid_full_then_sparse(lp.N, lp.N);
  } else {
    if (args.K < 1) {
      std::cerr << "coarsen: --K is required for --grid " << args.grid << "\n";
      return kExitUsage;
    }
    const dhmpc::GridScheme scheme = dhmpc::parse_grid_scheme(args.grid);
    grid = args.guard ? dhmpc::grid_feasibility_guard(scheme, lp.N, args.K)
                      : dhmpc::make_grid(scheme, lp.N, args.K);
  }

  const dhmpc::Prior prior = dhmpc::Prior::zero(lp);
  const dhmpc::CoarseLp coarse = dhmpc::coarsen(lp, grid, prior);
  const dhmpc::PrimalDualSolution csol = dhmpc::solve(coarse.lp);
  if (csol.status != dhmpc::SolveStatus::Optimal) {
    std::cerr << "coarsen: coarse problem " << dhmpc::to_string(csol.status) << "\n";
    return kExitModel;
  }
  const auto [z_prime, lambda_prime] = dhmpc::project(csol, prior, coarse.operators());
  (void)lambda_prime;

  fs::create_directories(args.out);
  const dhmpc::Dims dims = problem.dims();
  {
    json jg;
    jg["scheme"] = args.grid;
    jg["N"] = grid.N;
    jg["K"] = grid.K();
    jg["guard"] = args.guard;
    jg["points"] = grid.points;
    std::ofstream out(fs::path(args.out) / "grid.json");
    out << jg.dump(2) << "\n";
  }
  write_solution_csv((fs::path(args.out) / "coarse_solution.csv").string(), csol.z,
                     coarse.lp.N, dims.nx, dims.nu);
  write_solution_csv((fs::path(args.out) / "projected_solution.csv").string(), z_prime,
                     lp.N, dims.nx, dims.nu);

  dhmpc::tools::RunManifest manifest;
  manifest.command = "coarsen";
  manifest.argv = argv;
  manifest.config = {{"instance", args.instance}, {"grid", args.grid},    {"K", grid.K()},
                     {"guard", args.guard},       {"points", grid.points}};
  manifest.config["projected_objective"] = lp.p.dot(z_prime);
  manifest.wall_time_s = timer.seconds();
  manifest.outputs = {"grid.json", "coarse_solution.csv", "projected_solution.csv"};
  manifest.write(args.out);
  return kExitOk;
}

// ---- sensitivity -----------------------------------------------------------

struct SensitivityArgs {
  std::string instance;  // optional; default synthetic central-plant benchmark
  int N = 288;
  int windows = 4;
  int samples = 200;
  double sigma = 10.0;
  std::uint64_t seed = 0;
  std::vector<int> stages = {1};  // 1-based stages to export
  std::string out;
};

int cmd_sensitivity(const SensitivityArgs& args, const std::vector<std::string>& argv) {
  CmdTimer timer;
  dhmpc::MpcProblem problem = [&] {
    if (!args.instance.empty()) return dhmpc::load_instance(args.instance);
    dhmpc::HvacConfig cfg;
    cfg.N = args.N;
    cfg.N_sim = 1;
    cfg.seed = args.seed;
    return dhmpc::generate_instance(cfg).first;
  }();
  const dhmpc::CompactLp lp = dhmpc::to_compact(problem);
  const dhmpc::Dims dims = problem.dims();
  if (args.windows < 1 || lp.N % args.windows != 0) {
    std::cerr << "sensitivity: --windows must divide the horizon N = " << lp.N << "\n";
    return kExitUsage;
  }

  // Perturbed channels: the three load series (electrical, CW, HW) when the
  // plant has the benchmark layout, every w channel otherwise.
  std::vector<dhmpc::PerturbationChannel> channels;
  if (dims.nw == 6) {
    channels = {{true, 0, args.sigma}, {true, 4, args.sigma}, {true, 5, args.sigma}};
  } else {
    for (int c = 0; c < dims.nw; ++c) channels.push_back({true, c, args.sigma});
  }

  fs::create_directories(args.out);
  std::ofstream samples_csv(fs::path(args.out) / "samples.csv");
  samples_csv << "sample_id,window,stage,component,value\n";
  std::ofstream summary_csv(fs::path(args.out) / "summary.csv");
  summary_csv << "window,window_lo,window_hi,samples,discarded,stage,mean_deviation\n";

  const int wlen = lp.N / args.windows;
  const std::string names = z_header(dims.nx, dims.nu);
  std::vector<std::string> comp_names;
  {
    std::string rest = names;
    while (!rest.empty()) {
      const auto pos = rest.find(',', 1);
      comp_names.push_back(rest.substr(1, pos == std::string::npos ? pos : pos - 1));
      rest = pos == std::string::npos ? "" : rest.substr(pos);
    }
  }

  for (int w = 0; w < args.windows; ++w) {
    dhmpc::PerturbationExperimentSpec spec;
    spec.window_lo = w * wlen;
    spec.window_hi = (w + 1) * wlen - 1;
    spec.channels = channels;
    spec.samples = args.samples;
    spec.seed = args.seed + static_cast<std::uint64_t>(w);
    const auto result = dhmpc::perturbation_experiment(lp, dims, spec, thread_count());

    for (size_t s = 0; s < result.z.size(); ++s)
      for (int stage1 : args.stages)
        for (int c = 0; c < lp.n; ++c)
          samples_csv << s << "," << w + 1 << "," << stage1 << "," << comp_names[c] << ","
                      << num(result.z[s][(stage1 - 1) * lp.n + c]) << "\n";

    for (int stage1 : args.stages)
      summary_csv << w + 1 << "," << spec.window_lo + 1 << "," << spec.window_hi + 1 << ","
                  << result.z.size() << "," << result.discarded << "," << stage1 << ","
                  << num(dhmpc::mean_stage_deviation(result, stage1 - 1, lp.n)) << "\n";
  }

  dhmpc::tools::RunManifest manifest;
  manifest.command = "sensitivity";
  manifest.argv = argv;
  manifest.config = {{"N", lp.N},           {"windows", args.windows},
                     {"samples", args.samples}, {"sigma", args.sigma},
                     {"stages", args.stages}};
  if (!args.instance.empty()) manifest.config["instance"] = args.instance;
  manifest.seed = args.seed;
  manifest.wall_time_s = timer.seconds();
  manifest.outputs = {"samples.csv", "summary.csv"};
  manifest.write(args.out);
  return kExitOk;
}

// ---- closedloop ------------------------------------------------------------

struct ClosedLoopArgs {
  std::string bench = "hvac";
  std::vector<std::string> schemes = {"full", "equal", "fts", "diffusing"};
  int scenarios = 10;
  std::uint64_t seed = 0;
  int N = 288;
  int N_sim = 288;
  int K = 30;
  bool no_guard = false;
  std::string prior = "zero";
  std::string out;
};

int cmd_closedloop(const ClosedLoopArgs& args, const std::vector<std::string>& argv) {
  CmdTimer timer;
  if (args.bench != "hvac") {
    std::cerr << "closedloop: unknown benchmark " << args.bench << "\n";
    return kExitUsage;
  }
  std::vector<dhmpc::ControllerConfig> cfgs;
  for (const std::string& name : args.schemes) {
    dhmpc::ControllerConfig cc;
    cc.scheme = dhmpc::parse_controller_scheme(name);
    cc.K = args.K;
    cc.guard = !args.no_guard;
    cc.prior = args.prior == "shifted" ? dhmpc::PriorPolicy::ShiftedPrevious
                                       : dhmpc::PriorPolicy::Zero;
    cc.horizon = args.N;
    cfgs.push_back(cc);
  }

  std::vector<dhmpc::Scenario> scenarios;
  for (int s = 0; s < args.scenarios; ++s) {
    dhmpc::HvacConfig cfg;
    cfg.N = args.N;
    cfg.N_sim = args.N_sim;
    cfg.seed = args.seed + static_cast<std::uint64_t>(s);
    scenarios.push_back(dhmpc::generate_instance(cfg).second);
  }

  fs::create_directories(args.out);
  const dhmpc::Dims dims = scenarios.front().base_stage->validate();

  // Run the matrix, writing one trace per (scenario, scheme).
  std::vector<dhmpc::SchemeScenarioResult> rows(scenarios.size() * cfgs.size());
  const int nthreads = std::min<int>(thread_count(), static_cast<int>(scenarios.size()));
  auto worker = [&](int w) {
    for (size_t i = w; i < scenarios.size(); i += nthreads) {
      for (size_t c = 0; c < cfgs.size(); ++c) {
        const auto trace = dhmpc::run_closed_loop(scenarios[i], cfgs[c], args.N_sim);
        const std::string trace_name = "trace_s" + std::to_string(scenarios[i].id) + "_" +
                                       cfgs[c].name() + ".csv";
        std::ofstream out(fs::path(args.out) / trace_name);
        out << "step,cost_step,cost_cum,solve_ms" << z_header(dims.nx, dims.nu) << "\n";
        for (size_t t = 0; t < trace.steps.size(); ++t) {
          const auto& step = trace.steps[t];
          out << t + 1 << "," << num(step.cost_step) << "," << num(step.cost_cum) << ","
              << num(step.solve_ms) << z_row(step.z1) << "\n";
        }
        auto& row = rows[i * cfgs.size() + c];
        row.scheme = cfgs[c].name();
        row.scenario_id = scenarios[i].id;
        row.cost = trace.cumulative_cost;
        row.mean_solve_ms = trace.mean_solve_ms();
        row.total_solve_ms = trace.total_solve_ms;
      }
    }
  };
  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nthreads; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }

  dhmpc::SchemeComparison cmp;
  cmp.rows = rows;

  json report;
  report["rows"] = json::array();
  for (const auto& row : cmp.rows)
    report["rows"].push_back({{"scheme", row.scheme},
                              {"scenario", row.scenario_id},
                              {"cost", row.cost},
                              {"mean_solve_ms", row.mean_solve_ms},
                              {"total_solve_ms", row.total_solve_ms}});
  report["schemes"] = json::array();
  std::string full_name;
  for (const auto& cfg : cfgs)
    if (cfg.scheme == dhmpc::ControllerScheme::Full) full_name = cfg.name();
  std::vector<std::string> coarse_names;
  for (const auto& cfg : cfgs)
    if (cfg.scheme != dhmpc::ControllerScheme::Full) coarse_names.push_back(cfg.name());
  for (const auto& cfg : cfgs) {
    json js;
    js["name"] = cfg.name();
    js["mean_cost"] = cmp.mean_cost(cfg.name());
    js["mean_solve_ms"] = cmp.mean_solve_ms(cfg.name());
    if (!full_name.empty() && cfg.name() != full_name)
      js["relative_cost_increase_vs_full"] = cmp.relative_increase(cfg.name(), full_name);
    if (cfg.scheme != dhmpc::ControllerScheme::Full)
      js["wins_among_coarse"] = cmp.win_count(cfg.name(), coarse_names);
    report["schemes"].push_back(js);
  }

  std::ofstream rep(fs::path(args.out) / "report.json");
  rep << report.dump(2) << "\n";

  dhmpc::tools::RunManifest manifest;
  manifest.command = "closedloop";
  manifest.argv = argv;
  manifest.config = {{"bench", args.bench},     {"schemes", args.schemes},
                     {"scenarios", args.scenarios}, {"N", args.N},
                     {"N_sim", args.N_sim},     {"K", args.K},
                     {"guard", !args.no_guard}, {"prior", args.prior}};
  manifest.seed = args.seed;
  manifest.wall_time_s = timer.seconds();
  manifest.outputs = {"report.json"};
  manifest.write(args.out);
  return kExitOk;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  int N = 288;
  int N_sim = 288;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_bench(const BenchArgs& args, const std::vector<std::string>& argv) {
  CmdTimer timer;
  dhmpc::HvacConfig cfg;
  cfg.N = args.N;
  cfg.N_sim = args.N_sim;
  cfg.seed = args.seed;
  const auto profiles = dhmpc::synth_profiles(cfg, cfg.N_sim + cfg.N, cfg.seed);
  auto [problem, scenario] = dhmpc::generate_instance(cfg, profiles);

  fs::create_directories(args.out);
  dhmpc::save_instance(problem, (fs::path(args.out) / "instance.json").string());
  dhmpc::save_profiles(profiles, (fs::path(args.out) / "profiles.csv").string());

  dhmpc::tools::RunManifest manifest;
  manifest.command = "bench";
  manifest.argv = argv;
  manifest.config = {{"N", args.N}, {"N_sim", args.N_sim}};
  manifest.seed = args.seed;
  manifest.wall_time_s = timer.seconds();
  manifest.outputs = {"instance.json", "profiles.csv"};
  manifest.write(args.out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dhmpc: structured-LP MPC with time-domain coarsening"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  CLI::App* solve_cmd = app.add_subcommand("solve", "solve an instance at full resolution");
  solve_cmd->add_option("--instance", solve_args.instance, "instance JSON")->required();
  solve_cmd->add_option("--out", solve_args.out, "solution CSV path")->required();

  CoarsenArgs coarsen_args;
  CLI::App* coarsen_cmd =
      app.add_subcommand("coarsen", "coarsen an instance, solve and project");
  coarsen_cmd->add_option("--instance", coarsen_args.instance, "instance JSON")->required();
  coarsen_cmd->add_option("--grid", coarsen_args.grid, "equal|fts|diffusing|full")
      ->check(CLI::IsMember({"equal", "fts", "diffusing", "full"}));
  coarsen_cmd->add_option("--K", coarsen_args.K, "number of coarse points");
  coarsen_cmd->add_flag("--guard", coarsen_args.guard, "force M_2 = 2");
  coarsen_cmd->add_option("--out", coarsen_args.out, "output directory")->required();

  SensitivityArgs sens_args;
  CLI::App* sens_cmd =
      app.add_subcommand("sensitivity", "Monte-Carlo perturbation windows");
  sens_cmd->add_option("--instance", sens_args.instance,
                       "instance JSON (default: synthetic plant)");
  sens_cmd->add_option("--N", sens_args.N, "horizon for the synthetic plant");
  sens_cmd->add_option("--windows", sens_args.windows, "number of equal windows");
  sens_cmd->add_option("--samples", sens_args.samples, "samples per window");
  sens_cmd->add_option("--sigma", sens_args.sigma, "perturbation std deviation");
  sens_cmd->add_option("--seed", sens_args.seed, "RNG seed");
  sens_cmd->add_option("--stages", sens_args.stages, "1-based stages to export");
  sens_cmd->add_option("--out", sens_args.out, "output directory")->required();

  ClosedLoopArgs cl_args;
  CLI::App* cl_cmd = app.add_subcommand("closedloop", "receding-horizon comparison");
  cl_cmd->add_option("--bench", cl_args.bench, "benchmark name (hvac)");
  cl_cmd->add_option("--schemes", cl_args.schemes, "full,equal,fts,diffusing")->delimiter(',');
  cl_cmd->add_option("--scenarios", cl_args.scenarios, "number of scenarios");
  cl_cmd->add_option("--seed", cl_args.seed, "base seed");
  cl_cmd->add_option("--N", cl_args.N, "prediction horizon");
  cl_cmd->add_option("--N-sim", cl_args.N_sim, "simulation horizon");
  cl_cmd->add_option("--K", cl_args.K, "coarse points for the coarse schemes");
  cl_cmd->add_flag("--no-guard", cl_args.no_guard, "disable the feasibility guard");
  cl_cmd->add_option("--prior", cl_args.prior, "zero|shifted")
      ->check(CLI::IsMember({"zero", "shifted"}));
  cl_cmd->add_option("--out", cl_args.out, "output directory")->required();

  BenchArgs bench_args;
  CLI::App* bench_cmd = app.add_subcommand("bench", "emit a benchmark instance");
  bench_cmd->add_option("--N", bench_args.N, "prediction horizon");
  bench_cmd->add_option("--N-sim", bench_args.N_sim, "simulation horizon");
  bench_cmd->add_option("--seed", bench_args.seed, "profile seed");
  bench_cmd->add_option("--out", bench_args.out, "output directory")->required();

  std::vector<std::string> raw(argv, argv + argc);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(solve_args, raw);
    if (coarsen_cmd->parsed()) return cmd_coarsen(coarsen_args, raw);
    if (sens_cmd->parsed()) return cmd_sensitivity(sens_args, raw);
    if (cl_cmd->parsed()) return cmd_closedloop(cl_args, raw);
    if (bench_cmd->parsed()) return cmd_bench(bench_args, raw);
  } catch (const dhmpc::ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModel;
  } catch (const dhmpc::StepInfeasible& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModel;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModel;
  }
  return kExitUsage;
}
