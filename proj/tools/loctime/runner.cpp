#include "runner.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "loctime/errors.hpp"
#include "loctime/parallel.hpp"

#ifndef LOCTIME_VERSION
#define LOCTIME_VERSION "0.0.0"
#endif

namespace loctime::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream o;
  o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return o.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

struct Outcome {
  int code = kOk;
  std::string message;
};

// Runs the experiment and maps library errors onto exit codes.
Outcome execute(const ExperimentConfig& config, std::optional<ExperimentResult>& result) {
  try {
    result = run_experiment(config);
    if (!result->failure.empty()) return {kAccuracy, result->failure};
    return {};
  } catch (const AdmissibilityError& e) {
    return {kAdmissibility, e.what()};
  } catch (const AccuracyError& e) {
    std::ostringstream msg;
    msg << e.what() << " (best estimate " << e.best_estimate() << ", error estimate " << e.error_estimate() << ")";
    return {kAccuracy, msg.str()};
  } catch (const ValidationError& e) {
    return {kValidation, e.what()};
  } catch (const std::exception& e) {
    return {kInternal, e.what()};
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fractional Brownian local times: analytic S-transforms, chaos kernels and Monte Carlo checks"};
  app.set_version_flag("--version", LOCTIME_VERSION);

  std::string kind;
  std::string config_path;
  ExperimentConfig flags;
  app.add_option("kind", kind, "Experiment: ops, stransform, kernels, mc, convergence, selftest")->required();
  app.add_option("--config", config_path, "JSON config file or a previous manifest.json; flags override it");
  auto* o_H = app.add_option("--H", flags.H, "Hurst index in (0, 1)");
  auto* o_d = app.add_option("--d", flags.d, "Dimension");
  auto* o_N = app.add_option("--N", flags.N, "Number of removed chaos orders");
  auto* o_eps = app.add_option("--eps", flags.eps, "Regularization width (0 = none)");
  auto* o_sched = app.add_option("--eps-schedule", flags.eps_schedule, "Widths for the convergence experiment");
  auto* o_f = app.add_option("--f", flags.f, "Test function: zero | gaussian:amp=,center=,width= | hermite:n=,amp=,center=,scale=");
  auto* o_tol = app.add_option("--tol", flags.tol, "Absolute quadrature tolerance");
  auto* o_order = app.add_option("--max-order", flags.max_order, "Highest chaos order (kernels)");
  auto* o_m = app.add_option("--m", flags.m, "Time steps of the Monte Carlo grid");
  auto* o_paths = app.add_option("--paths", flags.paths, "Monte Carlo paths");
  auto* o_seed = app.add_option("--seed", flags.seed, "Random seed");
  auto* o_gen = app.add_option("--generator", flags.generator, "whitenoise or cholesky");
  auto* o_out = app.add_option("--out", flags.out, "Output directory");

  std::vector<std::string> argv{"loctime"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::vector<const char*> raw;
  for (const auto& a : argv) raw.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::Success& e) {
    // --help and --version.
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kValidation;
  }

  ExperimentConfig config;
  try {
    if (!config_path.empty()) config = parse(read_file(config_path));
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
  config.kind = kind;
  if (o_H->count()) config.H = flags.H;
  if (o_d->count()) config.d = flags.d;
  if (o_N->count()) config.N = flags.N;
  if (o_eps->count()) config.eps = flags.eps;
  if (o_sched->count()) config.eps_schedule = flags.eps_schedule;
  if (o_f->count()) config.f = flags.f;
  if (o_tol->count()) config.tol = flags.tol;
  if (o_order->count()) config.max_order = flags.max_order;
  if (o_m->count()) config.m = flags.m;
  if (o_paths->count()) config.paths = flags.paths;
  if (o_seed->count()) config.seed = flags.seed;
  if (o_gen->count()) config.generator = flags.generator;
  if (o_out->count()) config.out = flags.out;

  try {
    validate(config);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  const fs::path dir(config.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    err << "error: cannot create output directory '" << config.out << "': " << ec.message() << "\n";
    return kValidation;
  }

  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<ExperimentResult> result;
  Outcome outcome = execute(config, result);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json outputs = json::array();
  try {
    if (result) {
      std::ostringstream csv;
      csv << csv_header(config.kind) << "\n";
      for (const ResultRow& row : result->rows) csv << csv_line(config.kind, row) << "\n";
      write_file(dir / "results.csv", csv.str());
      outputs.push_back("results.csv");
      if (result->plot) {
        write_file(dir / "plot.svg", render_svg(*result->plot));
        outputs.push_back("plot.svg");
      }
    }
    json manifest{{"version", LOCTIME_VERSION},
                  {"kind", config.kind},
                  {"config", to_json(config)},
                  {"seed", config.seed},
                  {"threads", worker_count()},
                  {"started_utc", started},
                  {"finished_utc", utc_now()},
                  {"wall_seconds", wall},
                  {"csv_header", csv_header(config.kind)},
                  {"outputs", outputs},
                  {"exit_code", outcome.code},
                  {"status", outcome.code == kOk ? "ok" : outcome.message}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  if (outcome.code != kOk) {
    err << "error: " << outcome.message << "\n";
    return outcome.code;
  }
  if (result)
    for (const ResultRow& row : result->rows)
      out << row.id << " " << row.quantity << " = " << std::setprecision(10) << row.value << " (err "
          << std::setprecision(3) << row.err << ")\n";
  out << "wrote " << (dir / "results.csv").string() << "\n";
  return kOk;
}

}  // namespace loctime::cli
