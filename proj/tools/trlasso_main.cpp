// trlasso: generate, solve, and analyze truncated sparse regression problems.
#include <CLI11.hpp>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>

#include "trunclasso/analysis.hpp"
#include "trunclasso/errors.hpp"

using nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

struct CliError {
  int code;
  std::string type;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& type,
                       const std::string& message) {
  throw CliError{code, type, message};
}

// A config file mirrors the long flag names; unknown keys are rejected and
// flags given on the command line win over file values.
struct ConfigBinding {
  CLI::Option* opt;
  std::function<void(const json&)> set;
};

void apply_config(const std::string& path,
                  const std::map<std::string, ConfigBinding>& keys) {
  if (path.empty()) return;
  std::ifstream is(path);
  if (!is) fail(kExitInput, "ParseError", "cannot open config file: " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    fail(kExitInput, "ParseError", std::string("config: ") + e.what());
  }
  if (!j.is_object())
    fail(kExitInput, "ParseError", "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto it = keys.find(key);
    if (it == keys.end())
      fail(kExitInput, "ParseError", "unknown config key: " + key);
    if (it->second.opt != nullptr && it->second.opt->count() > 0) continue;
    try {
      it->second.set(value);
    } catch (const json::exception& e) {
      fail(kExitInput, "ParseError",
           "config key '" + key + "': " + e.what());
    }
  }
}

std::string shortest(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, p};
}

trl::TruncationSet parse_set(const std::string& text) {
  return trl::TruncationSet::parse(text);
}

struct SolverFlags {
  trl::SolverConfig config;
  std::string config_file;
  CLI::Option *o_sigma, *o_lambda, *o_radius, *o_steps, *o_step_size, *o_seed,
      *o_trace;

  void attach(CLI::App* cmd) {
    o_sigma = cmd->add_option("--lambda-sigma", config.sigma,
                              "noise multiplier in the default penalty "
                              "sigma*sqrt(log(n)/m)");
    o_lambda = cmd->add_option("--lambda", config.lambda,
                               "l1 penalty (overrides --lambda-sigma)");
    o_radius = cmd->add_option("--radius", config.radius,
                               "residual ball radius per sqrt(m)");
    o_steps = cmd->add_option("--steps", config.steps, "PSGD iteration count");
    o_step_size = cmd->add_option("--step-size", config.step_size,
                                  "PSGD step size");
    o_seed = cmd->add_option("--seed", config.seed, "random seed");
    o_trace = cmd->add_flag("--trace", config.record_trace,
                            "record the objective along the run");
  }

  void bind(std::map<std::string, ConfigBinding>& keys) {
    keys["lambda-sigma"] = {o_sigma, [this](const json& v) {
                              config.sigma = v.get<double>();
                            }};
    keys["lambda"] = {o_lambda, [this](const json& v) {
                        config.lambda = v.get<double>();
                      }};
    keys["radius"] = {o_radius, [this](const json& v) {
                        config.radius = v.get<double>();
                      }};
    keys["steps"] = {o_steps, [this](const json& v) {
                       config.steps = v.get<long>();
                     }};
    keys["step-size"] = {o_step_size, [this](const json& v) {
                           config.step_size = v.get<double>();
                         }};
    keys["seed"] = {o_seed, [this](const json& v) {
                      config.seed = v.get<std::uint64_t>();
                    }};
    keys["trace"] = {o_trace, [this](const json& v) {
                       config.record_trace = v.get<bool>();
                     }};
  }
};

void write_or_print(const json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::fputs(text.c_str(), stdout);
    return;
  }
  std::ofstream os(out);
  if (!os) fail(kExitInput, "ParseError", "cannot write " + out);
  os << text;
}

void cmd_gen(CLI::App* app) {
  auto* cmd = app->add_subcommand("gen", "generate a truncated dataset");
  struct Opts {
    long n = 200, k = 5, m = 1000;
    std::string set = "[0,inf]";
    std::uint64_t seed = 0;
    std::string out;
    std::string config_file;
  };
  auto opts = std::make_shared<Opts>();
  auto* o_n = cmd->add_option("--n", opts->n, "dimension");
  auto* o_k = cmd->add_option("--k", opts->k, "sparsity of the spike vector");
  auto* o_m = cmd->add_option("--m", opts->m, "sample count");
  auto* o_set = cmd->add_option("--set", opts->set, "truncation set");
  auto* o_seed = cmd->add_option("--seed", opts->seed, "random seed");
  auto* o_out = cmd->add_option("--out", opts->out, "output directory");
  cmd->add_option("--config", opts->config_file, "JSON config file");

  cmd->callback([opts, o_n, o_k, o_m, o_set, o_seed, o_out] {
    std::map<std::string, ConfigBinding> keys{
        {"n", {o_n, [&](const json& v) { opts->n = v.get<long>(); }}},
        {"k", {o_k, [&](const json& v) { opts->k = v.get<long>(); }}},
        {"m", {o_m, [&](const json& v) { opts->m = v.get<long>(); }}},
        {"set", {o_set, [&](const json& v) { opts->set = v.get<std::string>(); }}},
        {"seed",
         {o_seed, [&](const json& v) { opts->seed = v.get<std::uint64_t>(); }}},
        {"out", {o_out, [&](const json& v) { opts->out = v.get<std::string>(); }}},
    };
    apply_config(opts->config_file, keys);
    if (opts->out.empty())
      fail(kExitInput, "ParseError", "gen requires --out");
    if (opts->n <= 0 || opts->k < 0 || opts->k > opts->n || opts->m <= 0)
      fail(kExitInput, "ParseError", "gen requires n > 0, 0 <= k <= n, m > 0");
    const trl::TruncationSet set = parse_set(opts->set);
    trl::Rng xr = trl::Rng::stream(opts->seed, "cli/xstar");
    const Eigen::VectorXd xs = trl::spike_vector(opts->n, opts->k, xr);
    auto data = trl::generate_truncated(xs, set, opts->m, opts->seed);
    trl::save_dataset(data, opts->out);
    const double trials =
        static_cast<double>(data.m() + data.rejected_count);
    json out{{"out", opts->out},
             {"m", data.m()},
             {"n", data.n()},
             {"rejected_count", data.rejected_count},
             {"alpha_hat", static_cast<double>(data.m()) / trials}};
    std::fputs((out.dump(2) + "\n").c_str(), stdout);
  });
}

void cmd_solve(CLI::App* app) {
  auto* cmd = app->add_subcommand("solve", "run the truncated-LASSO solver");
  struct Opts {
    std::string data, out, config_file;
    SolverFlags solver;
  };
  auto opts = std::make_shared<Opts>();
  auto* o_data = cmd->add_option("--data", opts->data, "dataset directory");
  auto* o_out = cmd->add_option("--out", opts->out,
                                "report file (stdout when omitted)");
  opts->solver.attach(cmd);
  cmd->add_option("--config", opts->config_file, "JSON config file");

  cmd->callback([opts, o_data, o_out] {
    std::map<std::string, ConfigBinding> keys{
        {"data",
         {o_data, [&](const json& v) { opts->data = v.get<std::string>(); }}},
        {"out", {o_out, [&](const json& v) { opts->out = v.get<std::string>(); }}},
    };
    opts->solver.bind(keys);
    apply_config(opts->config_file, keys);
    if (opts->data.empty())
      fail(kExitInput, "ParseError", "solve requires --data");
    // Ground truth stays out of reach of the solver by construction.
    auto data = trl::load_dataset(opts->data, false);
    auto report = trl::solve(data, opts->solver.config);
    json j = trl::report_to_json(report);
    // Command output is bit-reproducible under a fixed seed; wall-clock
    // timing stays in the in-memory report only.
    j.erase("wall_time_sec");
    write_or_print(j, opts->out);
  });
}

void cmd_eval(CLI::App* app) {
  auto* cmd =
      app->add_subcommand("eval", "score a report against the ground truth");
  struct Opts {
    std::string report, data, config_file;
  };
  auto opts = std::make_shared<Opts>();
  auto* o_report = cmd->add_option("--report", opts->report, "report file");
  auto* o_data = cmd->add_option("--data", opts->data, "dataset directory");
  cmd->add_option("--config", opts->config_file, "JSON config file");

  cmd->callback([opts, o_report, o_data] {
    std::map<std::string, ConfigBinding> keys{
        {"report", {o_report, [&](const json& v) {
                      opts->report = v.get<std::string>();
                    }}},
        {"data",
         {o_data, [&](const json& v) { opts->data = v.get<std::string>(); }}},
    };
    apply_config(opts->config_file, keys);
    if (opts->report.empty() || opts->data.empty())
      fail(kExitInput, "ParseError", "eval requires --report and --data");
    std::ifstream is(opts->report);
    if (!is)
      fail(kExitInput, "ParseError", "cannot open report: " + opts->report);
    trl::RecoveryReport report;
    try {
      report = trl::report_from_json(json::parse(is));
    } catch (const json::exception& e) {
      fail(kExitInput, "ParseError", std::string("report: ") + e.what());
    }
    auto data = trl::load_dataset(opts->data, true);
    if (!data.x_star)
      fail(kExitInput, "ParseError",
           "dataset has no ground truth (xstar.csv missing)");
    if (data.x_star->size() != report.x_bar.size())
      fail(kExitInput, "ParseError", "report and dataset dimensions differ");
    const Eigen::VectorXd diff = report.x_bar - *data.x_star;
    json out{{"l2_error", diff.norm()},
             {"l1_error", diff.lpNorm<1>()},
             {"support_f1", trl::support_f1(report.x_bar, *data.x_star)},
             {"feasibility_residual", report.feasibility_residual},
             {"l1_norm", report.l1_norm}};
    std::fputs((out.dump(2) + "\n").c_str(), stdout);
  });
}

void cmd_sweep(CLI::App* app) {
  auto* cmd = app->add_subcommand("sweep", "error scaling across an m grid");
  struct Opts {
    trl::SweepConfig config;
    std::vector<long> m_values;
    std::vector<std::uint64_t> seeds;
    std::string set = "[0,inf]";
    long n = 200, k = 5;
    bool no_naive = false;
    unsigned threads = 0;
    std::string out, config_file;
    SolverFlags solver;
  };
  auto opts = std::make_shared<Opts>();
  auto* o_n = cmd->add_option("--n", opts->n, "dimension");
  auto* o_k = cmd->add_option("--k", opts->k, "sparsity");
  auto* o_set = cmd->add_option("--set", opts->set, "truncation set");
  auto* o_m = cmd->add_option("--m", opts->m_values, "sample counts");
  auto* o_seeds = cmd->add_option("--seeds", opts->seeds, "seeds");
  auto* o_no_naive =
      cmd->add_flag("--no-naive", opts->no_naive, "skip the naive baseline");
  auto* o_threads = cmd->add_option("--threads", opts->threads,
                                    "worker threads (0: hardware)");
  auto* o_out = cmd->add_option("--out", opts->out, "output directory");
  opts->solver.attach(cmd);
  cmd->add_option("--config", opts->config_file, "JSON config file");

  cmd->callback([opts, o_n, o_k, o_set, o_m, o_seeds, o_no_naive, o_threads,
                 o_out] {
    std::map<std::string, ConfigBinding> keys{
        {"n", {o_n, [&](const json& v) { opts->n = v.get<long>(); }}},
        {"k", {o_k, [&](const json& v) { opts->k = v.get<long>(); }}},
        {"set", {o_set, [&](const json& v) { opts->set = v.get<std::string>(); }}},
        {"m", {o_m, [&](const json& v) {
                 opts->m_values = v.get<std::vector<long>>();
               }}},
        {"seeds", {o_seeds, [&](const json& v) {
                     opts->seeds = v.get<std::vector<std::uint64_t>>();
                   }}},
        {"no-naive",
         {o_no_naive, [&](const json& v) { opts->no_naive = v.get<bool>(); }}},
        {"threads",
         {o_threads, [&](const json& v) { opts->threads = v.get<unsigned>(); }}},
        {"out", {o_out, [&](const json& v) { opts->out = v.get<std::string>(); }}},
    };
    opts->solver.bind(keys);
    apply_config(opts->config_file, keys);
    if (opts->m_values.empty() || opts->seeds.empty())
      fail(kExitInput, "ParseError", "sweep requires --m and --seeds");
    opts->config.n = opts->n;
    opts->config.k = opts->k;
    opts->config.set = parse_set(opts->set);
    opts->config.m_values.assign(opts->m_values.begin(), opts->m_values.end());
    opts->config.seeds = opts->seeds;
    opts->config.solver = opts->solver.config;
    opts->config.run_naive = !opts->no_naive;
    opts->config.threads = opts->threads;
    auto result = trl::error_sweep(opts->config);
    json summary = trl::sweep_summary(result);
    if (!opts->out.empty()) {
      std::filesystem::create_directories(opts->out);
      trl::write_sweep_csv(result,
                           std::filesystem::path(opts->out) / "sweep.csv");
      write_or_print(summary,
                     (std::filesystem::path(opts->out) / "summary.json")
                         .string());
    }
    std::fputs((summary.dump(2) + "\n").c_str(), stdout);
  });
}

void cmd_check(CLI::App* app) {
  auto* cmd =
      app->add_subcommand("check", "isometry report for a dataset design");
  struct Opts {
    std::string data, config_file;
    double eps = 0.25;
    long trials = 20;
    std::uint64_t seed = 0;
    std::vector<long> cols;
  };
  auto opts = std::make_shared<Opts>();
  auto* o_data = cmd->add_option("--data", opts->data, "dataset directory");
  auto* o_eps = cmd->add_option("--eps", opts->eps, "row subset fraction");
  auto* o_trials = cmd->add_option("--trials", opts->trials, "random subsets");
  auto* o_seed = cmd->add_option("--seed", opts->seed, "random seed");
  auto* o_cols =
      cmd->add_option("--cols", opts->cols, "column subset (default: all)");
  cmd->add_option("--config", opts->config_file, "JSON config file");

  cmd->callback([opts, o_data, o_eps, o_trials, o_seed, o_cols] {
    std::map<std::string, ConfigBinding> keys{
        {"data",
         {o_data, [&](const json& v) { opts->data = v.get<std::string>(); }}},
        {"eps", {o_eps, [&](const json& v) { opts->eps = v.get<double>(); }}},
        {"trials",
         {o_trials, [&](const json& v) { opts->trials = v.get<long>(); }}},
        {"seed",
         {o_seed, [&](const json& v) { opts->seed = v.get<std::uint64_t>(); }}},
        {"cols", {o_cols, [&](const json& v) {
                    opts->cols = v.get<std::vector<long>>();
                  }}},
    };
    apply_config(opts->config_file, keys);
    if (opts->data.empty())
      fail(kExitInput, "ParseError", "check requires --data");
    auto data = trl::load_dataset(opts->data, false);
    std::vector<trl::Index> V(opts->cols.begin(), opts->cols.end());
    if (V.empty())
      for (trl::Index i = 0; i < data.n(); ++i) V.push_back(i);
    for (trl::Index c : V)
      if (c < 0 || c >= data.n())
        fail(kExitInput, "ParseError", "column index out of range");
    trl::Rng rng = trl::Rng::stream(opts->seed, "cli/check");
    auto report = trl::check_isometry(data, V, opts->eps, opts->trials, rng);
    json out{{"subset_size", report.subset_size},
             {"trials", report.trials},
             {"eps", report.eps},
             {"min_singular_over_sqrt_m", report.min_singular_over_sqrt_m},
             {"max_singular_over_sqrt_m", report.max_singular_over_sqrt_m},
             {"full_min_singular", report.full_min_singular},
             {"full_max_singular", report.full_max_singular}};
    std::fputs((out.dump(2) + "\n").c_str(), stdout);
  });
}

void cmd_sample(CLI::App* app) {
  auto* cmd = app->add_subcommand(
      "sample", "draw from a truncated Gaussian, one value per line");
  struct Opts {
    std::string set = "[0,inf]", config_file;
    double t = 0.0;
    long count = 10;
    std::uint64_t seed = 0;
  };
  auto opts = std::make_shared<Opts>();
  auto* o_set = cmd->add_option("--set", opts->set, "truncation set");
  auto* o_t = cmd->add_option("--t", opts->t, "location parameter");
  auto* o_count = cmd->add_option("--count", opts->count, "number of draws");
  auto* o_seed = cmd->add_option("--seed", opts->seed, "random seed");
  cmd->add_option("--config", opts->config_file, "JSON config file");

  cmd->callback([opts, o_set, o_t, o_count, o_seed] {
    std::map<std::string, ConfigBinding> keys{
        {"set", {o_set, [&](const json& v) { opts->set = v.get<std::string>(); }}},
        {"t", {o_t, [&](const json& v) { opts->t = v.get<double>(); }}},
        {"count",
         {o_count, [&](const json& v) { opts->count = v.get<long>(); }}},
        {"seed",
         {o_seed, [&](const json& v) { opts->seed = v.get<std::uint64_t>(); }}},
    };
    apply_config(opts->config_file, keys);
    if (opts->count < 0)
      fail(kExitInput, "ParseError", "count must be nonnegative");
    trl::TruncatedGaussianView view(opts->t, parse_set(opts->set));
    trl::Rng rng = trl::Rng::stream(opts->seed, "cli/sample");
    std::string buf;
    for (long i = 0; i < opts->count; ++i) {
      buf += shortest(trl::sample(view, rng));
      buf += '\n';
    }
    std::fputs(buf.c_str(), stdout);
  });
}

int classify(const std::exception& e) {
  if (dynamic_cast<const trl::ParseError*>(&e) ||
      dynamic_cast<const trl::InvalidView*>(&e) ||
      dynamic_cast<const trl::SurvivalTooLow*>(&e))
    return kExitInput;
  return kExitSolver;
}

const char* type_name(const std::exception& e) {
  if (dynamic_cast<const trl::ParseError*>(&e)) return "ParseError";
  if (dynamic_cast<const trl::InvalidView*>(&e)) return "InvalidView";
  if (dynamic_cast<const trl::SurvivalTooLow*>(&e)) return "SurvivalTooLow";
  if (dynamic_cast<const trl::NumericalUnderflow*>(&e))
    return "NumericalUnderflow";
  if (dynamic_cast<const trl::ToleranceUnreachable*>(&e))
    return "ToleranceUnreachable";
  if (dynamic_cast<const trl::SingularFactorization*>(&e))
    return "SingularFactorization";
  if (dynamic_cast<const trl::EmptyFeasibleSet*>(&e)) return "EmptyFeasibleSet";
  return "Error";
}

void print_error(const std::string& type, const std::string& message) {
  json j{{"error", type}, {"message", message}};
  std::fputs((j.dump() + "\n").c_str(), stderr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"truncated sparse linear regression toolkit"};
  app.require_subcommand(1);
  cmd_gen(&app);
  cmd_solve(&app);
  cmd_eval(&app);
  cmd_sweep(&app);
  cmd_check(&app);
  cmd_sample(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("ParseError", e.what());
    return kExitInput;
  } catch (const CliError& e) {
    print_error(e.type, e.message);
    return e.code;
  } catch (const std::exception& e) {
    print_error(type_name(e), e.what());
    return classify(e);
  }
  return 0;
}
