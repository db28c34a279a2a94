// Command-line front end: run / verify / sweep over the composition-
// optimization C API. Emits CSV traces, verification reports and sweep
// summaries. Exit codes: 0 success, 1 configuration error, 2 divergence,
// 3 verification failure.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "compopt/c_api.h"

namespace {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigValue {
  std::string text;
  int line = 0;
  mutable bool used = false;
};

/// Flat key=value configuration with '#' comments.
class Config {
 public:
  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    Config config;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      if (config.values_.count(key))
        throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      config.values_[key] = ConfigValue{value, lineno, false};
    }
    return config;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    it->second.used = true;
    return it->second.text;
  }

  template <typename T>
  T get_number(const std::string& key, T fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    it->second.used = true;
    T out{};
    const std::string& text = it->second.text;
    const char* begin = text.data();
    const char* end = begin + text.size();
    std::from_chars_result res{};
    if constexpr (std::is_floating_point_v<T>) {
      res = std::from_chars(begin, end, out);
    } else {
      res = std::from_chars(begin, end, out);
    }
    if (res.ec != std::errc() || res.ptr != end)
      throw ConfigError("line " + std::to_string(it->second.line) + ": bad value for '" + key +
                        "': '" + text + "'");
    return out;
  }

  template <typename T>
  std::vector<T> get_list(const std::string& key, std::vector<T> fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    it->second.used = true;
    std::vector<T> out;
    std::stringstream ss(it->second.text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      T v{};
      const char* begin = item.data();
      const char* end = begin + item.size();
      auto res = std::from_chars(begin, end, v);
      if (res.ec != std::errc() || res.ptr != end)
        throw ConfigError("line " + std::to_string(it->second.line) + ": bad list item '" + item +
                          "' for '" + key + "'");
      out.push_back(v);
    }
    if (out.empty())
      throw ConfigError("line " + std::to_string(it->second.line) + ": empty list for '" + key +
                        "'");
    return out;
  }

  void reject_unused() const {
    for (const auto& [key, value] : values_)
      if (!value.used)
        throw ConfigError("line " + std::to_string(value.line) + ": unknown key '" + key + "'");
  }

 private:
  std::map<std::string, ConfigValue> values_;
};

[[noreturn]] void api_fail(const std::string& what) {
  throw ConfigError(what + ": " + compopt_last_error());
}

template <typename T, void (*Destroy)(T*)>
using Handle = std::unique_ptr<T, std::integral_constant<void (*)(T*), Destroy>>;

using ProblemHandle = Handle<compopt_problem, compopt_problem_destroy>;
using ScheduleHandle = Handle<compopt_schedule, compopt_schedule_destroy>;
using ResultHandle = Handle<compopt_result, compopt_result_destroy>;
using ReportHandle = Handle<compopt_report, compopt_report_destroy>;

std::string problem_spec_from_config(const Config& config, std::optional<int> n_override) {
  const std::string kind = config.get_string("problem", "");
  if (kind.empty()) throw ConfigError("missing required key 'problem'");
  if (kind == "lcq_ref") return "lcq_ref";

  const int n = n_override.value_or(config.get_number<int>("n", 0));
  const int N = config.get_number<int>("N", 0);
  const std::uint64_t seed = config.get_number<std::uint64_t>("problem_seed", 1);
  const double region = config.get_number<double>("region", 10.0);
  std::ostringstream spec;
  if (kind == "lcq") {
    const int M = config.get_number<int>("M", N);
    spec << "lcq n=" << n << " N=" << N << " M=" << M << " seed=" << seed
         << " region=" << format_double(region);
  } else if (kind == "mean_variance") {
    const double lambda = config.get_number<double>("lambda", 0.0);
    spec << "mean_variance n=" << n << " N=" << N << " lambda=" << format_double(lambda)
         << " seed=" << seed << " region=" << format_double(region);
  } else if (kind == "nonconvex") {
    const int M = config.get_number<int>("M", N);
    const double beta = config.get_number<double>("beta", 0.0);
    spec << "nonconvex n=" << n << " N=" << N << " M=" << M << " beta=" << format_double(beta)
         << " seed=" << seed << " region=" << format_double(region);
  } else {
    throw ConfigError("unknown problem kind '" + kind + "'");
  }
  return spec.str();
}

ProblemHandle make_problem(const Config& config, std::optional<int> n_override = std::nullopt) {
  const std::string spec = problem_spec_from_config(config, n_override);
  compopt_problem* raw = nullptr;
  if (compopt_problem_create(spec.c_str(), &raw) != COMPOPT_OK) api_fail("problem creation failed");
  ProblemHandle problem(raw);

  // Optional constant overrides (e.g. constant_H1 = 0 for falsification runs).
  static const char* kFields[] = {"mu", "B_G", "L_G", "B_F", "L_F", "L_f", "H1", "H2"};
  bool any = false;
  compopt_constants constants;
  if (compopt_problem_constants(problem.get(), &constants) != COMPOPT_OK)
    api_fail("reading constants failed");
  double* slots[] = {&constants.mu,  &constants.B_G, &constants.L_G, &constants.B_F,
                     &constants.L_F, &constants.L_f, &constants.H1,  &constants.H2};
  for (std::size_t i = 0; i < 8; ++i) {
    const std::string key = std::string("constant_") + kFields[i];
    if (config.has(key)) {
      *slots[i] = config.get_number<double>(key, 0.0);
      any = true;
    }
  }
  if (any && compopt_problem_set_constants(problem.get(), &constants) != COMPOPT_OK)
    api_fail("overriding constants failed");
  return problem;
}

struct RunSetup {
  std::string algorithm_name;
  int algorithm = COMPOPT_ALG_SCSCG;
  std::string mode;  // "convex" | "nonconvex"
  double epsilon = 0.0;
  std::int64_t b = 1;
  std::uint64_t master_seed = 42;
  int repetitions = 1;
  bool fixed_rep_seed = false;
  double x0_value = 0.0;
};

RunSetup read_run_setup(const Config& config) {
  RunSetup setup;
  setup.algorithm_name = config.get_string("algorithm", "scscg");
  if (setup.algorithm_name == "scscg")
    setup.algorithm = COMPOPT_ALG_SCSCG;
  else if (setup.algorithm_name == "scscg_minibatch")
    setup.algorithm = COMPOPT_ALG_SCSCG_MINIBATCH;
  else if (setup.algorithm_name == "full_anchor")
    setup.algorithm = COMPOPT_ALG_FULL_ANCHOR;
  else
    throw ConfigError("unknown algorithm '" + setup.algorithm_name + "'");
  setup.mode = config.get_string("mode", "convex");
  if (setup.mode != "convex" && setup.mode != "nonconvex")
    throw ConfigError("mode must be convex or nonconvex");
  setup.epsilon = config.get_number<double>("epsilon", setup.mode == "convex" ? 1e-4 : 1e-2);
  setup.b = config.get_number<std::int64_t>("b", 1);
  setup.master_seed = config.get_number<std::uint64_t>("master_seed", 42);
  setup.repetitions = config.get_number<int>("repetitions", 1);
  if (setup.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  const std::string rep_mode = config.get_string("rep_seed_mode", "increment");
  if (rep_mode == "fixed")
    setup.fixed_rep_seed = true;
  else if (rep_mode != "increment")
    throw ConfigError("rep_seed_mode must be increment or fixed");
  setup.x0_value = config.get_number<double>("x0", 0.0);
  return setup;
}

std::vector<double> initial_point(const compopt_problem* problem, double value) {
  int64_t n = 0, dim_x = 0, dim_w = 0;
  if (compopt_problem_counts(problem, &n, &dim_x, &dim_w) != COMPOPT_OK)
    api_fail("reading problem dimensions failed");
  return std::vector<double>(static_cast<std::size_t>(dim_x), value);
}

double resolve_x0_gap(const Config& config, const compopt_problem* problem,
                      const std::vector<double>& x0) {
  if (config.has("x0_gap")) return config.get_number<double>("x0_gap", 0.0);
  std::vector<double> x_star(x0.size(), 0.0);
  if (compopt_problem_optimum(problem, x_star.data(), x_star.size(), nullptr) == COMPOPT_OK) {
    double gap = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i)
      gap += (x0[i] - x_star[i]) * (x0[i] - x_star[i]);
    return gap;
  }
  return 0.0;  // library falls back to 1.0 with a warning
}

ScheduleHandle make_schedule(const Config& config, const RunSetup& setup,
                             const compopt_problem* problem, const std::vector<double>& x0,
                             double epsilon, std::int64_t b) {
  compopt_schedule* raw = nullptr;
  if (setup.mode == "convex") {
    const double gap = resolve_x0_gap(config, problem, x0);
    if (compopt_schedule_convex(problem, epsilon, b, gap, &raw) != COMPOPT_OK)
      api_fail("convex schedule derivation failed");
  } else {
    const double c_A = config.get_number<double>("c_A", 1.0);
    const double c_D = config.get_number<double>("c_D", 1.0);
    const double c_T = config.get_number<double>("c_T", 1.0);
    if (compopt_schedule_nonconvex(problem, epsilon, b, c_A, c_D, c_T, &raw) != COMPOPT_OK)
      api_fail("nonconvex schedule derivation failed");
  }
  ScheduleHandle schedule(raw);
  static const char* kOverridable[] = {"A", "D", "K", "S", "eta", "h"};
  for (const char* field : kOverridable) {
    if (config.has(field)) {
      const double value = config.get_number<double>(field, 0.0);
      if (compopt_schedule_set(schedule.get(), field, value) != COMPOPT_OK)
        api_fail(std::string("schedule override '") + field + "' failed");
    }
  }
  return schedule;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out << content;
  if (!out) throw ConfigError("failed writing output file '" + path + "'");
}

std::string rep_path(const std::string& base, int rep, int repetitions) {
  if (repetitions == 1) return base;
  const auto dot = base.rfind('.');
  const std::string stem = dot == std::string::npos ? base : base.substr(0, dot);
  const std::string ext = dot == std::string::npos ? "" : base.substr(dot);
  return stem + ".rep" + std::to_string(rep) + ext;
}

int cmd_run(const Config& config, const std::string& out_path,
            std::optional<std::uint64_t> seed_flag, bool verbose) {
  const RunSetup setup = read_run_setup(config);
  ProblemHandle problem = make_problem(config);
  const std::vector<double> x0 = initial_point(problem.get(), setup.x0_value);
  ScheduleHandle schedule =
      make_schedule(config, setup, problem.get(), x0, setup.epsilon, setup.b);
  config.reject_unused();

  const std::uint64_t master = seed_flag.value_or(setup.master_seed);
  for (int rep = 0; rep < setup.repetitions; ++rep) {
    const std::uint64_t seed = setup.fixed_rep_seed ? master : master + static_cast<std::uint64_t>(rep);
    compopt_result* raw = nullptr;
    const int status = compopt_run(problem.get(), schedule.get(), setup.algorithm, seed,
                                   x0.data(), verbose ? 1 : 0, &raw);
    if (status == COMPOPT_ERR_DIVERGED) {
      std::cerr << "error: " << compopt_last_error() << "\n";
      return 2;
    }
    if (status != COMPOPT_OK) api_fail("run failed");
    ResultHandle result(raw);
    write_file(rep_path(out_path, rep, setup.repetitions), compopt_result_csv(result.get()));
    if (verbose)
      write_file(rep_path(out_path, rep, setup.repetitions) + ".iters",
                 compopt_result_iterations_csv(result.get()));
  }
  return 0;
}

int cmd_verify(const Config& config, const std::string& out_path,
               std::optional<std::uint64_t> seed_flag) {
  ProblemHandle problem = make_problem(config);
  compopt_verify_options options{};
  options.mc_seed = seed_flag.value_or(config.get_number<std::uint64_t>("master_seed", 0));
  options.mc_samples = config.get_number<int>("verify_samples", 0);
  options.enumeration_guard = config.get_number<std::int64_t>("verify_guard", 0);
  options.without_replacement =
      config.get_string("verify_mode", "with_replacement") == "without_replacement" ? 1 : 0;
  config.reject_unused();

  compopt_report* raw = nullptr;
  if (compopt_verify(problem.get(), &options, &raw) != COMPOPT_OK) api_fail("verify failed");
  ReportHandle report(raw);
  write_file(out_path, compopt_report_csv(report.get()));
  return compopt_report_all_pass(report.get()) ? 0 : 3;
}

struct SweepCell {
  int n = 0;
  double epsilon = 0.0;
  std::int64_t b = 1;
  // results
  double median_queries = 0.0;
  int censored = 0;
  std::uint64_t budget = 0;
  bool nonconvex = false;
};

void run_sweep_cell(const Config& config, const RunSetup& setup, double target, SweepCell& cell) {
  ProblemHandle problem = make_problem(config, cell.n);
  const std::vector<double> x0 = initial_point(problem.get(), setup.x0_value);
  ScheduleHandle schedule =
      make_schedule(config, setup, problem.get(), x0, cell.epsilon, cell.b);
  cell.nonconvex = compopt_schedule_mode(schedule.get()) == 1;

  std::vector<double> queries;
  queries.reserve(static_cast<std::size_t>(setup.repetitions));
  for (int rep = 0; rep < setup.repetitions; ++rep) {
    const std::uint64_t seed =
        setup.fixed_rep_seed ? setup.master_seed : setup.master_seed + static_cast<std::uint64_t>(rep);
    compopt_result* raw = nullptr;
    if (compopt_run(problem.get(), schedule.get(), setup.algorithm, seed, x0.data(), 0, &raw) !=
        COMPOPT_OK)
      api_fail("sweep run failed");
    ResultHandle result(raw);
    const std::size_t rows = compopt_result_rows(result.get());
    bool reached = false;
    double running_min = std::numeric_limits<double>::infinity();
    std::uint64_t budget = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      compopt_trace_row row;
      compopt_result_row(result.get(), r, &row);
      budget = row.paper_queries;
      const double metric = cell.nonconvex
                                ? (running_min = std::min(running_min, row.grad_norm_sq))
                                : row.dist_sq_opt;
      if (!reached && metric <= target) {
        queries.push_back(static_cast<double>(row.paper_queries));
        reached = true;
      }
    }
    cell.budget = std::max(cell.budget, budget);
    if (!reached) {
      queries.push_back(static_cast<double>(budget));
      ++cell.censored;
    }
  }
  std::sort(queries.begin(), queries.end());
  const std::size_t m = queries.size();
  cell.median_queries =
      m % 2 == 1 ? queries[m / 2] : 0.5 * (queries[m / 2 - 1] + queries[m / 2]);
}

int cmd_sweep(const Config& config, const std::string& out_path,
              std::optional<std::uint64_t> seed_flag) {
  RunSetup setup = read_run_setup(config);
  if (seed_flag) setup.master_seed = *seed_flag;

  const std::vector<int> ns = config.get_list<int>("sweep_n", {config.get_number<int>("n", 0)});
  const std::vector<double> epsilons =
      config.get_list<double>("sweep_epsilon", {setup.epsilon});
  const std::vector<std::int64_t> bs = config.get_list<std::int64_t>("sweep_b", {setup.b});
  const double target = config.get_number<double>("target_epsilon", setup.epsilon);
  // Cells reference problem/schedule keys; touch them before the unused check.
  problem_spec_from_config(config, std::nullopt);
  config.get_number<double>("x0_gap", 0.0);
  config.get_number<double>("c_A", 1.0);
  config.get_number<double>("c_D", 1.0);
  config.get_number<double>("c_T", 1.0);
  for (const char* field : {"A", "D", "K", "S", "eta", "h"})
    if (config.has(field)) config.get_number<double>(field, 0.0);
  config.reject_unused();

  std::vector<SweepCell> cells;
  for (int n : ns)
    for (double eps : epsilons)
      for (std::int64_t b : bs) cells.push_back(SweepCell{n, eps, b});

  int threads = 0;
  if (const char* env = std::getenv("COMP_OPT_THREADS")) threads = std::atoi(env);
  threads = std::min<int>(threads, static_cast<int>(cells.size()));

  if (threads <= 0) {
    for (auto& cell : cells) run_sweep_cell(config, setup, target, cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::string> errors(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (;;) {
          const std::size_t idx = next.fetch_add(1);
          if (idx >= cells.size()) return;
          try {
            run_sweep_cell(config, setup, target, cells[idx]);
          } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(t)] = e.what();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& err : errors)
      if (!err.empty()) throw ConfigError(err);
  }

  std::string out =
      "problem,n,epsilon,b,algorithm,repetitions,target,median_queries_to_target,censored,"
      "budget\n";
  const std::string kind = config.get_string("problem", "");
  for (const auto& cell : cells) {
    out += kind + ",";
    out += std::to_string(cell.n) + ",";
    out += format_double(cell.epsilon) + ",";
    out += std::to_string(cell.b) + ",";
    out += setup.algorithm_name + ",";
    out += std::to_string(setup.repetitions) + ",";
    out += format_double(target) + ",";
    out += format_double(cell.median_queries) + ",";
    out += std::to_string(cell.censored) + ",";
    out += std::to_string(cell.budget) + "\n";
  }
  write_file(out_path, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastically controlled stochastic gradient solver for two-level "
               "composition problems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::uint64_t seed_value = 0;
  bool verbose = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "configuration file (key=value lines)")
        ->required();
    cmd->add_option("--out", out_path, "output CSV path")->required();
    cmd->add_option("--seed", seed_value, "override master seed");
    cmd->add_flag("--verbose", verbose, "emit per-iteration trace rows");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run one algorithm and emit the epoch trace");
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "check the variance bounds over the size grid");
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "median queries-to-target over an (n, epsilon, b) grid");
  add_common(run_cmd);
  add_common(verify_cmd);
  add_common(sweep_cmd);

  CLI11_PARSE(app, argc, argv);

  std::optional<std::uint64_t> seed_flag;
  for (const CLI::App* cmd : {run_cmd, verify_cmd, sweep_cmd})
    if (cmd->parsed() && cmd->count("--seed") > 0) seed_flag = seed_value;

  try {
    const Config config = Config::load(config_path);
    if (run_cmd->parsed()) return cmd_run(config, out_path, seed_flag, verbose);
    if (verify_cmd->parsed()) return cmd_verify(config, out_path, seed_flag);
    if (sweep_cmd->parsed()) return cmd_sweep(config, out_path, seed_flag);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
