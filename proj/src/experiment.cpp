// Copyright 2026 The ceis Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ceis/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "ceis/io.hpp"

namespace ceis {

namespace {

// Stream offsets keep the estimation batches disjoint from the CE batches (seed + k).
constexpr std::uint64_t kMcSeedOffset = 1ULL << 32U;
constexpr std::uint64_t kIsSeedOffset = 2ULL << 32U;

constexpr std::size_t kTablePoints = 401;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void parse_fail(std::string_view key, std::string_view message) {
  throw Error(ErrorKind::kParse, fmt::format("key '{}': {}", key, message));
}

double parse_real(std::string_view key, std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    parse_fail(key, fmt::format("expected a real number, got '{}'", text));
  }
  return value;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    parse_fail(key, fmt::format("expected a nonnegative integer, got '{}'", text));
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true") {
    return true;
  }
  if (text == "false") {
    return false;
  }
  parse_fail(key, fmt::format("expected true or false, got '{}'", text));
}

std::string_view unquote(std::string_view text) {
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
    return text.substr(1, text.size() - 2);
  }
  return text;
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text.size() >= 2 && text.front() == '[' && text.back() == ']') {
    text = text.substr(1, text.size() - 2);
  }
  std::vector<double> values;
  while (!trim(text).empty()) {
    const auto comma = text.find(',');
    values.push_back(parse_real(key, trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) {
      break;
    }
    text.remove_prefix(comma + 1);
  }
  return values;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"kappa", [](auto& c, auto k, auto v) { c.kappa = parse_real(k, v); }},
      {"nu", [](auto& c, auto k, auto v) { c.nu = parse_real(k, v); }},
      {"epsilon", [](auto& c, auto k, auto v) { c.epsilon = parse_real(k, v); }},
      {"x0", [](auto& c, auto k, auto v) { c.x0 = parse_real(k, v); }},
      {"T", [](auto& c, auto k, auto v) { c.horizon = parse_real(k, v); }},
      {"dt", [](auto& c, auto k, auto v) { c.dt = parse_real(k, v); }},
      {"J", [](auto& c, auto k, auto v) { c.basis_count = parse_unsigned(k, v); }},
      {"center_origin", [](auto& c, auto k, auto v) { c.center_origin = parse_real(k, v); }},
      {"center_spacing", [](auto& c, auto k, auto v) { c.center_spacing = parse_real(k, v); }},
      {"width", [](auto& c, auto k, auto v) { c.width = parse_real(k, v); }},
      {"N_ce", [](auto& c, auto k, auto v) { c.n_ce = parse_unsigned(k, v); }},
      {"max_iters", [](auto& c, auto k, auto v) { c.max_iters = parse_unsigned(k, v); }},
      {"ridge", [](auto& c, auto k, auto v) { c.ridge = parse_real(k, v); }},
      {"ridge_relative", [](auto& c, auto k, auto v) { c.ridge_relative = parse_bool(k, v); }},
      {"tol", [](auto& c, auto k, auto v) { c.tol = parse_real(k, v); }},
      {"N_estimate", [](auto& c, auto k, auto v) { c.n_estimate = parse_unsigned(k, v); }},
      {"plot_paths", [](auto& c, auto k, auto v) { c.plot_paths = parse_unsigned(k, v); }},
      {"epsilons", [](auto& c, auto k, auto v) { c.epsilons = parse_list(k, v); }},
      {"pde_x_min", [](auto& c, auto k, auto v) { c.pde_x_min = parse_real(k, v); }},
      {"pde_x_max", [](auto& c, auto k, auto v) { c.pde_x_max = parse_real(k, v); }},
      {"pde_nx", [](auto& c, auto k, auto v) { c.pde_nx = parse_unsigned(k, v); }},
      {"pde_nt", [](auto& c, auto k, auto v) { c.pde_nt = parse_unsigned(k, v); }},
      {"out", [](auto& c, auto, auto v) { c.out = std::string(unquote(v)); }},
      {"seed", [](auto& c, auto k, auto v) { c.seed = parse_unsigned(k, v); }},
  };
  return table;
}

void assign(ExperimentConfig& config, std::string_view key, std::string_view value) {
  const auto it = setters().find(key);
  if (it == setters().end()) {
    throw Error(ErrorKind::kParse, fmt::format("unknown key '{}'", key));
  }
  if (value.empty()) {
    parse_fail(key, "missing value");
  }
  it->second(config, key, value);
}

void split_assignment(std::string_view line, std::string_view& key, std::string_view& value) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) {
    throw Error(ErrorKind::kParse, fmt::format("expected 'key = value', got '{}'", line));
  }
  key = trim(line.substr(0, eq));
  value = trim(line.substr(eq + 1));
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> xs(count);
  for (std::size_t i = 0; i < count; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return xs;
}

template <class Fn>
auto run_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void write_artifact(std::vector<std::filesystem::path>& artifacts, const std::filesystem::path& dir,
                    const std::string& name, std::string_view contents) {
  const auto path = dir / name;
  write_text_file(path, contents);
  artifacts.push_back(path);
}

}  // namespace

void ExperimentConfig::validate() const {
  auto require = [](bool ok, std::string_view key, std::string_view constraint) {
    if (!ok) {
      parse_fail(key, constraint);
    }
  };
  require(kappa >= 0.0, "kappa", "must be nonnegative");
  require(nu >= 0.0, "nu", "must be nonnegative");
  require(epsilon > 0.0, "epsilon", "must be positive");
  require(horizon > 0.0, "T", "must be positive");
  require(dt > 0.0, "dt", "must be positive");
  const double steps = horizon / dt;
  require(std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, std::round(steps)) &&
              std::round(steps) >= 1.0,
          "dt", "T / dt must be a positive integer");
  require(basis_count >= 1, "J", "must be at least 1");
  require(width > 0.0, "width", "must be positive");
  require(n_ce >= 2, "N_ce", "must be at least 2");
  require(max_iters >= 1, "max_iters", "must be at least 1");
  require(ridge >= 0.0, "ridge", "must be nonnegative");
  require(tol > 0.0, "tol", "must be positive");
  require(n_estimate >= 1, "N_estimate", "must be at least 1");
  require(std::all_of(epsilons.begin(), epsilons.end(), [](double e) { return e > 0.0; }),
          "epsilons", "every entry must be positive");
  require(pde_nt >= 1, "pde_nt", "must be at least 1");
  require(!pde_nx || *pde_nx >= 3, "pde_nx", "must be at least 3");
  const auto grid = pde_grid();
  require(grid.x_min < x0 && x0 < grid.x_max, "pde_x_min", "PDE domain must enclose x0");
}

SdeProblem ExperimentConfig::problem() const { return problem_at(epsilon); }

SdeProblem ExperimentConfig::problem_at(double eps) const {
  const double k = kappa;
  const double n = nu;
  return SdeProblem([k](double x, double) { return -4.0 * k * x * (x * x - 1.0); }, eps,
                    [n](double x) { return n * (x - 1.0) * (x - 1.0); }, x0, horizon, dt);
}

RbfDictionary ExperimentConfig::dictionary() const {
  return RbfDictionary::uniform(basis_count, center_origin, center_spacing, width);
}

CeConfig ExperimentConfig::ce_config() const {
  CeConfig ce;
  ce.n_paths = n_ce;
  ce.max_iters = max_iters;
  ce.ridge = RidgeSetting{ridge, ridge_relative};
  ce.tol = tol;
  ce.seed = seed;
  return ce;
}

PdeGrid ExperimentConfig::pde_grid() const {
  const bool flat = kappa == 0.0;
  PdeGrid grid;
  grid.x_min = pde_x_min.value_or(flat ? -6.0 : -2.5);
  grid.x_max = pde_x_max.value_or(flat ? 6.0 : 2.5);
  grid.nx = pde_nx.value_or(flat ? 2001 : 6001);
  grid.nt = pde_nt;
  return grid;
}

double ExperimentConfig::potential(double x) const {
  return kappa * (x * x - 1.0) * (x * x - 1.0);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  while (!text.empty()) {
    const auto newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text = newline == std::string_view::npos ? std::string_view{} : text.substr(newline + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    std::string_view key;
    std::string_view value;
    split_assignment(line, key, value);
    assign(config, key, value);
  }
  config.validate();
  return config;
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  std::string_view key;
  std::string_view value;
  split_assignment(trim(assignment), key, value);
  ExperimentConfig updated = config;
  assign(updated, key, value);
  updated.validate();
  config = std::move(updated);
}

double gaussian_closed_form(double nu, double x0, double horizon, double epsilon) {
  const double spread = 1.0 + 2.0 * nu * horizon;
  return std::exp(-nu * (x0 - 1.0) * (x0 - 1.0) / (epsilon * spread)) / std::sqrt(spread);
}

double gaussian_closed_form_control(double nu, double horizon, double x) {
  return 2.0 * nu * (x - 1.0) / (1.0 + 2.0 * nu * horizon);
}

double fraction_above(std::span<const double> values, double level) {
  if (values.empty()) {
    return 0.0;
  }
  const auto count = std::count_if(values.begin(), values.end(), [level](double v) { return v > level; });
  return static_cast<double>(count) / static_cast<double>(values.size());
}

std::string potential_control_csv(const ExperimentConfig& config, const ControlModel& model,
                                  const PdeSolution& solution, std::size_t points) {
  const auto& grid = solution.grid();
  const double half_range = std::min({2.0, -grid.x_min, grid.x_max});
  if (points % 2 == 0) {
    ++points;
  }
  const auto xs = linspace(-half_range, half_range, points);
  std::vector<double> u(points);
  for (std::size_t i = 0; i < points; ++i) {
    u[i] = model.control_value(xs[i]);
  }
  // Trapezoid integral of u from the middle node (x = 0) outward.
  const std::size_t mid = points / 2;
  std::vector<double> integral(points, 0.0);
  for (std::size_t i = mid + 1; i < points; ++i) {
    integral[i] = integral[i - 1] + 0.5 * (u[i] + u[i - 1]) * (xs[i] - xs[i - 1]);
  }
  for (std::size_t i = mid; i-- > 0;) {
    integral[i] = integral[i + 1] - 0.5 * (u[i] + u[i + 1]) * (xs[i + 1] - xs[i]);
  }
  std::string out = "x,V(x),V_modified(x),u_theta(x),u_star(x)\n";
  for (std::size_t i = 0; i < points; ++i) {
    const double v = config.potential(xs[i]);
    out += fmt::format("{},{},{},{},{}\n", format_real(xs[i]), format_real(v),
                       format_real(v + integral[i]), format_real(u[i]),
                       format_real(reference_control(solution, xs[i])));
  }
  return out;
}

DoubleWellResult run_doublewell(const ExperimentConfig& config) {
  run_stage("config", [&] { config.validate(); return 0; });
  const auto problem = config.problem();
  const auto dictionary = config.dictionary();
  DoubleWellResult result;

  const auto plain = run_stage("uncontrolled", [&] {
    return sample_integrand(problem, nullptr, config.n_estimate, config.seed + kMcSeedOffset);
  });
  result.mc = estimate(plain);
  result.uncontrolled_above = fraction_above(plain.terminal_states, 0.5);

  result.ce = run_stage("cross_entropy", [&] { return ce_run(problem, dictionary, config.ce_config()); });
  if (result.ce.error) {
    throw StageError("cross_entropy", *result.ce.error);
  }
  const ControlModel trained(dictionary, result.ce.final_theta());

  const auto controlled = run_stage("controlled", [&] {
    return sample_integrand(problem, &trained, config.n_estimate, config.seed + kIsSeedOffset);
  });
  result.is = run_stage("controlled", [&] { return estimate(controlled); });
  result.controlled_above = fraction_above(controlled.terminal_states, 0.5);

  const auto solution = run_stage("pde", [&] {
    return solve_feynman_kac(problem, config.pde_grid(), {}, PdeOptions{false});
  });
  result.rho_ref = solution.rho_ref();
  const auto samples = linspace(-1.3, 1.3, 27);
  result.control_distance = control_distance(solution, trained, samples);

  run_stage("write", [&] {
    const auto& dir = config.out;
    auto& files = result.artifacts;
    write_artifact(files, dir, "trajectories_uncontrolled.csv",
                   trajectories_csv(simulate_batch(problem, nullptr, std::max<std::size_t>(config.plot_paths, 1),
                                                   config.seed + kMcSeedOffset),
                                    config.plot_paths));
    auto plot_batch = simulate_batch(problem, &trained, std::max<std::size_t>(config.plot_paths, 1),
                                     config.seed + kIsSeedOffset);
    write_artifact(files, dir, "trajectories_controlled.csv",
                   trajectories_csv(plot_batch, config.plot_paths));
    write_artifact(files, dir, "theta_history.csv", theta_history_csv(result.ce));
    write_artifact(files, dir, "estimate_mc.json",
                   estimate_record(result.mc, config.epsilon, "none"));
    write_artifact(files, dir, "estimate_is.json",
                   estimate_record(result.is, config.epsilon, "theta_final"));
    write_artifact(files, dir, "weights_is.csv", weights_csv(controlled.weights()));
    write_artifact(files, dir, "pde_solution.csv", pde_csv(solution));
    write_artifact(files, dir, "potential_control.csv",
                   potential_control_csv(config, trained, solution, kTablePoints));
    write_artifact(files, dir, "summary.json",
                   fmt::format("{{\n  \"rho_ref\": {},\n  \"log_rho_ref\": {},\n"
                               "  \"log_rho_is\": {},\n  \"log_rho_mc\": {},\n"
                               "  \"ce_converged\": {},\n  \"ce_iterations\": {},\n"
                               "  \"uncontrolled_above_0_5\": {},\n  \"controlled_above_0_5\": {},\n"
                               "  \"control_distance\": {}\n}}\n",
                               format_real(result.rho_ref), format_real(std::log(result.rho_ref)),
                               format_real(result.is.log_rho_hat), format_real(result.mc.log_rho_hat),
                               result.ce.converged ? "true" : "false", result.ce.iterations_used,
                               format_real(result.uncontrolled_above),
                               format_real(result.controlled_above),
                               format_real(result.control_distance)));
    return 0;
  });
  return result;
}

GaussianResult run_gaussian_oracle(const ExperimentConfig& config) {
  run_stage("config", [&] {
    config.validate();
    if (config.kappa != 0.0) {
      throw Error(ErrorKind::kConfiguration, "the Gaussian oracle needs kappa = 0 (zero drift)");
    }
    return 0;
  });
  const auto problem = config.problem();
  const auto dictionary = config.dictionary();
  GaussianResult result;
  result.closed_form = gaussian_closed_form(config.nu, config.x0, config.horizon, config.epsilon);

  result.mc = run_stage("uncontrolled", [&] {
    return estimate(sample_integrand(problem, nullptr, config.n_estimate, config.seed + kMcSeedOffset));
  });
  if (config.nu == 0.0) {
    // Constant integrand: the uncontrolled proposal already has zero variance.
    result.ce.theta_history.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dictionary.size())));
    result.ce.converged = true;
  } else {
    result.ce = run_stage("cross_entropy", [&] { return ce_run(problem, dictionary, config.ce_config()); });
    if (result.ce.error) {
      throw StageError("cross_entropy", *result.ce.error);
    }
  }
  const ControlModel trained(dictionary, result.ce.final_theta());
  result.is = run_stage("controlled", [&] {
    return estimate(sample_integrand(problem, &trained, config.n_estimate, config.seed + kIsSeedOffset));
  });
  const auto solution = run_stage("pde", [&] {
    return solve_feynman_kac(problem, config.pde_grid(), {}, PdeOptions{false});
  });
  result.rho_ref = solution.rho_ref();
  auto rel = [&](double v) { return std::abs(v - result.closed_form) / result.closed_form; };
  result.mc_rel_error = rel(result.mc.rho_hat);
  result.is_rel_error = rel(result.is.rho_hat);
  result.pde_rel_error = rel(result.rho_ref);

  run_stage("write", [&] {
    const auto& dir = config.out;
    auto& files = result.artifacts;
    write_artifact(files, dir, "theta_history.csv", theta_history_csv(result.ce));
    write_artifact(files, dir, "estimate_mc.json", estimate_record(result.mc, config.epsilon, "none"));
    write_artifact(files, dir, "estimate_is.json",
                   estimate_record(result.is, config.epsilon, "theta_final"));
    write_artifact(files, dir, "pde_solution.csv", pde_csv(solution));
    auto z = [](const EstimateReport& r, double exact) {
      return r.std_error > 0.0 ? (r.rho_hat - exact) / r.std_error : 0.0;
    };
    write_artifact(
        files, dir, "comparison.json",
        fmt::format("{{\n  \"epsilon\": {},\n  \"closed_form\": {},\n"
                    "  \"mc_rho_hat\": {},\n  \"mc_rel_error\": {},\n  \"mc_z_score\": {},\n"
                    "  \"mc_degenerate\": {},\n"
                    "  \"is_rho_hat\": {},\n  \"is_rel_error\": {},\n  \"is_z_score\": {},\n"
                    "  \"pde_rho_ref\": {},\n  \"pde_rel_error\": {}\n}}\n",
                    format_real(config.epsilon), format_real(result.closed_form),
                    format_real(result.mc.rho_hat), format_real(result.mc_rel_error),
                    format_real(z(result.mc, result.closed_form)),
                    result.mc.degenerate ? "true" : "false", format_real(result.is.rho_hat),
                    format_real(result.is_rel_error), format_real(z(result.is, result.closed_form)),
                    format_real(result.rho_ref), format_real(result.pde_rel_error)));
    return 0;
  });
  return result;
}

SweepResult run_sweep(const ExperimentConfig& config, std::span<const double> epsilons) {
  if (epsilons.empty()) {
    throw Error(ErrorKind::kUsage, "the sweep needs at least one epsilon");
  }
  run_stage("config", [&] { config.validate(); return 0; });
  SweepResult result;
  SweepSettings settings{config.n_estimate, config.seed + kIsSeedOffset};
  result.report = efficiency_sweep([&](double eps) { return config.problem_at(eps); },
                                   config.dictionary(), config.ce_config(), epsilons, settings);
  run_stage("write", [&] {
    write_artifact(result.artifacts, config.out, "efficiency.csv", efficiency_csv(result.report));
    return 0;
  });
  if (result.report.succeeded() == 0) {
    throw StageError("sweep", "every epsilon failed");
  }
  return result;
}

PdeResult run_pde(const ExperimentConfig& config) {
  run_stage("config", [&] { config.validate(); return 0; });
  const auto solution = run_stage("pde", [&] {
    return solve_feynman_kac(config.problem(), config.pde_grid(), {}, PdeOptions{false});
  });
  PdeResult result;
  result.rho_ref = solution.rho_ref();
  run_stage("write", [&] {
    write_artifact(result.artifacts, config.out, "pde_solution.csv", pde_csv(solution));
    write_artifact(result.artifacts, config.out, "pde_record.json",
                   fmt::format("{{\n  \"rho_ref\": {},\n  \"log_rho_ref\": {},\n  \"gamma1_ref\": {},\n"
                               "  \"epsilon\": {}\n}}\n",
                               format_real(solution.rho_ref()), format_real(std::log(solution.rho_ref())),
                               format_real(-config.epsilon * std::log(solution.rho_ref())),
                               format_real(config.epsilon)));
    return 0;
  });
  return result;
}

}  // namespace ceis
