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

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ceis/error.hpp"
#include "ceis/experiment.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Experiment config (key = value lines)");
  cmd->add_option("--seed", opts.seed, "Base RNG seed");
  cmd->add_option("--out", opts.out, "Output directory");
  cmd->add_option("--override", opts.overrides, "key=value, applied after the config file");
}

ceis::ExperimentConfig load_config(const CommonOptions& opts) {
  ceis::ExperimentConfig config;
  if (!opts.config_path.empty()) {
    std::ifstream file(opts.config_path);
    if (!file) {
      throw ceis::Error(ceis::ErrorKind::kUsage, "cannot read config " + opts.config_path);
    }
    std::stringstream buffer;
    buffer << file.rdbuf();
    config = ceis::parse_config(buffer.str());
  }
  for (const auto& assignment : opts.overrides) {
    ceis::apply_override(config, assignment);
  }
  if (opts.seed) {
    config.seed = *opts.seed;
  }
  if (opts.out) {
    config.out = *opts.out;
  }
  config.validate();
  return config;
}

std::vector<double> parse_epsilons(const std::string& text) {
  std::vector<double> values;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) {
      continue;
    }
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ceis::Error(ceis::ErrorKind::kUsage, "bad epsilon '" + item + "'");
    }
  }
  return values;
}

void print_artifacts(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) {
    fmt::print("  wrote {}\n", f.string());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-entropy importance sampling for small-noise diffusions"};
  app.require_subcommand(1);

  CommonOptions doublewell_opts;
  auto* doublewell = app.add_subcommand("doublewell", "Double-well rare-event study");
  add_common(doublewell, doublewell_opts);

  CommonOptions gaussian_opts;
  auto* gaussian = app.add_subcommand("gaussian", "Zero-drift study against the closed form");
  add_common(gaussian, gaussian_opts);

  CommonOptions sweep_opts;
  std::optional<std::string> epsilons_text;
  auto* sweep = app.add_subcommand("sweep", "Log-efficiency sweep over noise levels");
  add_common(sweep, sweep_opts);
  sweep->add_option("--epsilons", epsilons_text, "Comma-separated noise levels");

  CommonOptions pde_opts;
  auto* pde = app.add_subcommand("pde", "Reference PDE solve only");
  add_common(pde, pde_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (doublewell->parsed()) {
      const auto config = load_config(doublewell_opts);
      const auto r = ceis::run_doublewell(config);
      fmt::print("rho_ref (PDE)      = {:.6e}\n", r.rho_ref);
      fmt::print("rho_hat (MC)       = {:.6e}  cov = {:.4g}{}\n", r.mc.rho_hat, r.mc.cov,
                 r.mc.degenerate ? "  [degenerate]" : "");
      fmt::print("rho_hat (IS)       = {:.6e}  cov = {:.4g}  ess = {:.1f}\n", r.is.rho_hat,
                 r.is.cov, r.is.ess);
      fmt::print("CE iterations      = {} ({})\n", r.ce.iterations_used,
                 r.ce.converged ? "converged" : "not converged");
      fmt::print("X_T > 0.5          = {:.4f} uncontrolled, {:.4f} controlled\n",
                 r.uncontrolled_above, r.controlled_above);
      print_artifacts(r.artifacts);
    } else if (gaussian->parsed()) {
      auto config = load_config(gaussian_opts);
      const auto r = ceis::run_gaussian_oracle(config);
      fmt::print("closed form        = {:.6e}\n", r.closed_form);
      fmt::print("MC                 = {:.6e}  rel err {:.3e}{}\n", r.mc.rho_hat, r.mc_rel_error,
                 r.mc.degenerate ? "  [degenerate]" : "");
      fmt::print("IS                 = {:.6e}  rel err {:.3e}\n", r.is.rho_hat, r.is_rel_error);
      fmt::print("PDE                = {:.6e}  rel err {:.3e}\n", r.rho_ref, r.pde_rel_error);
      print_artifacts(r.artifacts);
    } else if (sweep->parsed()) {
      const auto config = load_config(sweep_opts);
      const auto epsilons = epsilons_text ? parse_epsilons(*epsilons_text) : config.epsilons;
      const auto r = ceis::run_sweep(config, epsilons);
      for (std::size_t k = 0; k < r.report.size(); ++k) {
        if (r.report.errors[k]) {
          fmt::print("eps = {:<8} error: {}\n", r.report.epsilons[k], *r.report.errors[k]);
        } else {
          fmt::print("eps = {:<8} eps log R = {:.4f} (theta = 0: {:.4f})  gamma1 = {:.4f}\n",
                     r.report.epsilons[k], r.report.ratio_log[k],
                     r.report.ratio_log_uncontrolled[k], r.report.gamma1_hat[k]);
        }
      }
      print_artifacts(r.artifacts);
    } else if (pde->parsed()) {
      const auto config = load_config(pde_opts);
      const auto r = ceis::run_pde(config);
      fmt::print("rho_ref = {:.10e}\n", r.rho_ref);
      print_artifacts(r.artifacts);
    }
  } catch (const ceis::StageError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  } catch (const ceis::Error& e) {
    fmt::print(stderr, "{}: {}\n", ceis::to_string(e.kind()), e.what());
    return e.kind() == ceis::ErrorKind::kUsage || e.kind() == ceis::ErrorKind::kParse ? 2 : 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
