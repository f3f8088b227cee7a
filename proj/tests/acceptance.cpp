// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include "molddpm/commands.hpp"
#include "molddpm/config.hpp"
#include "molddpm/diagnostics.hpp"
#include "molddpm/error.hpp"
#include "molddpm/format.hpp"
#include "molddpm/smiles.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace molddpm;

namespace {

// Linear 1e-4..0.02 schedule over 1000 steps, computed with 50-digit arithmetic.
constexpr double kAlphaBar1000 = 0.000040358297653756833148;

fs::path source(const std::string& rel) { return fs::path(MOLDDPM_SOURCE_DIR) / rel; }

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "molddpm_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct Outcome {
  bool passed = false;
  std::string detail;
};

class Runner {
 public:
  void run(int id, const std::string& name, double time_limit_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (time_limit_s > 0 && seconds > time_limit_s) {
      o.passed = false;
      o.detail += "; exceeded " + real(time_limit_s) + " s";
    }
    failures_ += !o.passed;
    std::ostringstream secs;
    secs.precision(3);
    secs << seconds;
    std::cout << "criterion " << id << " " << (o.passed ? "PASS" : "FAIL") << " " << name << ": "
              << o.detail << " (" << secs.str() << " s)" << std::endl;
  }

  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

Outcome from_checks(std::initializer_list<CheckResult> checks) {
  Outcome o{true, ""};
  for (const CheckResult& c : checks) {
    o.passed = o.passed && c.passed;
    if (!o.detail.empty()) o.detail += ", ";
    o.detail += c.name + " " + real(c.measured) + " <= " + real(c.tolerance);
  }
  return o;
}

}  // namespace

int main() {
  const fs::path dir = work_dir();
  Runner runner;
  const NoiseSchedule desk = linear_schedule(50, 1e-4, 0.02);

  runner.run(1, "schedule algebra", 1.0, [] {
    std::vector<NoiseSchedule> schedules;
    for (int T : {1, 2, 50, 1000}) schedules.push_back(linear_schedule(T, 1e-4, 0.02));
    const CheckResult fold = check_schedule_products(schedules, 1e-12);
    const double oracle_rel = std::abs(schedules.back().alpha_bar(1000) / kAlphaBar1000 - 1.0);
    Outcome o = from_checks({fold});
    o.passed = o.passed && oracle_rel < 5e-7;
    o.detail += ", alpha_bar_1000 relative error " + real(oracle_rel);
    return o;
  });

  runner.run(2, "chain and marginal consistency", 30.0, [&] {
    Rng rng = make_rng(2);
    return from_checks({check_chain_zero_noise(desk, 4, rng, 1e-10),
                        check_chain_zero_noise(linear_schedule(1000, 1e-4, 0.02), 4, rng, 1e-10),
                        check_chain_variance(desk, 5, 4, 100000, rng, 0.02)});
  });

  runner.run(3, "reverse algebra", 0.0, [&] {
    Rng rng = make_rng(3);
    const DenoiserParams denoiser = DenoiserParams::init(DenoiserConfig{}, 4, desk.steps(), rng);
    return from_checks({check_reverse_zero_noise(desk, 4, rng, 1e-12),
                        check_reverse_variance(desk, denoiser, 2, 100000, rng, 0.02),
                        check_reverse_variance(desk, denoiser, desk.steps(), 100000, rng, 0.02)});
  });

  runner.run(4, "prior KL closed form", 0.0, [&] {
    Rng rng = make_rng(4);
    return from_checks({check_prior_kl(desk, 20, 4, 1000000, rng, 0.01)});
  });

  runner.run(5, "likelihood normalization", 0.0, [] {
    Rng rng = make_rng(5);
    return from_checks({check_likelihood_normalization(100, rng, 1e-10)});
  });

  runner.run(6, "gradient correctness", 120.0, [] {
    Rng rng = make_rng(6);
    return from_checks({check_gradients(rng, 1e-4)});
  });

  RunConfig overfit;
  overfit.data.pretrain = source("data/overfit16.csv").string();
  overfit.output_dir = (dir / "overfit").string();
  overfit.log_every = 100;
  runner.run(7, "overfit reconstruction", 600.0, [&] {
    const PretrainResult r = cmd_pretrain(overfit);
    const bool ok = r.accuracy.node >= 0.95 && r.accuracy.edge >= 0.95;
    return Outcome{ok, "node " + real(r.accuracy.node) + ", edge " + real(r.accuracy.edge) +
                           " after " + std::to_string(overfit.train.steps) + " steps"};
  });

  runner.run(8, "fine-tune efficacy", 0.0, [&] {
    RunConfig config;
    config.data.pretrain = source("data/corpus100.csv").string();
    config.data.finetune = config.data.pretrain;
    config.output_dir = (dir / "finetune").string();
    config.log_every = 100;
    const PretrainResult pre = cmd_pretrain(config);
    const FinetuneResult ft = cmd_finetune(config, pre.checkpoint, true);
    const double baseline = ft.baseline_test_mse.value();
    const bool ok = ft.test_mse < 1.0 && ft.test_mse <= baseline;
    return Outcome{ok, "test MSE " + real(ft.test_mse) + " (< 1), baseline " + real(baseline) +
                           " (must not be lower)"};
  });

  runner.run(9, "parser corpus and samples", 0.0, [&] {
    std::istringstream in(slurp(source("data/corpus100.csv")));
    std::string line;
    std::getline(in, line);
    int molecules = 0, round_trip_failures = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ++molecules;
      const MolecularGraph g = parse_smiles(line.substr(0, line.find(',')));
      const WrittenSmiles w = write_smiles_ordered(g);
      try {
        if (parse_smiles(w.text) != g.permuted(w.order)) ++round_trip_failures;
      } catch (const Error&) {
        ++round_trip_failures;
      }
    }
    const auto samples = cmd_sample(overfit, fs::path(overfit.output_dir) / "pretrain.ckpt", 1000);
    int parse_failures = 0;
    for (const auto& s : samples) {
      try {
        parse_smiles(s);
      } catch (const Error&) {
        ++parse_failures;
      }
    }
    const bool ok = molecules == 100 && round_trip_failures == 0 && samples.size() == 1000 &&
                    parse_failures == 0;
    return Outcome{ok, std::to_string(round_trip_failures) + "/" + std::to_string(molecules) +
                           " round-trip failures, " + std::to_string(parse_failures) + "/" +
                           std::to_string(samples.size()) + " unparseable samples"};
  });

  runner.run(10, "determinism", 0.0, [&] {
    RunConfig config;
    config.data.pretrain = source("data/corpus100.csv").string();
    config.train.steps = 50;
    config.output_dir = (dir / "determinism_a").string();
    const std::string a = slurp(cmd_pretrain(config).metrics);
    config.output_dir = (dir / "determinism_b").string();
    const std::string b = slurp(cmd_pretrain(config).metrics);
    const bool ok = !a.empty() && a == b;
    return Outcome{ok, "metrics logs of " + std::to_string(a.size()) + " bytes " +
                           (a == b ? "identical" : "differ")};
  });

  std::cout << (runner.failures() == 0 ? "all criteria passed"
                                       : std::to_string(runner.failures()) + " criteria failed")
            << std::endl;
  return runner.failures() == 0 ? 0 : 1;
}
