// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/diagnostics.hpp"

#include "molddpm/config.hpp"
#include "molddpm/decoder.hpp"
#include "molddpm/encoder.hpp"
#include "molddpm/error.hpp"
#include "molddpm/format.hpp"
#include "molddpm/latent_diffusion.hpp"
#include "molddpm/objective.hpp"
#include "molddpm/smiles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace molddpm {

namespace {

CheckResult result(std::string name, double measured, double tolerance) {
  return {std::move(name), measured, tolerance, std::isfinite(measured) && measured <= tolerance};
}

double rel(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Worst relative deviation of each column's variance around `center`.
double variance_deviation(const Eigen::MatrixXd& samples, const Eigen::RowVectorXd& center,
                          double expected) {
  const Eigen::MatrixXd dev = samples.rowwise() - center;
  const Eigen::RowVectorXd var = dev.array().square().colwise().sum() / static_cast<double>(samples.rows());
  return ((var.array() - expected).abs() / expected).maxCoeff();
}

}  // namespace

CheckResult check_schedule_products(const std::vector<NoiseSchedule>& schedules, double tolerance) {
  double worst = 0.0;
  for (const auto& s : schedules) {
    long double fold = 1.0L;
    for (int t = 1; t <= s.steps(); ++t) {
      fold *= 1.0L - static_cast<long double>(s.beta(t));
      worst = std::max(worst, rel(s.alpha_bar(t), static_cast<double>(fold)));
    }
  }
  return result("schedule_products", worst, tolerance);
}

CheckResult check_chain_zero_noise(const NoiseSchedule& schedule, int latent_dim, Rng& rng,
                                   double tolerance) {
  const Eigen::MatrixXd z0 = standard_normal(1, latent_dim, rng);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, latent_dim);
  Eigen::MatrixXd z = sample_z1(z0, schedule, zero);
  double worst = 0.0;
  for (int t = 1; t <= schedule.steps(); ++t) {
    if (t >= 2) z = forward_step(z, t, schedule, zero);
    const Eigen::MatrixXd closed = marginal_sample(z0, t, schedule, zero);
    worst = std::max(worst, (z - closed).norm() / closed.norm());
  }
  return result("chain_zero_noise", worst, tolerance);
}

CheckResult check_chain_variance(const NoiseSchedule& schedule, int t, int latent_dim,
                                 int samples, Rng& rng, double tolerance) {
  const Eigen::RowVectorXd z0 = standard_normal(1, latent_dim, rng);
  const Eigen::MatrixXd start = z0.replicate(samples, 1);
  Eigen::MatrixXd z = sample_z1(start, schedule, standard_normal(samples, latent_dim, rng));
  for (int s = 2; s <= t; ++s) z = forward_step(z, s, schedule, standard_normal(samples, latent_dim, rng));
  const Eigen::RowVectorXd mean = std::sqrt(schedule.alpha_bar(t)) * z0;
  return result("chain_variance_t" + std::to_string(t),
                variance_deviation(z, mean, 1.0 - schedule.alpha_bar(t)), tolerance);
}

CheckResult check_reverse_zero_noise(const NoiseSchedule& schedule, int latent_dim, Rng& rng,
                                     double tolerance) {
  const Eigen::MatrixXd z = standard_normal(4, latent_dim, rng);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  double worst = 0.0;
  for (int t = 1; t <= schedule.steps(); ++t) {
    if (!(1.0 - schedule.alpha_bar(t) > 0.0)) continue;
    const Eigen::MatrixXd u = reverse_mean_from_noise(z, t, schedule, zero);
    const Eigen::MatrixXd expected = z / std::sqrt(schedule.alpha(t));
    worst = std::max(worst, (u - expected).norm() / expected.norm());
  }
  return result("reverse_zero_noise", worst, tolerance);
}

CheckResult check_reverse_variance(const NoiseSchedule& schedule, const DenoiserParams& denoiser,
                                   int t, int samples, Rng& rng, double tolerance) {
  const Eigen::RowVectorXd z_t = standard_normal(1, denoiser.latent_dim, rng);
  const Eigen::RowVectorXd mean = reverse_mean(z_t, t, schedule, denoiser);
  const Eigen::MatrixXd draws =
      reverse_step(z_t.replicate(samples, 1), t, schedule, denoiser,
                   standard_normal(samples, denoiser.latent_dim, rng));
  return result("reverse_variance_t" + std::to_string(t),
                variance_deviation(draws, mean, schedule.beta(t)), tolerance);
}

CheckResult check_prior_kl(const NoiseSchedule& schedule, int points, int latent_dim, int samples,
                           Rng& rng, double tolerance) {
  const double ab = schedule.alpha_bar(schedule.steps());
  const double sd = std::sqrt(1.0 - ab);
  const double log_var = std::log1p(-ab);
  std::uniform_real_distribution<double> box(-3.0, 3.0);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    Eigen::MatrixXd z0(1, latent_dim);
    for (int i = 0; i < latent_dim; ++i) z0(0, i) = box(rng);
    const double closed = prior_kl_closed_form(z0, schedule)(0);
    // log q(x) - log p(x) with x = sqrt(ab) z0 + sd * e.
    double total = 0.0;
    for (int s = 0; s < samples; ++s) {
      double log_ratio = 0.0;
      for (int i = 0; i < latent_dim; ++i) {
        const double e = normal(rng);
        const double x = std::sqrt(ab) * z0(0, i) + sd * e;
        log_ratio += -0.5 * e * e - 0.5 * log_var + 0.5 * x * x;
      }
      total += log_ratio;
    }
    worst = std::max(worst, rel(closed, total / samples));
  }
  return result("prior_kl_monte_carlo", worst, tolerance);
}

CheckResult check_likelihood_normalization(int draws, Rng& rng, double tolerance) {
  constexpr int kNodes = 2, kAtoms = 2, kBonds = 2;
  DecoderConfig config;
  config.n_layers = 1;
  config.n_heads = 2;
  config.d_model = 8;
  config.d_ff = 16;
  constexpr int kLatent = 3;

  // Every labelled graph on one or two nodes.
  std::vector<MolecularGraph> graphs[kNodes + 1];
  for (int a = 0; a < kAtoms; ++a) {
    graphs[1].push_back(MolecularGraph({a}));
    for (int b = 0; b < kAtoms; ++b) {
      for (int e = 0; e < kBonds; ++e) {
        MolecularGraph g({a, b});
        g.set_bond(0, 1, e);
        graphs[2].push_back(g);
      }
    }
  }

  double worst = 0.0;
  std::normal_distribution<double> scale_dist(0.0, 1.0);
  for (int d = 0; d < draws; ++d) {
    DecoderParams decoder = DecoderParams::init(config, kLatent, kAtoms, kBonds, kNodes, rng);
    // Spread the logits so the check is not dominated by near-uniform outputs.
    const double gain = std::exp(scale_dist(rng));
    for (auto& [name, p] : decoder.params) p.value *= gain;
    const Eigen::MatrixXd z1 = standard_normal(1, kLatent, rng);
    for (int n = 1; n <= kNodes; ++n) {
      const GraphBatch batch = to_batch(graphs[n], kNodes, kAtoms, kBonds);
      const Eigen::MatrixXd zs = z1.replicate(static_cast<Eigen::Index>(batch.size()), 1);
      const std::vector<int> counts(batch.size(), n);
      const std::vector<double> ll = log_likelihood(decode_logits(zs, decoder, counts), batch);
      double matrix_sum = 0.0, tape_sum = 0.0;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        matrix_sum += std::exp(ll[b]);
        ad::Tape tape;
        const DecodedGraph decoded = decode_graph(tape, tape.constant(z1), n, decoder);
        tape_sum += std::exp(log_likelihood(decoded, batch, b).scalar());
      }
      worst = std::max({worst, std::abs(matrix_sum - 1.0), std::abs(tape_sum - 1.0)});
    }
  }
  return result("likelihood_normalization", worst, tolerance);
}

double GradientCheck::worst() const { return std::max({encoder, decoder, denoiser}); }

GradientCheck gradient_check(const ModelParams& model, const NoiseSchedule& schedule,
                             const std::vector<std::string>& smiles, Rng& rng, double step) {
  std::vector<MolecularGraph> graphs;
  for (const auto& s : smiles) graphs.push_back(parse_smiles(s));
  const GraphBatch batch = to_batch(graphs, model.encoder.max_nodes, model.encoder.num_atom_types,
                                    model.encoder.num_bond_types);
  const ElboDraws draws = draw_elbo_noise(batch.size(), model.latent_dim(), schedule.steps(), rng);

  ModelParams probe = model;
  const auto loss = [&] {
    ad::Tape tape;
    return build_elbo(tape, batch, probe, schedule, draws).loss(LossWeights{}).scalar();
  };
  ad::Tape tape;
  const ad::Gradients analytic =
      tape.backward(build_elbo(tape, batch, probe, schedule, draws).loss(LossWeights{}));

  const auto group = [&](ad::ParameterSet& set) {
    double diff = 0.0, norm_a = 0.0, norm_n = 0.0;
    for (auto& [name, p] : set) {
      auto it = analytic.find(&p);
      for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
          const double saved = p.value(i, j);
          p.value(i, j) = saved + step;
          const double up = loss();
          p.value(i, j) = saved - step;
          const double down = loss();
          p.value(i, j) = saved;
          const double numeric = (up - down) / (2.0 * step);
          const double a = it == analytic.end() ? 0.0 : it->second(i, j);
          diff += (a - numeric) * (a - numeric);
          norm_a += a * a;
          norm_n += numeric * numeric;
        }
      }
    }
    const double scale = std::sqrt(std::max(norm_a, norm_n));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
  };
  GradientCheck out;
  out.encoder = group(probe.encoder.params);
  out.decoder = group(probe.decoder.params);
  out.denoiser = group(probe.denoiser.params);
  return out;
}

CheckResult check_gradients(Rng& rng, double tolerance) {
  ModelConfig config;
  config.max_nodes = 3;
  config.diffusion_steps = 3;
  config.encoder.latent_dim = 4;
  config.encoder.n_layers = 1;
  config.encoder.n_heads = 2;
  config.encoder.d_model = 8;
  config.encoder.d_ff = 8;
  config.decoder.n_layers = 1;
  config.decoder.n_heads = 2;
  config.decoder.d_model = 8;
  config.decoder.d_ff = 8;
  config.denoiser.hidden = 8;
  const ModelParams model = ModelParams::init(config, rng);
  const NoiseSchedule schedule = linear_schedule(3, 0.1, 0.3);
  const GradientCheck g = gradient_check(model, schedule, {"CO"}, rng);
  return result("elbo_gradient", g.worst(), tolerance);
}

std::vector<CheckResult> run_checks(const RunConfig& config, const CheckOptions& options) {
  NoiseSchedule schedule = config.make_schedule();
  if (options.corrupt_alpha_bar) {
    std::vector<double> ab = schedule.alpha_bars();
    ab[ab.size() / 2] *= 1.0 + 1e-6;
    schedule = NoiseSchedule::from_tables_unchecked(schedule.betas(), schedule.alphas(), ab);
  }
  const int d = config.encoder.latent_dim;
  Rng rng = make_rng(config.seed, 0xc4ec);
  const DenoiserParams denoiser = DenoiserParams::init(config.denoiser, d, schedule.steps(), rng);

  std::vector<NoiseSchedule> schedules{schedule};
  for (int T : {1, 2, 1000}) schedules.push_back(linear_schedule(T, 1e-4, 0.02));

  std::vector<CheckResult> out;
  out.push_back(check_schedule_products(schedules));
  out.push_back(check_chain_zero_noise(schedule, d, rng));
  out.push_back(check_chain_variance(schedule, std::min(5, schedule.steps()), d, 100000, rng));
  out.push_back(check_reverse_zero_noise(schedule, d, rng));
  if (schedule.steps() >= 2) {
    out.push_back(check_reverse_variance(schedule, denoiser, schedule.steps(), 100000, rng));
  }
  out.push_back(check_prior_kl(schedule, 20, d, 1000000, rng));
  out.push_back(check_likelihood_normalization(100, rng));
  out.push_back(check_gradients(rng));
  return out;
}

std::string format_checks(const std::vector<CheckResult>& results) {
  std::string out = "check,measured,tolerance,status\n";
  for (const auto& r : results) {
    out += r.name + "," + real(r.measured) + "," + real(r.tolerance) + "," +
           (r.passed ? "pass" : "FAIL") + "\n";
  }
  return out;
}

}  // namespace molddpm
