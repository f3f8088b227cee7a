// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/layers.hpp"

#include "molddpm/error.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace molddpm::nn {

Matrix init_weight(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
  Matrix w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < fan_in; ++i) {
    for (Eigen::Index j = 0; j < fan_out; ++j) w(i, j) = normal(rng);
  }
  return w;
}

void add_linear(ParameterSet& params, const std::string& prefix, Eigen::Index in,
                Eigen::Index out, Rng& rng) {
  params.add(prefix + "/w", init_weight(in, out, rng));
  params.add(prefix + "/b", Matrix::Zero(1, out));
}

Var linear(Tape& tape, const ParameterSet& params, const std::string& prefix, const Var& x) {
  return ad::add_row(ad::matmul(x, tape.parameter(params.at(prefix + "/w"))),
                     tape.parameter(params.at(prefix + "/b")));
}

void add_layer_norm(ParameterSet& params, const std::string& prefix, Eigen::Index width) {
  params.add(prefix + "/gain", Matrix::Ones(1, width));
  params.add(prefix + "/bias", Matrix::Zero(1, width));
}

Var layer_norm(Tape& tape, const ParameterSet& params, const std::string& prefix, const Var& x) {
  return ad::layer_norm_rows(x, tape.parameter(params.at(prefix + "/gain")),
                             tape.parameter(params.at(prefix + "/bias")));
}

Var dropout(const Var& x, const Dropout& d) {
  if (d.rng == nullptr || d.rate <= 0.0) return x;
  std::bernoulli_distribution keep(1.0 - d.rate);
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
      mask(i, j) = keep(*d.rng) ? 1.0 / (1.0 - d.rate) : 0.0;
    }
  }
  return ad::mul(x, x.tape()->constant(std::move(mask)));
}

void add_transformer_layer(ParameterSet& params, const std::string& prefix,
                           const TransformerDims& dims, Rng& rng) {
  if (dims.n_heads < 1 || dims.d_model % dims.n_heads != 0) {
    throw Error(ErrorCode::InvalidConfig, "d_model must be divisible by n_heads");
  }
  add_layer_norm(params, prefix + "/attn_norm", dims.d_model);
  params.add(prefix + "/query", init_weight(dims.d_model, dims.d_model, rng));
  params.add(prefix + "/key", init_weight(dims.d_model, dims.d_model, rng));
  params.add(prefix + "/value", init_weight(dims.d_model, dims.d_model, rng));
  add_linear(params, prefix + "/attn_out", dims.d_model, dims.d_model, rng);
  add_layer_norm(params, prefix + "/ffn_norm", dims.d_model);
  add_linear(params, prefix + "/ffn_in", dims.d_model, dims.d_ff, rng);
  add_linear(params, prefix + "/ffn_out", dims.d_ff, dims.d_model, rng);
}

Var transformer_layer(Tape& tape, const ParameterSet& params, const std::string& prefix,
                      const Var& x, const TransformerDims& dims,
                      std::span<const Var> head_bias, const Dropout& drop) {
  const int head_dim = dims.d_model / dims.n_heads;
  const double score_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Var h = layer_norm(tape, params, prefix + "/attn_norm", x);
  Var q = ad::matmul(h, tape.parameter(params.at(prefix + "/query")));
  Var k = ad::matmul(h, tape.parameter(params.at(prefix + "/key")));
  Var v = ad::matmul(h, tape.parameter(params.at(prefix + "/value")));
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(dims.n_heads));
  for (int head = 0; head < dims.n_heads; ++head) {
    const Eigen::Index start = head * head_dim;
    Var scores = ad::scale(ad::matmul(ad::slice_cols(q, start, head_dim),
                                      ad::transpose(ad::slice_cols(k, start, head_dim))),
                           score_scale);
    if (!head_bias.empty()) scores = scores + head_bias[static_cast<std::size_t>(head)];
    heads.push_back(ad::matmul(ad::softmax_rows(scores), ad::slice_cols(v, start, head_dim)));
  }
  Var attended = linear(tape, params, prefix + "/attn_out", ad::concat_cols(heads));
  Var x1 = x + dropout(attended, drop);

  Var f = layer_norm(tape, params, prefix + "/ffn_norm", x1);
  f = linear(tape, params, prefix + "/ffn_out", ad::gelu(linear(tape, params, prefix + "/ffn_in", f)));
  return x1 + dropout(f, drop);
}

}  // namespace molddpm::nn
