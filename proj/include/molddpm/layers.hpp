// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

// Building blocks shared by the encoder, decoder, denoiser and regression
// head. Parameters are stored in a ParameterSet under "<prefix>/<name>".

#pragma once

#include "molddpm/autodiff.hpp"
#include "molddpm/random.hpp"

#include <span>
#include <string>

namespace molddpm::nn {

using ad::Matrix;
using ad::ParameterSet;
using ad::Tape;
using ad::Var;

/// Zero-mean normal weights with variance 1 / fan_in.
Matrix init_weight(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng);

void add_linear(ParameterSet& params, const std::string& prefix, Eigen::Index in,
                Eigen::Index out, Rng& rng);
Var linear(Tape& tape, const ParameterSet& params, const std::string& prefix, const Var& x);

void add_layer_norm(ParameterSet& params, const std::string& prefix, Eigen::Index width);
Var layer_norm(Tape& tape, const ParameterSet& params, const std::string& prefix, const Var& x);

/// Inverted dropout; a null rng or zero rate is the identity.
struct Dropout {
  double rate = 0.0;
  Rng* rng = nullptr;
};
Var dropout(const Var& x, const Dropout& d);

struct TransformerDims {
  int d_model = 64;
  int n_heads = 4;
  int d_ff = 128;
};

void add_transformer_layer(ParameterSet& params, const std::string& prefix,
                           const TransformerDims& dims, Rng& rng);

/// Pre-norm block: x + Attn(LN(x)), then x + FFN(LN(x)). `head_bias`, when
/// non-empty, holds one additive n x n score bias per head.
Var transformer_layer(Tape& tape, const ParameterSet& params, const std::string& prefix,
                      const Var& x, const TransformerDims& dims,
                      std::span<const Var> head_bias, const Dropout& drop);

}  // namespace molddpm::nn
