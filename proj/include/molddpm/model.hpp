// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "molddpm/decoder.hpp"
#include "molddpm/encoder.hpp"
#include "molddpm/latent_diffusion.hpp"
#include "molddpm/random.hpp"

namespace molddpm {

/// Everything that fixes parameter shapes.
struct ModelConfig {
  int max_nodes = 32;
  int num_atom_types = 16;
  int num_bond_types = 5;
  int diffusion_steps = 50;
  EncoderConfig encoder;
  DecoderConfig decoder;
  DenoiserConfig denoiser;
};

/// Encoder, decoder and denoiser parameter groups.
struct ModelParams {
  EncoderParams encoder;
  DecoderParams decoder;
  DenoiserParams denoiser;

  static ModelParams init(const ModelConfig& config, Rng& rng) {
    ModelParams m;
    m.encoder = EncoderParams::init(config.encoder, config.num_atom_types, config.num_bond_types,
                                    config.max_nodes, rng);
    m.decoder = DecoderParams::init(config.decoder, config.encoder.latent_dim,
                                    config.num_atom_types, config.num_bond_types,
                                    config.max_nodes, rng);
    m.denoiser = DenoiserParams::init(config.denoiser, config.encoder.latent_dim,
                                      config.diffusion_steps, rng);
    return m;
  }

  int latent_dim() const { return encoder.config.latent_dim; }
};

}  // namespace molddpm
