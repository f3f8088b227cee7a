// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/config.hpp"

#include "molddpm/error.hpp"
#include "molddpm/format.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace molddpm {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void RunConfig::validate() const {
  if (max_nodes < 2) throw Error(ErrorCode::InvalidConfig, "graph.max_nodes must be >= 2");
  (void)alphabet();
  if (schedule.steps < 1) throw Error(ErrorCode::InvalidConfig, "schedule.steps must be >= 1");
  try {
    (void)make_schedule();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, "schedule: " + e.message());
  }
  encoder.validate();
  decoder.validate();
  denoiser.validate();
  head.validate();
  train.validate();
  if (!(train.adam.learning_rate > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "train.learning_rate must be > 0");
  }
  finetune.validate();
  split_spec().validate();
  if (log_every < 1) throw Error(ErrorCode::InvalidConfig, "log_every must be >= 1");
  if (output_dir.empty()) throw Error(ErrorCode::InvalidConfig, "output_dir must not be empty");
}

NoiseSchedule RunConfig::make_schedule() const {
  return linear_schedule(schedule.steps, schedule.beta_start, schedule.beta_end);
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.max_nodes = max_nodes;
  m.num_atom_types = static_cast<int>(atom_symbols.size());
  m.num_bond_types = BondAlphabet::size();
  m.diffusion_steps = schedule.steps;
  m.encoder = encoder;
  m.decoder = decoder;
  m.denoiser = denoiser;
  return m;
}

BatchOptions RunConfig::batch_options(int batch_size) const {
  return {batch_size, max_nodes, static_cast<int>(atom_symbols.size()), BondAlphabet::size()};
}

LoadOptions RunConfig::load_options(bool require_target) const {
  return {require_target, max_nodes, alphabet()};
}

std::uint64_t RunConfig::architecture_hash() const {
  std::ostringstream s;
  s << "max_nodes=" << max_nodes << ";atoms=";
  for (const auto& a : atom_symbols) s << a << ' ';
  s << ";schedule=" << schedule.steps << ',' << real(schedule.beta_start) << ','
    << real(schedule.beta_end);
  s << ";encoder=" << encoder.latent_dim << ',' << encoder.n_layers << ',' << encoder.n_heads << ','
    << encoder.d_model << ',' << encoder.d_ff;
  s << ";decoder=" << decoder.n_layers << ',' << decoder.n_heads << ',' << decoder.d_model << ','
    << decoder.d_ff;
  s << ";denoiser=" << denoiser.hidden << ";head=" << head.hidden;
  return fnv1a(s.str());
}

namespace {

class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsMap()) {
      throw Error(ErrorCode::InvalidConfig, "'" + path_ + "' must be a mapping");
    }
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_[key]) return;
    try {
      out = node_[key].template as<T>();
    } catch (const YAML::Exception&) {
      throw Error(ErrorCode::InvalidConfig, "cannot read '" + name(key) + "'");
    }
  }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(node_ ? node_[key] : YAML::Node(), name(key));
  }

  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw Error(ErrorCode::InvalidConfig, "unknown key '" + name(key) + "'");
    }
  }

 private:
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_adam(Section& s, AdamConfig& a) {
  s.read("learning_rate", a.learning_rate);
  s.read("beta1", a.beta1);
  s.read("beta2", a.beta2);
  s.read("epsilon", a.epsilon);
}

}  // namespace

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("YAML: ") + e.what());
  }
  RunConfig c;
  if (root.IsNull()) return c;
  Section top(root, "");
  top.read("seed", c.seed);
  top.read("output_dir", c.output_dir);
  top.read("log_every", c.log_every);

  Section data = top.child("data");
  data.read("pretrain", c.data.pretrain);
  data.read("finetune", c.data.finetune);
  data.finish();

  Section graph = top.child("graph");
  graph.read("max_nodes", c.max_nodes);
  graph.read("atom_symbols", c.atom_symbols);
  graph.finish();

  Section sched = top.child("schedule");
  sched.read("steps", c.schedule.steps);
  sched.read("beta_start", c.schedule.beta_start);
  sched.read("beta_end", c.schedule.beta_end);
  sched.finish();

  Section enc = top.child("encoder");
  enc.read("latent_dim", c.encoder.latent_dim);
  enc.read("n_layers", c.encoder.n_layers);
  enc.read("n_heads", c.encoder.n_heads);
  enc.read("d_model", c.encoder.d_model);
  enc.read("d_ff", c.encoder.d_ff);
  enc.read("dropout", c.encoder.dropout);
  enc.finish();

  Section dec = top.child("decoder");
  dec.read("n_layers", c.decoder.n_layers);
  dec.read("n_heads", c.decoder.n_heads);
  dec.read("d_model", c.decoder.d_model);
  dec.read("d_ff", c.decoder.d_ff);
  dec.read("dropout", c.decoder.dropout);
  dec.finish();

  Section den = top.child("denoiser");
  den.read("hidden", c.denoiser.hidden);
  den.finish();

  Section head = top.child("head");
  head.read("hidden", c.head.hidden);
  head.finish();

  Section train = top.child("train");
  read_adam(train, c.train.adam);
  train.read("batch_size", c.train.batch_size);
  train.read("steps", c.train.steps);
  train.read("grad_clip", c.train.grad_clip);
  train.finish();

  Section ft = top.child("finetune");
  ft.read("lambda", c.finetune.lambda);
  std::string unfreeze(to_string(c.finetune.unfreeze));
  ft.read("unfreeze", unfreeze);
  c.finetune.unfreeze = parse_unfreeze(unfreeze);
  read_adam(ft, c.finetune.adam);
  ft.read("batch_size", c.finetune.batch_size);
  ft.read("steps", c.finetune.steps);
  ft.read("grad_clip", c.finetune.grad_clip);
  ft.finish();

  Section split = top.child("split");
  split.read("train_fraction", c.train_fraction);
  split.finish();

  top.finish();
  c.train.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message(), e.position());
  }
}

namespace {

void emit_adam(std::ostringstream& o, const AdamConfig& a) {
  o << "  learning_rate: " << real(a.learning_rate) << "  # Adam step size\n";
  o << "  beta1: " << real(a.beta1) << "  # first-moment decay\n";
  o << "  beta2: " << real(a.beta2) << "  # second-moment decay\n";
  o << "  epsilon: " << real(a.epsilon) << "  # denominator floor\n";
}

std::string quoted(const std::string& s) {
  YAML::Emitter e;
  e << YAML::DoubleQuoted << s;
  return e.c_str();
}

}  // namespace

std::string to_yaml(const RunConfig& c) {
  std::ostringstream o;
  o << "# molddpm run configuration\n";
  o << "seed: " << c.seed << "  # drives initialisation, batching, noise and the holdout split\n";
  o << "output_dir: " << quoted(c.output_dir) << "  # overridden by $" << kOutputDirEnv << "\n";
  o << "log_every: " << c.log_every << "  # metrics log cadence in steps\n";
  o << "data:\n";
  o << "  pretrain: " << quoted(c.data.pretrain) << "  # CSV with a smiles column\n";
  o << "  finetune: " << quoted(c.data.finetune) << "  # CSV with smiles and target columns\n";
  o << "graph:\n";
  o << "  max_nodes: " << c.max_nodes << "  # largest heavy-atom count a graph may have\n";
  o << "  atom_symbols: [";
  for (std::size_t i = 0; i < c.atom_symbols.size(); ++i) {
    o << (i ? ", " : "") << c.atom_symbols[i];
  }
  o << "]  # node categories; lowercase means aromatic\n";
  o << "schedule:\n";
  o << "  steps: " << c.schedule.steps << "  # diffusion length T\n";
  o << "  beta_start: " << real(c.schedule.beta_start) << "  # beta_1 of the linear schedule\n";
  o << "  beta_end: " << real(c.schedule.beta_end) << "  # beta_T of the linear schedule\n";
  o << "encoder:\n";
  o << "  latent_dim: " << c.encoder.latent_dim << "  # width d of z0 and z1\n";
  o << "  n_layers: " << c.encoder.n_layers << "  # transformer layers\n";
  o << "  n_heads: " << c.encoder.n_heads << "  # attention heads\n";
  o << "  d_model: " << c.encoder.d_model << "  # token width\n";
  o << "  d_ff: " << c.encoder.d_ff << "  # feed-forward width\n";
  o << "  dropout: " << real(c.encoder.dropout) << "  # training-time dropout rate\n";
  o << "decoder:\n";
  o << "  n_layers: " << c.decoder.n_layers << "  # transformer layers\n";
  o << "  n_heads: " << c.decoder.n_heads << "  # attention heads\n";
  o << "  d_model: " << c.decoder.d_model << "  # token width\n";
  o << "  d_ff: " << c.decoder.d_ff << "  # feed-forward width\n";
  o << "  dropout: " << real(c.decoder.dropout) << "  # training-time dropout rate\n";
  o << "denoiser:\n";
  o << "  hidden: " << c.denoiser.hidden << "  # noise-predictor hidden width (even)\n";
  o << "head:\n";
  o << "  hidden: " << c.head.hidden << "  # regression MLP hidden width\n";
  o << "train:\n";
  emit_adam(o, c.train.adam);
  o << "  batch_size: " << c.train.batch_size << "  # graphs per step\n";
  o << "  steps: " << c.train.steps << "  # pretraining steps\n";
  o << "  grad_clip: " << real(c.train.grad_clip) << "  # global gradient-norm ceiling\n";
  o << "finetune:\n";
  o << "  lambda: " << real(c.finetune.lambda) << "  # weight of the regression MSE\n";
  o << "  unfreeze: " << to_string(c.finetune.unfreeze)
    << "  # all | encoder | head; the head always trains\n";
  emit_adam(o, c.finetune.adam);
  o << "  batch_size: " << c.finetune.batch_size << "  # graphs per step\n";
  o << "  steps: " << c.finetune.steps << "  # fine-tuning steps\n";
  o << "  grad_clip: " << real(c.finetune.grad_clip) << "  # global gradient-norm ceiling\n";
  o << "split:\n";
  o << "  train_fraction: " << real(c.train_fraction) << "  # holdout share used for training\n";
  return o.str();
}

void apply_environment(RunConfig& config) {
  const char* dir = std::getenv(kOutputDirEnv);
  if (dir && *dir) config.output_dir = dir;
}

}  // namespace molddpm
