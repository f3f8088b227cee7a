// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/commands.hpp"

#include "molddpm/format.hpp"
#include "molddpm/smiles.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace molddpm {

namespace fs = std::filesystem;

namespace {

void require_file(const fs::path& path, const char* what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::IoError, std::string(what) + " not found: " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng rng = make_rng(seed, stream);
  return rng();
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// FNV-1a over git's blob framing, "blob <size>\0<content>".
std::uint64_t blob_hash(const std::string& content) {
  return fnv1a(content, fnv1a("blob " + std::to_string(content.size()) + std::string(1, '\0')));
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream o;
  o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return o.str();
}

/// Sidecar with everything that is allowed to differ between reruns.
class RunMeta {
 public:
  RunMeta(std::string command, const RunConfig& config) : command_(std::move(command)), started_(utc_now()) {
    meta_["command"] = command_;
    meta_["seed"] = config.seed;
    meta_["architecture_hash"] = hex(config.architecture_hash());
    meta_["config"] = to_yaml(config);
    content_ = blob_hash(to_yaml(config));
  }

  void input(const fs::path& path) {
    const std::uint64_t h = blob_hash(read_file(path));
    meta_["inputs"].push_back({{"path", path.string()}, {"blob_hash", hex(h)}});
    content_ = fnv1a(hex(h), content_);
  }

  nlohmann::json& operator[](const char* key) { return meta_[key]; }

  void write(const fs::path& dir) {
    meta_["started_utc"] = started_;
    meta_["finished_utc"] = utc_now();
    meta_["content_hash"] = hex(content_);
    write_file_atomic(dir / (command_ + "_meta.json"), meta_.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::string started_;
  std::uint64_t content_ = 0;
  nlohmann::json meta_;
};

void put_group(Checkpoint& ckpt, const std::string& prefix, const ad::ParameterSet& set) {
  for (const auto& [name, p] : set) ckpt.tensors[prefix + "/" + name] = p.value;
}

void take_group(const Checkpoint& ckpt, const std::string& prefix, ad::ParameterSet& set) {
  for (auto& [name, p] : set) {
    const std::string key = prefix + "/" + name;
    auto it = ckpt.tensors.find(key);
    if (it == ckpt.tensors.end()) {
      throw Error(ErrorCode::IncompatibleCheckpoint, "checkpoint lacks tensor " + key);
    }
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols()) {
      throw Error(ErrorCode::IncompatibleCheckpoint, "tensor " + key + " has the wrong shape");
    }
    p.value = it->second;
  }
}

SizeHistogram size_histogram(const std::vector<MoleculeRecord>& records, int max_nodes) {
  SizeHistogram h(static_cast<std::size_t>(max_nodes) + 1, 0.0);
  for (const auto& r : records) h[static_cast<std::size_t>(r.graph.num_nodes())] += 1.0;
  return h;
}

ReconstructionAccuracy training_accuracy(const std::vector<MoleculeRecord>& records,
                                         const RunConfig& config, const ModelParams& model,
                                         const NoiseSchedule& schedule) {
  const Minibatch all = full_batch(records, config.batch_options(1));
  std::vector<int> counts;
  for (std::size_t b = 0; b < all.graphs.size(); ++b) counts.push_back(all.graphs.num_nodes(b));
  const Eigen::MatrixXd z1 = deterministic_z1(all.graphs, model.encoder, schedule);
  return reconstruction_accuracy(decode_logits(z1, model.decoder, counts), all.graphs);
}

std::string dataset_name(const std::string& path) { return fs::path(path).stem().string(); }

struct Prepared {
  Split split;
  Standardizer standardizer;
  std::vector<Reject> rejects;
};

Prepared prepare_finetune_data(const RunConfig& config) {
  require_file(config.data.finetune, "fine-tune dataset");
  LoadResult data = load_csv(config.data.finetune, config.load_options(true));
  Prepared p;
  p.rejects = std::move(data.rejects);
  p.split = holdout_split(data.records, config.split_spec());
  p.standardizer = Standardizer::fit(p.split.train);
  return p;
}

double mse_of_mean(const std::vector<MoleculeRecord>& records, const Standardizer& s) {
  double total = 0.0;
  for (double y : s.apply(records)) total += y * y;
  return total / static_cast<double>(records.size());
}

void log_progress(std::ostream* progress, const std::string& line) {
  if (progress) *progress << line << std::endl;
}

}  // namespace

// ---------------------------------------------------------------------------

Checkpoint make_checkpoint(const RunConfig& config, const TrainedModel& trained) {
  Checkpoint ckpt;
  ckpt.architecture_hash = config.architecture_hash();
  ckpt.config_yaml = to_yaml(config);
  put_group(ckpt, "encoder", trained.model.encoder.params);
  put_group(ckpt, "decoder", trained.model.decoder.params);
  put_group(ckpt, "denoiser", trained.model.denoiser.params);
  if (trained.head) put_group(ckpt, "head", trained.head->params);
  if (trained.standardizer) {
    Eigen::MatrixXd s(1, 2);
    s << trained.standardizer->mean, trained.standardizer->stddev;
    ckpt.tensors["meta/standardizer"] = s;
  }
  ckpt.tensors["meta/size_histogram"] =
      Eigen::Map<const Eigen::MatrixXd>(trained.sizes.data(), 1, static_cast<Eigen::Index>(trained.sizes.size()));
  return ckpt;
}

TrainedModel restore(const RunConfig& config, const Checkpoint& ckpt) {
  // Shapes come from a throwaway initialisation; values are overwritten.
  Rng rng = make_rng(0);
  TrainedModel t;
  t.model = ModelParams::init(config.model_config(), rng);
  take_group(ckpt, "encoder", t.model.encoder.params);
  take_group(ckpt, "decoder", t.model.decoder.params);
  take_group(ckpt, "denoiser", t.model.denoiser.params);
  if (ckpt.tensors.count("head/w1")) {
    t.head = HeadParams::init(config.head, config.encoder.latent_dim, rng);
    take_group(ckpt, "head", t.head->params);
  }
  if (auto it = ckpt.tensors.find("meta/standardizer"); it != ckpt.tensors.end()) {
    if (it->second.size() != 2) throw Error(ErrorCode::IncompatibleCheckpoint, "bad standardizer tensor");
    t.standardizer = Standardizer{it->second(0, 0), it->second(0, 1)};
  }
  auto it = ckpt.tensors.find("meta/size_histogram");
  if (it == ckpt.tensors.end() || it->second.size() != config.max_nodes + 1) {
    throw Error(ErrorCode::IncompatibleCheckpoint, "checkpoint lacks a valid size histogram");
  }
  t.sizes.assign(it->second.data(), it->second.data() + it->second.size());
  return t;
}

TrainedModel load_trained(const RunConfig& config, const fs::path& path) {
  require_file(path, "checkpoint");
  return restore(config, load_checkpoint(path, config.architecture_hash()));
}

// ---------------------------------------------------------------------------

PretrainResult cmd_pretrain(const RunConfig& config, std::ostream* progress) {
  config.validate();
  require_file(config.data.pretrain, "pretraining dataset");
  const fs::path out_dir = config.output_dir;
  RunMeta meta("pretrain", config);
  meta.input(config.data.pretrain);

  const LoadResult data = load_csv(config.data.pretrain, config.load_options(false));
  if (data.records.empty()) {
    throw Error(ErrorCode::EmptySplit, "no usable molecules in " + config.data.pretrain);
  }
  const NoiseSchedule schedule = config.make_schedule();
  Rng init = make_rng(config.seed, streams::kModelInit);
  TrainedModel trained;
  trained.model = ModelParams::init(config.model_config(), init);
  trained.sizes = size_histogram(data.records, config.max_nodes);

  TrainConfig train = config.train;
  train.seed = config.seed;
  BatchStream stream(data.records, config.batch_options(train.batch_size),
                     derived_seed(config.seed, streams::kPretrainBatches));
  Rng noise = make_rng(config.seed, streams::kPretrainNoise);
  Adam optimizer(train.adam);

  std::string metrics = "step,recon,prior_kl,denoise,elbo,grad_norm\n";
  PretrainResult result;
  for (int step = 1; step <= train.steps; ++step) {
    const StepReport r = train_step(stream.next().graphs, trained.model, schedule, train, noise, optimizer);
    result.last = r.breakdown;
    if (step % config.log_every == 0 || step == train.steps) {
      const auto& b = r.breakdown;
      metrics += std::to_string(step) + "," + real(b.recon) + "," + real(b.prior_kl) + "," +
                 real(b.denoise) + "," + real(b.elbo) + "," + real(r.grad_norm) + "\n";
    }
    if (progress && (step % 500 == 0 || step == train.steps)) {
      std::ostringstream line;
      line << "step " << step << "/" << train.steps << " elbo " << r.breakdown.elbo << " recon "
           << r.breakdown.recon;
      log_progress(progress, line.str());
    }
  }
  result.accuracy = training_accuracy(data.records, config, trained.model, schedule);

  result.checkpoint = out_dir / "pretrain.ckpt";
  result.metrics = out_dir / "metrics.csv";
  save_checkpoint(result.checkpoint, make_checkpoint(config, trained));
  write_file_atomic(result.metrics, metrics);
  write_file_atomic(out_dir / "pretrain_rejects.csv", rejects_csv(data.rejects));
  meta["records"] = data.records.size();
  meta["rejects"] = data.rejects.size();
  meta["node_accuracy"] = result.accuracy.node;
  meta["edge_accuracy"] = result.accuracy.edge;
  meta.write(out_dir);
  return result;
}

// ---------------------------------------------------------------------------

std::string mse_table_csv(const std::vector<MseRow>& rows) {
  std::string out = "dataset,split,model,mse\n";
  for (const auto& r : rows) out += r.dataset + "," + r.split + "," + r.model + "," + real(r.mse) + "\n";
  return out;
}

FinetuneResult cmd_finetune(const RunConfig& config, const fs::path& checkpoint, bool baseline,
                            std::ostream* progress) {
  config.validate();
  TrainedModel trained = load_trained(config, checkpoint);
  const Prepared data = prepare_finetune_data(config);
  const fs::path out_dir = config.output_dir;
  RunMeta meta("finetune", config);
  meta.input(checkpoint);
  meta.input(config.data.finetune);

  const NoiseSchedule schedule = config.make_schedule();
  const FinetuneConfig& ft = config.finetune;
  Rng head_init = make_rng(config.seed, streams::kHeadInit);
  trained.head = HeadParams::init(config.head, config.encoder.latent_dim, head_init);
  trained.standardizer = data.standardizer;
  const std::uint64_t batch_seed = derived_seed(config.seed, streams::kFinetuneBatches);
  const BatchOptions batch_options = config.batch_options(ft.batch_size);

  {
    BatchStream stream(data.split.train, batch_options, batch_seed, &data.standardizer);
    Rng noise = make_rng(config.seed, streams::kFinetuneNoise);
    Adam optimizer(ft.adam);
    for (int step = 1; step <= ft.steps; ++step) {
      const Minibatch& mb = stream.next();
      const FinetuneReport r = finetune_step(mb.graphs, mb.targets, trained.model, *trained.head,
                                             schedule, ft, noise, optimizer);
      if (progress && (step % 500 == 0 || step == ft.steps)) {
        std::ostringstream line;
        line << "finetune step " << step << "/" << ft.steps << " loss " << r.components.loss
             << " mse " << r.components.mse;
        log_progress(progress, line.str());
      }
    }
  }

  const Minibatch train_all = full_batch(data.split.train, batch_options, &data.standardizer);
  const Minibatch test_all = full_batch(data.split.test, batch_options, &data.standardizer);
  const std::string name = dataset_name(config.data.finetune);
  FinetuneResult result;
  const auto add_rows = [&](const char* tag, const EncoderParams& enc, const HeadParams& head) {
    const double train_mse = evaluate_mse(train_all.graphs, train_all.targets, enc, head, schedule);
    const double test_mse = evaluate_mse(test_all.graphs, test_all.targets, enc, head, schedule);
    result.table.push_back({name, "train", tag, train_mse});
    result.table.push_back({name, "test", tag, test_mse});
    return test_mse;
  };
  result.test_mse = add_rows(kJointModelTag, trained.model.encoder, *trained.head);

  if (baseline) {
    Rng init = make_rng(config.seed, streams::kBaselineInit);
    EncoderParams encoder = EncoderParams::init(config.encoder, static_cast<int>(config.atom_symbols.size()),
                                                BondAlphabet::size(), config.max_nodes, init);
    HeadParams head = HeadParams::init(config.head, config.encoder.latent_dim, init);
    BatchStream stream(data.split.train, batch_options, batch_seed, &data.standardizer);
    Rng noise = make_rng(config.seed, streams::kBaselineNoise);
    Adam optimizer(ft.adam);
    for (int step = 1; step <= ft.steps; ++step) {
      const Minibatch& mb = stream.next();
      supervised_step(mb.graphs, mb.targets, encoder, head, schedule, ft, noise, optimizer);
    }
    result.baseline_test_mse = add_rows(kBaselineModelTag, encoder, head);
  }
  result.table.push_back({name, "train", kMeanModelTag, mse_of_mean(data.split.train, data.standardizer)});
  result.table.push_back({name, "test", kMeanModelTag, mse_of_mean(data.split.test, data.standardizer)});

  result.checkpoint = out_dir / "finetuned.ckpt";
  save_checkpoint(result.checkpoint, make_checkpoint(config, trained));
  write_file_atomic(out_dir / "results.csv", mse_table_csv(result.table));
  write_file_atomic(out_dir / "finetune_rejects.csv", rejects_csv(data.rejects));
  meta["train_records"] = data.split.train.size();
  meta["test_records"] = data.split.test.size();
  meta["target_mean"] = data.standardizer.mean;
  meta["target_stddev"] = data.standardizer.stddev;
  meta.write(out_dir);
  return result;
}

std::vector<MseRow> cmd_evaluate(const RunConfig& config, const fs::path& checkpoint) {
  config.validate();
  const TrainedModel trained = load_trained(config, checkpoint);
  if (!trained.head || !trained.standardizer) {
    throw Error(ErrorCode::IncompatibleCheckpoint,
                checkpoint.string() + " has no regression head; run finetune first");
  }
  const Prepared data = prepare_finetune_data(config);
  const NoiseSchedule schedule = config.make_schedule();
  const BatchOptions options = config.batch_options(1);
  const std::string name = dataset_name(config.data.finetune);
  std::vector<MseRow> rows;
  for (const auto& [split, records] : {std::pair{"train", &data.split.train}, std::pair{"test", &data.split.test}}) {
    const Minibatch all = full_batch(*records, options, &*trained.standardizer);
    rows.push_back({name, split, kJointModelTag,
                    evaluate_mse(all.graphs, all.targets, trained.model.encoder, *trained.head, schedule)});
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::size_t cmd_encode(const RunConfig& config, const fs::path& checkpoint, const fs::path& input,
                       const fs::path& output) {
  config.validate();
  const TrainedModel trained = load_trained(config, checkpoint);
  require_file(input, "input");
  const LoadResult data = load_csv(input, config.load_options(false));
  std::string csv = "smiles";
  for (int i = 1; i <= config.encoder.latent_dim; ++i) csv += ",z1_" + std::to_string(i);
  csv += "\n";
  if (!data.records.empty()) {
    const Minibatch all = full_batch(data.records, config.batch_options(1));
    const Eigen::MatrixXd z1 = deterministic_z1(all.graphs, trained.model.encoder, config.make_schedule());
    for (std::size_t b = 0; b < data.records.size(); ++b) {
      csv += data.records[b].smiles;
      for (Eigen::Index i = 0; i < z1.cols(); ++i) csv += "," + real(z1(static_cast<Eigen::Index>(b), i));
      csv += "\n";
    }
  }
  fs::path rejects = output;
  rejects += ".rejects.csv";
  write_file_atomic(output, csv);
  write_file_atomic(rejects, rejects_csv(data.rejects));
  return data.records.size();
}

std::vector<std::string> cmd_sample(const RunConfig& config, const fs::path& checkpoint, int n) {
  config.validate();
  if (n < 0) throw Error(ErrorCode::InvalidConfig, "sample count must be >= 0");
  const TrainedModel trained = load_trained(config, checkpoint);
  std::vector<std::string> out;
  if (n == 0) return out;
  const NoiseSchedule schedule = config.make_schedule();
  const AtomAlphabet alphabet = config.alphabet();
  Rng rng = make_rng(config.seed, streams::kSampling);
  const Eigen::MatrixXd z1 = ancestral_sample(schedule, trained.model.denoiser, n, rng);
  std::discrete_distribution<int> size_dist(trained.sizes.begin(), trained.sizes.end());
  for (int i = 0; i < n; ++i) {
    const int count = size_dist(rng);
    std::vector<bool> mask(static_cast<std::size_t>(config.max_nodes), false);
    std::fill_n(mask.begin(), count, true);
    out.push_back(write_smiles(greedy_decode(z1.row(i), trained.model.decoder, mask), alphabet));
  }
  return out;
}

std::vector<CheckResult> cmd_check(const RunConfig& config, const CheckOptions& options) {
  config.validate();
  return run_checks(config, options);
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::InvalidConfig:
    case ErrorCode::MissingColumn:
    case ErrorCode::EmptyFile:
    case ErrorCode::IncompatibleCheckpoint:
    case ErrorCode::CorruptCheckpoint:
      return 2;
    default:
      return 1;
  }
}

}  // namespace molddpm
