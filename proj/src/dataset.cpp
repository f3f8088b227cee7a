// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/dataset.hpp"

#include "molddpm/error.hpp"
#include "molddpm/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace molddpm {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_real(const std::string& text) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

LoadResult load_csv_text(const std::string& text, const LoadOptions& options) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorCode::EmptyFile, "no header row");

  const auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto smiles_col = column("smiles");
  if (!smiles_col) throw Error(ErrorCode::MissingColumn, "header has no 'smiles' column");
  const auto target_col = column("target");
  if (options.require_target && !target_col) {
    throw Error(ErrorCode::MissingColumn, "header has no 'target' column");
  }

  LoadResult result;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const std::string smiles = *smiles_col < fields.size() ? fields[*smiles_col] : "";
    const auto reject = [&](std::string why) {
      result.rejects.push_back({line_no, smiles, std::move(why)});
    };
    if (fields.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, got " +
             std::to_string(fields.size()));
      continue;
    }
    MoleculeRecord rec;
    rec.smiles = smiles;
    rec.line = line_no;
    try {
      rec.graph = parse_smiles(smiles, options.alphabet);
    } catch (const Error& e) {
      reject(e.what());
      continue;
    }
    if (rec.graph.num_nodes() > options.max_nodes) {
      reject(Error(ErrorCode::GraphTooLarge, std::to_string(rec.graph.num_nodes()) +
                                                 " atoms exceed max_nodes " +
                                                 std::to_string(options.max_nodes))
                 .what());
      continue;
    }
    if (target_col) {
      rec.target = parse_real(fields[*target_col]);
      if (!rec.target && options.require_target) {
        reject("target '" + fields[*target_col] + "' is not a finite real");
        continue;
      }
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

LoadResult load_csv(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return load_csv_text(buf.str(), options);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message(), e.position());
  }
}

std::string rejects_csv(const std::vector<Reject>& rejects) {
  std::string out = "line,smiles,error\n";
  for (const Reject& r : rejects) {
    out += std::to_string(r.line) + "," + csv_field(r.smiles) + "," + csv_field(r.error) + "\n";
  }
  return out;
}

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "train_fraction must lie in (0, 1)");
  }
}

Split holdout_split(const std::vector<MoleculeRecord>& records, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = records.size();
  if (n < 2) {
    throw Error(ErrorCode::TooFewRecords,
                "a holdout split needs at least 2 records, got " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(spec.seed, 0x5eed5);
  std::shuffle(order.begin(), order.end(), rng);
  // The small slack keeps exact products such as 10 * 0.8 from rounding up.
  auto n_train = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * spec.train_fraction - 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  Split split;
  for (std::size_t k = 0; k < n; ++k) {
    (k < n_train ? split.train : split.test).push_back(records[order[k]]);
  }
  return split;
}

Standardizer Standardizer::fit(const std::vector<MoleculeRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::EmptySplit, "cannot standardize an empty split");
  double sum = 0.0;
  for (const auto& r : records) {
    if (!r.target) throw Error(ErrorCode::InvalidRange, "record on line " + std::to_string(r.line) + " has no target");
    sum += *r.target;
  }
  Standardizer s;
  s.mean = sum / static_cast<double>(records.size());
  double sq = 0.0;
  for (const auto& r : records) sq += (*r.target - s.mean) * (*r.target - s.mean);
  const double sd = std::sqrt(sq / static_cast<double>(records.size()));
  s.stddev = sd > 0.0 ? sd : 1.0;
  return s;
}

std::vector<double> Standardizer::apply(const std::vector<MoleculeRecord>& records) const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.target) throw Error(ErrorCode::InvalidRange, "record on line " + std::to_string(r.line) + " has no target");
    out.push_back(apply(*r.target));
  }
  return out;
}

namespace {

Minibatch make_batch(const std::vector<MoleculeRecord>& records,
                     std::span<const std::size_t> indices, const BatchOptions& options,
                     const Standardizer* standardizer) {
  Minibatch mb;
  std::vector<MolecularGraph> graphs;
  for (std::size_t i : indices) {
    graphs.push_back(records[i].graph);
    mb.indices.push_back(i);
    const auto& t = records[i].target;
    if (standardizer && t) mb.targets.push_back(standardizer->apply(*t));
    else if (t) mb.targets.push_back(*t);
  }
  if (mb.targets.size() != indices.size()) mb.targets.clear();
  mb.graphs = to_batch(graphs, options.max_nodes, options.num_atom_types, options.num_bond_types);
  return mb;
}

}  // namespace

std::vector<Minibatch> batches(const std::vector<MoleculeRecord>& records,
                               const BatchOptions& options, std::uint64_t seed,
                               std::uint64_t epoch, const Standardizer* standardizer) {
  if (options.batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch size must be >= 1");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, 0xba7c0000ULL + epoch);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Minibatch> out;
  const auto bs = static_cast<std::size_t>(options.batch_size);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t len = std::min(bs, order.size() - start);
    out.push_back(make_batch(records, std::span(order).subspan(start, len), options, standardizer));
  }
  return out;
}

Minibatch full_batch(const std::vector<MoleculeRecord>& records, const BatchOptions& options,
                     const Standardizer* standardizer) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  return make_batch(records, order, options, standardizer);
}

BatchStream::BatchStream(const std::vector<MoleculeRecord>& records, BatchOptions options,
                         std::uint64_t seed, const Standardizer* standardizer)
    : records_(&records), options_(options), seed_(seed), standardizer_(standardizer) {
  if (records.empty()) throw Error(ErrorCode::EmptySplit, "cannot batch an empty dataset");
  current_ = batches(*records_, options_, seed_, epoch_, standardizer_);
}

const Minibatch& BatchStream::next() {
  if (cursor_ == current_.size()) {
    ++epoch_;
    cursor_ = 0;
    current_ = batches(*records_, options_, seed_, epoch_, standardizer_);
  }
  return current_[cursor_++];
}

}  // namespace molddpm
