// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/checkpoint.hpp"

#include "molddpm/config.hpp"
#include "molddpm/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace molddpm {

namespace {

constexpr std::string_view kMagic{"MOLDDPM\0", 8};

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string_view take(std::uint64_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw Error(ErrorCode::CorruptCheckpoint, "checkpoint is truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, ckpt.architecture_hash);
  put<std::uint64_t>(out, ckpt.config_yaml.size());
  out += ckpt.config_yaml;
  put<std::uint64_t>(out, ckpt.tensors.size());
  for (const auto& [name, m] : ckpt.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(out, m(i, j));
    }
  }
  put<std::uint64_t>(out, fnv1a(out));
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < kMagic.size() + sizeof(std::uint64_t) ||
      std::string_view(bytes).substr(0, kMagic.size()) != kMagic) {
    throw Error(ErrorCode::CorruptCheckpoint, "not a molddpm checkpoint");
  }
  const std::string_view body(bytes.data(), bytes.size() - sizeof(std::uint64_t));
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof stored);
  if (stored != fnv1a(body)) throw Error(ErrorCode::CorruptCheckpoint, "checksum mismatch");

  Reader r(body);
  r.take(kMagic.size());
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::CorruptCheckpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.architecture_hash = r.get<std::uint64_t>();
  ckpt.config_yaml = std::string(r.take(r.get<std::uint64_t>()));
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t k = 0; k < count; ++k) {
    std::string name(r.take(r.get<std::uint32_t>()));
    if (r.get<std::uint32_t>() != 2) throw Error(ErrorCode::CorruptCheckpoint, "tensor '" + name + "' is not rank 2");
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (rows > body.size() || cols > body.size() || (rows && cols > body.size() / rows)) {
      throw Error(ErrorCode::CorruptCheckpoint, "tensor '" + name + "' has implausible shape");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.get<double>();
    }
    if (!ckpt.tensors.emplace(std::move(name), std::move(m)).second) {
      throw Error(ErrorCode::CorruptCheckpoint, "duplicate tensor name");
    }
  }
  if (r.pos() != body.size()) throw Error(ErrorCode::CorruptCheckpoint, "trailing bytes after tensors");
  return ckpt;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot rename into " + path.string());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Checkpoint ckpt;
  try {
    ckpt = deserialize_checkpoint(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message(), e.position());
  }
  if (ckpt.architecture_hash != expected_hash) {
    throw Error(ErrorCode::IncompatibleCheckpoint,
                path.string() + " was produced by a different architecture or schedule");
  }
  return ckpt;
}

}  // namespace molddpm
