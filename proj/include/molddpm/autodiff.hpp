// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file autodiff.hpp
 * @brief Small reverse-mode automatic differentiation over dense double
 * matrices.
 *
 * A Tape records every operation of one forward pass. Each recorded node
 * keeps its value and a closure that maps the gradient of the node back onto
 * its inputs. Parameters live outside the tape and are only read during the
 * forward pass; Tape::backward returns their gradients keyed by address, so a
 * single tape can be shared by every graph of a minibatch.
 */

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace molddpm::ad {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

struct Parameter {
  Matrix value;
};

/// Gradients of one backward pass. Parameters the root does not depend on
/// have no entry.
using Gradients = std::unordered_map<const Parameter*, Matrix>;

/// Named parameters with a stable, name-sorted iteration order. Element
/// addresses are stable for the lifetime of the set.
class ParameterSet {
 public:
  using Map = std::map<std::string, Parameter, std::less<>>;

  Parameter& add(const std::string& name, Matrix init);
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t scalar_count() const;
  bool all_finite() const;

  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

 private:
  Map params_;
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Receives the node's forward value and the gradient flowing into it.
  using Backward =
      std::function<void(Tape&, const Matrix& value, const Matrix& grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Registers `p` as a leaf. Registering the same parameter twice returns
  /// the same node so gradients from every use are summed.
  Var parameter(const Parameter& p);
  Var record(Matrix value, std::initializer_list<Var> inputs,
             Backward backward);
  Var record(Matrix value, const std::vector<Var>& inputs, Backward backward);

  /// Seeds d(root)/d(root) = 1 and returns the gradient of every registered
  /// parameter reached from `root`. `root` must be 1x1.
  Gradients backward(const Var& root);

  void accumulate(const Var& v, const Matrix& grad);
  bool requires_grad(const Var& v) const { return nodes_[v.id_].requires_grad; }
  const Matrix& value(const Var& v) const { return nodes_[v.id_].value; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    const Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

// Elementwise and linear algebra.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
/// Adds a 1 x n row to every row of `a`.
Var add_row(const Var& a, const Var& row);
Var repeat_rows(const Var& row, Eigen::Index n);

// Nonlinearities (tanh-approximated GELU).
Var gelu(const Var& a);

// Row-wise normalizations.
Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);
Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias,
                    double eps = 1e-5);

// Reductions.
Var sum(const Var& a);
Var mean_rows(const Var& a);
Var squared_norm(const Var& a);

// Indexing.
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index n);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index n);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var gather_rows(const Var& table, const std::vector<int>& rows);
/// out(i, j) = table(categories(i, j), column). Used for per-head attention
/// biases looked up from a categorical grid.
Var gather_grid(const Var& table, const Eigen::MatrixXi& categories,
                Eigen::Index column);
/// sum_i a(i, index[i]) over rows with index[i] >= 0.
Var pick_sum(const Var& a, const std::vector<int>& index);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator+(const Var& a, const Matrix& b);
Var operator-(const Var& a, const Matrix& b);
Var operator*(double s, const Var& a);
Var operator*(const Var& a, double s);

}  // namespace molddpm::ad
