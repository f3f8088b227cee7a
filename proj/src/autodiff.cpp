// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/autodiff.hpp"

#include "molddpm/error.hpp"

#include <cmath>

namespace molddpm::ad {

// ---------------------------------------------------------------------------
// ParameterSet

Parameter& ParameterSet::add(const std::string& name, Matrix init) {
  auto [it, inserted] = params_.try_emplace(name);
  if (!inserted) {
    throw Error(ErrorCode::InvalidConfig, "duplicate parameter '" + name + "'");
  }
  it->second.value = std::move(init);
  return it->second;
}

Parameter& ParameterSet::at(std::string_view name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw Error(ErrorCode::InvalidConfig,
                "unknown parameter '" + std::string(name) + "'");
  }
  return it->second;
}

const Parameter& ParameterSet::at(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

bool ParameterSet::contains(std::string_view name) const {
  return params_.find(name) != params_.end();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

bool ParameterSet::all_finite() const {
  for (const auto& [_, p] : params_) {
    if (!p.value.allFinite()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Tape

const Matrix& Var::value() const { return tape_->value(*this); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "scalar() on a non-1x1 value");
  }
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return Var(this, it->second);
  }
  nodes_.push_back(Node{p.value, {}, {}, &p, true});
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs,
                 Backward backward) {
  bool needs = false;
  for (const Var& v : inputs) needs = needs || nodes_[v.id_].requires_grad;
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{},
                        nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs,
                 Backward backward) {
  bool needs = false;
  for (const Var& v : inputs) needs = needs || nodes_[v.id_].requires_grad;
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{},
                        nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(const Var& v, const Matrix& grad) {
  Node& node = nodes_[v.id_];
  if (!node.requires_grad) return;
  if (node.grad.size() == 0) {
    node.grad = grad;
  } else {
    node.grad += grad;
  }
}

Gradients Tape::backward(const Var& root) {
  if (nodes_[root.id_].value.size() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "backward() requires a 1x1 root");
  }
  Gradients grads;
  accumulate(root, Matrix::Ones(1, 1));
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.size() == 0) continue;
    if (node.backward) {
      // The closure may accumulate into earlier nodes only; `node` stays valid
      // because nodes_ does not grow during backward.
      node.backward(*this, node.value, node.grad);
    }
    if (node.param != nullptr) grads.emplace(node.param, node.grad);
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Ops

namespace {

Tape& tape_of(const Var& a) { return *a.tape(); }

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return tape_of(a).record(a.value() + b.value(), {a, b},
                           [a, b](Tape& t, const Matrix&, const Matrix& g) {
                             t.accumulate(a, g);
                             t.accumulate(b, g);
                           });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return tape_of(a).record(a.value() - b.value(), {a, b},
                           [a, b](Tape& t, const Matrix&, const Matrix& g) {
                             t.accumulate(a, g);
                             t.accumulate(b, -g);
                           });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  return tape_of(a).record(
      a.value().cwiseProduct(b.value()), {a, b},
      [a, b](Tape& t, const Matrix&, const Matrix& g) {
        if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
        if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
      });
}

Var scale(const Var& a, double s) {
  return tape_of(a).record(s * a.value(), {a},
                           [a, s](Tape& t, const Matrix&, const Matrix& g) {
                             t.accumulate(a, s * g);
                           });
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "matmul: inner dimensions differ");
  }
  return tape_of(a).record(
      a.value() * b.value(), {a, b},
      [a, b](Tape& t, const Matrix&, const Matrix& g) {
        if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
        if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
      });
}

Var transpose(const Var& a) {
  return tape_of(a).record(a.value().transpose(), {a},
                           [a](Tape& t, const Matrix&, const Matrix& g) {
                             t.accumulate(a, g.transpose());
                           });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "add_row: row must be 1 x cols");
  }
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return tape_of(a).record(std::move(out), {a, row},
                           [a, row](Tape& t, const Matrix&, const Matrix& g) {
                             t.accumulate(a, g);
                             if (t.requires_grad(row)) {
                               t.accumulate(row, g.colwise().sum());
                             }
                           });
}

Var repeat_rows(const Var& row, Eigen::Index n) {
  if (row.rows() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "repeat_rows: expected a 1 x n row");
  }
  Matrix out = row.value().replicate(n, 1);
  return tape_of(row).record(std::move(out), {row},
                             [row](Tape& t, const Matrix&, const Matrix& g) {
                               t.accumulate(row, g.colwise().sum());
                             });
}

Var gelu(const Var& a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double k = 0.044715;
  const Matrix& x = a.value();
  Matrix out = x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(c * (v + k * v * v * v)));
  });
  return tape_of(a).record(
      std::move(out), {a}, [a](Tape& t, const Matrix&, const Matrix& g) {
        Matrix d = a.value().unaryExpr([](double v) {
          const double th = std::tanh(c * (v + k * v * v * v));
          return 0.5 * (1.0 + th) +
                 0.5 * v * (1.0 - th * th) * c * (1.0 + 3.0 * k * v * v);
        });
        t.accumulate(a, g.cwiseProduct(d));
      });
}

Var softmax_rows(const Var& a) {
  Matrix out = a.value();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    out.row(i) = (out.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return tape_of(a).record(std::move(out), {a},
                           [a](Tape& t, const Matrix& y, const Matrix& g) {
                             Eigen::VectorXd dot =
                                 g.cwiseProduct(y).rowwise().sum();
                             Matrix dx = g;
                             dx.colwise() -= dot;
                             t.accumulate(a, dx.cwiseProduct(y));
                           });
}

Var log_softmax_rows(const Var& a) {
  Matrix out = a.value();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    const double lse = m + std::log((out.row(i).array() - m).exp().sum());
    out.row(i).array() -= lse;
  }
  return tape_of(a).record(std::move(out), {a},
                           [a](Tape& t, const Matrix& y, const Matrix& g) {
                             Matrix p = y.array().exp();
                             Eigen::VectorXd total = g.rowwise().sum();
                             Matrix dx = g;
                             for (Eigen::Index i = 0; i < dx.rows(); ++i) {
                               dx.row(i) -= total(i) * p.row(i);
                             }
                             t.accumulate(a, dx);
                           });
}

Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias,
                    double eps) {
  if (gain.rows() != 1 || gain.cols() != x.cols() || bias.rows() != 1 ||
      bias.cols() != x.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "layer_norm_rows: affine shape");
  }
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.cols();
  Matrix normalized(xv.rows(), n);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index i = 0; i < xv.rows(); ++i) {
    const double mean = xv.row(i).mean();
    const double var = (xv.row(i).array() - mean).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    normalized.row(i) = (xv.row(i).array() - mean) * inv_std(i);
  }
  Matrix out = normalized;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out.row(i) = out.row(i).cwiseProduct(gain.value().row(0)) + bias.value().row(0);
  }
  return tape_of(x).record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, normalized, inv_std](Tape& t, const Matrix&,
                                           const Matrix& g) {
        if (t.requires_grad(gain)) {
          t.accumulate(gain, g.cwiseProduct(normalized).colwise().sum());
        }
        if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
        if (!t.requires_grad(x)) return;
        Matrix dx(g.rows(), g.cols());
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
          RowVector dn = g.row(i).cwiseProduct(gain.value().row(0));
          const double mean_dn = dn.mean();
          const double mean_dn_n = dn.cwiseProduct(normalized.row(i)).mean();
          dx.row(i) = inv_std(i) * (dn.array() - mean_dn -
                                    normalized.row(i).array() * mean_dn_n)
                                       .matrix();
        }
        t.accumulate(x, dx);
      });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return tape_of(a).record(
      std::move(out), {a}, [a](Tape& t, const Matrix&, const Matrix& g) {
        t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
      });
}

Var mean_rows(const Var& a) {
  if (a.rows() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "mean_rows: no rows");
  }
  const auto n = static_cast<double>(a.rows());
  Matrix out = a.value().colwise().sum() / n;
  return tape_of(a).record(std::move(out), {a},
                           [a, n](Tape& t, const Matrix&, const Matrix& g) {
                             t.accumulate(a, g.replicate(a.rows(), 1) / n);
                           });
}

Var squared_norm(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  return tape_of(a).record(std::move(out), {a},
                           [a](Tape& t, const Matrix&, const Matrix& g) {
                             t.accumulate(a, 2.0 * g(0, 0) * a.value());
                           });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index n) {
  if (start < 0 || n < 0 || start + n > a.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "slice_rows: out of range");
  }
  return tape_of(a).record(a.value().middleRows(start, n), {a},
                           [a, start, n](Tape& t, const Matrix&, const Matrix& g) {
                             Matrix full = Matrix::Zero(a.rows(), a.cols());
                             full.middleRows(start, n) = g;
                             t.accumulate(a, full);
                           });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index n) {
  if (start < 0 || n < 0 || start + n > a.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "slice_cols: out of range");
  }
  return tape_of(a).record(a.value().middleCols(start, n), {a},
                           [a, start, n](Tape& t, const Matrix&, const Matrix& g) {
                             Matrix full = Matrix::Zero(a.rows(), a.cols());
                             full.middleCols(start, n) = g;
                             t.accumulate(a, full);
                           });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeMismatch, "concat_cols: empty");
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != parts.front().rows()) {
      throw Error(ErrorCode::ShapeMismatch, "concat_cols: row mismatch");
    }
    cols += p.cols();
  }
  Matrix out(parts.front().rows(), cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return tape_of(parts.front())
      .record(std::move(out), parts,
              [parts](Tape& t, const Matrix&, const Matrix& g) {
                Eigen::Index offset = 0;
                for (const Var& p : parts) {
                  t.accumulate(p, g.middleCols(offset, p.cols()));
                  offset += p.cols();
                }
              });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeMismatch, "concat_rows: empty");
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != parts.front().cols()) {
      throw Error(ErrorCode::ShapeMismatch, "concat_rows: column mismatch");
    }
    rows += p.rows();
  }
  Matrix out(rows, parts.front().cols());
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return tape_of(parts.front())
      .record(std::move(out), parts,
              [parts](Tape& t, const Matrix&, const Matrix& g) {
                Eigen::Index offset = 0;
                for (const Var& p : parts) {
                  t.accumulate(p, g.middleRows(offset, p.rows()));
                  offset += p.rows();
                }
              });
}

Var gather_rows(const Var& table, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), table.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= table.rows()) {
      throw Error(ErrorCode::ShapeMismatch, "gather_rows: index out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(rows[i]);
  }
  return tape_of(table).record(
      std::move(out), {table},
      [table, rows](Tape& t, const Matrix&, const Matrix& g) {
        Matrix full = Matrix::Zero(table.rows(), table.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
          full.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
        }
        t.accumulate(table, full);
      });
}

Var gather_grid(const Var& table, const Eigen::MatrixXi& categories,
                Eigen::Index column) {
  if (column < 0 || column >= table.cols() ||
      (categories.size() > 0 &&
       (categories.minCoeff() < 0 || categories.maxCoeff() >= table.rows()))) {
    throw Error(ErrorCode::ShapeMismatch, "gather_grid: index out of range");
  }
  Matrix out(categories.rows(), categories.cols());
  for (Eigen::Index i = 0; i < categories.rows(); ++i) {
    for (Eigen::Index j = 0; j < categories.cols(); ++j) {
      out(i, j) = table.value()(categories(i, j), column);
    }
  }
  return tape_of(table).record(
      std::move(out), {table},
      [table, categories, column](Tape& t, const Matrix&, const Matrix& g) {
        Matrix full = Matrix::Zero(table.rows(), table.cols());
        for (Eigen::Index i = 0; i < categories.rows(); ++i) {
          for (Eigen::Index j = 0; j < categories.cols(); ++j) {
            full(categories(i, j), column) += g(i, j);
          }
        }
        t.accumulate(table, full);
      });
}

Var pick_sum(const Var& a, const std::vector<int>& index) {
  if (static_cast<Eigen::Index>(index.size()) != a.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "pick_sum: one index per row");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0) continue;
    if (index[i] >= a.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "pick_sum: index out of range");
    }
    total += a.value()(static_cast<Eigen::Index>(i), index[i]);
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  return tape_of(a).record(std::move(out), {a},
                           [a, index](Tape& t, const Matrix&, const Matrix& g) {
                             Matrix full = Matrix::Zero(a.rows(), a.cols());
                             for (std::size_t i = 0; i < index.size(); ++i) {
                               if (index[i] >= 0) {
                                 full(static_cast<Eigen::Index>(i), index[i]) = g(0, 0);
                               }
                             }
                             t.accumulate(a, full);
                           });
}

Var operator+(const Var& a, const Var& b) { return add(a, b); }
Var operator-(const Var& a, const Var& b) { return sub(a, b); }
Var operator+(const Var& a, const Matrix& b) {
  return add(a, a.tape()->constant(b));
}
Var operator-(const Var& a, const Matrix& b) {
  return sub(a, a.tape()->constant(b));
}
Var operator*(double s, const Var& a) { return scale(a, s); }
Var operator*(const Var& a, double s) { return scale(a, s); }

}  // namespace molddpm::ad
