// Copyright 2026 The semsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Reverse-mode automatic differentiation over dense double matrices.
//
// A Tape owns one define-by-run computation graph: every operation appends a
// node, so tape order is already a topological order and the backward sweep is
// a single reverse pass. Graphs are built fresh per forward pass; trainable
// parameters live outside the tape in ParamTensor and accumulate gradients
// across backward calls until zero_grads().

#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "semsum/matrix.hpp"

namespace semsum {

/// Named trainable tensor with a persistent gradient accumulator. Gradients
/// flushed by Tape::backward add up until zero_grads() is called.
struct ParamTensor {
  std::string name;
  Matrix value;
  Matrix grad;

  ParamTensor(std::string n, Matrix init)
      : name(std::move(n)), value(std::move(init)), grad(Matrix::zeros(value.rows, value.cols)) {}
};

/// Ordered registry of ParamTensors. Iteration follows registration order, so
/// every loop over a ParamSet is deterministic.
class ParamSet {
 public:
  ParamTensor& add(const std::string& name, Matrix init) {
    if (index_.count(name) != 0) {
      throw std::invalid_argument("duplicate parameter name: " + name);
    }
    items_.emplace_back(name, std::move(init));
    index_[name] = items_.size() - 1;
    return items_.back();
  }

  ParamTensor* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &items_[it->second];
  }

  ParamTensor& at(const std::string& name) {
    ParamTensor* p = find(name);
    if (p == nullptr) throw std::invalid_argument("unknown parameter: " + name);
    return *p;
  }

  std::size_t size() const { return items_.size(); }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& p : items_) n += p.value.size();
    return n;
  }

  void zero_grads() {
    for (auto& p : items_) p.grad.fill(0.0);
  }

  double grad_norm() const {
    double s = 0.0;
    for (const auto& p : items_) {
      for (double g : p.grad.v) s += g * g;
    }
    return std::sqrt(s);
  }

  void scale_grads(double factor) {
    for (auto& p : items_) {
      for (double& g : p.grad.v) g *= factor;
    }
  }

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::deque<ParamTensor> items_;  // deque: stable addresses for tape leaves
  std::unordered_map<std::string, std::size_t> index_;
};

class Tape;

/// One graph node: forward value, adjoint slot for the current backward
/// sweep, and the rule that pushes the adjoint to its parents.
struct TapeNode {
  Matrix data;
  Matrix grad;
  std::function<void()> backprop;  // empty for leaves
  ParamTensor* source = nullptr;   // set for parameter leaves
  std::size_t id = 0;
};

/// Lightweight handle to a TapeNode; valid for the lifetime of its Tape.
class Value {
 public:
  Value() = default;
  Value(Tape* tape, TapeNode* node) : tape_(tape), node_(node) {}

  bool valid() const { return node_ != nullptr; }
  int rows() const { return node_->data.rows; }
  int cols() const { return node_->data.cols; }
  const Matrix& value() const { return node_->data; }
  const Matrix& grad() const { return node_->grad; }
  double scalar() const { return node_->data.scalar(); }
  std::size_t id() const { return node_->id; }

  TapeNode* node() const { return node_; }
  Tape* tape() const { return tape_; }

 private:
  Tape* tape_ = nullptr;
  TapeNode* node_ = nullptr;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf holding a constant or externally supplied value.
  Value input(Matrix m) {
    TapeNode& n = emplace(std::move(m));
    return Value(this, &n);
  }

  Value zeros(int r, int c) { return input(Matrix::zeros(r, c)); }

  /// Leaf that snapshots a parameter's current value. Repeated calls with the
  /// same parameter return the same node. After backward(), the node's adjoint
  /// is added to the parameter's persistent grad.
  Value param(ParamTensor& p) {
    auto it = param_leaves_.find(&p);
    if (it != param_leaves_.end()) return Value(this, it->second);
    TapeNode& n = emplace(p.value);
    n.source = &p;
    param_leaves_[&p] = &n;
    return Value(this, &n);
  }

  /// Reverse sweep from a scalar loss. Node adjoints are reset per call, so
  /// the loss node ends at exactly 1; parameter gradients accumulate across
  /// calls until ParamSet::zero_grads().
  void backward(Value loss) {
    if (!loss.valid() || loss.tape() != this) {
      throw std::invalid_argument("backward: loss does not belong to this tape");
    }
    if (!loss.value().is_scalar()) {
      throw std::invalid_argument("backward: loss must be a 1x1 scalar, got " +
                                  shape_of(loss.value()));
    }
    for (auto& n : nodes_) n.grad.fill(0.0);
    loss.node()->grad.v[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      if (it->backprop) it->backprop();
    }
    for (auto& n : nodes_) {
      if (n.source != nullptr) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) n.source->grad.v[i] += n.grad.v[i];
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }

  TapeNode& emplace(Matrix data) {
    nodes_.emplace_back();
    TapeNode& n = nodes_.back();
    n.grad = Matrix::zeros(data.rows, data.cols);
    n.data = std::move(data);
    n.id = nodes_.size() - 1;
    return n;
  }

 private:
  std::deque<TapeNode> nodes_;  // stable addresses; creation order = topo order
  std::unordered_map<ParamTensor*, TapeNode*> param_leaves_;
};

namespace detail {

inline Tape& tape_of(const Value& a, const char* op) {
  if (!a.valid()) throw std::invalid_argument(std::string(op) + ": invalid value");
  return *a.tape();
}

inline void check_same_tape(const Value& a, const Value& b, const char* op) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
    throw std::invalid_argument(std::string(op) + ": operands must live on the same tape");
  }
}

inline void check_same_shape(const Value& a, const Value& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_of(a.value()) +
                                " vs " + shape_of(b.value()));
  }
}

}  // namespace detail

inline Value matmul(Value a, Value b) {
  detail::check_same_tape(a, b, "matmul");
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.cols != B.rows) {
    throw std::invalid_argument("matmul: inner dimensions disagree, " + shape_of(A) + " * " +
                                shape_of(B));
  }
  Matrix out(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    for (int k = 0; k < A.cols; ++k) {
      const double aik = A.at(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < B.cols; ++j) {
        out.at(i, j) += aik * B.at(k, j);
      }
    }
  }
  Tape& tape = detail::tape_of(a, "matmul");
  TapeNode& n = tape.emplace(std::move(out));
  TapeNode* pa = a.node();
  TapeNode* pb = b.node();
  TapeNode* pn = &n;
  n.backprop = [pa, pb, pn] {
    const Matrix& g = pn->grad;
    const Matrix& A = pa->data;
    const Matrix& B = pb->data;
    // a.grad += g * B^T
    for (int i = 0; i < A.rows; ++i) {
      for (int k = 0; k < A.cols; ++k) {
        double s = 0.0;
        for (int j = 0; j < B.cols; ++j) s += g.at(i, j) * B.at(k, j);
        pa->grad.at(i, k) += s;
      }
    }
    // b.grad += A^T * g
    for (int k = 0; k < B.rows; ++k) {
      for (int j = 0; j < B.cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < A.rows; ++i) s += A.at(i, k) * g.at(i, j);
        pb->grad.at(k, j) += s;
      }
    }
  };
  return Value(&tape, &n);
}

inline Value add(Value a, Value b) {
  detail::check_same_tape(a, b, "add");
  detail::check_same_shape(a, b, "add");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += b.value().v[i];
  Tape& tape = detail::tape_of(a, "add");
  TapeNode& n = tape.emplace(std::move(out));
  TapeNode* pa = a.node();
  TapeNode* pb = b.node();
  TapeNode* pn = &n;
  n.backprop = [pa, pb, pn] {
    for (std::size_t i = 0; i < pn->grad.size(); ++i) {
      pa->grad.v[i] += pn->grad.v[i];
      pb->grad.v[i] += pn->grad.v[i];
    }
  };
  return Value(&tape, &n);
}

inline Value sub(Value a, Value b) {
  detail::check_same_tape(a, b, "sub");
  detail::check_same_shape(a, b, "sub");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] -= b.value().v[i];
  Tape& tape = detail::tape_of(a, "sub");
  TapeNode& n = tape.emplace(std::move(out));
  TapeNode* pa = a.node();
  TapeNode* pb = b.node();
  TapeNode* pn = &n;
  n.backprop = [pa, pb, pn] {
    for (std::size_t i = 0; i < pn->grad.size(); ++i) {
      pa->grad.v[i] += pn->grad.v[i];
      pb->grad.v[i] -= pn->grad.v[i];
    }
  };
  return Value(&tape, &n);
}

inline Value mul(Value a, Value b) {
  detail::check_same_tape(a, b, "mul");
  detail::check_same_shape(a, b, "mul");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= b.value().v[i];
  Tape& tape = detail::tape_of(a, "mul");
  TapeNode& n = tape.emplace(std::move(out));
  TapeNode* pa = a.node();
  TapeNode* pb = b.node();
  TapeNode* pn = &n;
  n.backprop = [pa, pb, pn] {
    for (std::size_t i = 0; i < pn->grad.size(); ++i) {
      pa->grad.v[i] += pn->grad.v[i] * pb->data.v[i];
      pb->grad.v[i] += pn->grad.v[i] * pa->data.v[i];
    }
  };
  return Value(&tape, &n);
}

inline Value tanh(Value a) {
  Tape& tape = detail::tape_of(a, "tanh");
  Matrix out = a.value();
  for (double& x : out.v) x = std::tanh(x);
  TapeNode& n = tape.emplace(std::move(out));
  TapeNode* pa = a.node();
  TapeNode* pn = &n;
  n.backprop = [pa, pn] {
    for (std::size_t i = 0; i < pn->grad.size(); ++i) {
      const double t = pn->data.v[i];
      pa->grad.v[i] += pn->grad.v[i] * (1.0 - t * t);
    }
  };
  return Value(&tape, &n);
}

inline Value sigmoid(Value a) {
  Tape& tape = detail::tape_of(a, "sigmoid");
  Matrix out = a.value();
  for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
  TapeNode& n = tape.emplace(std::move(out));
  TapeNode* pa = a.node();
  TapeNode* pn = &n;
  n.backprop = [pa, pn] {
    for (std::size_t i = 0; i < pn->grad.size(); ++i) {
      const double s = pn->data.v[i];
      pa->grad.v[i] += pn->grad.v[i] * s * (1.0 - s);
    }
  };
  return Value(&tape, &n);
}

inline Value log(Value a) {
  Tape& tape = detail::tape_of(a, "log");
  Matrix out = a.value();
  for (double& x : out.v) x = std::log(x);
  TapeNode& n = tape.emplace(std::move(out));
  TapeNode* pa = a.node();
  TapeNode* pn = &n;
  n.backprop = [pa, pn] {
    for (std::size_t i = 0; i < pn->grad.size(); ++i) {
      pa->grad.v[i] += pn->grad.v[i] / pa->data.v[i];
    }
  };
  return Value(&tape, &n);
}

/// Multiply every element by a fixed (non-differentiable) scalar.
inline Value scale(Value a, double c) {
  Tape& tape = detail::tape_of(a, "scale");
  Matrix out = a.value();
  for (double& x : out.v) x *= c;
  TapeNode& n = tape.emplace(std::move(out));
  TapeNode* pa = a.node();
  TapeNode* pn = &n;
  n.backprop = [pa, pn, c] {
    for (std::size_t i = 0; i < pn->grad.size(); ++i) pa->grad.v[i] += c * pn->grad.v[i];
  };
  return Value(&tape, &n);
}

/// Multiply every element by a differentiable 1x1 scalar node.
inline Value scale_by(Value a, Value s) {
  detail::check_same_tape(a, s, "scale_by");
  if (!s.value().is_scalar()) {
    throw std::invalid_argument("scale_by: scale factor must be 1x1, got " + shape_of(s.value()));
  }
  const double c = s.value().v[0];
  Matrix out = a.value();
  for (double& x : out.v) x *= c;
  Tape& tape = detail::tape_of(a, "scale_by");
  TapeNode& n = tape.emplace(std::move(out));
  TapeNode* pa = a.node();
  TapeNode* ps = s.node();
  TapeNode* pn = &n;
  n.backprop = [pa, ps, pn] {
    const double c = ps->data.v[0];
    double s_acc = 0.0;
    for (std::size_t i = 0; i < pn->grad.size(); ++i) {
      pa->grad.v[i] += c * pn->grad.v[i];
      s_acc += pn->grad.v[i] * pa->data.v[i];
    }
    ps->grad.v[0] += s_acc;
  };
  return Value(&tape, &n);
}

/// Row-wise softmax with row-max subtraction. Denominators use compensated
/// summation so each output row sums to 1 well within 1e-12.
inline Value softmax_rows(Value a) {
  Tape& tape = detail::tape_of(a, "softmax_rows");
  const Matrix& A = a.value();
  if (A.cols < 1) {
    throw std::invalid_argument("softmax_rows: need at least one column, got " + shape_of(A));
  }
  Matrix out(A.rows, A.cols);
  for (int i = 0; i < A.rows; ++i) {
    double mx = A.at(i, 0);
    for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(i, j));
    double sum = 0.0, comp = 0.0;
    for (int j = 0; j < A.cols; ++j) {
      const double e = std::exp(A.at(i, j) - mx);
      out.at(i, j) = e;
      const double y = e - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    for (int j = 0; j < A.cols; ++j) out.at(i, j) /= sum;
  }
  TapeNode& n = tape.emplace(std::move(out));
  TapeNode* pa = a.node();
  TapeNode* pn = &n;
  n.backprop = [pa, pn] {
    const Matrix& y = pn->data;
    const Matrix& g = pn->grad;
    for (int i = 0; i < y.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < y.cols; ++j) dot += g.at(i, j) * y.at(i, j);
      for (int j = 0; j < y.cols; ++j) {
        pa->grad.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
      }
    }
  };
  return Value(&tape, &n);
}

/// Horizontal concatenation of parts with equal row counts.
inline Value concat(const std::vector<Value>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: empty part list");
  Tape& tape = detail::tape_of(parts.front(), "concat");
  const int rows = parts.front().rows();
  int cols = 0;
  for (const Value& p : parts) {
    detail::check_same_tape(parts.front(), p, "concat");
    if (p.rows() != rows) {
      throw std::invalid_argument("concat: row mismatch " + shape_of(parts.front().value()) +
                                  " vs " + shape_of(p.value()));
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  int off = 0;
  for (const Value& p : parts) {
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < p.cols(); ++j) out.at(i, off + j) = p.value().at(i, j);
    }
    off += p.cols();
  }
  TapeNode& n = tape.emplace(std::move(out));
  std::vector<TapeNode*> pp;
  pp.reserve(parts.size());
  for (const Value& p : parts) pp.push_back(p.node());
  TapeNode* pn = &n;
  n.backprop = [pp, pn] {
    int off = 0;
    for (TapeNode* p : pp) {
      for (int i = 0; i < p->data.rows; ++i) {
        for (int j = 0; j < p->data.cols; ++j) p->grad.at(i, j) += pn->grad.at(i, off + j);
      }
      off += p->data.cols;
    }
  };
  return Value(&tape, &n);
}

/// Column slice [start, start+len).
inline Value slice_cols(Value a, int start, int len) {
  Tape& tape = detail::tape_of(a, "slice_cols");
  const Matrix& A = a.value();
  if (start < 0 || len < 1 || start + len > A.cols) {
    throw std::invalid_argument("slice_cols: range [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") out of " + shape_of(A));
  }
  Matrix out(A.rows, len);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < len; ++j) out.at(i, j) = A.at(i, start + j);
  }
  TapeNode& n = tape.emplace(std::move(out));
  TapeNode* pa = a.node();
  TapeNode* pn = &n;
  n.backprop = [pa, pn, start] {
    for (int i = 0; i < pn->data.rows; ++i) {
      for (int j = 0; j < pn->data.cols; ++j) pa->grad.at(i, start + j) += pn->grad.at(i, j);
    }
  };
  return Value(&tape, &n);
}

/// Vertical stack of 1xN row vectors into an MxN matrix.
inline Value stack_rows(const std::vector<Value>& parts) {
  if (parts.empty()) throw std::invalid_argument("stack_rows: empty part list");
  Tape& tape = detail::tape_of(parts.front(), "stack_rows");
  const int cols = parts.front().cols();
  for (const Value& p : parts) {
    detail::check_same_tape(parts.front(), p, "stack_rows");
    if (p.rows() != 1 || p.cols() != cols) {
      throw std::invalid_argument("stack_rows: expected 1x" + std::to_string(cols) + ", got " +
                                  shape_of(p.value()));
    }
  }
  Matrix out(static_cast<int>(parts.size()), cols);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (int j = 0; j < cols; ++j) out.at(static_cast<int>(i), j) = parts[i].value().at(0, j);
  }
  TapeNode& n = tape.emplace(std::move(out));
  std::vector<TapeNode*> pp;
  pp.reserve(parts.size());
  for (const Value& p : parts) pp.push_back(p.node());
  TapeNode* pn = &n;
  n.backprop = [pp, pn] {
    for (std::size_t i = 0; i < pp.size(); ++i) {
      for (int j = 0; j < pn->data.cols; ++j) {
        pp[i]->grad.at(0, j) += pn->grad.at(static_cast<int>(i), j);
      }
    }
  };
  return Value(&tape, &n);
}

/// Select one row as a 1xN vector; the backward rule routes into that row.
inline Value row(Value a, int r) {
  Tape& tape = detail::tape_of(a, "row");
  const Matrix& A = a.value();
  if (r < 0 || r >= A.rows) {
    throw std::invalid_argument("row: index " + std::to_string(r) + " out of " + shape_of(A));
  }
  Matrix out(1, A.cols);
  for (int j = 0; j < A.cols; ++j) out.at(0, j) = A.at(r, j);
  TapeNode& n = tape.emplace(std::move(out));
  TapeNode* pa = a.node();
  TapeNode* pn = &n;
  n.backprop = [pa, pn, r] {
    for (int j = 0; j < pn->data.cols; ++j) pa->grad.at(r, j) += pn->grad.at(0, j);
  };
  return Value(&tape, &n);
}

/// Select a single element as a 1x1 scalar.
inline Value pick(Value a, int r, int c) {
  Tape& tape = detail::tape_of(a, "pick");
  const Matrix& A = a.value();
  if (r < 0 || r >= A.rows || c < 0 || c >= A.cols) {
    throw std::invalid_argument("pick: (" + std::to_string(r) + ", " + std::to_string(c) +
                                ") out of " + shape_of(A));
  }
  TapeNode& n = tape.emplace(Matrix::scalar_of(A.at(r, c)));
  TapeNode* pa = a.node();
  TapeNode* pn = &n;
  n.backprop = [pa, pn, r, c] { pa->grad.at(r, c) += pn->grad.v[0]; };
  return Value(&tape, &n);
}

/// Sum of all elements as a 1x1 scalar.
inline Value sum(Value a) {
  Tape& tape = detail::tape_of(a, "sum");
  double s = 0.0;
  for (double x : a.value().v) s += x;
  TapeNode& n = tape.emplace(Matrix::scalar_of(s));
  TapeNode* pa = a.node();
  TapeNode* pn = &n;
  n.backprop = [pa, pn] {
    const double g = pn->grad.v[0];
    for (double& x : pa->grad.v) x += g;
  };
  return Value(&tape, &n);
}

/// Cosine similarity of two row vectors, differentiable through both. If
/// either norm falls below 1e-12 the result is 0 with zero gradient; training
/// must survive degenerate vectors at initialization.
inline Value cosine(Value u, Value v) {
  detail::check_same_tape(u, v, "cosine");
  detail::check_same_shape(u, v, "cosine");
  if (u.rows() != 1) {
    throw std::invalid_argument("cosine: expected row vectors, got " + shape_of(u.value()));
  }
  const Matrix& U = u.value();
  const Matrix& V = v.value();
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < U.size(); ++i) {
    dot += U.v[i] * V.v[i];
    uu += U.v[i] * U.v[i];
    vv += V.v[i] * V.v[i];
  }
  const double nu = std::sqrt(uu);
  const double nv = std::sqrt(vv);
  Tape& tape = detail::tape_of(u, "cosine");
  if (nu < 1e-12 || nv < 1e-12) {
    TapeNode& n = tape.emplace(Matrix::scalar_of(0.0));
    return Value(&tape, &n);  // degenerate: constant 0, no backward rule
  }
  const double c = dot / (nu * nv);
  TapeNode& n = tape.emplace(Matrix::scalar_of(c));
  TapeNode* pu = u.node();
  TapeNode* pv = v.node();
  TapeNode* pn = &n;
  n.backprop = [pu, pv, pn, nu, nv, c] {
    const double g = pn->grad.v[0];
    const Matrix& U = pu->data;
    const Matrix& V = pv->data;
    const double inv = 1.0 / (nu * nv);
    for (std::size_t i = 0; i < U.size(); ++i) {
      pu->grad.v[i] += g * (V.v[i] * inv - c * U.v[i] / (nu * nu));
      pv->grad.v[i] += g * (U.v[i] * inv - c * V.v[i] / (nv * nv));
    }
  };
  return Value(&tape, &n);
}

}  // namespace semsum
