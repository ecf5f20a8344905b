// Reverse-mode differentiation over small dense arrays.
//
// A Tape records every operation applied to its Vars. Values live in one
// contiguous arena so that a tape can be cleared and reused across samples
// without reallocating. Parameters are recorded by reference: the tape reads
// their values from caller-owned storage (which must outlive the pass and stay
// unmodified until backward() returns) and accumulates their gradients in its
// own arena.
//
// Subgradient convention: relu/prelu at exactly 0 take the negative-side
// slope (0 for relu, alpha for prelu); clamp passes the gradient on the closed
// interval and blocks it outside.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "huihen/common.hpp"

namespace huihen {

// Rank 0 (scalar), 1 (vector) or 2 (row-major matrix).
struct Shape {
  std::uint32_t rank = 1;
  std::uint32_t rows = 0;
  std::uint32_t cols = 1;

  static constexpr Shape scalar() { return {0, 1, 1}; }
  static constexpr Shape vec(std::size_t n) {
    return {1, static_cast<std::uint32_t>(n), 1};
  }
  static constexpr Shape mat(std::size_t r, std::size_t c) {
    return {2, static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)};
  }

  constexpr std::size_t size() const {
    return static_cast<std::size_t>(rows) * cols;
  }

  std::string str() const {
    if (rank == 0) return "[]";
    if (rank == 1) return "[" + std::to_string(rows) + "]";
    return "[" + std::to_string(rows) + "," + std::to_string(cols) + "]";
  }

  friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

struct Var {
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = kNone;
  bool valid() const { return id != kNone; }
};

template <class Real>
class Tape {
 public:
  using value_type = Real;

  enum class Op : std::uint8_t {
    kConstant,
    kParameter,
    kMatMul,
    kAdd,
    kSub,
    kMul,
    kScale,
    kSigmoid,
    kTanh,
    kRelu,
    kPRelu,
    kSoftplus,
    kLog,
    kClamp,
    kConcat,
    kSlice,
    kRow,
    kSum,
    kMean,
  };

  Tape() = default;

  // Drops all nodes; keeps capacity.
  void clear() {
    nodes_.clear();
    vals_.clear();
    grads_.clear();
    links_.clear();
    kink_margin_ = std::numeric_limits<double>::infinity();
  }

  std::size_t size() const { return nodes_.size(); }

  // ---------------------------------------------------------------- leaves

  Var constant(std::span<const Real> values, Shape shape) {
    if (values.size() != shape.size())
      throw ShapeError("constant: " + std::to_string(values.size()) +
                       " values for shape " + shape.str());
    Var v = emit(Op::kConstant, shape, Var::kNone, Var::kNone, false);
    std::copy(values.begin(), values.end(), out(v));
    check_finite(v, "constant");
    return v;
  }

  Var constant(std::span<const Real> values) {
    return constant(values, Shape::vec(values.size()));
  }

  Var scalar_constant(Real value) {
    Var v = emit(Op::kConstant, Shape::scalar(), Var::kNone, Var::kNone, false);
    *out(v) = value;
    check_finite(v, "constant");
    return v;
  }

  Var zeros(Shape shape) {
    return emit(Op::kConstant, shape, Var::kNone, Var::kNone, false);
  }

  // `values` is read in place for the lifetime of the pass.
  Var parameter(std::span<const Real> values, Shape shape,
                bool requires_grad = true) {
    if (values.size() != shape.size())
      throw ShapeError("parameter: " + std::to_string(values.size()) +
                       " values for shape " + shape.str());
    Var v = emit(Op::kParameter, shape, Var::kNone, Var::kNone, requires_grad);
    nodes_[v.id].ext = values.data();
    check_finite(v, "parameter");
    return v;
  }

  // ------------------------------------------------------------------- ops

  // [m,n] x [n] -> [m];  [m,n] x [n,k] -> [m,k].
  Var matmul(Var a, Var b) {
    const Shape sa = shape(a), sb = shape(b);
    if (sa.rank != 2 || sb.rank == 0 || sa.cols != sb.rows)
      throw ShapeError("matmul: " + sa.str() + " x " + sb.str());
    const Shape so = sb.rank == 1 ? Shape::vec(sa.rows) : Shape::mat(sa.rows, sb.cols);
    Var v = emit(Op::kMatMul, so, a.id, b.id, rg(a) || rg(b));
    const Real* pa = value_ptr(a);
    const Real* pb = value_ptr(b);
    Real* po = out(v);
    const std::size_t m = sa.rows, n = sa.cols, k = sb.cols;
    if (k == 1) {
      for (std::size_t i = 0; i < m; ++i) {
        const Real* row = pa + i * n;
        Real acc = 0;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * pb[j];
        po[i] = acc;
      }
    } else {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const Real aij = pa[i * n + j];
          for (std::size_t c = 0; c < k; ++c) po[i * k + c] += aij * pb[j * k + c];
        }
    }
    check_finite(v, "matmul");
    return v;
  }

  Var add(Var a, Var b) { return binary(Op::kAdd, a, b, "add"); }
  Var sub(Var a, Var b) { return binary(Op::kSub, a, b, "sub"); }
  Var mul(Var a, Var b) { return binary(Op::kMul, a, b, "mul"); }

  Var scale(Var a, Real c) {
    Var v = emit(Op::kScale, shape(a), a.id, Var::kNone, rg(a));
    nodes_[v.id].c0 = c;
    const Real* pa = value_ptr(a);
    Real* po = out(v);
    for (std::size_t i = 0, n = shape(a).size(); i < n; ++i) po[i] = pa[i] * c;
    check_finite(v, "scale");
    return v;
  }

  Var sigmoid(Var a) {
    return unary(Op::kSigmoid, a, "sigmoid", [](Real x) { return sigmoid_value(x); });
  }
  Var tanh(Var a) {
    return unary(Op::kTanh, a, "tanh", [](Real x) { return std::tanh(x); });
  }
  Var relu(Var a) {
    note_kinks(a, 0.0);
    return unary(Op::kRelu, a, "relu", [](Real x) { return x > 0 ? x : Real(0); });
  }
  Var softplus(Var a) {
    return unary(Op::kSoftplus, a, "softplus", [](Real x) {
      return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    });
  }
  Var log(Var a) {
    return unary(Op::kLog, a, "log", [](Real x) { return std::log(x); });
  }

  // max(0,x) + alpha * min(0,x); alpha is a scalar Var.
  Var prelu(Var x, Var alpha) {
    if (shape(alpha).size() != 1)
      throw ShapeError("prelu: alpha must be scalar, got " + shape(alpha).str());
    note_kinks(x, 0.0);
    Var v = emit(Op::kPRelu, shape(x), x.id, alpha.id, rg(x) || rg(alpha));
    const Real* px = value_ptr(x);
    const Real al = *value_ptr(alpha);
    Real* po = out(v);
    for (std::size_t i = 0, n = shape(x).size(); i < n; ++i)
      po[i] = px[i] > 0 ? px[i] : al * px[i];
    check_finite(v, "prelu");
    return v;
  }

  Var clamp(Var a, Real lo, Real hi) {
    if (rg(a)) {
      const Real* pa = value_ptr(a);
      for (std::size_t i = 0, n = shape(a).size(); i < n; ++i) {
        kink_margin_ = std::min<double>(kink_margin_, std::abs(pa[i] - lo));
        kink_margin_ = std::min<double>(kink_margin_, std::abs(pa[i] - hi));
      }
    }
    Var v = emit(Op::kClamp, shape(a), a.id, Var::kNone, rg(a));
    nodes_[v.id].c0 = lo;
    nodes_[v.id].c1 = hi;
    const Real* pa = value_ptr(a);
    Real* po = out(v);
    for (std::size_t i = 0, n = shape(a).size(); i < n; ++i)
      po[i] = std::clamp(pa[i], lo, hi);
    check_finite(v, "clamp");
    return v;
  }

  // Concatenation of rank <= 1 arrays into a vector.
  Var concat(std::initializer_list<Var> parts) {
    return concat(std::span<const Var>(parts.begin(), parts.size()));
  }

  Var concat(std::span<const Var> parts) {
    std::size_t total = 0;
    bool any_grad = false;
    for (Var p : parts) {
      if (shape(p).rank == 2)
        throw ShapeError("concat: matrix operand " + shape(p).str());
      total += shape(p).size();
      any_grad = any_grad || rg(p);
    }
    Var v = emit(Op::kConcat, Shape::vec(total), Var::kNone, Var::kNone, any_grad);
    nodes_[v.id].aux = static_cast<std::uint32_t>(links_.size());
    nodes_[v.id].aux2 = static_cast<std::uint32_t>(parts.size());
    for (Var p : parts) links_.push_back(p.id);
    Real* po = out(v);
    for (Var p : parts) {
      const Real* pp = value_ptr(p);
      po = std::copy(pp, pp + shape(p).size(), po);
    }
    return v;
  }

  // Elements [offset, offset+len) of a flattened array, as a vector.
  Var slice(Var a, std::size_t offset, std::size_t len) {
    if (offset + len > shape(a).size())
      throw ShapeError("slice: [" + std::to_string(offset) + "," +
                       std::to_string(offset + len) + ") of " + shape(a).str());
    Var v = emit(Op::kSlice, Shape::vec(len), a.id, Var::kNone, rg(a));
    nodes_[v.id].aux = static_cast<std::uint32_t>(offset);
    const Real* pa = value_ptr(a) + offset;
    std::copy(pa, pa + len, out(v));
    return v;
  }

  // Row r of a matrix, as a vector (embedding lookup).
  Var row(Var table, std::size_t r) {
    const Shape s = shape(table);
    if (s.rank != 2 || r >= s.rows)
      throw ShapeError("row: index " + std::to_string(r) + " of " + s.str());
    Var v = slice(table, r * s.cols, s.cols);
    nodes_[v.id].op = Op::kRow;
    return v;
  }

  Var sum(Var a) {
    Var v = emit(Op::kSum, Shape::scalar(), a.id, Var::kNone, rg(a));
    const Real* pa = value_ptr(a);
    Real acc = 0;
    for (std::size_t i = 0, n = shape(a).size(); i < n; ++i) acc += pa[i];
    *out(v) = acc;
    check_finite(v, "sum");
    return v;
  }

  Var mean(Var a) {
    const std::size_t n = shape(a).size();
    if (n == 0) throw ShapeError("mean: empty operand");
    Var v = emit(Op::kMean, Shape::scalar(), a.id, Var::kNone, rg(a));
    const Real* pa = value_ptr(a);
    Real acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += pa[i];
    *out(v) = acc / static_cast<Real>(n);
    check_finite(v, "mean");
    return v;
  }

  // ------------------------------------------------------------ backward

  void backward(Var loss) {
    if (shape(loss).size() != 1)
      throw ShapeError("backward: loss must be scalar, got " + shape(loss).str());
    grads_.assign(vals_.size(), Real(0));
    grads_[nodes_[loss.id].offset] = Real(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      const Node& node = nodes_[i];
      if (!node.requires_grad) continue;
      propagate(node);
    }
  }

  // ------------------------------------------------------------- access

  Shape shape(Var v) const { return nodes_.at(v.id).shape; }

  std::span<const Real> value(Var v) const {
    return {value_ptr(v), nodes_.at(v.id).shape.size()};
  }

  Real scalar(Var v) const {
    if (shape(v).size() != 1) throw ShapeError("scalar: got " + shape(v).str());
    return *value_ptr(v);
  }

  // Valid after backward(); zero for nodes that do not require gradients.
  std::span<const Real> grad(Var v) const {
    const Node& node = nodes_.at(v.id);
    if (grads_.size() < node.offset + node.shape.size())
      throw Error("grad: backward() has not been run");
    return {grads_.data() + node.offset, node.shape.size()};
  }

  // Smallest distance of any tracked relu/prelu input from 0, or clamp input
  // from its bounds, seen since the last clear().
  double kink_margin() const { return kink_margin_; }

  static Real sigmoid_value(Real x) {
    if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
    const Real e = std::exp(x);
    return e / (Real(1) + e);
  }

 private:
  struct Node {
    Op op = Op::kConstant;
    bool requires_grad = false;
    std::uint32_t a = Var::kNone;
    std::uint32_t b = Var::kNone;
    std::uint32_t offset = 0;
    std::uint32_t aux = 0;
    std::uint32_t aux2 = 0;
    Shape shape;
    const Real* ext = nullptr;
    Real c0 = 0;
    Real c1 = 0;
  };

  bool rg(Var v) const { return nodes_.at(v.id).requires_grad; }

  const Real* value_ptr(Var v) const { return value_ptr(v.id); }
  const Real* value_ptr(std::uint32_t id) const {
    const Node& node = nodes_[id];
    return node.ext ? node.ext : vals_.data() + node.offset;
  }

  Real* out(Var v) { return vals_.data() + nodes_[v.id].offset; }

  Var emit(Op op, Shape s, std::uint32_t a, std::uint32_t b, bool requires_grad) {
    Node node;
    node.op = op;
    node.requires_grad = requires_grad;
    node.a = a;
    node.b = b;
    node.shape = s;
    node.offset = static_cast<std::uint32_t>(vals_.size());
    vals_.resize(vals_.size() + s.size(), Real(0));
    nodes_.push_back(node);
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  template <class F>
  Var unary(Op op, Var a, const char* name, F f) {
    Var v = emit(op, shape(a), a.id, Var::kNone, rg(a));
    const Real* pa = value_ptr(a);
    Real* po = out(v);
    for (std::size_t i = 0, n = shape(a).size(); i < n; ++i) po[i] = f(pa[i]);
    check_finite(v, name);
    return v;
  }

  Var binary(Op op, Var a, Var b, const char* name) {
    if (shape(a).size() != shape(b).size() || shape(a).rows != shape(b).rows)
      throw ShapeError(std::string(name) + ": " + shape(a).str() + " vs " +
                       shape(b).str());
    Var v = emit(op, shape(a), a.id, b.id, rg(a) || rg(b));
    const Real* pa = value_ptr(a);
    const Real* pb = value_ptr(b);
    Real* po = out(v);
    const std::size_t n = shape(a).size();
    switch (op) {
      case Op::kAdd:
        for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
        break;
      case Op::kSub:
        for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
        break;
      default:
        for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
        break;
    }
    check_finite(v, name);
    return v;
  }

  void note_kinks(Var a, double at) {
    if (!rg(a)) return;
    const Real* pa = value_ptr(a);
    for (std::size_t i = 0, n = shape(a).size(); i < n; ++i)
      kink_margin_ = std::min<double>(kink_margin_, std::abs(pa[i] - at));
  }

  void check_finite(Var v, const char* name) const {
    const Real* p = value_ptr(v);
    for (std::size_t i = 0, n = shape(v).size(); i < n; ++i)
      if (!std::isfinite(p[i]))
        throw NonFiniteError(std::string(name) + ": non-finite value at element " +
                             std::to_string(i) + " of " + shape(v).str());
  }

  Real* grad_ptr(std::uint32_t id) { return grads_.data() + nodes_[id].offset; }

  void propagate(const Node& node) {
    const std::size_t n = node.shape.size();
    const Real* g = grads_.data() + node.offset;
    const Real* y = node.ext ? node.ext : vals_.data() + node.offset;
    switch (node.op) {
      case Op::kConstant:
      case Op::kParameter:
        return;
      case Op::kMatMul: {
        const Shape sa = nodes_[node.a].shape;
        const std::size_t m = sa.rows, inner = sa.cols, k = node.shape.cols;
        const Real* pa = value_ptr(node.a);
        const Real* pb = value_ptr(node.b);
        if (nodes_[node.a].requires_grad) {
          Real* ga = grad_ptr(node.a);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t c = 0; c < k; ++c) {
              const Real gi = g[i * k + c];
              Real* garow = ga + i * inner;
              for (std::size_t j = 0; j < inner; ++j) garow[j] += gi * pb[j * k + c];
            }
        }
        if (nodes_[node.b].requires_grad) {
          Real* gb = grad_ptr(node.b);
          for (std::size_t i = 0; i < m; ++i) {
            const Real* arow = pa + i * inner;
            for (std::size_t c = 0; c < k; ++c) {
              const Real gi = g[i * k + c];
              for (std::size_t j = 0; j < inner; ++j) gb[j * k + c] += arow[j] * gi;
            }
          }
        }
        return;
      }
      case Op::kAdd:
      case Op::kSub: {
        const Real sign = node.op == Op::kAdd ? Real(1) : Real(-1);
        if (nodes_[node.a].requires_grad) {
          Real* ga = grad_ptr(node.a);
          for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
        }
        if (nodes_[node.b].requires_grad) {
          Real* gb = grad_ptr(node.b);
          for (std::size_t i = 0; i < n; ++i) gb[i] += sign * g[i];
        }
        return;
      }
      case Op::kMul: {
        const Real* pa = value_ptr(node.a);
        const Real* pb = value_ptr(node.b);
        if (nodes_[node.a].requires_grad) {
          Real* ga = grad_ptr(node.a);
          for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * pb[i];
        }
        if (nodes_[node.b].requires_grad) {
          Real* gb = grad_ptr(node.b);
          for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * pa[i];
        }
        return;
      }
      case Op::kScale: {
        Real* ga = grad_ptr(node.a);
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * node.c0;
        return;
      }
      case Op::kSigmoid: {
        Real* ga = grad_ptr(node.a);
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * y[i] * (Real(1) - y[i]);
        return;
      }
      case Op::kTanh: {
        Real* ga = grad_ptr(node.a);
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * (Real(1) - y[i] * y[i]);
        return;
      }
      case Op::kRelu: {
        const Real* pa = value_ptr(node.a);
        Real* ga = grad_ptr(node.a);
        for (std::size_t i = 0; i < n; ++i)
          if (pa[i] > 0) ga[i] += g[i];
        return;
      }
      case Op::kPRelu: {
        const Real* px = value_ptr(node.a);
        const Real al = *value_ptr(node.b);
        if (nodes_[node.a].requires_grad) {
          Real* gx = grad_ptr(node.a);
          for (std::size_t i = 0; i < n; ++i) gx[i] += px[i] > 0 ? g[i] : al * g[i];
        }
        if (nodes_[node.b].requires_grad) {
          Real acc = 0;
          for (std::size_t i = 0; i < n; ++i)
            if (!(px[i] > 0)) acc += g[i] * px[i];
          *grad_ptr(node.b) += acc;
        }
        return;
      }
      case Op::kSoftplus: {
        const Real* pa = value_ptr(node.a);
        Real* ga = grad_ptr(node.a);
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * sigmoid_value(pa[i]);
        return;
      }
      case Op::kLog: {
        const Real* pa = value_ptr(node.a);
        Real* ga = grad_ptr(node.a);
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] / pa[i];
        return;
      }
      case Op::kClamp: {
        const Real* pa = value_ptr(node.a);
        Real* ga = grad_ptr(node.a);
        for (std::size_t i = 0; i < n; ++i)
          if (pa[i] >= node.c0 && pa[i] <= node.c1) ga[i] += g[i];
        return;
      }
      case Op::kConcat: {
        std::size_t pos = 0;
        for (std::uint32_t k = 0; k < node.aux2; ++k) {
          const std::uint32_t child = links_[node.aux + k];
          const std::size_t len = nodes_[child].shape.size();
          if (nodes_[child].requires_grad) {
            Real* gc = grad_ptr(child);
            for (std::size_t i = 0; i < len; ++i) gc[i] += g[pos + i];
          }
          pos += len;
        }
        return;
      }
      case Op::kSlice:
      case Op::kRow: {
        Real* ga = grad_ptr(node.a) + node.aux;
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
        return;
      }
      case Op::kSum: {
        Real* ga = grad_ptr(node.a);
        for (std::size_t i = 0, m = nodes_[node.a].shape.size(); i < m; ++i) ga[i] += g[0];
        return;
      }
      case Op::kMean: {
        const std::size_t m = nodes_[node.a].shape.size();
        Real* ga = grad_ptr(node.a);
        const Real share = g[0] / static_cast<Real>(m);
        for (std::size_t i = 0; i < m; ++i) ga[i] += share;
        return;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<Real> vals_;
  std::vector<Real> grads_;
  std::vector<std::uint32_t> links_;
  double kink_margin_ = std::numeric_limits<double>::infinity();
};

}  // namespace huihen
