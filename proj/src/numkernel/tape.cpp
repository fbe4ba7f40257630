#include "psjnet/numkernel/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psjnet/error.hpp"

namespace psjnet::nk {

namespace {

std::string shapes_msg(const char* op, const Tensor& a, const Tensor& b) {
  return std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
         " and " + shape_string(b.shape());
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError(shapes_msg(op, a, b));
}

void require_rank(const char* op, const Tensor& x, std::size_t rank) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " +
                     std::to_string(rank) + ", got " +
                     shape_string(x.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const Tensor& Tape::value(int id) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(id));
  return n.external ? *n.external : n.value;
}

Tensor Tape::grad(Var v) const {
  check_var(v, "grad");
  const Node& n = nodes_[v.id()];
  if (!n.grad.empty()) return n.grad;
  return Tensor(value(v).shape());
}

Tensor& Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(value(id).shape());
  return n.grad;
}

void Tape::check_var(Var v, const char* op) const {
  if (!v.valid() || static_cast<std::size_t>(v.id()) >= nodes_.size()) {
    throw ShapeError(std::string(op) + ": invalid variable");
  }
}

Var Tape::push(Tensor value, std::vector<int> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (int in : inputs) n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(const std::string& name) {
  if (params_ == nullptr) throw ShapeError("param: tape has no parameter store");
  return param(name, params_->at(name));
}

Var Tape::param(const std::string& name, const Tensor& value) {
  if (auto it = named_.find(name); it != named_.end()) return Var(it->second);
  Node n;
  n.external = &value;
  n.requires_grad = true;
  n.name = name;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  named_.emplace(name, id);
  return Var(id);
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) { return leaf(std::move(value), false); }

Var Tape::matmul(Var va, Var vb) {
  check_var(va, "matmul");
  check_var(vb, "matmul");
  const Tensor& a = value(va);
  const Tensor& b = value(vb);
  if (a.rank() > 2 || b.rank() > 2) throw ShapeError(shapes_msg("matmul", a, b));
  const bool a_vec = a.rank() == 1;
  const bool b_vec = b.rank() == 1;
  const std::size_t m = a_vec ? 1 : a.shape()[0];
  const std::size_t n = a_vec ? a.shape()[0] : a.shape()[1];
  const std::size_t nb = b.shape()[0];
  const std::size_t p = b_vec ? 1 : b.shape()[1];
  if (n != nb) throw ShapeError(shapes_msg("matmul", a, b));

  Shape out_shape;
  if (a_vec && b_vec) out_shape = {1};
  else if (a_vec) out_shape = {p};
  else if (b_vec) out_shape = {m};
  else out_shape = {m, p};

  Tensor out(out_shape);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* od = out.data().data();
  if (p == 1) {
    for (std::size_t i = 0; i < m; ++i) od[i] = nk::dot(ad + i * n, bd, n);
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < n; ++k) axpy(ad[i * n + k], bd + k * p, od + i * p, p);
    }
  }

  const int ia = va.id(), ib = vb.id();
  return push(std::move(out), {ia, ib}, [ia, ib, m, n, p](Tape& t, int self) {
    const double* g = t.output_grad(self).data().data();
    const double* ad = t.value(ia).data().data();
    const double* bd = t.value(ib).data().data();
    if (t.requires_grad(ia)) {
      double* ga = t.grad_buffer(ia).data().data();
      for (std::size_t i = 0; i < m; ++i) {
        if (p == 1) {
          axpy(g[i], bd, ga + i * n, n);
        } else {
          for (std::size_t k = 0; k < n; ++k) ga[i * n + k] += nk::dot(g + i * p, bd + k * p, p);
        }
      }
    }
    if (t.requires_grad(ib)) {
      double* gb = t.grad_buffer(ib).data().data();
      for (std::size_t i = 0; i < m; ++i) {
        if (p == 1) {
          axpy(g[i], ad + i * n, gb, n);
        } else {
          for (std::size_t k = 0; k < n; ++k) axpy(ad[i * n + k], g + i * p, gb + k * p, p);
        }
      }
    }
  });
}

Var Tape::add(Var va, Var vb) {
  check_var(va, "add");
  check_var(vb, "add");
  const Tensor& a = value(va);
  const Tensor& b = value(vb);
  require_same_shape("add", a, b);
  Tensor out = a;
  axpy(1.0, b.data().data(), out.data().data(), out.size());
  const int ia = va.id(), ib = vb.id();
  return push(std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    for (int in : {ia, ib}) {
      if (t.requires_grad(in)) axpy(1.0, g.data().data(), t.grad_buffer(in).data().data(), g.size());
    }
  });
}

Var Tape::sub(Var va, Var vb) {
  check_var(va, "sub");
  check_var(vb, "sub");
  const Tensor& a = value(va);
  const Tensor& b = value(vb);
  require_same_shape("sub", a, b);
  Tensor out = a;
  axpy(-1.0, b.data().data(), out.data().data(), out.size());
  const int ia = va.id(), ib = vb.id();
  return push(std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    if (t.requires_grad(ia)) axpy(1.0, g.data().data(), t.grad_buffer(ia).data().data(), g.size());
    if (t.requires_grad(ib)) axpy(-1.0, g.data().data(), t.grad_buffer(ib).data().data(), g.size());
  });
}

Var Tape::mul(Var va, Var vb) {
  check_var(va, "mul");
  check_var(vb, "mul");
  const Tensor& a = value(va);
  const Tensor& b = value(vb);
  require_same_shape("mul", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  const int ia = va.id(), ib = vb.id();
  return push(std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    if (t.requires_grad(ia)) {
      const Tensor& b = t.value(ib);
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
    }
    if (t.requires_grad(ib)) {
      const Tensor& a = t.value(ia);
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
    }
  });
}

Var Tape::div(Var va, Var vb) {
  check_var(va, "div");
  check_var(vb, "div");
  const Tensor& a = value(va);
  const Tensor& b = value(vb);
  require_same_shape("div", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] / b[i];
  const int ia = va.id(), ib = vb.id();
  return push(std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    const Tensor& a = t.value(ia);
    const Tensor& b = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / b[i];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i] * a[i] / (b[i] * b[i]);
    }
  });
}

Var Tape::add_n(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("add_n: no inputs");
  std::vector<int> ids;
  ids.reserve(xs.size());
  for (Var x : xs) {
    check_var(x, "add_n");
    ids.push_back(x.id());
  }
  Tensor out = value(xs.front());
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const Tensor& x = value(xs[k]);
    require_same_shape("add_n", out, x);
    axpy(1.0, x.data().data(), out.data().data(), out.size());
  }
  return push(std::move(out), ids, [](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    for (int in : t.inputs(self)) {
      if (t.requires_grad(in)) axpy(1.0, g.data().data(), t.grad_buffer(in).data().data(), g.size());
    }
  });
}

Var Tape::scale(Var x, double c) { return affine(x, c, 0.0); }

Var Tape::affine(Var vx, double a, double b) {
  check_var(vx, "affine");
  Tensor out = value(vx);
  for (double& v : out.data()) v = a * v + b;
  const int ix = vx.id();
  return push(std::move(out), {ix}, [ix, a](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    axpy(a, g.data().data(), t.grad_buffer(ix).data().data(), g.size());
  });
}

Var Tape::sigmoid(Var vx) {
  check_var(vx, "sigmoid");
  Tensor out = value(vx);
  for (double& v : out.data()) v = stable_sigmoid(v);
  const int ix = vx.id();
  return push(std::move(out), {ix}, [ix](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::tanh(Var vx) {
  check_var(vx, "tanh");
  Tensor out = value(vx);
  for (double& v : out.data()) v = std::tanh(v);
  const int ix = vx.id();
  return push(std::move(out), {ix}, [ix](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::softmax(Var vx) {
  check_var(vx, "softmax");
  const Tensor& x = value(vx);
  if (x.rank() > 2) throw ShapeError("softmax: rank > 2 in " + shape_string(x.shape()));
  const std::size_t cols = x.rank() == 1 ? x.size() : x.shape()[1];
  const std::size_t rows = x.size() / cols;
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + r * cols;
    double* yr = out.data().data() + r * cols;
    const double mx = *std::max_element(xr, xr + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (yr[c] = std::exp(xr[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) yr[c] /= z;
  }
  const int ix = vx.id();
  return push(std::move(out), {ix}, [ix, rows, cols](Tape& t, int self) {
    const double* g = t.output_grad(self).data().data();
    const double* y = t.value(self).data().data();
    double* gx = t.grad_buffer(ix).data().data();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * cols;
      const double s = nk::dot(g + o, y + o, cols);
      for (std::size_t c = 0; c < cols; ++c) gx[o + c] += y[o + c] * (g[o + c] - s);
    }
  });
}

Var Tape::log_softmax(Var vx) {
  check_var(vx, "log_softmax");
  const Tensor& x = value(vx);
  if (x.rank() > 2) throw ShapeError("log_softmax: rank > 2 in " + shape_string(x.shape()));
  const std::size_t cols = x.rank() == 1 ? x.size() : x.shape()[1];
  const std::size_t rows = x.size() / cols;
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + r * cols;
    double* yr = out.data().data() + r * cols;
    const double mx = *std::max_element(xr, xr + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += std::exp(xr[c] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t c = 0; c < cols; ++c) yr[c] = xr[c] - lz;
  }
  const int ix = vx.id();
  return push(std::move(out), {ix}, [ix, rows, cols](Tape& t, int self) {
    const double* g = t.output_grad(self).data().data();
    const double* y = t.value(self).data().data();
    double* gx = t.grad_buffer(ix).data().data();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * cols;
      double s = 0.0;
      for (std::size_t c = 0; c < cols; ++c) s += g[o + c];
      for (std::size_t c = 0; c < cols; ++c) gx[o + c] += g[o + c] - std::exp(y[o + c]) * s;
    }
  });
}

Var Tape::concat(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("concat: no inputs");
  std::vector<int> ids;
  std::size_t total = 0;
  for (Var x : xs) {
    check_var(x, "concat");
    require_rank("concat", value(x), 1);
    ids.push_back(x.id());
    total += value(x).size();
  }
  Tensor out({total});
  std::size_t off = 0;
  for (Var x : xs) {
    const Tensor& v = value(x);
    std::copy(v.data().begin(), v.data().end(), out.data().begin() + off);
    off += v.size();
  }
  return push(std::move(out), ids, [](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    std::size_t off = 0;
    for (int in : t.inputs(self)) {
      const std::size_t n = t.value(in).size();
      if (t.requires_grad(in)) axpy(1.0, g.data().data() + off, t.grad_buffer(in).data().data(), n);
      off += n;
    }
  });
}

Var Tape::stack(const std::vector<Var>& rows) {
  if (rows.empty()) throw ShapeError("stack: no inputs");
  std::vector<int> ids;
  const Tensor& first = value(rows.front());
  require_rank("stack", first, 1);
  const std::size_t n = first.size();
  for (Var r : rows) {
    check_var(r, "stack");
    require_same_shape("stack", first, value(r));
    ids.push_back(r.id());
  }
  Tensor out({rows.size(), n});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Tensor& v = value(rows[k]);
    std::copy(v.data().begin(), v.data().end(), out.data().begin() + k * n);
  }
  return push(std::move(out), ids, [n](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    const auto& ins = t.inputs(self);
    for (std::size_t k = 0; k < ins.size(); ++k) {
      if (t.requires_grad(ins[k])) axpy(1.0, g.data().data() + k * n, t.grad_buffer(ins[k]).data().data(), n);
    }
  });
}

Var Tape::sum(Var vx) {
  check_var(vx, "sum");
  const Tensor& x = value(vx);
  double s = 0.0;
  for (double v : x.data()) s += v;
  const int ix = vx.id();
  return push(Tensor::scalar(s), {ix}, [ix](Tape& t, int self) {
    const double g = t.output_grad(self)[0];
    for (double& v : t.grad_buffer(ix).data()) v += g;
  });
}

Var Tape::mean(Var vx) {
  check_var(vx, "mean");
  const std::size_t n = value(vx).size();
  return scale(sum(vx), 1.0 / static_cast<double>(n));
}

Var Tape::max_axis(Var vx, int axis) {
  check_var(vx, "max_axis");
  const Tensor& x = value(vx);
  std::vector<std::size_t> arg;
  Tensor out;
  if (x.rank() == 1) {
    const auto it = std::max_element(x.data().begin(), x.data().end());
    arg.push_back(static_cast<std::size_t>(it - x.data().begin()));
    out = Tensor::scalar(*it);
  } else if (x.rank() == 2 && (axis == 1 || axis == -1)) {
    const std::size_t rows = x.shape()[0], cols = x.shape()[1];
    out = Tensor({rows});
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < cols; ++c) {
        if (x.at(r, c) > x.at(r, best)) best = c;
      }
      arg.push_back(r * cols + best);
      out[r] = x.at(r, best);
    }
  } else if (x.rank() == 2 && axis == 0) {
    const std::size_t rows = x.shape()[0], cols = x.shape()[1];
    out = Tensor({cols});
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t best = 0;
      for (std::size_t r = 1; r < rows; ++r) {
        if (x.at(r, c) > x.at(best, c)) best = r;
      }
      arg.push_back(best * cols + c);
      out[c] = x.at(best, c);
    }
  } else {
    throw ShapeError("max_axis: unsupported axis " + std::to_string(axis) +
                     " for " + shape_string(x.shape()));
  }
  for (double v : out.data()) {
    if (std::isnan(v)) throw NumericsError("max_axis: NaN input");
  }
  const int ix = vx.id();
  return push(std::move(out), {ix}, [ix, arg = std::move(arg)](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < arg.size(); ++i) gx[arg[i]] += g[i];
  });
}

Var Tape::slice(Var vx, std::size_t begin, std::size_t count) {
  check_var(vx, "slice");
  const Tensor& x = value(vx);
  if (x.rank() > 2 || count == 0 || begin + count > x.shape()[0]) {
    throw ShapeError("slice: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " +
                     shape_string(x.shape()));
  }
  const std::size_t stride = x.rank() == 1 ? 1 : x.shape()[1];
  Shape shape = x.shape();
  shape[0] = count;
  Tensor out(shape, std::vector<double>(x.data().begin() + begin * stride,
                                        x.data().begin() + (begin + count) * stride));
  const int ix = vx.id();
  const std::size_t off = begin * stride;
  return push(std::move(out), {ix}, [ix, off](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    axpy(1.0, g.data().data(), t.grad_buffer(ix).data().data() + off, g.size());
  });
}

Var Tape::row(Var vx, std::size_t index) {
  check_var(vx, "row");
  const Tensor& x = value(vx);
  require_rank("row", x, 2);
  if (index >= x.shape()[0]) {
    throw ShapeError("row: index " + std::to_string(index) +
                     " out of range for " + shape_string(x.shape()));
  }
  const std::size_t n = x.shape()[1];
  Tensor out({n}, std::vector<double>(x.data().begin() + index * n,
                                      x.data().begin() + (index + 1) * n));
  const int ix = vx.id();
  const std::size_t off = index * n;
  return push(std::move(out), {ix}, [ix, off](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    axpy(1.0, g.data().data(), t.grad_buffer(ix).data().data() + off, g.size());
  });
}

Var Tape::pick(Var vx, std::size_t index) {
  check_var(vx, "pick");
  const Tensor& x = value(vx);
  require_rank("pick", x, 1);
  if (index >= x.size()) {
    throw ShapeError("pick: index " + std::to_string(index) +
                     " out of range for " + shape_string(x.shape()));
  }
  const int ix = vx.id();
  return push(Tensor::scalar(x[index]), {ix}, [ix, index](Tape& t, int self) {
    t.grad_buffer(ix)[index] += t.output_grad(self)[0];
  });
}

Var Tape::outer_add(Var va, Var vb) {
  check_var(va, "outer_add");
  check_var(vb, "outer_add");
  const Tensor& a = value(va);
  const Tensor& b = value(vb);
  if (a.rank() != 1 || b.rank() != 1) throw ShapeError(shapes_msg("outer_add", a, b));
  const std::size_t n = a.size(), m = b.size();
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out.at(i, j) = a[i] + b[j];
  }
  const int ia = va.id(), ib = vb.id();
  return push(std::move(out), {ia, ib}, [ia, ib, n, m](Tape& t, int self) {
    const Tensor& g = t.output_grad(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) ga[i] += g.at(i, j);
      }
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) gb[j] += g.at(i, j);
      }
    }
  });
}

Var Tape::custom(std::vector<int> inputs, Tensor value, BackwardFn backward) {
  for (int in : inputs) {
    if (in < 0 || static_cast<std::size_t>(in) >= nodes_.size()) {
      throw ShapeError("custom: invalid input");
    }
  }
  return push(std::move(value), std::move(inputs), std::move(backward));
}

GradMap Tape::backward(Var loss) {
  check_var(loss, "backward");
  const Tensor& l = value(loss);
  if (l.size() != 1) {
    throw RankError("backward: loss must be scalar, got shape " +
                    shape_string(l.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  grad_buffer(loss.id())[0] = 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, id);
  }

  GradMap out;
  if (params_ != nullptr) {
    for (const auto& [name, t] : *params_) out.emplace(name, Tensor(t.shape()));
  }
  for (const auto& [name, id] : named_) {
    const Node& n = nodes_[id];
    out.insert_or_assign(name, n.grad.empty() ? Tensor(value(id).shape()) : n.grad);
  }
  return out;
}

}  // namespace psjnet::nk
