#include "mdn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "mdn/kernels.hpp"

namespace mdn {

const Tensor& Var::value() const {
  if (!tape_) throw Error("use of an unbound Var");
  return tape_->value(*this);
}

const Tensor& BackwardContext::out_value() const { return tape_.nodes_[node_].value; }
const Tensor& BackwardContext::out_grad() const { return tape_.nodes_[node_].grad; }
std::size_t BackwardContext::input_count() const { return tape_.nodes_[node_].inputs.size(); }
const Tensor& BackwardContext::input_value(std::size_t i) const {
  return tape_.nodes_[tape_.nodes_[node_].inputs.at(i)].value;
}
Tensor* BackwardContext::input_grad(std::size_t i) const {
  return tape_.grad_buffer(tape_.nodes_[node_].inputs.at(i));
}

Var Tape::leaf(Tensor value) {
  if (!value.all_finite()) throw NumericError("leaf: non-finite value");
  Node node;
  node.op = "leaf";
  node.value = std::move(value);
  node.requires_grad = true;
  node.is_leaf = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite value");
  Node node;
  node.op = "constant";
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(Var v, std::string_view op) const {
  if (&v.tape() != this || v.id() >= nodes_.size()) {
    throw Error(std::string(op) + ": input belongs to a different tape");
  }
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op) + ": produced non-finite values, shape " + to_string(value.shape()));
  }
  Node node;
  node.op = std::string(op);
  node.value = std::move(value);
  for (const Var& in : inputs) {
    check_owned(in, op);
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor* Tape::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return nullptr;
  if (!node.has_grad) {
    node.grad = Tensor(node.value.shape(), 0.0);
    node.has_grad = true;
  }
  return &node.grad;
}

const Tensor& Tape::grad(Var v) const {
  const Node& node = nodes_.at(v.id());
  if (!node.has_grad) throw Error("grad requested for node '" + node.op + "' that backward() did not reach");
  return node.grad;
}

void Tape::backward(Var output) {
  check_owned(output, "backward");
  if (value(output).size() != 1) {
    throw ShapeError("backward: output must be scalar, got shape " + to_string(value(output).shape()));
  }
  for (Node& node : nodes_) {
    node.has_grad = false;
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].is_leaf) grad_buffer(id);
  }
  visit_log_.clear();
  if (Tensor* g = grad_buffer(output.id())) g->fill(1.0);
  for (std::size_t id = output.id() + 1; id-- > 0;) {
    visit_log_.push_back(id);
    Node& node = nodes_[id];
    if (!node.has_grad || !node.backward) continue;
    node.backward(BackwardContext(*this, id));
  }
}

namespace ad {
namespace {

[[noreturn]] void shape_error(std::string_view op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " + to_string(b));
}

void require_same(std::string_view op, Var a, Var b) {
  if (&a.tape() != &b.tape()) throw Error(std::string(op) + ": inputs on different tapes");
  if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

// Elementwise unary op with derivative expressed through input x and output y.
template <typename Fwd, typename Deriv>
Var unary(std::string_view op, Var a, Fwd fwd, Deriv deriv) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fwd(x[i]);
  return a.tape().record(op, std::move(out), {a}, [deriv](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& x = ctx.input_value(0);
    const Tensor& y = ctx.out_value();
    const Tensor& gy = ctx.out_grad();
    for (std::size_t i = 0; i < x.size(); ++i) (*gx)[i] += gy[i] * deriv(x[i], y[i]);
  });
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(std::string_view op, const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                     to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Var add(Var a, Var b) {
  require_same("add", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape().record("add", std::move(out), {a, b}, [](const BackwardContext& ctx) {
    const Tensor& g = ctx.out_grad();
    for (std::size_t k = 0; k < 2; ++k) {
      if (Tensor* gi = ctx.input_grad(k)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gi)[i] += g[i];
      }
    }
  });
}

Var sub(Var a, Var b) {
  require_same("sub", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape().record("sub", std::move(out), {a, b}, [](const BackwardContext& ctx) {
    const Tensor& g = ctx.out_grad();
    if (Tensor* ga = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (Tensor* gb = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same("mul", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape().record("mul", std::move(out), {a, b}, [](const BackwardContext& ctx) {
    const Tensor& g = ctx.out_grad();
    const Tensor& av = ctx.input_value(0);
    const Tensor& bv = ctx.input_value(1);
    if (Tensor* ga = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Tensor* gb = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  return unary("scale", a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double value) {
  return unary("add_scalar", a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Var add_channel_bias(Var x, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (xv.rank() < 1 || bv.rank() != 1 || bv.dim(0) != xv.dim(0)) shape_error("add_channel_bias", xv.shape(), bv.shape());
  const std::size_t channels = xv.dim(0);
  const std::size_t plane = xv.size() / channels;
  Tensor out = xv;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] += bv[c];
  }
  return x.tape().record("add_channel_bias", std::move(out), {x, bias}, [channels, plane](const BackwardContext& ctx) {
    const Tensor& g = ctx.out_grad();
    if (Tensor* gx = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
    }
    if (Tensor* gb = ctx.input_grad(1)) {
      for (std::size_t c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += g[c * plane + i];
        (*gb)[c] += acc;
      }
    }
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var exp(Var a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var abs(Var a) {
  return unary(
      "abs", a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var square(Var a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var relu(Var a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var elu(Var a) {
  return unary(
      "elu", a, [](double x) { return x >= 0.0 ? x : std::expm1(x); },
      [](double x, double y) { return x >= 0.0 ? 1.0 : y + 1.0; });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) shape_error("matmul", av.shape(), bv.shape());
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  kernels::gemm_nn(m, n, k, av.data(), bv.data(), out.data());
  return a.tape().record("matmul", std::move(out), {a, b}, [m, k, n](const BackwardContext& ctx) {
    const Tensor& g = ctx.out_grad();
    if (Tensor* ga = ctx.input_grad(0)) kernels::gemm_nt(m, k, n, g.data(), ctx.input_value(1).data(), ga->data());
    if (Tensor* gb = ctx.input_grad(1)) kernels::gemm_tn(k, n, m, ctx.input_value(0).data(), g.data(), gb->data());
  });
}

namespace {

struct ConvGeometry {
  std::size_t cin, h, w, cout, kh, kw, stride, pad, oh, ow;
  std::size_t patch() const { return cin * kh * kw; }
  std::size_t pixels() const { return oh * ow; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

void im2col(const ConvGeometry& g, const double* x, double* col) {
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        double* row = col + ((ci * g.kh + ky) * g.kw + kx) * g.pixels();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          double* dst = row + oy * g.ow;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(dst, dst + g.ow, 0.0);
            continue;
          }
          const double* src = x + (ci * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

void col2im(const ConvGeometry& g, const double* col, double* x) {
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const double* row = col + ((ci * g.kh + ky) * g.kw + kx) * g.pixels();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          double* dst = x + (ci * g.h + static_cast<std::size_t>(iy)) * g.w;
          const double* src = row + oy * g.ow;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(Var x, Var weight, Var bias, std::size_t stride, std::size_t padding) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  if (xv.rank() != 3 || wv.rank() != 4 || wv.dim(1) != xv.dim(0)) shape_error("conv2d", xv.shape(), wv.shape());
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  ConvGeometry g{xv.dim(0), xv.dim(1), xv.dim(2), wv.dim(0), wv.dim(2), wv.dim(3), stride, padding, 0, 0};
  if (g.h + 2 * g.pad < g.kh || g.w + 2 * g.pad < g.kw) shape_error("conv2d", xv.shape(), wv.shape());
  g.oh = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
  g.ow = (g.w + 2 * g.pad - g.kw) / g.stride + 1;
  const bool has_bias = bias.valid();
  if (has_bias && (bias.shape().size() != 1 || bias.shape()[0] != g.cout)) {
    shape_error("conv2d bias", wv.shape(), bias.shape());
  }

  std::shared_ptr<std::vector<double>> col;
  const double* col_data = xv.data().data();
  if (!g.pointwise()) {
    col = std::make_shared<std::vector<double>>(g.patch() * g.pixels());
    im2col(g, xv.data().data(), col->data());
    col_data = col->data();
  }
  Tensor out({g.cout, g.oh, g.ow}, 0.0);
  if (has_bias) {
    const Tensor& bv = bias.value();
    for (std::size_t c = 0; c < g.cout; ++c) std::fill_n(out.data().data() + c * g.pixels(), g.pixels(), bv[c]);
  }
  kernels::active().gemm_nn(g.cout, g.pixels(), g.patch(), wv.data().data(), col_data, out.data().data());

  auto backward = [g, col, has_bias](const BackwardContext& ctx) {
    const Tensor& dout = ctx.out_grad();
    const double* cols = col ? col->data() : ctx.input_value(0).data().data();
    const auto& kt = kernels::active();
    if (Tensor* gw = ctx.input_grad(1)) {
      kt.gemm_nt(g.cout, g.patch(), g.pixels(), dout.data().data(), cols, gw->data().data());
    }
    if (has_bias) {
      if (Tensor* gb = ctx.input_grad(2)) {
        for (std::size_t c = 0; c < g.cout; ++c) {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.pixels(); ++i) acc += dout[c * g.pixels() + i];
          (*gb)[c] += acc;
        }
      }
    }
    if (Tensor* gx = ctx.input_grad(0)) {
      const double* wd = ctx.input_value(1).data().data();
      if (g.pointwise()) {
        kt.gemm_tn(g.patch(), g.pixels(), g.cout, wd, dout.data().data(), gx->data().data());
      } else {
        std::vector<double> dcol(g.patch() * g.pixels(), 0.0);
        kt.gemm_tn(g.patch(), g.pixels(), g.cout, wd, dout.data().data(), dcol.data());
        col2im(g, dcol.data(), gx->data().data());
      }
    }
  };
  if (has_bias) return x.tape().record("conv2d", std::move(out), {x, weight, bias}, backward);
  return x.tape().record("conv2d", std::move(out), {x, weight}, backward);
}

Var softmax(Var a, std::size_t axis) {
  const Tensor& x = a.value();
  const AxisSplit s = split_axis("softmax", x.shape(), axis);
  Tensor out(x.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.len * s.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < s.len; ++l) mx = std::max(mx, x[base + l * s.inner]);
      double total = 0.0;
      for (std::size_t l = 0; l < s.len; ++l) {
        const double e = std::exp(x[base + l * s.inner] - mx);
        out[base + l * s.inner] = e;
        total += e;
      }
      for (std::size_t l = 0; l < s.len; ++l) out[base + l * s.inner] /= total;
    }
  }
  return a.tape().record("softmax", std::move(out), {a}, [s](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& y = ctx.out_value();
    const Tensor& gy = ctx.out_grad();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.len * s.inner + in;
        double inner_product = 0.0;
        for (std::size_t l = 0; l < s.len; ++l) inner_product += gy[base + l * s.inner] * y[base + l * s.inner];
        for (std::size_t l = 0; l < s.len; ++l) {
          const std::size_t idx = base + l * s.inner;
          (*gx)[idx] += y[idx] * (gy[idx] - inner_product);
        }
      }
    }
  });
}

Var log_sum_exp(Var a, std::size_t axis) {
  const Tensor& x = a.value();
  const AxisSplit s = split_axis("log_sum_exp", x.shape(), axis);
  Shape reduced;
  for (std::size_t i = 0; i < x.rank(); ++i) {
    if (i != axis) reduced.push_back(x.shape()[i]);
  }
  Tensor out(reduced);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.len * s.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < s.len; ++l) mx = std::max(mx, x[base + l * s.inner]);
      double total = 0.0;
      for (std::size_t l = 0; l < s.len; ++l) total += std::exp(x[base + l * s.inner] - mx);
      out[o * s.inner + in] = mx + std::log(total);
    }
  }
  return a.tape().record("log_sum_exp", std::move(out), {a}, [s](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& x = ctx.input_value(0);
    const Tensor& y = ctx.out_value();
    const Tensor& gy = ctx.out_grad();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.len * s.inner + in;
        const std::size_t r = o * s.inner + in;
        for (std::size_t l = 0; l < s.len; ++l) {
          const std::size_t idx = base + l * s.inner;
          (*gx)[idx] += gy[r] * std::exp(x[idx] - y[r]);
        }
      }
    }
  });
}

Var masked_gather(Var x, const Tensor& mask) {
  const Tensor& xv = x.value();
  if (xv.rank() != 3 || mask.rank() != 2 || mask.dim(0) != xv.dim(1) || mask.dim(1) != xv.dim(2)) {
    shape_error("masked_gather", xv.shape(), mask.shape());
  }
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0.0 && mask[i] != 1.0) throw ValidationError("masked_gather: mask entries must be 0 or 1");
    if (mask[i] == 1.0) cells.push_back(i);
  }
  if (cells.empty()) throw ValidationError("masked_gather: mask selects no cells");
  const std::size_t channels = xv.dim(0);
  const std::size_t plane = mask.size();
  Tensor out({channels, cells.size()});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < cells.size(); ++p) out[c * cells.size() + p] = xv[c * plane + cells[p]];
  }
  return x.tape().record("masked_gather", std::move(out), {x},
                         [cells = std::move(cells), channels, plane](const BackwardContext& ctx) {
                           Tensor* gx = ctx.input_grad(0);
                           if (!gx) return;
                           const Tensor& g = ctx.out_grad();
                           for (std::size_t c = 0; c < channels; ++c) {
                             for (std::size_t p = 0; p < cells.size(); ++p) {
                               (*gx)[c * plane + cells[p]] += g[c * cells.size() + p];
                             }
                           }
                         });
}

Var slice_channels(Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  if (xv.rank() < 1 || count == 0 || begin + count > xv.dim(0)) {
    throw ShapeError("slice_channels: block [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for shape " + to_string(xv.shape()));
  }
  const std::size_t plane = xv.size() / xv.dim(0);
  Shape shape = xv.shape();
  shape[0] = count;
  std::vector<double> data(xv.data().begin() + static_cast<std::ptrdiff_t>(begin * plane),
                           xv.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * plane));
  return x.tape().record("slice_channels", Tensor(std::move(shape), std::move(data)), {x},
                         [offset = begin * plane](const BackwardContext& ctx) {
                           Tensor* gx = ctx.input_grad(0);
                           if (!gx) return;
                           const Tensor& g = ctx.out_grad();
                           for (std::size_t i = 0; i < g.size(); ++i) (*gx)[offset + i] += g[i];
                         });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape().record("reshape", std::move(out), {a}, [](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& g = ctx.out_grad();
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return a.tape().record("sum", Tensor::scalar(total), {a}, [](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const double g = ctx.out_grad()[0];
    for (double& v : gx->data()) v += g;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return a.tape().record("mean", Tensor::scalar(total / n), {a}, [n](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const double g = ctx.out_grad()[0] / n;
    for (double& v : gx->data()) v += g;
  });
}

}  // namespace ad
}  // namespace mdn
