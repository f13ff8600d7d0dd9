#include "cael/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cael/kernels.hpp"

namespace cael {

namespace {

bool wants_grad(std::initializer_list<const Tensor*> inputs) {
  if (!GradTape::current().recording()) return false;
  for (const Tensor* t : inputs)
    if (t->defined() && t->requires_grad()) return true;
  return false;
}

template <typename Fn>
void record(std::string_view op, std::vector<Tensor> inputs, Tensor& out, Fn&& fn) {
  out.set_requires_grad(true);
  GradTape::current().record(
      GradTape::Node{op, std::move(inputs), out, std::forward<Fn>(fn)});
}

std::vector<double> transposed(const double* src, std::size_t rows, std::size_t cols) {
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  return out;
}

// C[m,n] += A[m,k] B[k,n]
void mm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
  kernels::gemm_acc(m, n, k, a, k, b, n, c, n);
}

// C[m,n] += A[m,k] B[n,k]^T
void mm_bt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n) {
  kernels::gemm_bt_acc(m, n, k, a, k, b, k, c, n);
}

// C[m,n] += A[k,m]^T B[k,n]
void mm_at_acc(const double* a, const double* b, double* c, std::size_t k, std::size_t m,
               std::size_t n) {
  const auto at = transposed(a, k, m);
  kernels::gemm_acc(m, n, k, at.data(), k, b, n, c, n);
}

void require_defined(std::string_view op, const Tensor& t, std::string_view name) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": " + std::string(name) + " is undefined");
}

Shape strides_of(const Shape& shape) {
  Shape strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

}  // namespace

std::uint64_t& mac_counter() {
  thread_local std::uint64_t macs = 0;
  return macs;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined("matmul", a, "lhs");
  require_defined("matmul", b, "rhs");
  if (a.rank() == 3 && b.rank() == 3) {
    const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
    if (b.dim(0) != batch || b.dim(1) != k)
      shape_mismatch("matmul", "batched inner/batch dims differ", a.shape(), b.shape());
    Tensor out(Shape{batch, m, n});
    mac_counter() += batch * m * k * n;
    for (std::size_t i = 0; i < batch; ++i)
      mm_acc(a.data().data() + i * m * k, b.data().data() + i * k * n,
             out.data().data() + i * m * n, m, k, n);
    if (wants_grad({&a, &b})) {
      record("matmul", {a, b}, out, [a, b, out, batch, m, k, n]() {
        const double* g = out.grad().data();
        for (std::size_t i = 0; i < batch; ++i) {
          if (a.requires_grad())
            mm_bt_acc(g + i * m * n, b.data().data() + i * k * n,
                      a.grad_buffer().data() + i * m * k, m, n, k);
          if (b.requires_grad())
            mm_at_acc(a.data().data() + i * m * k, g + i * m * n,
                      b.grad_buffer().data() + i * k * n, m, k, n);
        }
      });
    }
    return out;
  }
  if (b.rank() != 2 || a.rank() < 1)
    shape_mismatch("matmul", "unsupported ranks", a.shape(), b.shape());
  const std::size_t k = a.shape().back();
  if (b.dim(0) != k) shape_mismatch("matmul", "inner dims differ", a.shape(), b.shape());
  const std::size_t n = b.dim(1);
  const std::size_t m = a.numel() / k;
  Shape out_shape = a.shape();
  out_shape.back() = n;
  Tensor out(out_shape);
  mac_counter() += m * k * n;
  mm_acc(a.data().data(), b.data().data(), out.data().data(), m, k, n);
  if (wants_grad({&a, &b})) {
    record("matmul", {a, b}, out, [a, b, out, m, k, n]() {
      const double* g = out.grad().data();
      if (a.requires_grad()) mm_bt_acc(g, b.data().data(), a.grad_buffer().data(), m, n, k);
      if (b.requires_grad()) mm_at_acc(a.data().data(), g, b.grad_buffer().data(), m, k, n);
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_defined("linear", x, "input");
  require_defined("linear", weight, "weight");
  if (weight.rank() != 2 || x.shape().back() != weight.dim(0))
    shape_mismatch("linear", "input features vs weight rows", x.shape(), weight.shape());
  const std::size_t in = weight.dim(0), out_f = weight.dim(1);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_f))
    shape_mismatch("linear", "bias length vs weight columns", bias.shape(), weight.shape());
  const std::size_t rows = x.numel() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out_f;
  Tensor out(out_shape);
  double* o = out.data().data();
  if (bias.defined()) {
    const double* bd = bias.data().data();
    for (std::size_t r = 0; r < rows; ++r) std::copy(bd, bd + out_f, o + r * out_f);
  }
  mac_counter() += rows * in * out_f;
  mm_acc(x.data().data(), weight.data().data(), o, rows, in, out_f);
  if (wants_grad({&x, &weight, &bias})) {
    record("linear", {x, weight, bias}, out, [x, weight, bias, out, rows, in, out_f]() {
      const double* g = out.grad().data();
      if (x.requires_grad())
        mm_bt_acc(g, weight.data().data(), x.grad_buffer().data(), rows, out_f, in);
      if (weight.requires_grad())
        mm_at_acc(x.data().data(), g, weight.grad_buffer().data(), rows, in, out_f);
      if (bias.defined() && bias.requires_grad()) {
        auto gb = bias.grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < out_f; ++j) gb[j] += g[r * out_f + j];
      }
    });
  }
  return out;
}

namespace {

struct ConvGeom {
  std::size_t batch, channels, height, width, out_ch, kh, kw, stride, pad, out_h, out_w;
  std::size_t col_rows() const { return channels * kh * kw; }
  std::size_t col_cols() const { return out_h * out_w; }
};

void im2col(const double* img, const ConvGeom& g, double* col) {
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t ky = 0; ky < g.kh; ++ky)
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        double* row = col + ((c * g.kh + ky) * g.kw + kx) * g.col_cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(g.height) &&
                                ix < static_cast<long>(g.width);
            row[oy * g.out_w + ox] =
                inside ? img[(c * g.height + static_cast<std::size_t>(iy)) * g.width +
                             static_cast<std::size_t>(ix)]
                       : 0.0;
          }
        }
      }
}

void col2im_acc(const double* col, const ConvGeom& g, double* img) {
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t ky = 0; ky < g.kh; ++ky)
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const double* row = col + ((c * g.kh + ky) * g.kw + kx) * g.col_cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
            img[(c * g.height + static_cast<std::size_t>(iy)) * g.width +
                static_cast<std::size_t>(ix)] += row[oy * g.out_w + ox];
          }
        }
      }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  require_defined("conv2d", x, "input");
  require_defined("conv2d", weight, "weight");
  if (x.rank() != 4 || weight.rank() != 4 || x.dim(1) != weight.dim(1))
    shape_mismatch("conv2d", "input channels vs weight [O,C,kh,kw]", x.shape(), weight.shape());
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  ConvGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), weight.dim(3),
             stride, padding, 0, 0};
  if (g.height + 2 * padding < g.kh || g.width + 2 * padding < g.kw)
    shape_mismatch("conv2d", "kernel larger than padded input", x.shape(), weight.shape());
  g.out_h = (g.height + 2 * padding - g.kh) / stride + 1;
  g.out_w = (g.width + 2 * padding - g.kw) / stride + 1;
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.out_ch))
    shape_mismatch("conv2d", "bias length vs output channels", bias.shape(), weight.shape());

  Tensor out(Shape{g.batch, g.out_ch, g.out_h, g.out_w});
  const std::size_t in_sz = g.channels * g.height * g.width;
  const std::size_t out_sz = g.out_ch * g.col_cols();
  std::vector<double> col(g.col_rows() * g.col_cols());
  mac_counter() += g.batch * g.out_ch * g.col_rows() * g.col_cols();
  for (std::size_t b = 0; b < g.batch; ++b) {
    im2col(x.data().data() + b * in_sz, g, col.data());
    double* o = out.data().data() + b * out_sz;
    if (bias.defined())
      for (std::size_t oc = 0; oc < g.out_ch; ++oc)
        std::fill(o + oc * g.col_cols(), o + (oc + 1) * g.col_cols(), bias.data()[oc]);
    mm_acc(weight.data().data(), col.data(), o, g.out_ch, g.col_rows(), g.col_cols());
  }
  if (wants_grad({&x, &weight, &bias})) {
    record("conv2d", {x, weight, bias}, out, [x, weight, bias, out, g, in_sz, out_sz]() {
      std::vector<double> col(g.col_rows() * g.col_cols());
      std::vector<double> dcol(col.size());
      const auto wt = transposed(weight.data().data(), g.out_ch, g.col_rows());
      for (std::size_t b = 0; b < g.batch; ++b) {
        const double* go = out.grad().data() + b * out_sz;
        if (weight.requires_grad()) {
          im2col(x.data().data() + b * in_sz, g, col.data());
          mm_bt_acc(go, col.data(), weight.grad_buffer().data(), g.out_ch, g.col_cols(),
                    g.col_rows());
        }
        if (x.requires_grad()) {
          std::fill(dcol.begin(), dcol.end(), 0.0);
          kernels::gemm_acc(g.col_rows(), g.col_cols(), g.out_ch, wt.data(), g.out_ch, go,
                            g.col_cols(), dcol.data(), g.col_cols());
          col2im_acc(dcol.data(), g, x.grad_buffer().data() + b * in_sz);
        }
        if (bias.defined() && bias.requires_grad()) {
          auto gb = bias.grad_buffer();
          for (std::size_t oc = 0; oc < g.out_ch; ++oc)
            for (std::size_t p = 0; p < g.col_cols(); ++p) gb[oc] += go[oc * g.col_cols() + p];
        }
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_defined("add", a, "lhs");
  require_defined("add", b, "rhs");
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (bs.size() > as.size() || !std::equal(bs.begin(), bs.end(), as.end() - bs.size()))
    shape_mismatch("add", "rhs must equal lhs or a trailing suffix of it", as, bs);
  const std::size_t inner = b.numel();
  const std::size_t outer = a.numel() / inner;
  Tensor out(as);
  auto o = out.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t r = 0; r < outer; ++r)
    for (std::size_t j = 0; j < inner; ++j) o[r * inner + j] = ad[r * inner + j] + bd[j];
  if (wants_grad({&a, &b})) {
    record("add", {a, b}, out, [a, b, out, outer, inner]() {
      auto g = out.grad();
      if (a.requires_grad()) kernels::axpy(1.0, g, a.grad_buffer());
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t r = 0; r < outer; ++r) kernels::axpy(1.0, g.subspan(r * inner, inner), gb);
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_defined("mul", a, "lhs");
  require_defined("mul", b, "rhs");
  if (a.shape() != b.shape()) shape_mismatch("mul", "shapes differ", a.shape(), b.shape());
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (wants_grad({&a, &b})) {
    record("mul", {a, b}, out, [a, b, out]() {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.data()[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.data()[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  require_defined("scale", a, "input");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * factor;
  if (wants_grad({&a})) {
    record("scale", {a}, out, [a, out, factor]() {
      kernels::axpy(factor, out.grad(), a.grad_buffer());
    });
  }
  return out;
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) shape_mismatch("concat", "axis out of range", first, Shape{axis});
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    require_defined("concat", p, "part");
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) shape_mismatch("concat", "non-concat axes differ", first, s);
    out_shape[axis] += s[axis];
  }
  const std::size_t outer = shape_numel(Shape(first.begin(), first.begin() + axis));
  const std::size_t inner = shape_numel(Shape(first.begin() + axis + 1, first.end()));
  Tensor out(out_shape);
  const std::size_t out_row = out_shape[axis] * inner;
  std::size_t offset = 0;
  bool any_grad = false;
  for (const Tensor& p : parts) {
    const std::size_t chunk = p.dim(axis) * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(p.data().data() + o * chunk, chunk, out.data().data() + o * out_row + offset);
    offset += chunk;
    any_grad = any_grad || wants_grad({&p});
  }
  if (any_grad) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    record("concat", inputs, out, [inputs, out, outer, inner, out_row, axis]() {
      std::size_t off = 0;
      for (const Tensor& p : inputs) {
        const std::size_t chunk = p.dim(axis) * inner;
        if (p.requires_grad()) {
          auto gp = p.grad_buffer();
          for (std::size_t o = 0; o < outer; ++o)
            kernels::axpy(1.0, out.grad().subspan(o * out_row + off, chunk),
                          gp.subspan(o * chunk, chunk));
        }
        off += chunk;
      }
    });
  }
  return out;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  require_defined("slice", x, "input");
  if (axis >= x.rank() || length == 0 || start + length > x.dim(axis))
    shape_mismatch("slice", "range [start, start+length) outside axis", x.shape(),
                   Shape{axis, start, length});
  const Shape& s = x.shape();
  const std::size_t outer = shape_numel(Shape(s.begin(), s.begin() + axis));
  const std::size_t inner = shape_numel(Shape(s.begin() + axis + 1, s.end()));
  Shape out_shape = s;
  out_shape[axis] = length;
  Tensor out(out_shape);
  const std::size_t in_row = s[axis] * inner;
  const std::size_t chunk = length * inner;
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(x.data().data() + o * in_row + start * inner, chunk,
                out.data().data() + o * chunk);
  if (wants_grad({&x})) {
    record("slice", {x}, out, [x, out, outer, in_row, chunk, start, inner]() {
      auto gx = x.grad_buffer();
      for (std::size_t o = 0; o < outer; ++o)
        kernels::axpy(1.0, out.grad().subspan(o * chunk, chunk),
                      gx.subspan(o * in_row + start * inner, chunk));
    });
  }
  return out;
}

std::vector<Tensor> split(const Tensor& x, std::size_t axis, std::span<const std::size_t> sizes) {
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  if (axis >= x.rank() || total != x.dim(axis))
    shape_mismatch("split", "sizes do not sum to the axis length", x.shape(),
                   Shape(sizes.begin(), sizes.end()));
  std::vector<Tensor> out;
  std::size_t start = 0;
  for (std::size_t s : sizes) {
    out.push_back(slice(x, axis, start, s));
    start += s;
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  require_defined("reshape", x, "input");
  if (shape_numel(shape) != x.numel())
    shape_mismatch("reshape", "element counts differ", x.shape(), shape);
  Tensor out(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
  if (wants_grad({&x})) {
    record("reshape", {x}, out,
           [x, out]() { kernels::axpy(1.0, out.grad(), x.grad_buffer()); });
  }
  return out;
}

Tensor transpose(const Tensor& x, std::size_t axis0, std::size_t axis1) {
  require_defined("transpose", x, "input");
  if (axis0 >= x.rank() || axis1 >= x.rank())
    shape_mismatch("transpose", "axis out of range", x.shape(), Shape{axis0, axis1});
  Shape out_shape = x.shape();
  std::swap(out_shape[axis0], out_shape[axis1]);
  // Source offset for each destination element, shared by forward and backward.
  const Shape in_strides = strides_of(x.shape());
  Shape perm_strides = in_strides;
  std::swap(perm_strides[axis0], perm_strides[axis1]);
  const std::size_t n = x.numel();
  auto index = std::make_shared<std::vector<std::size_t>>(n);
  {
    Shape counter(out_shape.size(), 0);
    std::size_t src = 0;
    for (std::size_t i = 0; i < n; ++i) {
      (*index)[i] = src;
      for (std::size_t d = out_shape.size(); d-- > 0;) {
        ++counter[d];
        src += perm_strides[d];
        if (counter[d] < out_shape[d]) break;
        src -= perm_strides[d] * counter[d];
        counter[d] = 0;
      }
    }
  }
  Tensor out(out_shape);
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = x.data()[(*index)[i]];
  if (wants_grad({&x})) {
    record("transpose", {x}, out, [x, out, index]() {
      auto gx = x.grad_buffer();
      auto g = out.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[(*index)[i]] += g[i];
    });
  }
  return out;
}

Tensor softmax(const Tensor& x) {
  require_defined("softmax", x, "input");
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.numel() / cols;
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data().data() + r * cols;
    double* o = out.data().data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < cols; ++j) o[j] /= z;
  }
  if (wants_grad({&x})) {
    record("softmax", {x}, out, [x, out, rows, cols]() {
      auto gx = x.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* y = out.data().data() + r * cols;
        const double* g = out.grad().data() + r * cols;
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += g[j] * y[j];
        for (std::size_t j = 0; j < cols; ++j) gx[r * cols + j] += y[j] * (g[j] - s);
      }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_defined("layer_norm", x, "input");
  const std::size_t cols = x.shape().back();
  if (gamma.defined() && gamma.shape() != Shape{cols})
    shape_mismatch("layer_norm", "gamma vs last axis", x.shape(), gamma.shape());
  if (beta.defined() && beta.shape() != Shape{cols})
    shape_mismatch("layer_norm", "beta vs last axis", x.shape(), beta.shape());
  const std::size_t rows = x.numel() / cols;
  Tensor out(x.shape());
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data().data() + r * cols;
    double mu = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mu += in[j];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<double>(cols);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < cols; ++j) {
      const double h = (in[j] - mu) * is;
      (*xhat)[r * cols + j] = h;
      const double gm = gamma.defined() ? gamma.data()[j] : 1.0;
      const double bt = beta.defined() ? beta.data()[j] : 0.0;
      out.data()[r * cols + j] = gm * h + bt;
    }
  }
  if (wants_grad({&x, &gamma, &beta})) {
    record("layer_norm", {x, gamma, beta}, out,
           [x, gamma, beta, out, xhat, inv_std, rows, cols]() {
             auto g = out.grad();
             const double inv_n = 1.0 / static_cast<double>(cols);
             std::vector<double> dh(cols);
             for (std::size_t r = 0; r < rows; ++r) {
               const double* h = xhat->data() + r * cols;
               const double* gr = g.data() + r * cols;
               if (gamma.defined() && gamma.requires_grad()) {
                 auto gg = gamma.grad_buffer();
                 for (std::size_t j = 0; j < cols; ++j) gg[j] += gr[j] * h[j];
               }
               if (beta.defined() && beta.requires_grad()) {
                 auto gb = beta.grad_buffer();
                 for (std::size_t j = 0; j < cols; ++j) gb[j] += gr[j];
               }
               if (!x.requires_grad()) continue;
               double mean_dh = 0.0, mean_dh_h = 0.0;
               for (std::size_t j = 0; j < cols; ++j) {
                 dh[j] = gr[j] * (gamma.defined() ? gamma.data()[j] : 1.0);
                 mean_dh += dh[j];
                 mean_dh_h += dh[j] * h[j];
               }
               mean_dh *= inv_n;
               mean_dh_h *= inv_n;
               auto gx = x.grad_buffer();
               const double is = (*inv_std)[r];
               for (std::size_t j = 0; j < cols; ++j)
                 gx[r * cols + j] += is * (dh[j] - mean_dh - h[j] * mean_dh_h);
             }
           });
  }
  return out;
}

Tensor gelu(const Tensor& x) {
  require_defined("gelu", x, "input");
  Tensor out(x.shape());
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double v = x.data()[i];
    out.data()[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  }
  if (wants_grad({&x})) {
    record("gelu", {x}, out, [x, out]() {
      constexpr double kInvSqrt2Pi = 0.39894228040143267794;
      auto gx = x.grad_buffer();
      auto g = out.grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = x.data()[i];
        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
        gx[i] += g[i] * (cdf + v * pdf);
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  require_defined("sum", x, "input");
  double s = 0.0;
  for (double v : x.data()) s += v;
  Tensor out = Tensor::scalar(s);
  if (wants_grad({&x})) {
    record("sum", {x}, out, [x, out]() {
      const double g = out.grad()[0];
      for (double& v : x.grad_buffer()) v += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor mean_axis(const Tensor& x, std::size_t axis) {
  require_defined("mean_axis", x, "input");
  if (axis >= x.rank()) shape_mismatch("mean_axis", "axis out of range", x.shape(), Shape{axis});
  const Shape& s = x.shape();
  const std::size_t outer = shape_numel(Shape(s.begin(), s.begin() + axis));
  const std::size_t inner = shape_numel(Shape(s.begin() + axis + 1, s.end()));
  const std::size_t len = s[axis];
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) out_shape.push_back(s[i]);
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor out(out_shape);
  const double inv = 1.0 / static_cast<double>(len);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t i = 0; i < inner; ++i)
        out.data()[o * inner + i] += x.data()[(o * len + l) * inner + i];
  for (double& v : out.data()) v *= inv;
  if (wants_grad({&x})) {
    record("mean_axis", {x}, out, [x, out, outer, inner, len, inv]() {
      auto gx = x.grad_buffer();
      auto g = out.grad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t l = 0; l < len; ++l)
          for (std::size_t i = 0; i < inner; ++i)
            gx[(o * len + l) * inner + i] += g[o * inner + i] * inv;
    });
  }
  return out;
}

Tensor patchify(const Tensor& x, std::size_t patch) {
  require_defined("patchify", x, "input");
  if (x.rank() != 4 || patch == 0 || x.dim(2) % patch != 0 || x.dim(3) % patch != 0)
    shape_mismatch("patchify", "grid not divisible by patch size", x.shape(), Shape{patch, patch});
  const std::size_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t gh = h / patch, gw = w / patch, n = gh * gw, feat = ch * patch * patch;
  auto index = std::make_shared<std::vector<std::size_t>>(batch * n * feat);
  std::size_t i = 0;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t ty = 0; ty < gh; ++ty)
      for (std::size_t tx = 0; tx < gw; ++tx)
        for (std::size_t c = 0; c < ch; ++c)
          for (std::size_t py = 0; py < patch; ++py)
            for (std::size_t px = 0; px < patch; ++px)
              (*index)[i++] = ((b * ch + c) * h + ty * patch + py) * w + tx * patch + px;
  Tensor out(Shape{batch, n, feat});
  for (std::size_t j = 0; j < index->size(); ++j) out.data()[j] = x.data()[(*index)[j]];
  if (wants_grad({&x})) {
    record("patchify", {x}, out, [x, out, index]() {
      auto gx = x.grad_buffer();
      auto g = out.grad();
      for (std::size_t j = 0; j < g.size(); ++j) gx[(*index)[j]] += g[j];
    });
  }
  return out;
}

Tensor repeat_leading(const Tensor& x, std::size_t count) {
  require_defined("repeat_leading", x, "input");
  if (x.rank() < 1 || x.dim(0) != 1 || count == 0)
    shape_mismatch("repeat_leading", "leading axis must be 1", x.shape(), Shape{count});
  Shape out_shape = x.shape();
  out_shape[0] = count;
  Tensor out(out_shape);
  const std::size_t inner = x.numel();
  for (std::size_t c = 0; c < count; ++c)
    std::copy_n(x.data().data(), inner, out.data().data() + c * inner);
  if (wants_grad({&x})) {
    record("repeat_leading", {x}, out, [x, out, count, inner]() {
      auto gx = x.grad_buffer();
      for (std::size_t c = 0; c < count; ++c)
        kernels::axpy(1.0, out.grad().subspan(c * inner, inner), gx);
    });
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_defined("cross_entropy", logits, "logits");
  if (logits.rank() != 2 || logits.dim(0) != labels.size())
    shape_mismatch("cross_entropy", "logits [B,C] vs labels [B]", logits.shape(),
                   Shape{labels.size()});
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= classes)
      throw std::out_of_range("cross_entropy: label " + std::to_string(l) + " outside [0, " +
                              std::to_string(classes) + ")");
  auto probs = std::make_shared<std::vector<double>>(logits.numel());
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* z = logits.data().data() + b * classes;
    const double mx = *std::max_element(z, z + classes);
    double s = 0.0;
    for (std::size_t c = 0; c < classes; ++c) s += std::exp(z[c] - mx);
    const double lse = mx + std::log(s);
    total += lse - z[labels[b]];
    for (std::size_t c = 0; c < classes; ++c)
      (*probs)[b * classes + c] = std::exp(z[c] - lse);
  }
  Tensor out = Tensor::scalar(total / static_cast<double>(batch));
  if (wants_grad({&logits})) {
    std::vector<int> lab(labels.begin(), labels.end());
    record("cross_entropy", {logits}, out, [logits, out, probs, lab, batch, classes]() {
      const double g = out.grad()[0] / static_cast<double>(batch);
      auto gl = logits.grad_buffer();
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < classes; ++c)
          gl[b * classes + c] +=
              g * ((*probs)[b * classes + c] - (static_cast<int>(c) == lab[b] ? 1.0 : 0.0));
    });
  }
  return out;
}

}  // namespace cael
