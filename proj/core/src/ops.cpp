#include "tricortex/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "tricortex/rng.hpp"

namespace tricortex {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EMat>;
using MapC = Eigen::Map<const EMat>;

bool want_grad(std::initializer_list<const Tensor*> ins) {
  if (!active_tape()) return false;
  for (const Tensor* t : ins) {
    if (t->requires_grad()) return true;
  }
  return false;
}

void record(const char* op, std::vector<Tensor> inputs, Tensor& out,
            std::function<void()> bw) {
  out.set_requires_grad(true);
  active_tape()->record(Tape::Node{op, std::move(inputs), out, std::move(bw)});
}

// Right-aligned broadcast plan: strides are per-output-axis element strides
// into each operand, zero where the operand is broadcast. `kind` picks a
// loop specialization shared by forward and backward.
struct BcPlan {
  enum Kind { kSame, kAScalar, kBScalar, kASuffix, kBSuffix, kGeneric };
  Shape out;
  std::vector<int64_t> sa, sb;
  Kind kind = kGeneric;
  int64_t n = 0;
  int64_t inner = 0;  // repeat period for the suffix kinds
};

// True when `s` repeats over leading output axes only, i.e. its elements
// tile the output contiguously with period `len`.
bool is_suffix(const BcPlan& p, const std::vector<int64_t>& stride, int64_t len) {
  int64_t run = 1;
  int64_t expect = 1;
  for (size_t i = p.out.size(); i-- > 0 && run < len;) {
    if (stride[i] != expect) return false;
    expect *= p.out[i];
    run *= p.out[i];
  }
  return run == len;
}

BcPlan broadcast_plan(const char* op, const Shape& a, const Shape& b) {
  size_t nd = std::max(a.size(), b.size());
  BcPlan p;
  p.out.resize(nd);
  p.sa.assign(nd, 0);
  p.sb.assign(nd, 0);
  std::vector<int64_t> da(nd, 1), db(nd, 1);
  for (size_t i = 0; i < a.size(); ++i) da[nd - a.size() + i] = a[i];
  for (size_t i = 0; i < b.size(); ++i) db[nd - b.size() + i] = b[i];
  for (size_t i = 0; i < nd; ++i) {
    if (da[i] == db[i] || da[i] == 1 || db[i] == 1) {
      p.out[i] = std::max(da[i], db[i]);
    } else {
      throw ShapeError(std::string(op) + ": shapes " + shape_str(a) + " and " +
                       shape_str(b) + " do not broadcast");
    }
  }
  int64_t ra = 1, rb = 1;
  for (size_t i = nd; i-- > 0;) {
    p.sa[i] = (da[i] == 1) ? 0 : ra;
    p.sb[i] = (db[i] == 1) ? 0 : rb;
    ra *= da[i];
    rb *= db[i];
  }
  p.n = shape_numel(p.out);
  int64_t na = shape_numel(a), nb = shape_numel(b);
  if (na == p.n && nb == p.n) {
    p.kind = BcPlan::kSame;
  } else if (nb == 1) {
    p.kind = BcPlan::kBScalar;
  } else if (na == 1) {
    p.kind = BcPlan::kAScalar;
  } else if (na == p.n && is_suffix(p, p.sb, nb)) {
    p.kind = BcPlan::kBSuffix;
    p.inner = nb;
  } else if (nb == p.n && is_suffix(p, p.sa, na)) {
    p.kind = BcPlan::kASuffix;
    p.inner = na;
  } else {
    p.kind = BcPlan::kGeneric;
  }
  return p;
}

// Walks output positions together with both operand offsets.
template <class F>
void bc_each(const BcPlan& p, F&& f) {
  switch (p.kind) {
    case BcPlan::kSame:
      for (int64_t i = 0; i < p.n; ++i) f(i, i, i);
      return;
    case BcPlan::kBScalar:
      for (int64_t i = 0; i < p.n; ++i) f(i, i, 0);
      return;
    case BcPlan::kAScalar:
      for (int64_t i = 0; i < p.n; ++i) f(i, 0, i);
      return;
    case BcPlan::kBSuffix: {
      int64_t i = 0;
      while (i < p.n) {
        for (int64_t j = 0; j < p.inner; ++j, ++i) f(i, i, j);
      }
      return;
    }
    case BcPlan::kASuffix: {
      int64_t i = 0;
      while (i < p.n) {
        for (int64_t j = 0; j < p.inner; ++j, ++i) f(i, j, i);
      }
      return;
    }
    case BcPlan::kGeneric: {
      size_t nd = p.out.size();
      std::vector<int64_t> idx(nd, 0);
      int64_t oa = 0, ob = 0;
      for (int64_t i = 0; i < p.n; ++i) {
        f(i, oa, ob);
        for (size_t k = nd; k-- > 0;) {
          ++idx[k];
          oa += p.sa[k];
          ob += p.sb[k];
          if (idx[k] < p.out[k]) break;
          oa -= p.sa[k] * p.out[k];
          ob -= p.sb[k] * p.out[k];
          idx[k] = 0;
        }
      }
      return;
    }
  }
}

Tensor binary_op(const char* name, const Tensor& a, const Tensor& b,
                 double (*fwd)(double, double),
                 void (*bwd)(double go, double av, double bv, double& da, double& db)) {
  BcPlan p = broadcast_plan(name, a.shape(), b.shape());
  std::vector<double> vals(p.n);
  {
    auto as = a.values();
    auto bs = b.values();
    bc_each(p, [&](int64_t i, int64_t oa, int64_t ob) {
      vals[i] = fwd(as[oa], bs[ob]);
    });
  }
  Tensor out = Tensor::from(p.out, std::move(vals));
  if (want_grad({&a, &b})) {
    Tensor av = a, bv = b, ov = out;
    record(name, {a, b}, out, [p = std::move(p), av, bv, ov, bwd]() {
      auto go = ov.grad();
      Tensor am = av, bm = bv;
      std::vector<double>* ga = av.requires_grad() ? &am.grad_buffer() : nullptr;
      std::vector<double>* gb = bv.requires_grad() ? &bm.grad_buffer() : nullptr;
      auto aval = av.values();
      auto bval = bv.values();
      bc_each(p, [&](int64_t i, int64_t oa, int64_t ob) {
        double da = 0, db = 0;
        bwd(go[i], aval[oa], bval[ob], da, db);
        if (ga) (*ga)[static_cast<size_t>(oa)] += da;
        if (gb) (*gb)[static_cast<size_t>(ob)] += db;
      });
    });
  }
  return out;
}

Tensor unary_op(const char* name, const Tensor& x, double (*fwd)(double),
                double (*dydx)(double xv, double yv)) {
  std::vector<double> vals(x.values().begin(), x.values().end());
  for (double& v : vals) v = fwd(v);
  Tensor out = Tensor::from(x.shape(), std::move(vals));
  if (want_grad({&x})) {
    Tensor xv = x, ov = out;
    record(name, {x}, out, [xv, ov, dydx]() {
      auto go = ov.grad();
      auto y = ov.values();
      auto xs = xv.values();
      Tensor xm = xv;
      auto& gx = xm.grad_buffer();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * dydx(xs[i], y[i]);
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, +[](double x, double y) { return x + y; },
      +[](double g, double, double, double& da, double& db) {
        da = g;
        db = g;
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, +[](double x, double y) { return x - y; },
      +[](double g, double, double, double& da, double& db) {
        da = g;
        db = -g;
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, +[](double x, double y) { return x * y; },
      +[](double g, double x, double y, double& da, double& db) {
        da = g * y;
        db = g * x;
      });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      "div", a, b, +[](double x, double y) { return x / y; },
      +[](double g, double x, double y, double& da, double& db) {
        da = g / y;
        db = -g * x / (y * y);
      });
}

Tensor add(const Tensor& a, double c) {
  std::vector<double> vals(a.values().begin(), a.values().end());
  for (double& v : vals) v += c;
  Tensor out = Tensor::from(a.shape(), std::move(vals));
  if (want_grad({&a})) {
    Tensor av = a, ov = out;
    record("add_c", {a}, out, [av, ov]() {
      auto go = ov.grad();
      Tensor am = av;
      auto& ga = am.grad_buffer();
      for (size_t i = 0; i < ga.size(); ++i) ga[i] += go[i];
    });
  }
  return out;
}

Tensor mul(const Tensor& a, double c) {
  std::vector<double> vals(a.values().begin(), a.values().end());
  for (double& v : vals) v *= c;
  Tensor out = Tensor::from(a.shape(), std::move(vals));
  if (want_grad({&a})) {
    Tensor av = a, ov = out;
    record("mul_c", {a}, out, [av, ov, c]() {
      auto go = ov.grad();
      Tensor am = av;
      auto& ga = am.grad_buffer();
      for (size_t i = 0; i < ga.size(); ++i) ga[i] += go[i] * c;
    });
  }
  return out;
}

Tensor neg(const Tensor& x) { return mul(x, -1.0); }

Tensor relu(const Tensor& x) {
  return unary_op(
      "relu", x, +[](double v) { return v > 0 ? v : 0.0; },
      +[](double xv, double) { return xv > 0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      "sigmoid", x,
      +[](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v))
                                    : std::exp(v) / (1.0 + std::exp(v)); },
      +[](double, double yv) { return yv * (1.0 - yv); });
}

Tensor tanh_op(const Tensor& x) {
  return unary_op(
      "tanh", x, +[](double v) { return std::tanh(v); },
      +[](double, double yv) { return 1.0 - yv * yv; });
}

Tensor sin_op(const Tensor& x) {
  return unary_op(
      "sin", x, +[](double v) { return std::sin(v); },
      +[](double xv, double) { return std::cos(xv); });
}

Tensor cos_op(const Tensor& x) {
  return unary_op(
      "cos", x, +[](double v) { return std::cos(v); },
      +[](double xv, double) { return -std::sin(xv); });
}

Tensor exp_op(const Tensor& x) {
  return unary_op(
      "exp", x, +[](double v) { return std::exp(v); },
      +[](double, double yv) { return yv; });
}

Tensor sqrt_op(const Tensor& x) {
  return unary_op(
      "sqrt", x, +[](double v) { return std::sqrt(v); },
      +[](double, double yv) { return 0.5 / yv; });
}

Tensor wrap_2pi(const Tensor& x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return unary_op(
      "wrap_2pi", x,
      +[](double v) {
        double w = v - two_pi * std::floor(v / two_pi);
        if (w >= two_pi) w = 0.0;  // guard against rounding at the seam
        return w;
      },
      +[](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() == 2 && sb.size() == 2) {
    if (sa[1] != sb[0]) {
      throw ShapeError("matmul: inner dims of " + shape_str(sa) + " and " +
                       shape_str(sb) + " differ");
    }
    int64_t m = sa[0], k = sa[1], n = sb[1];
    Tensor out = Tensor::zeros({m, n});
    {
      MapC A(a.values().data(), m, k), B(b.values().data(), k, n);
      MapM C(out.raw_values().data(), m, n);
      C.noalias() = A * B;
    }
    if (want_grad({&a, &b})) {
      Tensor av = a, bv = b, ov = out;
      record("matmul", {a, b}, out, [av, bv, ov, m, k, n]() {
        MapC G(ov.grad().data(), m, n);
        MapC A(av.values().data(), m, k), B(bv.values().data(), k, n);
        if (av.requires_grad()) {
          Tensor am = av;
          MapM GA(am.grad_buffer().data(), m, k);
          GA.noalias() += G * B.transpose();
        }
        if (bv.requires_grad()) {
          Tensor bm = bv;
          MapM GB(bm.grad_buffer().data(), k, n);
          GB.noalias() += A.transpose() * G;
        }
      });
    }
    return out;
  }
  if (sa.size() == 3 && sb.size() == 2) {
    int64_t bsz = sa[0], m = sa[1], k = sa[2];
    if (k != sb[0]) {
      throw ShapeError("matmul: inner dims of " + shape_str(sa) + " and " +
                       shape_str(sb) + " differ");
    }
    Tensor flat = reshape(a, {bsz * m, k});
    Tensor prod = matmul(flat, b);
    return reshape(prod, {bsz, m, sb[1]});
  }
  if (sa.size() == 3 && sb.size() == 3) {
    if (sa[0] != sb[0] || sa[2] != sb[1]) {
      throw ShapeError("matmul: batched shapes " + shape_str(sa) + " and " +
                       shape_str(sb) + " do not conform");
    }
    int64_t bsz = sa[0], m = sa[1], k = sa[2], n = sb[2];
    Tensor out = Tensor::zeros({bsz, m, n});
    for (int64_t i = 0; i < bsz; ++i) {
      MapC A(a.values().data() + i * m * k, m, k);
      MapC B(b.values().data() + i * k * n, k, n);
      MapM C(out.raw_values().data() + i * m * n, m, n);
      C.noalias() = A * B;
    }
    if (want_grad({&a, &b})) {
      Tensor av = a, bv = b, ov = out;
      record("bmm", {a, b}, out, [av, bv, ov, bsz, m, k, n]() {
        for (int64_t i = 0; i < bsz; ++i) {
          MapC G(ov.grad().data() + i * m * n, m, n);
          MapC A(av.values().data() + i * m * k, m, k);
          MapC B(bv.values().data() + i * k * n, k, n);
          if (av.requires_grad()) {
            Tensor am = av;
            MapM GA(am.grad_buffer().data() + i * m * k, m, k);
            GA.noalias() += G * B.transpose();
          }
          if (bv.requires_grad()) {
            Tensor bm = bv;
            MapM GB(bm.grad_buffer().data() + i * k * n, k, n);
            GB.noalias() += A.transpose() * G;
          }
        }
      });
    }
    return out;
  }
  throw ShapeError("matmul: unsupported ranks " + shape_str(sa) + " x " +
                   shape_str(sb));
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[1]) {
    throw ShapeError("matmul_nt: shapes " + shape_str(sa) + " and " +
                     shape_str(sb) + " do not conform");
  }
  int64_t m = sa[0], k = sa[1], n = sb[0];
  Tensor out = Tensor::zeros({m, n});
  {
    MapC A(a.values().data(), m, k), B(b.values().data(), n, k);
    MapM C(out.raw_values().data(), m, n);
    C.noalias() = A * B.transpose();
  }
  if (want_grad({&a, &b})) {
    Tensor av = a, bv = b, ov = out;
    record("matmul_nt", {a, b}, out, [av, bv, ov, m, k, n]() {
      MapC G(ov.grad().data(), m, n);
      MapC A(av.values().data(), m, k), B(bv.values().data(), n, k);
      if (av.requires_grad()) {
        Tensor am = av;
        MapM GA(am.grad_buffer().data(), m, k);
        GA.noalias() += G * B;
      }
      if (bv.requires_grad()) {
        Tensor bm = bv;
        MapM GB(bm.grad_buffer().data(), n, k);
        GB.noalias() += G.transpose() * A;
      }
    });
  }
  return out;
}

namespace {

void im2col(std::span<const double> x, int64_t B, int64_t H, int64_t W, int64_t C,
            int64_t kh, int64_t kw, int64_t stride, int64_t pad, int64_t Ho,
            int64_t Wo, std::vector<double>& cols) {
  int64_t patch = kh * kw * C;
  cols.assign(B * Ho * Wo * patch, 0.0);
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t oy = 0; oy < Ho; ++oy) {
      for (int64_t ox = 0; ox < Wo; ++ox) {
        double* dst = cols.data() + ((b * Ho + oy) * Wo + ox) * patch;
        for (int64_t ki = 0; ki < kh; ++ki) {
          int64_t iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= H) continue;
          for (int64_t kj = 0; kj < kw; ++kj) {
            int64_t ix = ox * stride - pad + kj;
            if (ix < 0 || ix >= W) continue;
            const double* src = x.data() + ((b * H + iy) * W + ix) * C;
            std::copy(src, src + C, dst + (ki * kw + kj) * C);
          }
        }
      }
    }
  }
}

void col2im_add(std::span<const double> cols, int64_t B, int64_t H, int64_t W,
                int64_t C, int64_t kh, int64_t kw, int64_t stride, int64_t pad,
                int64_t Ho, int64_t Wo, std::vector<double>& dx) {
  int64_t patch = kh * kw * C;
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t oy = 0; oy < Ho; ++oy) {
      for (int64_t ox = 0; ox < Wo; ++ox) {
        const double* src = cols.data() + ((b * Ho + oy) * Wo + ox) * patch;
        for (int64_t ki = 0; ki < kh; ++ki) {
          int64_t iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= H) continue;
          for (int64_t kj = 0; kj < kw; ++kj) {
            int64_t ix = ox * stride - pad + kj;
            if (ix < 0 || ix >= W) continue;
            double* dst = dx.data() + ((b * H + iy) * W + ix) * C;
            const double* s = src + (ki * kw + kj) * C;
            for (int64_t c = 0; c < C; ++c) dst[c] += s[c];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, int64_t stride, int64_t pad) {
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.size() != 4 || sw.size() != 4 || sx[3] != sw[2]) {
    throw ShapeError("conv2d: input " + shape_str(sx) + " vs kernel " +
                     shape_str(sw) + " (expect NHWC and [kh,kw,Cin,Cout])");
  }
  int64_t B = sx[0], H = sx[1], W = sx[2], C = sx[3];
  int64_t kh = sw[0], kw = sw[1], Cout = sw[3];
  int64_t Ho = (H + 2 * pad - kh) / stride + 1;
  int64_t Wo = (W + 2 * pad - kw) / stride + 1;
  if (Ho < 1 || Wo < 1) {
    throw ShapeError("conv2d: spatial dims " + shape_str(sx) +
                     " too small for kernel " + shape_str(sw));
  }
  int64_t patch = kh * kw * C;
  auto cols = std::make_shared<std::vector<double>>();
  im2col(x.values(), B, H, W, C, kh, kw, stride, pad, Ho, Wo, *cols);
  Tensor out = Tensor::zeros({B, Ho, Wo, Cout});
  {
    MapC A(cols->data(), B * Ho * Wo, patch);
    MapC K(w.values().data(), patch, Cout);
    MapM O(out.raw_values().data(), B * Ho * Wo, Cout);
    O.noalias() = A * K;
  }
  if (want_grad({&x, &w})) {
    Tensor xv = x, wv = w, ov = out;
    record("conv2d", {x, w}, out,
           [xv, wv, ov, cols, B, H, W, C, kh, kw, stride, pad, Ho, Wo, patch,
            Cout]() {
             MapC G(ov.grad().data(), B * Ho * Wo, Cout);
             if (wv.requires_grad()) {
               Tensor wm = wv;
               MapM GW(wm.grad_buffer().data(), patch, Cout);
               MapC A(cols->data(), B * Ho * Wo, patch);
               GW.noalias() += A.transpose() * G;
             }
             if (xv.requires_grad()) {
               std::vector<double> dcols(cols->size());
               MapM DC(dcols.data(), B * Ho * Wo, patch);
               MapC K(wv.values().data(), patch, Cout);
               DC.noalias() = G * K.transpose();
               Tensor xm = xv;
               col2im_add(dcols, B, H, W, C, kh, kw, stride, pad, Ho, Wo,
                          xm.grad_buffer());
             }
           });
  }
  return out;
}

Tensor softmax(const Tensor& x) {
  if (x.ndim() < 1) throw ShapeError("softmax: needs at least rank 1");
  int64_t cols = x.dim(-1);
  int64_t rows = x.numel() / cols;
  std::vector<double> vals(x.numel());
  auto xs = x.values();
  for (int64_t r = 0; r < rows; ++r) {
    const double* in = xs.data() + r * cols;
    double* o = vals.data() + r * cols;
    double mx = in[0];
    for (int64_t c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
    double sum = 0;
    for (int64_t c = 0; c < cols; ++c) {
      o[c] = std::exp(in[c] - mx);
      sum += o[c];
    }
    for (int64_t c = 0; c < cols; ++c) o[c] /= sum;
  }
  Tensor out = Tensor::from(x.shape(), std::move(vals));
  if (want_grad({&x})) {
    Tensor xv = x, ov = out;
    record("softmax", {x}, out, [xv, ov, rows, cols]() {
      auto y = ov.values();
      auto go = ov.grad();
      Tensor xm = xv;
      auto& gx = xm.grad_buffer();
      for (int64_t r = 0; r < rows; ++r) {
        const double* yr = y.data() + r * cols;
        const double* gr = go.data() + r * cols;
        double dot = 0;
        for (int64_t c = 0; c < cols; ++c) dot += yr[c] * gr[c];
        double* gxr = gx.data() + r * cols;
        for (int64_t c = 0; c < cols; ++c) gxr[c] += (gr[c] - dot) * yr[c];
      }
    });
  }
  return out;
}

Tensor layernorm(const Tensor& x, double eps) {
  if (x.ndim() < 1) throw ShapeError("layernorm: needs at least rank 1");
  int64_t cols = x.dim(-1);
  int64_t rows = x.numel() / cols;
  std::vector<double> vals(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  auto xs = x.values();
  for (int64_t r = 0; r < rows; ++r) {
    const double* in = xs.data() + r * cols;
    double mean = 0;
    for (int64_t c = 0; c < cols; ++c) mean += in[c];
    mean /= cols;
    double var = 0;
    for (int64_t c = 0; c < cols; ++c) var += (in[c] - mean) * (in[c] - mean);
    var /= cols;
    double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = inv;
    double* o = vals.data() + r * cols;
    for (int64_t c = 0; c < cols; ++c) o[c] = (in[c] - mean) * inv;
  }
  Tensor out = Tensor::from(x.shape(), std::move(vals));
  if (want_grad({&x})) {
    Tensor xv = x, ov = out;
    record("layernorm", {x}, out, [xv, ov, inv_std, rows, cols]() {
      auto y = ov.values();
      auto go = ov.grad();
      Tensor xm = xv;
      auto& gx = xm.grad_buffer();
      for (int64_t r = 0; r < rows; ++r) {
        const double* yr = y.data() + r * cols;
        const double* gr = go.data() + r * cols;
        double gmean = 0, gymean = 0;
        for (int64_t c = 0; c < cols; ++c) {
          gmean += gr[c];
          gymean += gr[c] * yr[c];
        }
        gmean /= cols;
        gymean /= cols;
        double inv = (*inv_std)[r];
        double* gxr = gx.data() + r * cols;
        for (int64_t c = 0; c < cols; ++c) {
          gxr[c] += inv * (gr[c] - gmean - yr[c] * gymean);
        }
      }
    });
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int64_t>& labels) {
  if (logits.ndim() != 2) {
    throw ShapeError("cross_entropy: logits must be [B,C], got " +
                     shape_str(logits.shape()));
  }
  int64_t B = logits.dim(0), C = logits.dim(1);
  if (static_cast<int64_t>(labels.size()) != B) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) +
                     " labels for batch " + std::to_string(B));
  }
  for (int64_t b = 0; b < B; ++b) {
    if (labels[b] < 0 || labels[b] >= C) {
      throw std::invalid_argument("cross_entropy: label " +
                                  std::to_string(labels[b]) + " out of range [0," +
                                  std::to_string(C) + ") at row " +
                                  std::to_string(b));
    }
  }
  auto probs = std::make_shared<std::vector<double>>(logits.values().begin(),
                                                     logits.values().end());
  std::vector<double> loss(B);
  for (int64_t b = 0; b < B; ++b) {
    double* row = probs->data() + b * C;
    double mx = row[0];
    for (int64_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double sum = 0;
    for (int64_t c = 0; c < C; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (int64_t c = 0; c < C; ++c) row[c] /= sum;
    loss[b] = -std::log(std::max(row[labels[b]], 1e-300));
  }
  Tensor out = Tensor::from({B}, std::move(loss));
  if (want_grad({&logits})) {
    Tensor lv = logits, ov = out;
    record("cross_entropy", {logits}, out, [lv, ov, probs, labels, B, C]() {
      auto go = ov.grad();
      Tensor lm = lv;
      auto& gl = lm.grad_buffer();
      for (int64_t b = 0; b < B; ++b) {
        const double* p = probs->data() + b * C;
        double* g = gl.data() + b * C;
        for (int64_t c = 0; c < C; ++c) {
          double onehot = (c == labels[b]) ? 1.0 : 0.0;
          g[c] += go[b] * (p[c] - onehot);
        }
      }
    });
  }
  return out;
}

Tensor concat(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size() || sa.empty()) {
    throw ShapeError("concat: rank mismatch " + shape_str(sa) + " vs " +
                     shape_str(sb));
  }
  for (size_t i = 0; i + 1 < sa.size(); ++i) {
    if (sa[i] != sb[i]) {
      throw ShapeError("concat: leading dims differ " + shape_str(sa) + " vs " +
                       shape_str(sb));
    }
  }
  int64_t ca = sa.back(), cb = sb.back();
  int64_t rows = a.numel() / ca;
  Shape so = sa;
  so.back() = ca + cb;
  std::vector<double> vals(rows * (ca + cb));
  auto av = a.values();
  auto bv = b.values();
  for (int64_t r = 0; r < rows; ++r) {
    std::copy(av.data() + r * ca, av.data() + (r + 1) * ca,
              vals.data() + r * (ca + cb));
    std::copy(bv.data() + r * cb, bv.data() + (r + 1) * cb,
              vals.data() + r * (ca + cb) + ca);
  }
  Tensor out = Tensor::from(so, std::move(vals));
  if (want_grad({&a, &b})) {
    Tensor at = a, bt = b, ov = out;
    record("concat", {a, b}, out, [at, bt, ov, rows, ca, cb]() {
      auto go = ov.grad();
      if (at.requires_grad()) {
        Tensor am = at;
        auto& ga = am.grad_buffer();
        for (int64_t r = 0; r < rows; ++r) {
          for (int64_t c = 0; c < ca; ++c) ga[r * ca + c] += go[r * (ca + cb) + c];
        }
      }
      if (bt.requires_grad()) {
        Tensor bm = bt;
        auto& gb = bm.grad_buffer();
        for (int64_t r = 0; r < rows; ++r) {
          for (int64_t c = 0; c < cb; ++c) {
            gb[r * cb + c] += go[r * (ca + cb) + ca + c];
          }
        }
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                     shape_str(shape));
  }
  Tensor out =
      Tensor::from(std::move(shape), {x.values().begin(), x.values().end()});
  if (want_grad({&x})) {
    Tensor xv = x, ov = out;
    record("reshape", {x}, out, [xv, ov]() {
      auto go = ov.grad();
      Tensor xm = xv;
      auto& gx = xm.grad_buffer();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
    });
  }
  return out;
}

namespace {

Tensor reduce_axis(const char* name, const Tensor& x, int64_t axis, bool keepdims,
                   bool mean) {
  if (axis < 0) axis += x.ndim();
  if (axis < 0 || axis >= x.ndim()) {
    throw ShapeError(std::string(name) + ": axis out of range for " +
                     shape_str(x.shape()));
  }
  const Shape& s = x.shape();
  int64_t outer = 1, inner = 1;
  for (int64_t i = 0; i < axis; ++i) outer *= s[i];
  for (int64_t i = axis + 1; i < x.ndim(); ++i) inner *= s[i];
  int64_t red = s[axis];
  Shape so;
  for (int64_t i = 0; i < x.ndim(); ++i) {
    if (i == axis) {
      if (keepdims) so.push_back(1);
    } else {
      so.push_back(s[i]);
    }
  }
  double scale = mean ? 1.0 / static_cast<double>(red) : 1.0;
  std::vector<double> vals(outer * inner, 0.0);
  auto xs = x.values();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t r = 0; r < red; ++r) {
      const double* in = xs.data() + (o * red + r) * inner;
      double* ov = vals.data() + o * inner;
      for (int64_t i = 0; i < inner; ++i) ov[i] += in[i];
    }
  }
  if (mean) {
    for (double& v : vals) v *= scale;
  }
  Tensor out = Tensor::from(so, std::move(vals));
  if (want_grad({&x})) {
    Tensor xv = x, ov = out;
    record(name, {x}, out, [xv, ov, outer, red, inner, scale]() {
      auto go = ov.grad();
      Tensor xm = xv;
      auto& gx = xm.grad_buffer();
      for (int64_t o = 0; o < outer; ++o) {
        for (int64_t r = 0; r < red; ++r) {
          double* g = gx.data() + (o * red + r) * inner;
          const double* gos = go.data() + o * inner;
          for (int64_t i = 0; i < inner; ++i) g[i] += gos[i] * scale;
        }
      }
    });
  }
  return out;
}

}  // namespace

Tensor reduce_sum(const Tensor& x, int64_t axis, bool keepdims) {
  return reduce_axis("reduce_sum", x, axis, keepdims, false);
}

Tensor reduce_mean(const Tensor& x, int64_t axis, bool keepdims) {
  return reduce_axis("reduce_mean", x, axis, keepdims, true);
}

Tensor sum_all(const Tensor& x) {
  double s = 0;
  for (double v : x.values()) s += v;
  Tensor out = Tensor::scalar(s);
  if (want_grad({&x})) {
    Tensor xv = x, ov = out;
    record("sum_all", {x}, out, [xv, ov]() {
      double g = ov.grad()[0];
      Tensor xm = xv;
      auto& gx = xm.grad_buffer();
      for (double& v : gx) v += g;
    });
  }
  return out;
}

Tensor mean_all(const Tensor& x) {
  return mul(sum_all(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor gather_last(const Tensor& x, const std::vector<int64_t>& idx) {
  if (x.ndim() < 1) throw ShapeError("gather_last: needs rank >= 1");
  int64_t cols = x.dim(-1);
  for (int64_t i : idx) {
    if (i < 0 || i >= cols) {
      throw ShapeError("gather_last: index " + std::to_string(i) +
                       " out of range for last dim " + std::to_string(cols));
    }
  }
  int64_t rows = x.numel() / cols;
  int64_t k = static_cast<int64_t>(idx.size());
  Shape so = x.shape();
  so.back() = k;
  std::vector<double> vals(rows * k);
  auto xs = x.values();
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t j = 0; j < k; ++j) vals[r * k + j] = xs[r * cols + idx[j]];
  }
  Tensor out = Tensor::from(so, std::move(vals));
  if (want_grad({&x})) {
    Tensor xv = x, ov = out;
    record("gather_last", {x}, out, [xv, ov, idx, rows, cols, k]() {
      auto go = ov.grad();
      Tensor xm = xv;
      auto& gx = xm.grad_buffer();
      for (int64_t r = 0; r < rows; ++r) {
        for (int64_t j = 0; j < k; ++j) gx[r * cols + idx[j]] += go[r * k + j];
      }
    });
  }
  return out;
}

Tensor dropout(const Tensor& x, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw std::invalid_argument("dropout: p must be in [0,1), got " +
                                std::to_string(p));
  }
  if (p == 0.0) return x;
  auto mask = std::make_shared<std::vector<double>>(x.numel());
  double keep = 1.0 - p;
  for (double& m : *mask) m = (rng.uniform() < keep) ? 1.0 / keep : 0.0;
  std::vector<double> vals(x.numel());
  auto xs = x.values();
  for (int64_t i = 0; i < x.numel(); ++i) vals[i] = xs[i] * (*mask)[i];
  Tensor out = Tensor::from(x.shape(), std::move(vals));
  if (want_grad({&x})) {
    Tensor xv = x, ov = out;
    record("dropout", {x}, out, [xv, ov, mask]() {
      auto go = ov.grad();
      Tensor xm = xv;
      auto& gx = xm.grad_buffer();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * (*mask)[i];
    });
  }
  return out;
}

void backward(const Tensor& loss) {
  Tape* t = active_tape();
  if (!t) throw std::logic_error("backward called with no active tape");
  t->backward(loss);
}

std::vector<double> softmax_values(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  double mx = *std::max_element(p.begin(), p.end());
  double sum = 0;
  for (double& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

double entropy_nats(std::span<const double> probs) {
  double h = 0;
  for (double p : probs) {
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

int64_t argmax(std::span<const double> v) {
  return std::distance(v.begin(), std::max_element(v.begin(), v.end()));
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace tricortex
