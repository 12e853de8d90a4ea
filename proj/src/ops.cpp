#include "ulo/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ulo/gemm.hpp"

namespace ulo::ops {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
}

}  // namespace

Value add(Tape& t, Value a, Value b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  require_same_shape(av, bv, "add");
  Tensor out = Tensor::uninit(av.shape());
  const int64_t n = av.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = av[i] + bv[i];
  return t.push(std::move(out), {a, b}, "add", [a, b](Tape& tt, Value self) {
    const Tensor& g = tt.grad_buf(self);
    if (tt.needs_grad(a)) tt.add_grad(a, g);
    if (tt.needs_grad(b)) tt.add_grad(b, g);
  });
}

Value mul(Tape& t, Value a, Value b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  require_same_shape(av, bv, "mul");
  Tensor out = Tensor::uninit(av.shape());
  const int64_t n = av.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = av[i] * bv[i];
  return t.push(std::move(out), {a, b}, "mul", [a, b](Tape& tt, Value self) {
    const Tensor& g = tt.grad_buf(self);
    const Tensor& av = tt.val(a);
    const Tensor& bv = tt.val(b);
    const int64_t n = g.numel();
    if (tt.needs_grad(a)) {
      Tensor& ga = tt.grad_buf(a);
      for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * bv[i];
    }
    if (tt.needs_grad(b)) {
      Tensor& gb = tt.grad_buf(b);
      for (int64_t i = 0; i < n; ++i) gb[i] += g[i] * av[i];
    }
  });
}

Value scale(Tape& t, Value a, double c) {
  const Tensor& av = t.val(a);
  Tensor out = Tensor::uninit(av.shape());
  const int64_t n = av.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = av[i] * c;
  return t.push(std::move(out), {a}, "scale", [a, c](Tape& tt, Value self) {
    const Tensor& g = tt.grad_buf(self);
    Tensor& ga = tt.grad_buf(a);
    const int64_t n = g.numel();
    for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * c;
  });
}

Value matmul(Tape& t, Value a, Value b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw ShapeError("matmul: shape " + shape_str(av.shape()) + " vs " +
                     shape_str(bv.shape()));
  }
  const int64_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out = Tensor::uninit({m, n});
  gemm_nn(m, k, n, av.data(), bv.data(), out.data());
  return t.push(std::move(out), {a, b}, "matmul", [a, b, m, k, n](Tape& tt, Value self) {
    const Tensor& g = tt.grad_buf(self);
    if (tt.needs_grad(a)) {
      // dA[m,k] = sum_n G[m,n] B[k,n]
      gemm_nt(m, n, k, g.data(), tt.val(b).data(), tt.grad_buf(a).data(), true);
    }
    if (tt.needs_grad(b)) {
      // dB[k,n] = sum_m A[m,k] G[m,n]
      Tensor at = Tensor::uninit({k, m});
      transpose(m, k, tt.val(a).data(), at.data());
      gemm_nn(k, m, n, at.data(), g.data(), tt.grad_buf(b).data(), true);
    }
  });
}

Value relu(Tape& t, Value a) {
  const Tensor& av = t.val(a);
  Tensor out = Tensor::uninit(av.shape());
  const int64_t n = av.numel();
  const double* x = av.data();
  double* y = out.data();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return t.push(std::move(out), {a}, "relu", [a](Tape& tt, Value self) {
    const Tensor& g = tt.grad_buf(self);
    const Tensor& av = tt.val(a);
    Tensor& ga = tt.grad_buf(a);
    const int64_t n = g.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
      if (av[i] > 0.0) ga[i] += g[i];
    }
  });
}

Value logistic(Tape& t, Value a) {
  const Tensor& av = t.val(a);
  Tensor out = Tensor::uninit(av.shape());
  const int64_t n = av.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-av[i]));
  return t.push(std::move(out), {a}, "logistic", [a](Tape& tt, Value self) {
    const Tensor& g = tt.grad_buf(self);
    const Tensor& y = tt.val(self);
    Tensor& ga = tt.grad_buf(a);
    const int64_t n = g.numel();
    for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Value reshape(Tape& t, Value a, Shape shape) {
  Tensor out = t.val(a).reshaped(std::move(shape));
  return t.push(
      std::move(out), {a}, "reshape",
      [a](Tape& tt, Value self) {
        const Tensor& g = tt.grad_buf(self);
        tt.add_grad(a, g.reshaped(tt.val(a).shape()));
      },
      /*check_finite=*/false);
}

Value mean(Tape& t, Value a, std::vector<int> axes) {
  const Tensor& av = t.val(a);
  const size_t rank = av.rank();
  std::vector<bool> reduced(rank, false);
  for (int ax : axes) {
    if (ax < 0 || static_cast<size_t>(ax) >= rank) {
      throw ShapeError("mean: axis " + std::to_string(ax) + " out of range for " +
                       shape_str(av.shape()));
    }
    reduced[ax] = true;
  }
  Shape out_shape;
  int64_t count = 1;
  for (size_t i = 0; i < rank; ++i) {
    if (reduced[i]) {
      count *= av.dim(i);
    } else {
      out_shape.push_back(av.dim(i));
    }
  }
  if (count == 0) throw ShapeError("mean: reducing over zero elements");

  // strides of the input, and the output stride attached to each input axis
  const std::vector<int64_t> dims(av.shape().begin(), av.shape().end());
  std::vector<int64_t> in_stride(rank, 1);
  for (size_t i = rank; i-- > 1;) in_stride[i - 1] = in_stride[i] * dims[i];
  std::vector<int64_t> out_stride_per_axis(rank, 0);
  {
    int64_t s = 1;
    for (size_t i = rank; i-- > 0;) {
      if (!reduced[i]) {
        out_stride_per_axis[i] = s;
        s *= dims[i];
      }
    }
  }
  // captured by value below; must not reference locals of this frame
  auto out_index = [dims, in_stride, out_stride_per_axis, rank](int64_t flat) {
    int64_t o = 0;
    for (size_t i = 0; i < rank; ++i) {
      const int64_t coord = (flat / in_stride[i]) % dims[i];
      o += coord * out_stride_per_axis[i];
    }
    return o;
  };

  Tensor out = Tensor::zeros(out_shape);
  const int64_t n = av.numel();
  for (int64_t i = 0; i < n; ++i) out[out_index(i)] += av[i];
  const double inv = 1.0 / static_cast<double>(count);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= inv;

  return t.push(std::move(out), {a}, "mean",
                [a, out_index, inv](Tape& tt, Value self) {
                  const Tensor& g = tt.grad_buf(self);
                  Tensor& ga = tt.grad_buf(a);
                  const int64_t n = ga.numel();
                  for (int64_t i = 0; i < n; ++i) ga[i] += g[out_index(i)] * inv;
                });
}

Value batchnorm(Tape& t, Value x, BatchNorm& bn, bool training) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 4) {
    throw ShapeError("batchnorm: expected [N,C,H,W], got " + shape_str(xv.shape()));
  }
  const int64_t n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  if (c != bn.channels()) {
    throw ShapeError("batchnorm: " + std::to_string(c) + " channels vs state " +
                     std::to_string(bn.channels()));
  }
  const int64_t m = n * hw;  // elements per channel
  Value vscale = t.param(bn.scale);
  Value vshift = t.param(bn.shift);
  const double* sc = t.val(vscale).data();
  const double* sh = t.val(vshift).data();

  Tensor out = Tensor::uninit(xv.shape());
  // saved for backward
  auto xhat = std::make_shared<Tensor>();
  auto invstd = std::make_shared<Tensor>(Tensor::uninit({c}));
  auto running_mean = std::make_shared<Tensor>();
  if (!training) *running_mean = bn.running_mean.clone();

  if (training) {
    if (m < 2) throw ShapeError("batchnorm: training mode needs >= 2 samples per channel");
    *xhat = Tensor::uninit(xv.shape());
    Tensor mu = Tensor::uninit({c});
    Tensor var = Tensor::uninit({c});
#pragma omp parallel for schedule(static)
    for (int64_t ci = 0; ci < c; ++ci) {
      double s = 0.0;
      for (int64_t ni = 0; ni < n; ++ni) {
        const double* row = xv.data() + (ni * c + ci) * hw;
        for (int64_t j = 0; j < hw; ++j) s += row[j];
      }
      const double mean = s / static_cast<double>(m);
      double sq = 0.0;
      for (int64_t ni = 0; ni < n; ++ni) {
        const double* row = xv.data() + (ni * c + ci) * hw;
        for (int64_t j = 0; j < hw; ++j) {
          const double d = row[j] - mean;
          sq += d * d;
        }
      }
      const double v = sq / static_cast<double>(m);
      mu[ci] = mean;
      var[ci] = v;
      const double inv = 1.0 / std::sqrt(v + bn.eps);
      (*invstd)[ci] = inv;
      for (int64_t ni = 0; ni < n; ++ni) {
        const double* row = xv.data() + (ni * c + ci) * hw;
        double* hrow = xhat->data() + (ni * c + ci) * hw;
        double* orow = out.data() + (ni * c + ci) * hw;
        for (int64_t j = 0; j < hw; ++j) {
          const double h = (row[j] - mean) * inv;
          hrow[j] = h;
          orow[j] = sc[ci] * h + sh[ci];
        }
      }
    }
    // running stats; unbiased variance for the running buffer
    const double unbias = static_cast<double>(m) / static_cast<double>(m - 1);
    for (int64_t ci = 0; ci < c; ++ci) {
      bn.running_mean[ci] =
          (1.0 - bn.momentum) * bn.running_mean[ci] + bn.momentum * mu[ci];
      bn.running_var[ci] =
          (1.0 - bn.momentum) * bn.running_var[ci] + bn.momentum * var[ci] * unbias;
    }
  } else {
    for (int64_t ci = 0; ci < c; ++ci) {
      (*invstd)[ci] = 1.0 / std::sqrt(bn.running_var[ci] + bn.eps);
    }
#pragma omp parallel for schedule(static)
    for (int64_t ci = 0; ci < c; ++ci) {
      const double rm = bn.running_mean[ci];
      const double inv = (*invstd)[ci];
      for (int64_t ni = 0; ni < n; ++ni) {
        const double* row = xv.data() + (ni * c + ci) * hw;
        double* orow = out.data() + (ni * c + ci) * hw;
        for (int64_t j = 0; j < hw; ++j) orow[j] = sc[ci] * (row[j] - rm) * inv + sh[ci];
      }
    }
  }

  return t.push(
      std::move(out), {x, vscale, vshift}, "batchnorm",
      [x, vscale, vshift, xhat, invstd, running_mean, n, c, hw,
       training](Tape& tt, Value self) {
        const Tensor& g = tt.grad_buf(self);
        const int64_t m = n * hw;
        const double* sc = tt.val(vscale).data();
        Tensor& gscale = tt.grad_buf(vscale);
        Tensor& gshift = tt.grad_buf(vshift);
        const bool want_dx = tt.needs_grad(x);
        Tensor* gx = want_dx ? &tt.grad_buf(x) : nullptr;

        if (training) {
#pragma omp parallel for schedule(static)
          for (int64_t ci = 0; ci < c; ++ci) {
            double sum_g = 0.0, sum_gh = 0.0;
            for (int64_t ni = 0; ni < n; ++ni) {
              const double* grow = g.data() + (ni * c + ci) * hw;
              const double* hrow = xhat->data() + (ni * c + ci) * hw;
              for (int64_t j = 0; j < hw; ++j) {
                sum_g += grow[j];
                sum_gh += grow[j] * hrow[j];
              }
            }
            gscale[ci] += sum_gh;
            gshift[ci] += sum_g;
            if (want_dx) {
              const double k = sc[ci] * (*invstd)[ci];
              const double mg = sum_g / static_cast<double>(m);
              const double mgh = sum_gh / static_cast<double>(m);
              for (int64_t ni = 0; ni < n; ++ni) {
                const double* grow = g.data() + (ni * c + ci) * hw;
                const double* hrow = xhat->data() + (ni * c + ci) * hw;
                double* gxrow = gx->data() + (ni * c + ci) * hw;
                for (int64_t j = 0; j < hw; ++j) {
                  gxrow[j] += k * (grow[j] - mg - hrow[j] * mgh);
                }
              }
            }
          }
        } else {
          const Tensor& xv = tt.val(x);
          const Tensor& rm = *running_mean;
#pragma omp parallel for schedule(static)
          for (int64_t ci = 0; ci < c; ++ci) {
            double sum_g = 0.0, sum_gh = 0.0;
            const double inv = (*invstd)[ci];
            for (int64_t ni = 0; ni < n; ++ni) {
              const double* grow = g.data() + (ni * c + ci) * hw;
              const double* xrow = xv.data() + (ni * c + ci) * hw;
              for (int64_t j = 0; j < hw; ++j) {
                sum_g += grow[j];
                sum_gh += grow[j] * (xrow[j] - rm[ci]) * inv;
              }
            }
            gshift[ci] += sum_g;
            gscale[ci] += sum_gh;
            if (want_dx) {
              const double k = sc[ci] * inv;
              for (int64_t ni = 0; ni < n; ++ni) {
                const double* grow = g.data() + (ni * c + ci) * hw;
                double* gxrow = gx->data() + (ni * c + ci) * hw;
                for (int64_t j = 0; j < hw; ++j) gxrow[j] += k * grow[j];
              }
            }
          }
        }
      });
}

Value softmax_cross_entropy(Tape& t, Value logits,
                            const std::vector<int32_t>& labels) {
  const Tensor& lv = t.val(logits);
  if (lv.rank() != 2) {
    throw ShapeError("softmax_cross_entropy: logits must be [N,C], got " +
                     shape_str(lv.shape()));
  }
  const int64_t n = lv.dim(0), c = lv.dim(1);
  if (n != static_cast<int64_t>(labels.size())) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(n) +
                     " rows vs " + std::to_string(labels.size()) + " labels");
  }
  auto probs = std::make_shared<Tensor>(Tensor::uninit({n, c}));
  auto lbl = std::make_shared<std::vector<int32_t>>(labels);
  double loss = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const int32_t y = labels[i];
    if (y < 0 || y >= c) {
      throw ShapeError("softmax_cross_entropy: label " + std::to_string(y) +
                       " out of range");
    }
    const double* row = lv.data() + i * c;
    double mx = row[0];
    for (int64_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (int64_t j = 0; j < c; ++j) denom += std::exp(row[j] - mx);
    const double lse = mx + std::log(denom);
    loss += lse - row[y];
    double* prow = probs->data() + i * c;
    for (int64_t j = 0; j < c; ++j) prow[j] = std::exp(row[j] - lse);
  }
  loss /= static_cast<double>(n);
  return t.push(Tensor::scalar(loss), {logits}, "softmax_cross_entropy",
                [logits, probs, lbl, n, c](Tape& tt, Value self) {
                  const double g = tt.grad_buf(self)[0];
                  Tensor& gl = tt.grad_buf(logits);
                  const double invn = g / static_cast<double>(n);
                  for (int64_t i = 0; i < n; ++i) {
                    const double* prow = probs->data() + i * c;
                    double* grow = gl.data() + i * c;
                    for (int64_t j = 0; j < c; ++j) grow[j] += invn * prow[j];
                    grow[(*lbl)[i]] -= invn;
                  }
                });
}

Value im2col(Tape& t, Value x, const ConvGeom& g) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 4 || xv.dim(0) != g.n || xv.dim(1) != g.c ||
      xv.dim(2) != g.h || xv.dim(3) != g.w) {
    throw ShapeError("im2col: input " + shape_str(xv.shape()) +
                     " does not match geometry");
  }
  if (g.out_h() <= 0 || g.out_w() <= 0) {
    throw ShapeError("im2col: no output positions for input " +
                     shape_str(xv.shape()));
  }
  const int64_t K = g.patch_len(), P = g.positions();
  const int64_t oh = g.out_h(), ow = g.out_w();
  Tensor out = Tensor::uninit({K, g.n * P});
  const double* src = xv.data();
  double* dst = out.data();
#pragma omp parallel for schedule(static)
  for (int64_t k = 0; k < K; ++k) {
    const int64_t ci = k / (g.kh * g.kw);
    const int64_t ky = (k / g.kw) % g.kh;
    const int64_t kx = k % g.kw;
    double* row = dst + k * g.n * P;
    for (int64_t ni = 0; ni < g.n; ++ni) {
      const double* img = src + (ni * g.c + ci) * g.h * g.w;
      double* cols = row + ni * P;
      for (int64_t oy = 0; oy < oh; ++oy) {
        const int64_t iy = oy * g.stride + ky - g.pad;
        const bool yok = iy >= 0 && iy < g.h;
        for (int64_t ox = 0; ox < ow; ++ox) {
          const int64_t ix = ox * g.stride + kx - g.pad;
          cols[oy * ow + ox] =
              (yok && ix >= 0 && ix < g.w) ? img[iy * g.w + ix] : 0.0;
        }
      }
    }
  }
  ConvGeom geom = g;
  return t.push(
      std::move(out), {x}, "im2col",
      [x, geom](Tape& tt, Value self) {
        const Tensor& g2 = tt.grad_buf(self);
        Tensor& gx = tt.grad_buf(x);
        const int64_t K = geom.patch_len(), P = geom.positions();
        const int64_t oh = geom.out_h(), ow = geom.out_w();
#pragma omp parallel for schedule(static)
        for (int64_t ni = 0; ni < geom.n; ++ni) {
          for (int64_t k = 0; k < K; ++k) {
            const int64_t ci = k / (geom.kh * geom.kw);
            const int64_t ky = (k / geom.kw) % geom.kh;
            const int64_t kx = k % geom.kw;
            const double* cols = g2.data() + k * geom.n * P + ni * P;
            double* img = gx.data() + (ni * geom.c + ci) * geom.h * geom.w;
            for (int64_t oy = 0; oy < oh; ++oy) {
              const int64_t iy = oy * geom.stride + ky - geom.pad;
              if (iy < 0 || iy >= geom.h) continue;
              for (int64_t ox = 0; ox < ow; ++ox) {
                const int64_t ix = ox * geom.stride + kx - geom.pad;
                if (ix < 0 || ix >= geom.w) continue;
                img[iy * geom.w + ix] += cols[oy * ow + ox];
              }
            }
          }
        }
      },
      /*check_finite=*/false);
}

}  // namespace ulo::ops
