#include "ulo/layers.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ulo/gemm.hpp"

namespace ulo {
namespace {

Tensor logic_rows(int64_t kernels, const OpParams& p) {
  Tensor t = Tensor::uninit({kernels, 3});
  for (int64_t i = 0; i < kernels; ++i) {
    t[i * 3 + 0] = p.alpha;
    t[i * 3 + 1] = p.beta;
    t[i * 3 + 2] = p.gamma;
  }
  return t;
}

void fill_gaussian(Tensor& t, Rng& rng, double std) {
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal() * std;
}

void apply_logic_init(Parameter& logic, Parameter& bias, const LogicInit& init,
                      Rng& rng) {
  const int64_t kernels = logic.value.dim(0);
  if (init.kind == LogicInit::Kind::RandomGaussian) {
    fill_gaussian(logic.value, rng, 1.0);
  } else {
    const auto [p, b] = prescribed_params(init.op);
    logic.value = logic_rows(kernels, p);
    for (int64_t i = 0; i < kernels; ++i) bias.value[i] += b;
  }
}

}  // namespace

UloConv2d::UloConv2d(std::string layer_name, int64_t c_out, int64_t c_in,
                     int64_t kh, int64_t kw, int64_t stride, int64_t pad,
                     LogicMode mode_in, Rng& rng)
    : name(std::move(layer_name)),
      w(name + ".w", Tensor::uninit({c_out, c_in, kh, kw})),
      bias(name + ".B", Tensor::zeros({c_out})),
      logic(name + ".logic", Tensor::zeros({c_out, 3})),
      mode(mode_in),
      stride(stride),
      pad(pad) {
  fill_gaussian(w.value, rng, std::sqrt(2.0 / static_cast<double>(fan_in())));
  if (mode.is_learnable()) {
    apply_logic_init(logic, bias, mode.init, rng);
  } else {
    const auto [p, b] = prescribed_params(mode.fixed_op);
    logic.value = logic_rows(c_out, p);
    for (int64_t i = 0; i < c_out; ++i) bias.value[i] += b;
  }
}

UloDense::UloDense(std::string layer_name, int64_t units, int64_t fan_in,
                   LogicMode mode_in, Rng& rng)
    : name(std::move(layer_name)),
      w(name + ".w", Tensor::uninit({units, fan_in})),
      bias(name + ".B", Tensor::zeros({units})),
      logic(name + ".logic", Tensor::zeros({units, 3})),
      mode(mode_in) {
  fill_gaussian(w.value, rng, std::sqrt(2.0 / static_cast<double>(fan_in)));
  if (mode.is_learnable()) {
    apply_logic_init(logic, bias, mode.init, rng);
  } else {
    const auto [p, b] = prescribed_params(mode.fixed_op);
    logic.value = logic_rows(units, p);
    for (int64_t i = 0; i < units; ++i) bias.value[i] += b;
  }
}

void init_logic(UloConv2d& layer, const LogicInit& init, Rng& rng) {
  if (!layer.mode.is_learnable()) {
    throw ContractError("init_logic: layer '" + layer.name + "' is in fixed mode");
  }
  apply_logic_init(layer.logic, layer.bias, init, rng);
}

void init_logic(UloDense& layer, const LogicInit& init, Rng& rng) {
  if (!layer.mode.is_learnable()) {
    throw ContractError("init_logic: layer '" + layer.name + "' is in fixed mode");
  }
  apply_logic_init(layer.logic, layer.bias, init, rng);
}

namespace {

// Column means of patches [K, cols]; the per-position patch mean is shared
// by every output kernel, so it is computed once here.
Tensor column_means(const Tensor& patches) {
  const int64_t k = patches.dim(0), cols = patches.dim(1);
  Tensor out = Tensor::zeros({cols});
  const double inv = 1.0 / static_cast<double>(k);
  constexpr int64_t kChunk = 8192;
  const int64_t nchunks = (cols + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
  for (int64_t ch = 0; ch < nchunks; ++ch) {
    const int64_t lo = ch * kChunk;
    const int64_t hi = std::min(cols, lo + kChunk);
    double* acc = out.data();
    for (int64_t ki = 0; ki < k; ++ki) {
      const double* row = patches.data() + ki * cols;
      for (int64_t j = lo; j < hi; ++j) acc[j] += row[j];
    }
    for (int64_t j = lo; j < hi; ++j) acc[j] *= inv;
  }
  return out;
}

Tensor row_means(const Tensor& mat2d) {
  const int64_t rows = mat2d.dim(0);
  const int64_t cols = mat2d.numel() / rows;
  Tensor out = Tensor::uninit({rows});
  for (int64_t i = 0; i < rows; ++i) {
    double s = 0.0;
    const double* row = mat2d.data() + i * cols;
    for (int64_t j = 0; j < cols; ++j) s += row[j];
    out[i] = s / static_cast<double>(cols);
  }
  return out;
}

}  // namespace

Value UloConv2d::forward(Tape& t, Value x) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 4) {
    throw ShapeError(name + ": input must be [N,C,H,W], got " +
                     shape_str(xv.shape()));
  }
  if (xv.dim(1) != c_in()) {
    throw ShapeError(name + ": input has " + std::to_string(xv.dim(1)) +
                     " channels, layer expects " + std::to_string(c_in()));
  }
  ConvGeom geom{xv.dim(0), c_in(), xv.dim(2), xv.dim(3),
                kh(),      kw(),   stride,    pad};
  const int64_t n = geom.n, co = c_out(), k = geom.patch_len();
  const int64_t p = geom.positions(), cols = n * p;

  Value patches = ops::im2col(t, x, geom);
  Value vw = t.param(w);
  Value vb = t.param(bias);
  Value vlogic = mode.is_learnable()
                     ? t.param(logic)
                     : t.leaf(logic.value);

  const Tensor& pv = t.val(patches);
  const Tensor& wv = t.val(vw);
  const Tensor& lv = t.val(vlogic);
  const Tensor& bv = t.val(vb);

  // S[c, col] = x_patch . w_c, shared by the alpha term and d/d alpha
  auto s = std::make_shared<Tensor>(Tensor::uninit({co, cols}));
  gemm_nn(co, k, cols, wv.data(), pv.data(), s->data());
  auto wmean = std::make_shared<Tensor>(row_means(wv.reshaped({co, k})));
  auto colmean = std::make_shared<Tensor>(column_means(pv));

  const double invk = 1.0 / static_cast<double>(k);
  Tensor out = Tensor::uninit({n, co, geom.out_h(), geom.out_w()});
#pragma omp parallel for schedule(static)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t ci = 0; ci < co; ++ci) {
      const double a = lv[ci * 3 + 0] * invk;
      const double base = lv[ci * 3 + 1] * (*wmean)[ci] + bv[ci];
      const double gcoef = lv[ci * 3 + 2];
      const double* srow = s->data() + ci * cols + ni * p;
      const double* mrow = colmean->data() + ni * p;
      double* orow = out.data() + (ni * co + ci) * p;
      for (int64_t pi = 0; pi < p; ++pi) {
        orow[pi] = a * srow[pi] + gcoef * mrow[pi] + base;
      }
    }
  }

  return t.push(
      std::move(out), {patches, vw, vb, vlogic}, "ulo_conv",
      [patches, vw, vb, vlogic, s, wmean, colmean, n, co, k, p,
       cols](Tape& tt, Value self) {
        const Tensor& gout = tt.grad_buf(self);
        const Tensor& lv = tt.val(vlogic);
        const Tensor& wv = tt.val(vw);
        const double invk = 1.0 / static_cast<double>(k);

        // regroup upstream gradient to [C_out, cols]
        Tensor g = Tensor::uninit({co, cols});
#pragma omp parallel for schedule(static)
        for (int64_t ci = 0; ci < co; ++ci) {
          for (int64_t ni = 0; ni < n; ++ni) {
            const double* src = gout.data() + (ni * co + ci) * p;
            double* dst = g.data() + ci * cols + ni * p;
            for (int64_t pi = 0; pi < p; ++pi) dst[pi] = src[pi];
          }
        }

        Tensor sum_g = Tensor::uninit({co});
        for (int64_t ci = 0; ci < co; ++ci) {
          double acc = 0.0;
          const double* grow = g.data() + ci * cols;
          for (int64_t j = 0; j < cols; ++j) acc += grow[j];
          sum_g[ci] = acc;
        }

        // bias
        {
          Tensor& gb = tt.grad_buf(vb);
          for (int64_t ci = 0; ci < co; ++ci) gb[ci] += sum_g[ci];
        }

        // logical parameters, one triple per kernel, summed over batch and
        // positions
        if (tt.needs_grad(vlogic)) {
          Tensor& gl = tt.grad_buf(vlogic);
#pragma omp parallel for schedule(static)
          for (int64_t ci = 0; ci < co; ++ci) {
            const double* grow = g.data() + ci * cols;
            const double* srow = s->data() + ci * cols;
            double da = 0.0, dg = 0.0;
            for (int64_t j = 0; j < cols; ++j) {
              da += grow[j] * srow[j];
              dg += grow[j] * (*colmean)[j];
            }
            gl[ci * 3 + 0] += da * invk;
            gl[ci * 3 + 1] += (*wmean)[ci] * sum_g[ci];
            gl[ci * 3 + 2] += dg;
          }
        }

        // weights: (alpha_c/K) * (G . patches^T) + (beta_c/K) * sum_g
        {
          const Tensor& pv = tt.val(patches);
          Tensor gp = Tensor::uninit({co, k});
          gemm_nt(co, cols, k, g.data(), pv.data(), gp.data());
          Tensor& gw = tt.grad_buf(vw);
          double* gwd = gw.data();
          for (int64_t ci = 0; ci < co; ++ci) {
            const double a = lv[ci * 3 + 0] * invk;
            const double bterm = lv[ci * 3 + 1] * invk * sum_g[ci];
            const double* gprow = gp.data() + ci * k;
            for (int64_t kk = 0; kk < k; ++kk) {
              gwd[ci * k + kk] += a * gprow[kk] + bterm;
            }
          }
        }

        // patches: M2[k, c] = (alpha_c w[c,k] + gamma_c)/K, then M2 . G
        if (tt.needs_grad(patches)) {
          Tensor m2 = Tensor::uninit({k, co});
          for (int64_t ci = 0; ci < co; ++ci) {
            const double a = lv[ci * 3 + 0] * invk;
            const double gc = lv[ci * 3 + 2] * invk;
            const double* wrow = wv.data() + ci * k;
            for (int64_t kk = 0; kk < k; ++kk) {
              m2[kk * co + ci] = a * wrow[kk] + gc;
            }
          }
          Tensor& gpatch = tt.grad_buf(patches);
          gemm_nn(k, co, cols, m2.data(), g.data(), gpatch.data(), true);
        }
      });
}

Value UloDense::forward(Tape& t, Value x) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 2 || xv.dim(1) != fan_in()) {
    throw ShapeError(name + ": input must be [N," + std::to_string(fan_in()) +
                     "], got " + shape_str(xv.shape()));
  }
  const int64_t n = xv.dim(0), u = units(), k = fan_in();
  Value vw = t.param(w);
  Value vb = t.param(bias);
  Value vlogic = mode.is_learnable()
                     ? t.param(logic)
                     : t.leaf(logic.value);

  const Tensor& wv = t.val(vw);
  const Tensor& lv = t.val(vlogic);
  const Tensor& bv = t.val(vb);

  auto s = std::make_shared<Tensor>(Tensor::uninit({n, u}));
  gemm_nt(n, k, u, xv.data(), wv.data(), s->data());
  auto wmean = std::make_shared<Tensor>(row_means(wv));
  auto xmean = std::make_shared<Tensor>(row_means(xv));

  const double invk = 1.0 / static_cast<double>(k);
  Tensor out = Tensor::uninit({n, u});
  for (int64_t ni = 0; ni < n; ++ni) {
    const double* srow = s->data() + ni * u;
    double* orow = out.data() + ni * u;
    for (int64_t ui = 0; ui < u; ++ui) {
      orow[ui] = lv[ui * 3 + 0] * invk * srow[ui] +
                 lv[ui * 3 + 1] * (*wmean)[ui] +
                 lv[ui * 3 + 2] * (*xmean)[ni] + bv[ui];
    }
  }

  return t.push(
      std::move(out), {x, vw, vb, vlogic}, "ulo_dense",
      [x, vw, vb, vlogic, s, wmean, xmean, n, u, k](Tape& tt, Value self) {
        const Tensor& g = tt.grad_buf(self);
        const Tensor& lv = tt.val(vlogic);
        const Tensor& wv = tt.val(vw);
        const Tensor& xv = tt.val(x);
        const double invk = 1.0 / static_cast<double>(k);

        Tensor sum_g = Tensor::zeros({u});
        for (int64_t ni = 0; ni < n; ++ni) {
          const double* grow = g.data() + ni * u;
          for (int64_t ui = 0; ui < u; ++ui) sum_g[ui] += grow[ui];
        }

        {
          Tensor& gb = tt.grad_buf(vb);
          for (int64_t ui = 0; ui < u; ++ui) gb[ui] += sum_g[ui];
        }

        if (tt.needs_grad(vlogic)) {
          Tensor& gl = tt.grad_buf(vlogic);
          for (int64_t ni = 0; ni < n; ++ni) {
            const double* grow = g.data() + ni * u;
            const double* srow = s->data() + ni * u;
            for (int64_t ui = 0; ui < u; ++ui) {
              gl[ui * 3 + 0] += grow[ui] * srow[ui] * invk;
              gl[ui * 3 + 2] += grow[ui] * (*xmean)[ni];
            }
          }
          for (int64_t ui = 0; ui < u; ++ui) {
            gl[ui * 3 + 1] += (*wmean)[ui] * sum_g[ui];
          }
        }

        {
          // dW[u,f] = (alpha_u/K)(g^T x)[u,f] + (beta_u/K) sum_g[u]
          Tensor gt = Tensor::uninit({u, n});
          transpose(n, u, g.data(), gt.data());
          Tensor gx = Tensor::uninit({u, k});
          gemm_nn(u, n, k, gt.data(), xv.data(), gx.data());
          Tensor& gw = tt.grad_buf(vw);
          for (int64_t ui = 0; ui < u; ++ui) {
            const double a = lv[ui * 3 + 0] * invk;
            const double bterm = lv[ui * 3 + 1] * invk * sum_g[ui];
            for (int64_t f = 0; f < k; ++f) {
              gw[ui * k + f] += a * gx[ui * k + f] + bterm;
            }
          }
        }

        if (tt.needs_grad(x)) {
          // dx = g . M2, M2[u,f] = (alpha_u w[u,f] + gamma_u)/K
          Tensor m2 = Tensor::uninit({u, k});
          for (int64_t ui = 0; ui < u; ++ui) {
            const double a = lv[ui * 3 + 0] * invk;
            const double gc = lv[ui * 3 + 2] * invk;
            for (int64_t f = 0; f < k; ++f) m2[ui * k + f] = a * wv[ui * k + f] + gc;
          }
          Tensor& gx = tt.grad_buf(x);
          gemm_nn(n, u, k, g.data(), m2.data(), gx.data(), true);
        }
      });
}

}  // namespace ulo
