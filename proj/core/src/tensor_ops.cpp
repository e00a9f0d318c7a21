#include <algorithm>
#include <cmath>
#include <cstddef>

#include "mgg/tensor.hpp"

namespace mgg {

namespace {

Tensor make_output(Tape& tape, Shape shape, bool requires_grad) {
  Tensor out = Tensor::zeros(std::move(shape), requires_grad);
  if (requires_grad) tape.track(out.grad);
  return out;
}

void check_finite(const Tensor& t, const char* op) {
  for (double v : *t.data)
    if (!std::isfinite(v))
      throw NumericError(std::string(op) + ": non-finite output value");
}

void expect_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.shape.size() != rank)
    throw ShapeError(std::string(op) + ": expected rank " +
                     std::to_string(rank) + ", got " + shape_str(t.shape));
}

}  // namespace

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight,
              const Tensor& bias, Padding padding, int stride) {
  expect_rank(input, 4, "conv2d input");
  expect_rank(weight, 4, "conv2d weight");
  expect_rank(bias, 1, "conv2d bias");
  const std::size_t n = input.shape[0], cin = input.shape[1];
  const std::size_t h = input.shape[2], w = input.shape[3];
  const std::size_t cout = weight.shape[0];
  const std::size_t kh = weight.shape[2], kw = weight.shape[3];
  if (weight.shape[1] != cin)
    throw ShapeError("conv2d: weight expects " +
                     std::to_string(weight.shape[1]) + " input channels, got " +
                     std::to_string(cin));
  if (bias.shape[0] != cout) throw ShapeError("conv2d: bias/channel mismatch");
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");

  std::size_t ph = 0, pw = 0;
  if (padding == Padding::Same) {
    if (kh % 2 == 0 || kw % 2 == 0)
      throw ShapeError("conv2d: same padding needs odd kernel dims");
    ph = (kh - 1) / 2;
    pw = (kw - 1) / 2;
  } else if (kh > h || kw > w) {
    throw ShapeError("conv2d: kernel larger than input for valid padding");
  }
  const std::size_t s = static_cast<std::size_t>(stride);
  const std::size_t oh = (h + 2 * ph - kh) / s + 1;
  const std::size_t ow = (w + 2 * pw - kw) / s + 1;

  bool needs_grad =
      input.requires_grad || weight.requires_grad || bias.requires_grad;
  Tensor out = make_output(tape, {n, cout, oh, ow}, needs_grad);

  const auto& x = *input.data;
  const auto& wt = *weight.data;
  const auto& b = *bias.data;
  auto& y = *out.data;
  for (std::size_t in = 0; in < n; ++in)
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t io = 0; io < oh; ++io)
        for (std::size_t jo = 0; jo < ow; ++jo) {
          double acc = b[co];
          for (std::size_t ci = 0; ci < cin; ++ci)
            for (std::size_t ki = 0; ki < kh; ++ki) {
              const std::ptrdiff_t ih =
                  static_cast<std::ptrdiff_t>(io * s + ki) -
                  static_cast<std::ptrdiff_t>(ph);
              if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
              for (std::size_t kj = 0; kj < kw; ++kj) {
                const std::ptrdiff_t iw =
                    static_cast<std::ptrdiff_t>(jo * s + kj) -
                    static_cast<std::ptrdiff_t>(pw);
                if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(w)) continue;
                acc += x[((in * cin + ci) * h + ih) * w + iw] *
                       wt[((co * cin + ci) * kh + ki) * kw + kj];
              }
            }
          y[((in * cout + co) * oh + io) * ow + jo] = acc;
        }
  check_finite(out, "conv2d");

  if (needs_grad) {
    Tensor xin = input, wg = weight, bg = bias, yo = out;
    tape.record([xin, wg, bg, yo, n, cin, cout, h, w, kh, kw, oh, ow, ph, pw,
                 s]() {
      const auto& gy = *yo.grad;
      const auto& x = *xin.data;
      const auto& wt = *wg.data;
      for (std::size_t in = 0; in < n; ++in)
        for (std::size_t co = 0; co < cout; ++co)
          for (std::size_t io = 0; io < oh; ++io)
            for (std::size_t jo = 0; jo < ow; ++jo) {
              const double g = gy[((in * cout + co) * oh + io) * ow + jo];
              if (g == 0.0) continue;
              if (bg.grad) (*bg.grad)[co] += g;
              for (std::size_t ci = 0; ci < cin; ++ci)
                for (std::size_t ki = 0; ki < kh; ++ki) {
                  const std::ptrdiff_t ih =
                      static_cast<std::ptrdiff_t>(io * s + ki) -
                      static_cast<std::ptrdiff_t>(ph);
                  if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
                  for (std::size_t kj = 0; kj < kw; ++kj) {
                    const std::ptrdiff_t iw =
                        static_cast<std::ptrdiff_t>(jo * s + kj) -
                        static_cast<std::ptrdiff_t>(pw);
                    if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(w))
                      continue;
                    const std::size_t xi = ((in * cin + ci) * h + ih) * w + iw;
                    const std::size_t wi =
                        ((co * cin + ci) * kh + ki) * kw + kj;
                    if (xin.grad) (*xin.grad)[xi] += g * wt[wi];
                    if (wg.grad) (*wg.grad)[wi] += g * x[xi];
                  }
                }
            }
    });
  }
  return out;
}

Tensor batchnorm2d(Tape& tape, const Tensor& input, const Tensor& gamma,
                   const Tensor& beta, Tensor& running_mean,
                   Tensor& running_var, bool train, double eps,
                   double momentum) {
  expect_rank(input, 4, "batchnorm2d input");
  const std::size_t n = input.shape[0], c = input.shape[1];
  const std::size_t h = input.shape[2], w = input.shape[3];
  if (gamma.shape != Shape{c} || beta.shape != Shape{c} ||
      running_mean.shape != Shape{c} || running_var.shape != Shape{c})
    throw ShapeError("batchnorm2d: per-channel parameter shape mismatch");
  const std::size_t m = n * h * w;
  if (train && m < 2)
    throw ShapeError("batchnorm2d: degenerate batch (B*H*W < 2) in train mode");

  bool needs_grad =
      input.requires_grad || gamma.requires_grad || beta.requires_grad;
  Tensor out = make_output(tape, input.shape, needs_grad);

  const auto& x = *input.data;
  auto& y = *out.data;
  std::vector<double> mean(c, 0.0), var(c, 0.0), inv_std(c, 0.0);
  if (train) {
    for (std::size_t ci = 0; ci < c; ++ci) {
      double s = 0.0;
      for (std::size_t in = 0; in < n; ++in)
        for (std::size_t k = 0; k < h * w; ++k)
          s += x[(in * c + ci) * h * w + k];
      mean[ci] = s / static_cast<double>(m);
      double sq = 0.0;
      for (std::size_t in = 0; in < n; ++in)
        for (std::size_t k = 0; k < h * w; ++k) {
          const double d = x[(in * c + ci) * h * w + k] - mean[ci];
          sq += d * d;
        }
      var[ci] = sq / static_cast<double>(m);
      (*running_mean.data)[ci] =
          (1.0 - momentum) * (*running_mean.data)[ci] + momentum * mean[ci];
      (*running_var.data)[ci] =
          (1.0 - momentum) * (*running_var.data)[ci] + momentum * var[ci];
    }
  } else {
    mean = *running_mean.data;
    var = *running_var.data;
  }
  for (std::size_t ci = 0; ci < c; ++ci)
    inv_std[ci] = 1.0 / std::sqrt(var[ci] + eps);

  const auto& g = *gamma.data;
  const auto& b = *beta.data;
  for (std::size_t in = 0; in < n; ++in)
    for (std::size_t ci = 0; ci < c; ++ci)
      for (std::size_t k = 0; k < h * w; ++k) {
        const std::size_t idx = (in * c + ci) * h * w + k;
        y[idx] = g[ci] * (x[idx] - mean[ci]) * inv_std[ci] + b[ci];
      }
  check_finite(out, "batchnorm2d");

  if (needs_grad) {
    Tensor xin = input, gm = gamma, bt = beta, yo = out;
    tape.record([xin, gm, bt, yo, n, c, h, w, m, mean, inv_std, train]() {
      const auto& gy = *yo.grad;
      const auto& x = *xin.data;
      const auto& g = *gm.data;
      for (std::size_t ci = 0; ci < c; ++ci) {
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (std::size_t in = 0; in < n; ++in)
          for (std::size_t k = 0; k < h * w; ++k) {
            const std::size_t idx = (in * c + ci) * h * w + k;
            const double xhat = (x[idx] - mean[ci]) * inv_std[ci];
            sum_gy += gy[idx];
            sum_gy_xhat += gy[idx] * xhat;
          }
        if (gm.grad) (*gm.grad)[ci] += sum_gy_xhat;
        if (bt.grad) (*bt.grad)[ci] += sum_gy;
        if (xin.grad) {
          const double md = static_cast<double>(m);
          for (std::size_t in = 0; in < n; ++in)
            for (std::size_t k = 0; k < h * w; ++k) {
              const std::size_t idx = (in * c + ci) * h * w + k;
              if (train) {
                const double xhat = (x[idx] - mean[ci]) * inv_std[ci];
                (*xin.grad)[idx] += g[ci] * inv_std[ci] / md *
                                    (md * gy[idx] - sum_gy - xhat * sum_gy_xhat);
              } else {
                (*xin.grad)[idx] += g[ci] * inv_std[ci] * gy[idx];
              }
            }
        }
      }
    });
  }
  return out;
}

Tensor relu(Tape& tape, const Tensor& x) {
  Tensor out = make_output(tape, x.shape, x.requires_grad);
  for (std::size_t i = 0; i < x.size(); ++i)
    (*out.data)[i] = std::max(0.0, (*x.data)[i]);
  check_finite(out, "relu");
  if (x.requires_grad) {
    Tensor xin = x, yo = out;
    tape.record([xin, yo]() {
      for (std::size_t i = 0; i < xin.size(); ++i)
        if ((*xin.data)[i] > 0.0) (*xin.grad)[i] += (*yo.grad)[i];
    });
  }
  return out;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  Tensor out = make_output(tape, x.shape, x.requires_grad);
  for (std::size_t i = 0; i < x.size(); ++i)
    (*out.data)[i] = 1.0 / (1.0 + std::exp(-(*x.data)[i]));
  check_finite(out, "sigmoid");
  if (x.requires_grad) {
    Tensor xin = x, yo = out;
    tape.record([xin, yo]() {
      for (std::size_t i = 0; i < xin.size(); ++i) {
        const double y = (*yo.data)[i];
        (*xin.grad)[i] += (*yo.grad)[i] * y * (1.0 - y);
      }
    });
  }
  return out;
}

Tensor global_avg_pool(Tape& tape, const Tensor& x) {
  expect_rank(x, 4, "global_avg_pool");
  const std::size_t n = x.shape[0], c = x.shape[1];
  const std::size_t hw = x.shape[2] * x.shape[3];
  Tensor out = make_output(tape, {n, c}, x.requires_grad);
  for (std::size_t in = 0; in < n; ++in)
    for (std::size_t ci = 0; ci < c; ++ci) {
      double s = 0.0;
      for (std::size_t k = 0; k < hw; ++k) s += (*x.data)[(in * c + ci) * hw + k];
      (*out.data)[in * c + ci] = s / static_cast<double>(hw);
    }
  check_finite(out, "global_avg_pool");
  if (x.requires_grad) {
    Tensor xin = x, yo = out;
    tape.record([xin, yo, n, c, hw]() {
      const double inv = 1.0 / static_cast<double>(hw);
      for (std::size_t in = 0; in < n; ++in)
        for (std::size_t ci = 0; ci < c; ++ci) {
          const double g = (*yo.grad)[in * c + ci] * inv;
          for (std::size_t k = 0; k < hw; ++k)
            (*xin.grad)[(in * c + ci) * hw + k] += g;
        }
    });
  }
  return out;
}

Tensor masked_pool(Tape& tape, const Tensor& feature, const Tensor& mask) {
  expect_rank(feature, 4, "masked_pool feature");
  expect_rank(mask, 4, "masked_pool mask");
  const std::size_t n = feature.shape[0], c = feature.shape[1];
  const std::size_t h = feature.shape[2], w = feature.shape[3];
  if (mask.shape != Shape{n, 1, h, w})
    throw ShapeError("masked_pool: mask " + shape_str(mask.shape) +
                     " does not match feature " + shape_str(feature.shape));
  const std::size_t hw = h * w;
  bool needs_grad = feature.requires_grad || mask.requires_grad;
  Tensor out = make_output(tape, {n, c}, needs_grad);
  for (std::size_t in = 0; in < n; ++in)
    for (std::size_t ci = 0; ci < c; ++ci) {
      double s = 0.0;
      for (std::size_t k = 0; k < hw; ++k)
        s += (*feature.data)[(in * c + ci) * hw + k] *
             (*mask.data)[in * hw + k];
      (*out.data)[in * c + ci] = s / static_cast<double>(hw);
    }
  check_finite(out, "masked_pool");
  if (needs_grad) {
    Tensor f = feature, mk = mask, yo = out;
    tape.record([f, mk, yo, n, c, hw]() {
      const double inv = 1.0 / static_cast<double>(hw);
      for (std::size_t in = 0; in < n; ++in)
        for (std::size_t ci = 0; ci < c; ++ci) {
          const double g = (*yo.grad)[in * c + ci] * inv;
          for (std::size_t k = 0; k < hw; ++k) {
            if (f.grad)
              (*f.grad)[(in * c + ci) * hw + k] += g * (*mk.data)[in * hw + k];
            if (mk.grad)
              (*mk.grad)[in * hw + k] +=
                  g * (*f.data)[(in * c + ci) * hw + k];
          }
        }
    });
  }
  return out;
}

Tensor matmul_rows(Tape& tape, const Tensor& x, const Tensor& w) {
  expect_rank(x, 2, "matmul_rows x");
  expect_rank(w, 2, "matmul_rows w");
  const std::size_t n = x.shape[0], in_dim = x.shape[1];
  const std::size_t out_dim = w.shape[0];
  if (w.shape[1] != in_dim)
    throw ShapeError("matmul_rows: " + shape_str(x.shape) + " x " +
                     shape_str(w.shape));
  bool needs_grad = x.requires_grad || w.requires_grad;
  Tensor out = make_output(tape, {n, out_dim}, needs_grad);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t o = 0; o < out_dim; ++o) {
      double s = 0.0;
      for (std::size_t j = 0; j < in_dim; ++j)
        s += (*x.data)[i * in_dim + j] * (*w.data)[o * in_dim + j];
      (*out.data)[i * out_dim + o] = s;
    }
  check_finite(out, "matmul_rows");
  if (needs_grad) {
    Tensor xin = x, wt = w, yo = out;
    tape.record([xin, wt, yo, n, in_dim, out_dim]() {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < out_dim; ++o) {
          const double g = (*yo.grad)[i * out_dim + o];
          if (g == 0.0) continue;
          for (std::size_t j = 0; j < in_dim; ++j) {
            if (xin.grad)
              (*xin.grad)[i * in_dim + j] += g * (*wt.data)[o * in_dim + j];
            if (wt.grad)
              (*wt.grad)[o * in_dim + j] += g * (*xin.data)[i * in_dim + j];
          }
        }
    });
  }
  return out;
}

Tensor add_rowvec(Tape& tape, const Tensor& x, const Tensor& b) {
  expect_rank(x, 2, "add_rowvec x");
  expect_rank(b, 1, "add_rowvec b");
  const std::size_t n = x.shape[0], m = x.shape[1];
  if (b.shape[0] != m) throw ShapeError("add_rowvec: width mismatch");
  bool needs_grad = x.requires_grad || b.requires_grad;
  Tensor out = make_output(tape, x.shape, needs_grad);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      (*out.data)[i * m + j] = (*x.data)[i * m + j] + (*b.data)[j];
  check_finite(out, "add_rowvec");
  if (needs_grad) {
    Tensor xin = x, bv = b, yo = out;
    tape.record([xin, bv, yo, n, m]() {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          const double g = (*yo.grad)[i * m + j];
          if (xin.grad) (*xin.grad)[i * m + j] += g;
          if (bv.grad) (*bv.grad)[j] += g;
        }
    });
  }
  return out;
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_rowvec(tape, matmul_rows(tape, x, w), b);
}

Tensor rows_softmax(Tape& tape, const Tensor& x) {
  expect_rank(x, 2, "rows_softmax");
  const std::size_t n = x.shape[0], m = x.shape[1];
  if (m < 1) throw ShapeError("rows_softmax: empty rows");
  Tensor out = make_output(tape, x.shape, x.requires_grad);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = (*x.data)[i * m];
    for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, (*x.data)[i * m + j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double e = std::exp((*x.data)[i * m + j] - mx);
      (*out.data)[i * m + j] = e;
      denom += e;
    }
    for (std::size_t j = 0; j < m; ++j) (*out.data)[i * m + j] /= denom;
  }
  check_finite(out, "rows_softmax");
  if (x.requires_grad) {
    Tensor xin = x, yo = out;
    tape.record([xin, yo, n, m]() {
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < m; ++j)
          dot += (*yo.grad)[i * m + j] * (*yo.data)[i * m + j];
        for (std::size_t j = 0; j < m; ++j)
          (*xin.grad)[i * m + j] +=
              (*yo.data)[i * m + j] * ((*yo.grad)[i * m + j] - dot);
      }
    });
  }
  return out;
}

Tensor softmax_vec(Tape& tape, const Tensor& logits) {
  if (logits.shape.size() != 1)
    throw ShapeError("softmax_vec: expected a vector");
  Tensor row = logits.reshaped({1, logits.shape[0]});
  return rows_softmax(tape, row).reshaped(logits.shape);
}

Tensor scale_rows(Tape& tape, const Tensor& x, const Tensor& s) {
  expect_rank(x, 2, "scale_rows x");
  expect_rank(s, 1, "scale_rows s");
  const std::size_t n = x.shape[0], m = x.shape[1];
  if (s.shape[0] != n) throw ShapeError("scale_rows: row count mismatch");
  bool needs_grad = x.requires_grad || s.requires_grad;
  Tensor out = make_output(tape, x.shape, needs_grad);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      (*out.data)[i * m + j] = (*x.data)[i * m + j] * (*s.data)[i];
  check_finite(out, "scale_rows");
  if (needs_grad) {
    Tensor xin = x, sv = s, yo = out;
    tape.record([xin, sv, yo, n, m]() {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          const double g = (*yo.grad)[i * m + j];
          if (xin.grad) (*xin.grad)[i * m + j] += g * (*sv.data)[i];
          if (sv.grad) (*sv.grad)[i] += g * (*xin.data)[i * m + j];
        }
    });
  }
  return out;
}

Tensor select_col(Tape& tape, const Tensor& x, std::size_t col) {
  expect_rank(x, 2, "select_col");
  const std::size_t n = x.shape[0], m = x.shape[1];
  if (col >= m) throw ShapeError("select_col: column out of range");
  Tensor out = make_output(tape, {n}, x.requires_grad);
  for (std::size_t i = 0; i < n; ++i) (*out.data)[i] = (*x.data)[i * m + col];
  if (x.requires_grad) {
    Tensor xin = x, yo = out;
    tape.record([xin, yo, n, m, col]() {
      for (std::size_t i = 0; i < n; ++i)
        (*xin.grad)[i * m + col] += (*yo.grad)[i];
    });
  }
  return out;
}

Tensor stack_cols(Tape& tape, const std::vector<Tensor>& cols) {
  if (cols.empty()) throw ShapeError("stack_cols: no columns");
  const std::size_t n = cols[0].shape[0], m = cols.size();
  bool needs_grad = false;
  for (const auto& c : cols) {
    if (c.shape != Shape{n}) throw ShapeError("stack_cols: ragged columns");
    needs_grad = needs_grad || c.requires_grad;
  }
  Tensor out = make_output(tape, {n, m}, needs_grad);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i)
      (*out.data)[i * m + j] = (*cols[j].data)[i];
  if (needs_grad) {
    std::vector<Tensor> cs = cols;
    Tensor yo = out;
    tape.record([cs, yo, n, m]() {
      for (std::size_t j = 0; j < m; ++j) {
        if (!cs[j].grad) continue;
        for (std::size_t i = 0; i < n; ++i)
          (*cs[j].grad)[i] += (*yo.grad)[i * m + j];
      }
    });
  }
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape)
    throw ShapeError("add: " + shape_str(a.shape) + " vs " +
                     shape_str(b.shape));
  bool needs_grad = a.requires_grad || b.requires_grad;
  Tensor out = make_output(tape, a.shape, needs_grad);
  for (std::size_t i = 0; i < a.size(); ++i)
    (*out.data)[i] = (*a.data)[i] + (*b.data)[i];
  check_finite(out, "add");
  if (needs_grad) {
    Tensor av = a, bv = b, yo = out;
    tape.record([av, bv, yo]() {
      for (std::size_t i = 0; i < yo.size(); ++i) {
        if (av.grad) (*av.grad)[i] += (*yo.grad)[i];
        if (bv.grad) (*bv.grad)[i] += (*yo.grad)[i];
      }
    });
  }
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape)
    throw ShapeError("mul: " + shape_str(a.shape) + " vs " +
                     shape_str(b.shape));
  bool needs_grad = a.requires_grad || b.requires_grad;
  Tensor out = make_output(tape, a.shape, needs_grad);
  for (std::size_t i = 0; i < a.size(); ++i)
    (*out.data)[i] = (*a.data)[i] * (*b.data)[i];
  check_finite(out, "mul");
  if (needs_grad) {
    Tensor av = a, bv = b, yo = out;
    tape.record([av, bv, yo]() {
      for (std::size_t i = 0; i < yo.size(); ++i) {
        if (av.grad) (*av.grad)[i] += (*yo.grad)[i] * (*bv.data)[i];
        if (bv.grad) (*bv.grad)[i] += (*yo.grad)[i] * (*av.data)[i];
      }
    });
  }
  return out;
}

Tensor scale(Tape& tape, const Tensor& x, double c) {
  Tensor out = make_output(tape, x.shape, x.requires_grad);
  for (std::size_t i = 0; i < x.size(); ++i) (*out.data)[i] = (*x.data)[i] * c;
  check_finite(out, "scale");
  if (x.requires_grad) {
    Tensor xin = x, yo = out;
    tape.record([xin, yo, c]() {
      for (std::size_t i = 0; i < xin.size(); ++i)
        (*xin.grad)[i] += (*yo.grad)[i] * c;
    });
  }
  return out;
}

Tensor sum_all(Tape& tape, const Tensor& x) {
  Tensor out = make_output(tape, {1}, x.requires_grad);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (*x.data)[i];
  (*out.data)[0] = s;
  check_finite(out, "sum_all");
  if (x.requires_grad) {
    Tensor xin = x, yo = out;
    tape.record([xin, yo]() {
      for (std::size_t i = 0; i < xin.size(); ++i)
        (*xin.grad)[i] += (*yo.grad)[0];
    });
  }
  return out;
}

Tensor bce_mean(Tape& tape, const Tensor& prob,
                const std::vector<double>& labels, double pos_weight,
                double neg_weight) {
  if (prob.shape.size() != 1 || prob.shape[0] != labels.size())
    throw ShapeError("bce_mean: prob/label size mismatch");
  const std::size_t n = labels.size();
  constexpr double kEps = 1e-12;
  Tensor out = make_output(tape, {1}, prob.requires_grad);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp((*prob.data)[i], kEps, 1.0 - kEps);
    s += -pos_weight * labels[i] * std::log(p) -
         neg_weight * (1.0 - labels[i]) * std::log(1.0 - p);
  }
  (*out.data)[0] = s / static_cast<double>(n);
  check_finite(out, "bce_mean");
  if (prob.requires_grad) {
    Tensor pv = prob, yo = out;
    tape.record([pv, yo, labels, pos_weight, neg_weight, n]() {
      const double g = (*yo.grad)[0] / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double p = (*pv.data)[i];
        if (p <= kEps || p >= 1.0 - kEps) continue;  // clamped region
        (*pv.grad)[i] += g * (-pos_weight * labels[i] / p +
                              neg_weight * (1.0 - labels[i]) / (1.0 - p));
      }
    });
  }
  return out;
}

}  // namespace mgg
