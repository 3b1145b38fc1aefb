// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sse/nn/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace sse::nn {

namespace {

void check3(const VarPtr& x, const char* who) {
  if (x->v.shape.size() != 3)
    throw std::runtime_error(std::string(who) + ": expected [C,T,F] tensor");
}

const double kFreqKernel[4] = {1.0 / 8, 3.0 / 8, 3.0 / 8, 1.0 / 8};

inline int clampi(int v, int lo, int hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace

VarPtr conv2d(const VarPtr& x, const VarPtr& w, const VarPtr& b, int stride_t,
              PadMode pad) {
  check3(x, "conv2d");
  if (w->v.shape.size() != 4) throw std::runtime_error("conv2d: bad kernel");
  const int ci = x->v.shape[0], T = x->v.shape[1], F = x->v.shape[2];
  const int co = w->v.shape[0], kt = w->v.shape[2], kf = w->v.shape[3];
  if (w->v.shape[1] != ci) throw std::runtime_error("conv2d: channel mismatch");
  if (b->v.shape.size() != 1 || b->v.shape[0] != co)
    throw std::runtime_error("conv2d: bad bias");
  if (stride_t != 1 && stride_t != 2)
    throw std::runtime_error("conv2d: stride_t must be 1 or 2");

  const int pad_left = pad == PadMode::kCausal ? kt - 1 : (kt - 1) / 2;
  const int pad_f = (kf - 1) / 2;
  const int To = (T - 1) / stride_t + 1;

  Tensor out({co, To, F});
  for (int o = 0; o < co; ++o) {
    const double bias = b->v.d[o];
    for (int to = 0; to < To; ++to) {
      double* orow = &out.at3(o, to, 0);
      for (int f = 0; f < F; ++f) orow[f] = bias;
      for (int i = 0; i < ci; ++i) {
        for (int mt = 0; mt < kt; ++mt) {
          const int it = to * stride_t + mt - pad_left;
          if (it < 0 || it >= T) continue;
          const double* xrow = &x->v.at3(i, it, 0);
          for (int mf = 0; mf < kf; ++mf) {
            const double wv = w->v.at4(o, i, mt, mf);
            if (wv == 0.0) continue;
            const int off = mf - pad_f;
            const int flo = std::max(0, -off), fhi = std::min(F, F - off);
            for (int f = flo; f < fhi; ++f) orow[f] += wv * xrow[f + off];
          }
        }
      }
    }
  }

  auto node = make_var(std::move(out), true);
  node->prev = {x, w, b};
  node->back = [ci, T, F, co, kt, kf, stride_t, pad_left, pad_f,
                To](Var& self) {
    auto& xn = *self.prev[0];
    auto& wn = *self.prev[1];
    auto& bn = *self.prev[2];
    for (int o = 0; o < co; ++o) {
      for (int to = 0; to < To; ++to) {
        const double* grow = &self.g.at3(o, to, 0);
        double gb = 0.0;
        for (int f = 0; f < F; ++f) gb += grow[f];
        bn.g.d[o] += gb;
        for (int i = 0; i < ci; ++i) {
          for (int mt = 0; mt < kt; ++mt) {
            const int it = to * stride_t + mt - pad_left;
            if (it < 0 || it >= T) continue;
            const double* xrow = &xn.v.at3(i, it, 0);
            double* xgrow = &xn.g.at3(i, it, 0);
            for (int mf = 0; mf < kf; ++mf) {
              const int off = mf - pad_f;
              const int flo = std::max(0, -off), fhi = std::min(F, F - off);
              const double wv = wn.v.at4(o, i, mt, mf);
              double gw = 0.0;
              for (int f = flo; f < fhi; ++f) {
                gw += grow[f] * xrow[f + off];
                xgrow[f + off] += grow[f] * wv;
              }
              wn.g.at4(o, i, mt, mf) += gw;
            }
          }
        }
      }
    }
  };
  return node;
}

VarPtr zero_stuff_time(const VarPtr& x) {
  check3(x, "zero_stuff_time");
  const int C = x->v.shape[0], T = x->v.shape[1], F = x->v.shape[2];
  Tensor out({C, 2 * T, F});
  for (int c = 0; c < C; ++c)
    for (int t = 0; t < T; ++t)
      for (int f = 0; f < F; ++f) out.at3(c, 2 * t, f) = x->v.at3(c, t, f);
  auto node = make_var(std::move(out), true);
  node->prev = {x};
  node->back = [C, T, F](Var& self) {
    auto& xn = *self.prev[0];
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t)
        for (int f = 0; f < F; ++f)
          xn.g.at3(c, t, f) += self.g.at3(c, 2 * t, f);
  };
  return node;
}

VarPtr freq_down(const VarPtr& x) {
  check3(x, "freq_down");
  const int C = x->v.shape[0], T = x->v.shape[1], F = x->v.shape[2];
  if (F % 2 != 0) throw std::runtime_error("freq_down: odd frequency size");
  const int Fo = F / 2;
  Tensor out({C, T, Fo});
  for (int c = 0; c < C; ++c)
    for (int t = 0; t < T; ++t) {
      const double* xr = &x->v.at3(c, t, 0);
      double* orow = &out.at3(c, t, 0);
      for (int fo = 0; fo < Fo; ++fo) {
        double acc = 0.0;
        for (int m = 0; m < 4; ++m)
          acc += kFreqKernel[m] * xr[clampi(2 * fo - 1 + m, 0, F - 1)];
        orow[fo] = acc;
      }
    }
  auto node = make_var(std::move(out), true);
  node->prev = {x};
  node->back = [C, T, F, Fo](Var& self) {
    auto& xn = *self.prev[0];
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t) {
        double* xg = &xn.g.at3(c, t, 0);
        const double* grow = &self.g.at3(c, t, 0);
        for (int fo = 0; fo < Fo; ++fo)
          for (int m = 0; m < 4; ++m)
            xg[clampi(2 * fo - 1 + m, 0, F - 1)] += kFreqKernel[m] * grow[fo];
      }
  };
  return node;
}

VarPtr freq_up(const VarPtr& x) {
  check3(x, "freq_up");
  const int C = x->v.shape[0], T = x->v.shape[1], F = x->v.shape[2];
  const int Fo = 2 * F;
  // Stuffed signal s[2i] = x[i], zero odd; replicate x at the edges. Kernel
  // scaled by 2 to keep unity DC gain after interpolation.
  auto stuffed = [&](const double* xr, int idx) -> double {
    if (idx % 2 != 0 && idx >= 0 && idx < Fo) return 0.0;
    if (idx < 0) return (idx % 2 == 0) ? xr[0] : 0.0;
    if (idx >= Fo) return (idx % 2 == 0) ? xr[F - 1] : 0.0;
    return xr[idx / 2];
  };
  Tensor out({C, T, Fo});
  for (int c = 0; c < C; ++c)
    for (int t = 0; t < T; ++t) {
      const double* xr = &x->v.at3(c, t, 0);
      double* orow = &out.at3(c, t, 0);
      for (int j = 0; j < Fo; ++j) {
        double acc = 0.0;
        for (int m = 0; m < 4; ++m)
          acc += 2.0 * kFreqKernel[m] * stuffed(xr, j - 1 + m);
        orow[j] = acc;
      }
    }
  auto node = make_var(std::move(out), true);
  node->prev = {x};
  node->back = [C, T, F, Fo](Var& self) {
    auto& xn = *self.prev[0];
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t) {
        double* xg = &xn.g.at3(c, t, 0);
        const double* grow = &self.g.at3(c, t, 0);
        for (int j = 0; j < Fo; ++j)
          for (int m = 0; m < 4; ++m) {
            const int idx = j - 1 + m;
            int src = -1;
            if (idx % 2 != 0 && idx >= 0 && idx < Fo) continue;
            if (idx < 0)
              src = (idx % 2 == 0) ? 0 : -1;
            else if (idx >= Fo)
              src = (idx % 2 == 0) ? F - 1 : -1;
            else
              src = idx / 2;
            if (src >= 0) xg[src] += 2.0 * kFreqKernel[m] * grow[j];
          }
      }
  };
  return node;
}

VarPtr cumulative_group_norm(const VarPtr& x, const VarPtr& scale,
                             const VarPtr& shift, int groups, double eps) {
  check3(x, "cumulative_group_norm");
  const int C = x->v.shape[0], T = x->v.shape[1], F = x->v.shape[2];
  if (C % groups != 0)
    throw std::runtime_error("cumulative_group_norm: channels % groups != 0");
  if (scale->v.shape != std::vector<int>{C} ||
      shift->v.shape != std::vector<int>{C})
    throw std::runtime_error("cumulative_group_norm: bad scale/shift shape");
  const int cpg = C / groups;

  Tensor out({C, T, F});
  // Per (group, frame): prefix mean and std, saved for backward.
  auto mean = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(groups) * T);
  auto stdev = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(groups) * T);
  for (int g = 0; g < groups; ++g) {
    double s = 0.0, q = 0.0;
    double n = 0.0;
    for (int t = 0; t < T; ++t) {
      for (int cc = 0; cc < cpg; ++cc) {
        const int c = g * cpg + cc;
        const double* xr = &x->v.at3(c, t, 0);
        for (int f = 0; f < F; ++f) {
          s += xr[f];
          q += xr[f] * xr[f];
        }
      }
      n += static_cast<double>(cpg) * F;
      const double mu = s / n;
      const double var = q / n - mu * mu;
      const double sd = std::sqrt(std::max(var, 0.0) + eps);
      (*mean)[static_cast<std::size_t>(g) * T + t] = mu;
      (*stdev)[static_cast<std::size_t>(g) * T + t] = sd;
      for (int cc = 0; cc < cpg; ++cc) {
        const int c = g * cpg + cc;
        const double ga = scale->v.d[c], be = shift->v.d[c];
        const double* xr = &x->v.at3(c, t, 0);
        double* orow = &out.at3(c, t, 0);
        for (int f = 0; f < F; ++f) orow[f] = ga * (xr[f] - mu) / sd + be;
      }
    }
  }

  auto node = make_var(std::move(out), true);
  node->prev = {x, scale, shift};
  node->back = [C, T, F, groups, cpg, mean, stdev](Var& self) {
    auto& xn = *self.prev[0];
    auto& sc = *self.prev[1];
    auto& sh = *self.prev[2];
    const double elems_per_frame = static_cast<double>(cpg) * F;
    for (int g = 0; g < groups; ++g) {
      // A_t = sum_i gamma_i go_i / sd_t ; B_t = sum_i gamma_i go_i (x_i-mu_t)/sd_t^3
      std::vector<double> A(T, 0.0), B(T, 0.0);
      for (int t = 0; t < T; ++t) {
        const double mu = (*mean)[static_cast<std::size_t>(g) * T + t];
        const double sd = (*stdev)[static_cast<std::size_t>(g) * T + t];
        double a = 0.0, bb = 0.0;
        for (int cc = 0; cc < cpg; ++cc) {
          const int c = g * cpg + cc;
          const double ga = sc.v.d[c];
          const double* xr = &xn.v.at3(c, t, 0);
          const double* grow = &self.g.at3(c, t, 0);
          double gsum = 0.0, gxsum = 0.0;
          for (int f = 0; f < F; ++f) {
            gsum += grow[f];
            gxsum += grow[f] * (xr[f] - mu);
          }
          a += ga * gsum;
          bb += ga * gxsum;
          // scale/shift gradients
          sc.g.d[c] += gxsum / sd;
          sh.g.d[c] += gsum;
        }
        A[t] = a / sd;
        B[t] = bb / (sd * sd * sd);
      }
      // Suffix sums over t of B_t/n_t and (A_t - B_t mu_t)/n_t.
      std::vector<double> sB(T + 1, 0.0), sA(T + 1, 0.0);
      for (int t = T - 1; t >= 0; --t) {
        const double n = elems_per_frame * (t + 1);
        const double mu = (*mean)[static_cast<std::size_t>(g) * T + t];
        sB[t] = sB[t + 1] + B[t] / n;
        sA[t] = sA[t + 1] + (A[t] - B[t] * mu) / n;
      }
      for (int t = 0; t < T; ++t) {
        const double sd = (*stdev)[static_cast<std::size_t>(g) * T + t];
        for (int cc = 0; cc < cpg; ++cc) {
          const int c = g * cpg + cc;
          const double ga = sc.v.d[c];
          const double* xr = &xn.v.at3(c, t, 0);
          const double* grow = &self.g.at3(c, t, 0);
          double* xg = &xn.g.at3(c, t, 0);
          for (int f = 0; f < F; ++f)
            xg[f] += ga * grow[f] / sd - xr[f] * sB[t] - sA[t];
        }
      }
    }
  };
  return node;
}

VarPtr silu(const VarPtr& x) {
  Tensor out(x->v.shape);
  for (std::size_t i = 0; i < x->v.numel(); ++i) {
    const double v = x->v.d[i];
    out.d[i] = v / (1.0 + std::exp(-v));
  }
  auto node = make_var(std::move(out), true);
  node->prev = {x};
  node->back = [](Var& self) {
    auto& xn = *self.prev[0];
    for (std::size_t i = 0; i < xn.v.numel(); ++i) {
      const double v = xn.v.d[i];
      const double sg = 1.0 / (1.0 + std::exp(-v));
      xn.g.d[i] += self.g.d[i] * sg * (1.0 + v * (1.0 - sg));
    }
  };
  return node;
}

VarPtr add(const VarPtr& a, const VarPtr& b) {
  if (a->v.shape != b->v.shape) throw std::runtime_error("add: shape mismatch");
  Tensor out(a->v.shape);
  for (std::size_t i = 0; i < out.numel(); ++i)
    out.d[i] = a->v.d[i] + b->v.d[i];
  auto node = make_var(std::move(out), true);
  node->prev = {a, b};
  node->back = [](Var& self) {
    for (auto& p : self.prev)
      for (std::size_t i = 0; i < p->v.numel(); ++i)
        p->g.d[i] += self.g.d[i];
  };
  return node;
}

VarPtr add_channel_bias(const VarPtr& x, const VarPtr& bias) {
  check3(x, "add_channel_bias");
  const int C = x->v.shape[0], T = x->v.shape[1], F = x->v.shape[2];
  if (bias->v.shape != std::vector<int>{C})
    throw std::runtime_error("add_channel_bias: bad bias shape");
  Tensor out(x->v.shape);
  for (int c = 0; c < C; ++c) {
    const double b = bias->v.d[c];
    for (int t = 0; t < T; ++t)
      for (int f = 0; f < F; ++f) out.at3(c, t, f) = x->v.at3(c, t, f) + b;
  }
  auto node = make_var(std::move(out), true);
  node->prev = {x, bias};
  node->back = [C, T, F](Var& self) {
    auto& xn = *self.prev[0];
    auto& bn = *self.prev[1];
    for (int c = 0; c < C; ++c) {
      double gb = 0.0;
      for (int t = 0; t < T; ++t)
        for (int f = 0; f < F; ++f) {
          const double gv = self.g.at3(c, t, f);
          xn.g.at3(c, t, f) += gv;
          gb += gv;
        }
      bn.g.d[c] += gb;
    }
  };
  return node;
}

VarPtr concat_channels(const VarPtr& a, const VarPtr& b) {
  check3(a, "concat_channels");
  check3(b, "concat_channels");
  if (a->v.shape[1] != b->v.shape[1] || a->v.shape[2] != b->v.shape[2])
    throw std::runtime_error("concat_channels: T/F mismatch");
  const int Ca = a->v.shape[0], Cb = b->v.shape[0];
  const int T = a->v.shape[1], F = a->v.shape[2];
  Tensor out({Ca + Cb, T, F});
  std::copy(a->v.d.begin(), a->v.d.end(), out.d.begin());
  std::copy(b->v.d.begin(), b->v.d.end(), out.d.begin() + a->v.numel());
  auto node = make_var(std::move(out), true);
  node->prev = {a, b};
  node->back = [](Var& self) {
    auto& an = *self.prev[0];
    auto& bn = *self.prev[1];
    for (std::size_t i = 0; i < an.v.numel(); ++i) an.g.d[i] += self.g.d[i];
    for (std::size_t i = 0; i < bn.v.numel(); ++i)
      bn.g.d[i] += self.g.d[an.v.numel() + i];
  };
  return node;
}

VarPtr crop_time(const VarPtr& x, int frames) {
  check3(x, "crop_time");
  const int C = x->v.shape[0], T = x->v.shape[1], F = x->v.shape[2];
  if (frames > T) throw std::runtime_error("crop_time: frames > T");
  if (frames == T) return x;
  Tensor out({C, frames, F});
  for (int c = 0; c < C; ++c)
    for (int t = 0; t < frames; ++t)
      for (int f = 0; f < F; ++f) out.at3(c, t, f) = x->v.at3(c, t, f);
  auto node = make_var(std::move(out), true);
  node->prev = {x};
  node->back = [C, frames, F](Var& self) {
    auto& xn = *self.prev[0];
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < frames; ++t)
        for (int f = 0; f < F; ++f)
          xn.g.at3(c, t, f) += self.g.at3(c, t, f);
  };
  return node;
}

VarPtr linear(const VarPtr& x, const VarPtr& w, const VarPtr& b) {
  if (x->v.shape.size() != 1 || w->v.shape.size() != 2)
    throw std::runtime_error("linear: bad shapes");
  const int in = x->v.shape[0], out_n = w->v.shape[0];
  if (w->v.shape[1] != in || b->v.shape != std::vector<int>{out_n})
    throw std::runtime_error("linear: dimension mismatch");
  Tensor out({out_n});
  for (int o = 0; o < out_n; ++o) {
    double acc = b->v.d[o];
    for (int i = 0; i < in; ++i)
      acc += w->v.d[static_cast<std::size_t>(o) * in + i] * x->v.d[i];
    out.d[o] = acc;
  }
  auto node = make_var(std::move(out), true);
  node->prev = {x, w, b};
  node->back = [in, out_n](Var& self) {
    auto& xn = *self.prev[0];
    auto& wn = *self.prev[1];
    auto& bn = *self.prev[2];
    for (int o = 0; o < out_n; ++o) {
      const double go = self.g.d[o];
      bn.g.d[o] += go;
      for (int i = 0; i < in; ++i) {
        wn.g.d[static_cast<std::size_t>(o) * in + i] += go * xn.v.d[i];
        xn.g.d[i] += go * wn.v.d[static_cast<std::size_t>(o) * in + i];
      }
    }
  };
  return node;
}

VarPtr dsm_residual_loss(const VarPtr& s, const Tensor& z, double sigma) {
  check3(s, "dsm_residual_loss");
  if (s->v.shape != z.shape)
    throw std::runtime_error("dsm_residual_loss: shape mismatch");
  if (s->v.shape[0] != 2)
    throw std::runtime_error("dsm_residual_loss: expected 2 channels");
  const std::size_t n_bins = s->v.numel() / 2;  // complex bins
  double acc = 0.0;
  for (std::size_t i = 0; i < s->v.numel(); ++i) {
    const double r = sigma * s->v.d[i] + z.d[i];
    acc += r * r;
  }
  Tensor out({1});
  out.d[0] = acc / static_cast<double>(n_bins);
  auto node = make_var(std::move(out), true);
  node->prev = {s};
  auto zz = std::make_shared<Tensor>(z);
  node->back = [zz, sigma, n_bins](Var& self) {
    auto& sn = *self.prev[0];
    const double g = self.g.d[0] * 2.0 * sigma / static_cast<double>(n_bins);
    for (std::size_t i = 0; i < sn.v.numel(); ++i)
      sn.g.d[i] += g * (sigma * sn.v.d[i] + zz->d[i]);
  };
  return node;
}

VarPtr sum_sq(const VarPtr& x) {
  double acc = 0.0;
  for (double v : x->v.d) acc += v * v;
  Tensor out({1});
  out.d[0] = acc;
  auto node = make_var(std::move(out), true);
  node->prev = {x};
  node->back = [](Var& self) {
    auto& xn = *self.prev[0];
    const double g = self.g.d[0];
    for (std::size_t i = 0; i < xn.v.numel(); ++i)
      xn.g.d[i] += 2.0 * g * xn.v.d[i];
  };
  return node;
}

}  // namespace sse::nn
