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

#include <cmath>
#include <functional>

#include "doctest.h"
#include "sse/nn/ops.hpp"
#include "sse/rng.hpp"

using namespace sse;
using namespace sse::nn;

namespace {

Tensor rand_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.d) v = scale * rng.normal();
  return t;
}

// Central-difference check of d(scalar)/d(inputs[i]) for every coordinate.
void check_gradients(
    const std::function<VarPtr(const std::vector<VarPtr>&)>& fn,
    std::vector<Tensor> inputs, double tol = 1e-6, double h = 1e-5) {
  std::vector<VarPtr> vars;
  for (auto& t : inputs) vars.push_back(make_var(t, true));
  auto loss = fn(vars);
  REQUIRE(loss->v.numel() == 1);
  backward(loss);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    for (std::size_t j = 0; j < vars[i]->v.d.size(); ++j) {
      std::vector<VarPtr> vp, vm;
      for (std::size_t k = 0; k < vars.size(); ++k) {
        vp.push_back(make_var(vars[k]->v));
        vm.push_back(make_var(vars[k]->v));
      }
      vp[i]->v.d[j] += h;
      vm[i]->v.d[j] -= h;
      const double num =
          (fn(vp)->v.d[0] - fn(vm)->v.d[0]) / (2.0 * h);
      const double ana = vars[i]->g.d[j];
      CHECK(std::abs(num - ana) <=
            tol * std::max(1.0, std::max(std::abs(num), std::abs(ana))));
    }
  }
}

}  // namespace

TEST_CASE("causal conv2d forward matches a naive oracle") {
  Rng rng(1);
  const int ci = 2, co = 3, T = 5, F = 6, kt = 3, kf = 3;
  auto x = rand_tensor({ci, T, F}, rng);
  auto w = rand_tensor({co, ci, kt, kf}, rng);
  auto b = rand_tensor({co}, rng);
  auto out =
      conv2d(make_var(x), make_var(w), make_var(b), 1, PadMode::kCausal);
  REQUIRE(out->v.shape == std::vector<int>({co, T, F}));
  // Oracle: out[o,t,f] = b[o] + sum x[i, t - (kt-1) + a, f - (kf-1)/2 + c]
  //                              * w[o,i,a,c], zero outside.
  for (int o = 0; o < co; ++o)
    for (int t = 0; t < T; ++t)
      for (int f = 0; f < F; ++f) {
        double acc = b.d[o];
        for (int i = 0; i < ci; ++i)
          for (int a = 0; a < kt; ++a)
            for (int c = 0; c < kf; ++c) {
              const int ti = t - (kt - 1) + a;
              const int fi = f - (kf - 1) / 2 + c;
              if (ti < 0 || ti >= T || fi < 0 || fi >= F) continue;
              acc += x.at3(i, ti, fi) * w.at4(o, i, a, c);
            }
        CHECK(out->v.at3(o, t, f) == doctest::Approx(acc).epsilon(1e-12));
      }
}

TEST_CASE("strided conv halves the frame count with causal alignment") {
  Rng rng(2);
  auto x = rand_tensor({1, 7, 4}, rng);
  auto w = rand_tensor({1, 1, 3, 3}, rng);
  auto b = rand_tensor({1}, rng);
  auto out = conv2d(make_var(x), make_var(w), make_var(b), 2, PadMode::kCausal);
  CHECK(out->v.shape == std::vector<int>({1, 4, 4}));
}

TEST_CASE("causal padding never looks ahead; symmetric does") {
  Rng rng(3);
  const int T = 8;
  auto x = rand_tensor({1, T, 4}, rng);
  auto w = rand_tensor({1, 1, 3, 3}, rng);
  auto b = rand_tensor({1}, rng);
  Tensor x2 = x;
  // Perturb only the last frame.
  for (int f = 0; f < 4; ++f) x2.at3(0, T - 1, f) += 1.0;

  auto yc1 = conv2d(make_var(x), make_var(w), make_var(b), 1, PadMode::kCausal);
  auto yc2 = conv2d(make_var(x2), make_var(w), make_var(b), 1, PadMode::kCausal);
  for (int t = 0; t < T - 1; ++t)
    for (int f = 0; f < 4; ++f)
      CHECK(yc1->v.at3(0, t, f) == yc2->v.at3(0, t, f));

  auto ys1 =
      conv2d(make_var(x), make_var(w), make_var(b), 1, PadMode::kSymmetric);
  auto ys2 =
      conv2d(make_var(x2), make_var(w), make_var(b), 1, PadMode::kSymmetric);
  double diff = 0.0;
  for (int f = 0; f < 4; ++f)
    diff += std::abs(ys1->v.at3(0, T - 2, f) - ys2->v.at3(0, T - 2, f));
  CHECK(diff > 1e-9);  // negative control: symmetric padding leaks the future
}

TEST_CASE("conv2d gradients pass finite differences") {
  Rng rng(4);
  auto x = rand_tensor({2, 4, 4}, rng);
  auto w = rand_tensor({2, 2, 3, 3}, rng, 0.5);
  auto b = rand_tensor({2}, rng);
  check_gradients(
      [](const std::vector<VarPtr>& v) {
        return sum_sq(conv2d(v[0], v[1], v[2], 1, PadMode::kCausal));
      },
      {x, w, b});
  check_gradients(
      [](const std::vector<VarPtr>& v) {
        return sum_sq(conv2d(v[0], v[1], v[2], 2, PadMode::kCausal));
      },
      {x, w, b});
}

TEST_CASE("zero_stuff_time interleaves zeros at odd frames") {
  Rng rng(5);
  auto x = rand_tensor({2, 3, 2}, rng);
  auto y = zero_stuff_time(make_var(x));
  REQUIRE(y->v.shape == std::vector<int>({2, 6, 2}));
  for (int c = 0; c < 2; ++c)
    for (int t = 0; t < 6; ++t)
      for (int f = 0; f < 2; ++f)
        CHECK(y->v.at3(c, t, f) ==
              (t % 2 == 0 ? x.at3(c, t / 2, f) : 0.0));
  check_gradients(
      [](const std::vector<VarPtr>& v) { return sum_sq(zero_stuff_time(v[0])); },
      {x});
}

TEST_CASE("freq_down keeps DC and halves bins; freq_up inverts shape") {
  Tensor x({1, 2, 8});
  for (auto& v : x.d) v = 3.0;  // constant along frequency
  auto y = freq_down(make_var(x));
  REQUIRE(y->v.shape == std::vector<int>({1, 2, 4}));
  // [1,3,3,1]/8 with replicated edges has unity DC gain.
  for (double v : y->v.d) CHECK(v == doctest::Approx(3.0).epsilon(1e-12));
  auto up = freq_up(y);
  REQUIRE(up->v.shape == std::vector<int>({1, 2, 8}));

  Rng rng(6);
  auto xr = rand_tensor({2, 3, 8}, rng);
  check_gradients(
      [](const std::vector<VarPtr>& v) { return sum_sq(freq_down(v[0])); },
      {xr});
  auto xh = rand_tensor({2, 3, 4}, rng);
  check_gradients(
      [](const std::vector<VarPtr>& v) { return sum_sq(freq_up(v[0])); },
      {xh});
}

TEST_CASE("cumulative group norm matches the per-prefix oracle") {
  Rng rng(7);
  const int C = 4, T = 5, F = 3, G = 2;
  auto x = rand_tensor({C, T, F}, rng);
  Tensor scale({C}), shift({C});
  for (int c = 0; c < C; ++c) {
    scale.d[c] = 1.0 + 0.1 * c;
    shift.d[c] = 0.05 * c;
  }
  auto y = cumulative_group_norm(make_var(x), make_var(scale),
                                 make_var(shift), G);
  const int cpg = C / G;
  const double eps = 1e-6;
  for (int g = 0; g < G; ++g)
    for (int t = 0; t < T; ++t) {
      // Oracle: statistics over all (c in group, t' <= t, f).
      double s = 0.0, q = 0.0;
      int n = 0;
      for (int c = g * cpg; c < (g + 1) * cpg; ++c)
        for (int tt = 0; tt <= t; ++tt)
          for (int f = 0; f < F; ++f) {
            s += x.at3(c, tt, f);
            q += x.at3(c, tt, f) * x.at3(c, tt, f);
            ++n;
          }
      const double mean = s / n;
      const double var = std::max(q / n - mean * mean, 0.0);
      const double inv = 1.0 / std::sqrt(var + eps);
      for (int c = g * cpg; c < (g + 1) * cpg; ++c)
        for (int f = 0; f < F; ++f) {
          const double expect =
              scale.d[c] * (x.at3(c, t, f) - mean) * inv + shift.d[c];
          CHECK(y->v.at3(c, t, f) == doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("cumulative group norm gradients pass finite differences") {
  Rng rng(8);
  auto x = rand_tensor({4, 4, 2}, rng);
  Tensor scale({4}), shift({4});
  for (int c = 0; c < 4; ++c) {
    scale.d[c] = 0.9 + 0.1 * c;
    shift.d[c] = -0.1 + 0.05 * c;
  }
  check_gradients(
      [](const std::vector<VarPtr>& v) {
        // A non-symmetric readout so stats gradients do not cancel.
        auto y = cumulative_group_norm(v[0], v[1], v[2], 2);
        auto y2 = silu(y);
        return sum_sq(y2);
      },
      {x, scale, shift}, 1e-5);
}

TEST_CASE("silu, linear, bias and concat gradients") {
  Rng rng(9);
  auto x = rand_tensor({2, 3, 2}, rng);
  check_gradients(
      [](const std::vector<VarPtr>& v) { return sum_sq(silu(v[0])); }, {x});

  auto vin = rand_tensor({5}, rng);
  auto w = rand_tensor({3, 5}, rng, 0.5);
  auto b = rand_tensor({3}, rng);
  check_gradients(
      [](const std::vector<VarPtr>& v) {
        return sum_sq(silu(linear(v[0], v[1], v[2])));
      },
      {vin, w, b});

  auto bias = rand_tensor({2}, rng);
  check_gradients(
      [](const std::vector<VarPtr>& v) {
        return sum_sq(add_channel_bias(v[0], v[1]));
      },
      {x, bias});

  auto a2 = rand_tensor({2, 3, 2}, rng);
  check_gradients(
      [](const std::vector<VarPtr>& v) {
        return sum_sq(silu(concat_channels(v[0], v[1])));
      },
      {x, a2});
}

TEST_CASE("crop_time keeps the earliest frames") {
  Rng rng(10);
  auto x = rand_tensor({2, 5, 3}, rng);
  auto y = crop_time(make_var(x), 3);
  REQUIRE(y->v.shape == std::vector<int>({2, 3, 3}));
  for (int c = 0; c < 2; ++c)
    for (int t = 0; t < 3; ++t)
      for (int f = 0; f < 3; ++f)
        CHECK(y->v.at3(c, t, f) == x.at3(c, t, f));
  check_gradients(
      [](const std::vector<VarPtr>& v) { return sum_sq(crop_time(v[0], 3)); },
      {x});
}

TEST_CASE("DSM residual loss value and gradient") {
  Rng rng(11);
  const int T = 3, F = 4;
  auto s = rand_tensor({2, T, F}, rng);
  auto z = rand_tensor({2, T, F}, rng);
  const double sigma = 0.2;
  auto loss = dsm_residual_loss(make_var(s, true), z, sigma);
  // Oracle: mean over T*F complex bins of |sigma s + z|^2.
  double expect = 0.0;
  for (std::size_t i = 0; i < s.d.size(); ++i)
    expect += std::pow(sigma * s.d[i] + z.d[i], 2);
  expect /= T * F;
  CHECK(loss->v.d[0] == doctest::Approx(expect).epsilon(1e-12));
  // s = 0 gives mean |z|^2.
  Tensor s0({2, T, F});
  double z2 = 0.0;
  for (double v : z.d) z2 += v * v;
  auto l0 = dsm_residual_loss(make_var(s0), z, sigma);
  CHECK(l0->v.d[0] == doctest::Approx(z2 / (T * F)).epsilon(1e-12));

  check_gradients(
      [&](const std::vector<VarPtr>& v) {
        return dsm_residual_loss(v[0], z, sigma);
      },
      {s});
}

TEST_CASE("backward handles shared subexpressions (diamond graph)") {
  Tensor t({1});
  t.d[0] = 0.7;
  auto x = make_var(t, true);
  auto sx = silu(x);
  auto y = add(sx, sx);  // y = 2 silu(x)
  auto loss = sum_sq(y);  // loss = 4 silu(x)^2
  backward(loss);
  const double h = 1e-6;
  auto f = [](double v) {
    const double s = v / (1.0 + std::exp(-v));
    return 4.0 * s * s;
  };
  const double num = (f(0.7 + h) - f(0.7 - h)) / (2 * h);
  CHECK(x->g.d[0] == doctest::Approx(num).epsilon(1e-6));
}
