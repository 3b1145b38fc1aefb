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

#include "sse/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace sse {

void SdeParams::validate() const {
  if (!(sigma_min > 0.0 && sigma_min < sigma_max))
    throw std::runtime_error("SdeParams: need 0 < sigma_min < sigma_max");
  if (gamma <= 0.0) throw std::runtime_error("SdeParams: gamma <= 0");
  if (!(t_eps > 0.0 && t_eps < t_horizon))
    throw std::runtime_error("SdeParams: need 0 < t_eps < T");
}

double mean_coeff(double t, const SdeParams& p) {
  return std::exp(-p.gamma * t);
}

double perturbation_std(double t, const SdeParams& p) {
  const double lr = std::log(p.sigma_max / p.sigma_min);
  const double var = p.sigma_min * p.sigma_min *
                     (std::pow(p.sigma_max / p.sigma_min, 2.0 * t) -
                      std::exp(-2.0 * p.gamma * t)) *
                     lr / (p.gamma + lr);
  return std::sqrt(std::max(var, 0.0));
}

double diffusion_coefficient(double t, const SdeParams& p) {
  const double lr = std::log(p.sigma_max / p.sigma_min);
  return p.sigma_min * std::pow(p.sigma_max / p.sigma_min, t) *
         std::sqrt(2.0 * lr);
}

std::vector<std::complex<double>> perturbation_mean(
    const std::vector<std::complex<double>>& x0,
    const std::vector<std::complex<double>>& y, double t, const SdeParams& p) {
  if (x0.size() != y.size())
    throw std::runtime_error("perturbation_mean: shape mismatch");
  const double a = mean_coeff(t, p);
  std::vector<std::complex<double>> mu(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i)
    mu[i] = a * x0[i] + (1.0 - a) * y[i];
  return mu;
}

std::pair<std::vector<std::complex<double>>, std::vector<std::complex<double>>>
sample_forward(const std::vector<std::complex<double>>& x0,
               const std::vector<std::complex<double>>& y, double t,
               const SdeParams& p, Rng& rng) {
  auto mu = perturbation_mean(x0, y, t, p);
  const double sigma = perturbation_std(t, p);
  std::vector<std::complex<double>> z(x0.size()), xt(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    z[i] = rng.complex_normal();
    xt[i] = mu[i] + sigma * z[i];
  }
  return {std::move(xt), std::move(z)};
}

std::vector<std::complex<double>> reverse_predictor_step(
    const std::vector<std::complex<double>>& x_t,
    const std::vector<std::complex<double>>& y, double t, double dt,
    const std::vector<std::complex<double>>& score, const SdeParams& p,
    Rng& rng) {
  if (x_t.size() != y.size() || x_t.size() != score.size())
    throw std::runtime_error("reverse_predictor_step: shape mismatch");
  if (dt <= 0.0) throw std::runtime_error("reverse_predictor_step: dt <= 0");
  const double g = diffusion_coefficient(t, p);
  const double g2 = g * g;
  const double noise = g * std::sqrt(dt);
  std::vector<std::complex<double>> out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    const std::complex<double> drift =
        p.gamma * (y[i] - x_t[i]) - g2 * score[i];
    if (!std::isfinite(score[i].real()) || !std::isfinite(score[i].imag()))
      throw std::runtime_error("reverse_predictor_step: nonfinite score at " +
                               std::to_string(i));
    out[i] = x_t[i] - drift * dt + noise * rng.complex_normal();
  }
  return out;
}

std::vector<std::complex<double>> corrector_step(
    const std::vector<std::complex<double>>& x_t,
    const std::vector<std::complex<double>>& y, double t,
    const ScoreFn& score_fn, const SdeParams& p, Rng& rng) {
  auto s = score_fn(x_t, y, t);
  std::vector<std::complex<double>> z(x_t.size());
  double s_norm2 = 0.0, z_norm2 = 0.0;
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    z[i] = rng.complex_normal();
    s_norm2 += std::norm(s[i]);
    z_norm2 += std::norm(z[i]);
  }
  if (s_norm2 == 0.0) return x_t;  // zero score: no-op
  const double r = p.corrector_snr;
  const double eps = 2.0 * r * r * z_norm2 / s_norm2;
  const double noise = std::sqrt(2.0 * eps);
  std::vector<std::complex<double>> out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i)
    out[i] = x_t[i] + eps * s[i] + noise * z[i];
  return out;
}

std::vector<std::complex<double>> enhance_values(
    const std::vector<std::complex<double>>& y, const ScoreFn& score_fn,
    const SdeParams& p, Rng& rng) {
  p.validate();
  const double sigma_T = perturbation_std(p.t_horizon, p);
  std::vector<std::complex<double>> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    x[i] = y[i] + sigma_T * rng.complex_normal();
  if (p.n_steps == 0) return x;
  const double dt = (p.t_horizon - p.t_eps) / p.n_steps;
  for (int k = 0; k < p.n_steps; ++k) {
    const double t = p.t_horizon - k * dt;
    auto score = score_fn(x, y, t);
    x = reverse_predictor_step(x, y, t, dt, score, p, rng);
    const double t_next = t - dt;
    for (int c = 0; c < p.corrector_steps; ++c)
      x = corrector_step(x, y, t_next, score_fn, p, rng);
  }
  return x;
}

Spectrogram enhance_spectrogram(const Spectrogram& y, const ScoreFn& score_fn,
                                const SdeParams& p, Rng& rng) {
  Spectrogram out = y;
  out.data = enhance_values(y.data, score_fn, p, rng);
  return out;
}

}  // namespace sse
