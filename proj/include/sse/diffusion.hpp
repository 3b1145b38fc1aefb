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

#ifndef SSE_DIFFUSION_HPP
#define SSE_DIFFUSION_HPP

#include <complex>
#include <functional>
#include <vector>

#include "sse/rng.hpp"
#include "sse/stft.hpp"

namespace sse {

/// Ornstein-Uhlenbeck drift toward the corrupted signal with a
/// variance-exploding noise schedule.
struct SdeParams {
  double gamma = 1.5;
  double sigma_min = 0.05;
  double sigma_max = 0.5;
  double t_horizon = 1.0;
  double t_eps = 0.03;
  int n_steps = 30;
  double corrector_snr = 0.5;
  int corrector_steps = 1;

  void validate() const;
};

using ScoreFn = std::function<std::vector<std::complex<double>>(
    const std::vector<std::complex<double>>& x_t,
    const std::vector<std::complex<double>>& y, double t)>;

double mean_coeff(double t, const SdeParams& p);          // e^{-gamma t}
double perturbation_std(double t, const SdeParams& p);    // sigma(t)
double diffusion_coefficient(double t, const SdeParams& p);  // g(t)

/// mu(t) = e^{-gamma t} x0 + (1 - e^{-gamma t}) y, elementwise.
std::vector<std::complex<double>> perturbation_mean(
    const std::vector<std::complex<double>>& x0,
    const std::vector<std::complex<double>>& y, double t, const SdeParams& p);

/// x_t = mu(t) + sigma(t) z with z circularly symmetric standard normal;
/// returns (x_t, z) for score-matching targets.
std::pair<std::vector<std::complex<double>>, std::vector<std::complex<double>>>
sample_forward(const std::vector<std::complex<double>>& x0,
               const std::vector<std::complex<double>>& y, double t,
               const SdeParams& p, Rng& rng);

/// One reverse Euler-Maruyama step from t to t - dt.
std::vector<std::complex<double>> reverse_predictor_step(
    const std::vector<std::complex<double>>& x_t,
    const std::vector<std::complex<double>>& y, double t, double dt,
    const std::vector<std::complex<double>>& score, const SdeParams& p,
    Rng& rng);

/// Annealed Langevin corrector with step size eps = 2 (r ||z|| / ||s||)^2.
std::vector<std::complex<double>> corrector_step(
    const std::vector<std::complex<double>>& x_t,
    const std::vector<std::complex<double>>& y, double t,
    const ScoreFn& score_fn, const SdeParams& p, Rng& rng);

/// Full predictor-corrector reverse chain from x_T ~ N_C(y, sigma(T)^2)
/// down to t_eps on a uniform time grid.
std::vector<std::complex<double>> enhance_values(
    const std::vector<std::complex<double>>& y, const ScoreFn& score_fn,
    const SdeParams& p, Rng& rng);

/// Spectrogram wrapper around enhance_values (compressed domain).
Spectrogram enhance_spectrogram(const Spectrogram& y, const ScoreFn& score_fn,
                                const SdeParams& p, Rng& rng);

}  // namespace sse

#endif  // SSE_DIFFUSION_HPP
