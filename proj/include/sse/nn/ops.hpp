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

#ifndef SSE_NN_OPS_HPP
#define SSE_NN_OPS_HPP

#include "sse/nn/autograd.hpp"

namespace sse::nn {

enum class PadMode { kCausal, kSymmetric };

// 2D convolution over [C,T,F] with kernel [C_out,C_in,k_t,k_f].
// Time padding: causal (left k_t-1) or symmetric ((k_t-1)/2 each side, the
// non-causal negative control). Frequency: symmetric zero pad (k_f-1)/2.
// stride_t in {1,2}; frequency stride is always 1.
VarPtr conv2d(const VarPtr& x, const VarPtr& w, const VarPtr& b, int stride_t,
              PadMode pad);

// Inserts a zero frame after every input frame: [C,T,F] -> [C,2T,F] with
// x at even time indices. Combined with a causal conv this is the causal
// transposed strided convolution.
VarPtr zero_stuff_time(const VarPtr& x);

// Fixed [1,3,3,1]/8 anti-aliasing FIR along frequency + stride-2 decimation
// (replicate edge handling, unity DC gain); and its zero-stuff + FIR*2
// inverse-direction counterpart. Time axis untouched.
VarPtr freq_down(const VarPtr& x);
VarPtr freq_up(const VarPtr& x);

// Cumulative group normalization: statistics per (group, frame) over all
// elements of the group in frames <= t. scale/shift are per-channel [C].
VarPtr cumulative_group_norm(const VarPtr& x, const VarPtr& scale,
                             const VarPtr& shift, int groups,
                             double eps = 1e-6);

VarPtr silu(const VarPtr& x);
VarPtr add(const VarPtr& a, const VarPtr& b);
// x[c,t,f] + bias[c]
VarPtr add_channel_bias(const VarPtr& x, const VarPtr& bias);
VarPtr concat_channels(const VarPtr& a, const VarPtr& b);
// Keep the earliest `frames` frames (crop the latest).
VarPtr crop_time(const VarPtr& x, int frames);

// y = W x + b for vectors; W is [out, in].
VarPtr linear(const VarPtr& x, const VarPtr& w, const VarPtr& b);

// mean over (t,f) of |sigma * s + z|^2 where s, z are [2,T,F] stacks of
// (re, im); z is a constant. Scalar output.
VarPtr dsm_residual_loss(const VarPtr& s, const Tensor& z, double sigma);

// Sum of squares (scalar), for structural tests.
VarPtr sum_sq(const VarPtr& x);

}  // namespace sse::nn

#endif  // SSE_NN_OPS_HPP
