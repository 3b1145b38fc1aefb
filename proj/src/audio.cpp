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

#include "sse/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sse {

namespace {

std::uint32_t rd_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t rd_u16(const unsigned char* p) {
  return std::uint16_t(p[0]) | (std::uint16_t(p[1]) << 8);
}

void wr_u32(std::ofstream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}
void wr_u16(std::ofstream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

AudioBuffer read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("read_wav: " + path +
                             ": missing RIFF/WAVE header");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  bool have_fmt = false, have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* p = bytes.data() + pos;
    std::uint32_t chunk_len = rd_u32(p + 4);
    const unsigned char* body = p + 8;
    if (pos + 8 + chunk_len > bytes.size())
      chunk_len = static_cast<std::uint32_t>(bytes.size() - pos - 8);
    if (std::memcmp(p, "fmt ", 4) == 0) {
      if (chunk_len < 16)
        throw std::runtime_error("read_wav: fmt chunk too short");
      format = rd_u16(body);
      channels = rd_u16(body + 2);
      rate = rd_u32(body + 4);
      bits = rd_u16(body + 14);
      // WAVE_FORMAT_EXTENSIBLE: subformat GUID starts with the format tag
      if (format == 0xfffe && chunk_len >= 40) format = rd_u16(body + 24);
      have_fmt = true;
    } else if (std::memcmp(p, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
      have_data = true;
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }
  if (!have_fmt) throw std::runtime_error("read_wav: no fmt chunk in " + path);
  if (!have_data)
    throw std::runtime_error("read_wav: no data chunk in " + path);
  if (channels == 0)
    throw std::runtime_error("read_wav: fmt declares zero channels");

  const bool pcm = (format == 1);
  const bool flt = (format == 3);
  if (!(pcm && (bits == 16 || bits == 24)) && !(flt && bits == 32))
    throw std::runtime_error(
        "read_wav: unsupported format tag " + std::to_string(format) + " / " +
        std::to_string(bits) + " bits (want PCM16, PCM24 or float32)");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = frame_bytes ? data_len / frame_bytes : 0;

  AudioBuffer out;
  out.rate = static_cast<int>(rate);
  out.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* s = data + i * frame_bytes + c * bytes_per_sample;
      double v = 0.0;
      if (pcm && bits == 16) {
        std::int16_t raw = static_cast<std::int16_t>(rd_u16(s));
        v = raw / 32768.0;
      } else if (pcm && bits == 24) {
        std::int32_t raw = std::int32_t(s[0]) | (std::int32_t(s[1]) << 8) |
                           (std::int32_t(s[2]) << 16);
        if (raw & 0x800000) raw |= ~0xffffff;
        v = raw / 8388608.0;
      } else {  // float32
        std::uint32_t u = rd_u32(s);
        float f;
        std::memcpy(&f, &u, 4);
        v = f;
      }
      acc += v;
    }
    out.samples[i] = acc / channels;
  }
  return out;
}

void write_wav(const std::string& path, const AudioBuffer& buffer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_wav: cannot open " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(buffer.samples.size());
  const std::uint32_t data_len = n * 2;
  os.write("RIFF", 4);
  wr_u32(os, 36 + data_len);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  wr_u32(os, 16);
  wr_u16(os, 1);  // PCM
  wr_u16(os, 1);  // mono
  wr_u32(os, static_cast<std::uint32_t>(buffer.rate));
  wr_u32(os, static_cast<std::uint32_t>(buffer.rate) * 2);
  wr_u16(os, 2);
  wr_u16(os, 16);
  os.write("data", 4);
  wr_u32(os, data_len);
  for (double v : buffer.samples) {
    double scaled = v * 32768.0;
    long q = std::lround(scaled);
    q = std::clamp(q, -32768L, 32767L);
    wr_u16(os, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  if (!os) throw std::runtime_error("write_wav: write failed for " + path);
}

std::vector<double> design_lowpass(double cutoff_hz, double transition_hz,
                                   double atten_db, double sample_rate) {
  const double dw = 2.0 * M_PI * transition_hz / sample_rate;
  int taps = static_cast<int>(std::ceil((atten_db - 8.0) / (2.285 * dw))) + 1;
  if (taps % 2 == 0) ++taps;
  double beta = 0.0;
  if (atten_db > 50.0)
    beta = 0.1102 * (atten_db - 8.7);
  else if (atten_db >= 21.0)
    beta = 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);

  auto bessel_i0 = [](double x) {
    double sum = 1.0, term = 1.0;
    for (int k = 1; k < 64; ++k) {
      term *= (x / (2.0 * k)) * (x / (2.0 * k));
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    return sum;
  };

  const int mid = (taps - 1) / 2;
  const double wc = 2.0 * M_PI * cutoff_hz / sample_rate;
  std::vector<double> h(taps);
  double sum = 0.0;
  const double i0b = bessel_i0(beta);
  for (int i = 0; i < taps; ++i) {
    const int m = i - mid;
    double sinc = (m == 0) ? wc / M_PI : std::sin(wc * m) / (M_PI * m);
    double r = 2.0 * i / (taps - 1) - 1.0;
    double w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
    h[i] = sinc * w;
    sum += h[i];
  }
  for (double& v : h) v /= sum;  // unity DC gain
  return h;
}

std::vector<double> fir_filter_aligned(const std::vector<double>& x,
                                       const std::vector<double>& h) {
  const int n = static_cast<int>(x.size());
  const int taps = static_cast<int>(h.size());
  const int mid = (taps - 1) / 2;
  std::vector<double> y(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < taps; ++k) {
      const int j = i + mid - k;
      if (j >= 0 && j < n) acc += h[k] * x[j];
    }
    y[i] = acc;
  }
  return y;
}

AudioBuffer resample(const AudioBuffer& buffer, int target_rate) {
  const int src = buffer.rate;
  int up = 0, down = 0;
  if (src == 48000 && target_rate == 32000) {
    up = 2;
    down = 3;
  } else if (src == 32000 && target_rate == 48000) {
    up = 3;
    down = 2;
  } else {
    throw std::runtime_error("resample: unsupported rate pair " +
                             std::to_string(src) + " -> " +
                             std::to_string(target_rate));
  }

  // Prototype lowpass at the combined rate. Passband must hold to 14 kHz
  // flat; stopband starts at the lower Nyquist (16 kHz).
  const double high_rate = static_cast<double>(src) * up;
  const double pass_hz = 14400.0, stop_hz = 16000.0;
  std::vector<double> h = design_lowpass(0.5 * (pass_hz + stop_hz),
                                         stop_hz - pass_hz, 72.0, high_rate);
  const int taps = static_cast<int>(h.size());
  const int mid = (taps - 1) / 2;

  const long long n_in = static_cast<long long>(buffer.samples.size());
  const long long n_out =
      std::llround(static_cast<double>(n_in) * target_rate / src);

  AudioBuffer out;
  out.rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(n_out), 0.0);
  // y[m] = up * sum_n x[n] h[m*down + mid - n*up]
  for (long long m = 0; m < n_out; ++m) {
    const long long center = m * down + mid;
    double acc = 0.0;
    long long n_lo = (center - (taps - 1) + up - 1) / up;
    if (center < taps - 1) n_lo = 0;
    long long n_hi = center / up;
    if (n_hi >= n_in) n_hi = n_in - 1;
    for (long long n = n_lo; n <= n_hi; ++n) {
      const long long k = center - n * up;
      if (k >= 0 && k < taps) acc += buffer.samples[n] * h[k];
    }
    out.samples[m] = acc * up;
  }
  return out;
}

}  // namespace sse
