#include "singerlab/audio/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace singerlab::audio {

namespace {

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-12 * sum) break;
  }
  return sum;
}

constexpr double kBeta = 8.6;
constexpr int kZeroCrossings = 32;

}  // namespace

std::vector<float> resample(std::span<const float> input, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw std::invalid_argument("sample rates must be positive");
  if (from_rate == to_rate) return {input.begin(), input.end()};

  const int g = std::gcd(from_rate, to_rate);
  const long up = to_rate / g;
  const long down = from_rate / g;
  const double cutoff = 0.95 * std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
  // Half-width of the kernel in input samples.
  const double half_width = kZeroCrossings / cutoff;
  const double i0_beta = bessel_i0(kBeta);

  const auto n_out = static_cast<std::size_t>(
      (static_cast<long double>(input.size()) * up + down - 1) / down);
  std::vector<float> out(n_out);
  const long n_in = static_cast<long>(input.size());

  for (std::size_t j = 0; j < n_out; ++j) {
    const double t = static_cast<double>(j) * static_cast<double>(down) / static_cast<double>(up);
    const long lo = static_cast<long>(std::ceil(t - half_width));
    const long hi = static_cast<long>(std::floor(t + half_width));
    double acc = 0.0;
    for (long i = std::max(lo, 0L); i <= std::min(hi, n_in - 1); ++i) {
      const double x = static_cast<double>(i) - t;
      const double r = x / half_width;
      if (std::abs(r) >= 1.0) continue;
      const double window = bessel_i0(kBeta * std::sqrt(1.0 - r * r)) / i0_beta;
      const double arg = M_PI * cutoff * x;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      acc += input[static_cast<std::size_t>(i)] * cutoff * sinc * window;
    }
    out[j] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace singerlab::audio
