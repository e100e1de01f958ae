#pragma once

#include <span>
#include <vector>

namespace singerlab::audio {

// Band-limited resampling with a Kaiser-windowed sinc kernel (beta 8.6,
// 32 zero crossings per side, cutoff 0.95 of the lower Nyquist). Passband
// ripple stays below 0.01 dB up to 0.9 of the lower Nyquist and stopband
// attenuation is roughly 80 dB.
std::vector<float> resample(std::span<const float> input, int from_rate, int to_rate);

}  // namespace singerlab::audio
