#include "singerlab/audio/mel.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace singerlab::audio {

namespace {

constexpr double kSlaneyFsp = 200.0 / 3.0;
constexpr double kSlaneyMinLogHz = 1000.0;
const double kSlaneyMinLogMel = kSlaneyMinLogHz / kSlaneyFsp;
const double kSlaneyLogStep = std::log(6.4) / 27.0;

std::vector<MelFilter> build_filterbank() {
  const double mel_lo = hz_to_mel_slaney(0.0);
  const double mel_hi = hz_to_mel_slaney(kMelFmax);
  std::vector<double> hz(kMelBins + 2);
  for (int i = 0; i < kMelBins + 2; ++i) {
    hz[i] = mel_to_hz_slaney(mel_lo + (mel_hi - mel_lo) * i / (kMelBins + 1));
  }
  const double bin_hz = static_cast<double>(kSampleRate) / kFftSize;

  std::vector<MelFilter> bank(kMelBins);
  for (int m = 0; m < kMelBins; ++m) {
    const double lo = hz[m], centre = hz[m + 1], hi = hz[m + 2];
    const double enorm = 2.0 / (hi - lo);
    MelFilter& f = bank[m];
    f.first_bin = -1;
    for (int k = 0; k < kFftBins; ++k) {
      const double freq = k * bin_hz;
      const double rising = (freq - lo) / (centre - lo);
      const double falling = (hi - freq) / (hi - centre);
      const double w = std::max(0.0, std::min(rising, falling));
      if (w > 0.0) {
        if (f.first_bin < 0) f.first_bin = k;
        // Zero weights between first and last positive bin cannot occur
        // for a triangle, so the run stays contiguous.
        f.weights.push_back(static_cast<float>(w * enorm));
      }
    }
    if (f.first_bin < 0) throw std::logic_error("empty mel filter");
  }
  return bank;
}

std::vector<float> hann_periodic() {
  std::vector<float> w(kFftSize);
  for (int i = 0; i < kFftSize; ++i) {
    w[i] = static_cast<float>(0.5 - 0.5 * std::cos(2.0 * M_PI * i / kFftSize));
  }
  return w;
}

struct FftPlan {
  fftwf_plan plan = nullptr;
  FftPlan() {
    float* in = fftwf_alloc_real(kFftSize);
    fftwf_complex* out = fftwf_alloc_complex(kFftBins);
    plan = fftwf_plan_dft_r2c_1d(kFftSize, in, out, FFTW_ESTIMATE);
    fftwf_free(in);
    fftwf_free(out);
  }
  ~FftPlan() { fftwf_destroy_plan(plan); }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
};

const FftPlan& fft_plan() {
  // Planning is not thread-safe in FFTW; executing with new arrays is.
  static std::once_flag once;
  static std::unique_ptr<FftPlan> plan;
  std::call_once(once, [] { plan = std::make_unique<FftPlan>(); });
  return *plan;
}

struct FftwFloatDeleter {
  void operator()(float* p) const { fftwf_free(p); }
  void operator()(fftwf_complex* p) const { fftwf_free(p); }
};

}  // namespace

double hz_to_mel_slaney(double hz) {
  if (hz < kSlaneyMinLogHz) return hz / kSlaneyFsp;
  return kSlaneyMinLogMel + std::log(hz / kSlaneyMinLogHz) / kSlaneyLogStep;
}

double mel_to_hz_slaney(double mel) {
  if (mel < kSlaneyMinLogMel) return mel * kSlaneyFsp;
  return kSlaneyMinLogHz * std::exp(kSlaneyLogStep * (mel - kSlaneyMinLogMel));
}

const std::vector<float>& hann_window() {
  static const std::vector<float> window = hann_periodic();
  return window;
}

void magnitude_spectrum(std::span<const float> frame, std::span<float> magnitude) {
  if (frame.size() != kFftSize || magnitude.size() != kFftBins) {
    throw std::invalid_argument("magnitude_spectrum: bad frame or output size");
  }
  const FftPlan& plan = fft_plan();
  std::unique_ptr<float, FftwFloatDeleter> in(fftwf_alloc_real(kFftSize));
  std::unique_ptr<fftwf_complex, FftwFloatDeleter> spec(fftwf_alloc_complex(kFftBins));
  std::copy(frame.begin(), frame.end(), in.get());
  fftwf_execute_dft_r2c(plan.plan, in.get(), spec.get());
  for (int k = 0; k < kFftBins; ++k) magnitude[k] = std::hypot(spec.get()[k][0], spec.get()[k][1]);
}

const std::vector<MelFilter>& mel_filterbank() {
  static const std::vector<MelFilter> bank = build_filterbank();
  return bank;
}

std::vector<float> compute_log_mel_raw(std::span<const float> segment) {
  if (segment.size() != static_cast<std::size_t>(kSegmentSamples)) {
    throw std::invalid_argument("compute_mel requires " + std::to_string(kSegmentSamples) +
                                " samples, got " + std::to_string(segment.size()));
  }
  for (float v : segment) {
    if (!std::isfinite(v)) throw std::invalid_argument("compute_mel: non-finite sample");
  }

  const std::vector<float>& window = hann_window();
  const auto& bank = mel_filterbank();
  const FftPlan& plan = fft_plan();

  std::unique_ptr<float, FftwFloatDeleter> frame(fftwf_alloc_real(kFftSize));
  std::unique_ptr<fftwf_complex, FftwFloatDeleter> spec(fftwf_alloc_complex(kFftBins));
  std::vector<float> magnitude(kFftBins);
  std::vector<float> out(static_cast<std::size_t>(kMelBins) * kFrames);

  const long n = kSegmentSamples;
  const long pad = kFftSize / 2;
  for (int t = 0; t < kFrames; ++t) {
    const long start = static_cast<long>(t) * kHopSize - pad;
    for (int i = 0; i < kFftSize; ++i) {
      long j = start + i;
      if (j < 0) j = -j;
      if (j >= n) j = 2 * (n - 1) - j;
      frame.get()[i] = segment[static_cast<std::size_t>(j)] * window[i];
    }
    fftwf_execute_dft_r2c(plan.plan, frame.get(), spec.get());
    for (int k = 0; k < kFftBins; ++k) {
      magnitude[k] = std::hypot(spec.get()[k][0], spec.get()[k][1]);
    }
    for (int m = 0; m < kMelBins; ++m) {
      const MelFilter& f = bank[m];
      float acc = 0.0f;
      for (std::size_t w = 0; w < f.weights.size(); ++w) acc += f.weights[w] * magnitude[f.first_bin + w];
      out[static_cast<std::size_t>(m) * kFrames + t] = std::log1p(acc);
    }
  }
  return out;
}

MelSegment compute_mel(std::span<const float> segment) {
  MelSegment mel;
  mel.values = compute_log_mel_raw(segment);

  double sum = 0.0;
  for (float v : mel.values) sum += v;
  const double mean = sum / static_cast<double>(mel.values.size());
  double sq = 0.0;
  for (float v : mel.values) sq += (v - mean) * (v - mean);
  const double std = std::sqrt(sq / static_cast<double>(mel.values.size()));

  if (std < 1e-8) {
    std::fill(mel.values.begin(), mel.values.end(), 0.0f);
  } else {
    for (float& v : mel.values) v = static_cast<float>((v - mean) / std);
  }
  return mel;
}

}  // namespace singerlab::audio
