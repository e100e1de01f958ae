#include "singerlab/synth/render.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace singerlab::synth {

namespace {

using audio::kSampleRate;
constexpr double kFs = kSampleRate;
constexpr double kVoiceCeilingHz = 7600.0;
constexpr int kMaxHarmonics = 60;
constexpr int kBlock = 64;

constexpr std::uint64_t kMelodyTag = 0x3e;
constexpr std::uint64_t kBreathTag = 0x3f;
constexpr std::uint64_t kReverbTag = 0x40;
constexpr std::uint64_t kBandTag = 0x41;
constexpr std::uint64_t kMaskTag = 0x42;
constexpr std::uint64_t kCloneTag = 0x43;
constexpr std::uint64_t kKeyTag = 0x44;

struct Note {
  double start;
  double end;
  int semitone;  // absolute, relative to A2 (110 Hz)
};

struct Key {
  int root = 0;  // pitch class relative to A
  bool minor = false;
};

// Per-track key: the style's root transposed by a seeded offset, so a
// singer's songs do not all share one pitch set.
Key track_key(const InstrumentalStyle& style, std::uint64_t seed) {
  Rng rng(derive_seed({seed, kKeyTag}));
  return {(style.root_semitone + static_cast<int>(rng.index(12))) % 12, style.minor};
}

// Melodic walk over the key's pentatonic scale inside +-range/2 semitones
// of the singer's base pitch (at least 3 ladder notes).
std::vector<Note> draw_melody(std::uint64_t seed, double duration_s, double f0_base, double range_semitones,
                              Key key) {
  static constexpr std::array<int, 5> kMajorPenta{0, 2, 4, 7, 9};
  static constexpr std::array<int, 5> kMinorPenta{0, 3, 5, 7, 10};
  const auto& penta = key.minor ? kMinorPenta : kMajorPenta;
  Rng rng(derive_seed({seed, kMelodyTag}));
  const double centre = 12.0 * std::log2(f0_base / 110.0);
  std::vector<int> ladder;
  for (double half = std::max(1.0, range_semitones / 2.0); ladder.size() < 3; half += 1.0) {
    ladder.clear();
    for (int s = static_cast<int>(std::floor(centre - half)); s <= static_cast<int>(std::ceil(centre + half)); ++s) {
      const int pc = ((s - key.root) % 12 + 12) % 12;
      if (std::abs(s - centre) <= half && std::find(penta.begin(), penta.end(), pc) != penta.end()) {
        ladder.push_back(s);
      }
    }
  }
  std::size_t pos = 0;
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    if (std::abs(ladder[i] - centre) < std::abs(ladder[pos] - centre)) pos = i;
  }

  std::vector<Note> notes;
  double t = 0.0;
  while (t < duration_s) {
    const double len = rng.uniform(0.2, 0.6);
    notes.push_back({t, std::min(duration_s, t + len), ladder[pos]});
    t += len;
    if (rng.bernoulli(0.15)) t += rng.uniform(0.05, 0.25);  // breath gap
    const int step = static_cast<int>(rng.index(5)) - 2;
    const long next = static_cast<long>(pos) + step;
    pos = static_cast<std::size_t>(std::clamp<long>(next, 0, static_cast<long>(ladder.size()) - 1));
  }
  return notes;
}

double formant_gain(double freq, const std::array<double, 3>& formants) {
  double g = 1.0;
  for (double fc : formants) {
    const double bw = 80.0 + 0.06 * fc;
    const double z = (freq - fc) / bw;
    g += 4.0 * std::exp(-0.5 * z * z);
  }
  return g;
}

struct VoiceParams {
  bool quantize_pitch = false;  // vocoder: 12-TET grid, no vibrato/glide
  double flatten = 0.0;         // exponent shrink on harmonic amplitudes
  bool flat_envelope = false;
  bool breath = true;
};

std::vector<float> render_voice(const SingerTimbre& timbre, std::uint64_t seed, std::size_t n, Key key,
                                const VoiceParams& vp) {
  const double duration_s = static_cast<double>(n) / kFs;
  const auto notes = draw_melody(seed, duration_s, timbre.f0_base, timbre.f0_range_semitones, key);
  std::vector<float> out(n, 0.0f);
  Rng breath_rng(derive_seed({seed, kBreathTag}));

  // Breath noise band-pass state.
  double hp_prev_in = 0.0, hp_prev_out = 0.0, lp = 0.0;
  const double hp_a = std::exp(-2.0 * M_PI * 1000.0 / kFs);
  const double lp_a = std::exp(-2.0 * M_PI * 5000.0 / kFs);

  double phase = 0.0;
  double glide = notes.empty() ? 0.0 : notes.front().semitone;
  const double glide_a = std::exp(-1.0 / (0.03 * kFs));
  std::array<double, kMaxHarmonics + 1> amps{};
  int harmonics = 1;
  std::size_t note_idx = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kFs;
    while (note_idx < notes.size() && notes[note_idx].end <= t) ++note_idx;
    const bool in_note = note_idx < notes.size() && notes[note_idx].start <= t;
    double env = 0.0;
    if (in_note) {
      const Note& nt = notes[note_idx];
      if (vp.flat_envelope) {
        env = 1.0;
      } else {
        const double a = std::min(1.0, (t - nt.start) / 0.03);
        const double r = std::min(1.0, (nt.end - t) / 0.04);
        env = std::max(0.0, std::min(a, r));
      }
      glide = glide_a * glide + (1.0 - glide_a) * nt.semitone;
    }

    double semis = vp.quantize_pitch && in_note ? notes[note_idx].semitone : glide;
    if (!vp.quantize_pitch) semis += timbre.vibrato_depth * std::sin(2.0 * M_PI * timbre.vibrato_rate * t);
    double f0 = 110.0 * std::pow(2.0, semis / 12.0);
    if (vp.quantize_pitch) f0 = 440.0 * std::pow(2.0, std::round(12.0 * std::log2(f0 / 440.0)) / 12.0);

    if (i % kBlock == 0) {
      harmonics = std::clamp(static_cast<int>(kVoiceCeilingHz / f0), 1, kMaxHarmonics);
      double norm = 0.0;
      for (int h = 1; h <= harmonics; ++h) {
        double a = std::pow(10.0, -timbre.harmonic_rolloff * std::log2(static_cast<double>(h)) / 20.0) *
                   formant_gain(h * f0, timbre.formant_centers);
        if (vp.flatten > 0.0) a = std::pow(a, 1.0 - vp.flatten);
        amps[h] = a;
        norm += a * a;
      }
      norm = 1.0 / std::sqrt(norm);
      for (int h = 1; h <= harmonics; ++h) amps[h] *= norm;
    }

    phase += 2.0 * M_PI * f0 / kFs;
    if (phase > 2.0 * M_PI) phase -= 2.0 * M_PI;

    // sin(h x) by the Chebyshev recurrence.
    const double s1 = std::sin(phase);
    const double c2 = 2.0 * std::cos(phase);
    double prev = 0.0, cur = s1, acc = 0.0;
    for (int h = 1; h <= harmonics; ++h) {
      acc += amps[h] * cur;
      const double next = c2 * cur - prev;
      prev = cur;
      cur = next;
    }

    const double white = breath_rng.uniform(-1.0, 1.0);
    const double hp = hp_a * (hp_prev_out + white - hp_prev_in);
    hp_prev_in = white;
    hp_prev_out = hp;
    lp = lp_a * lp + (1.0 - lp_a) * hp;

    const double voiced = vp.breath ? (1.0 - timbre.breathiness) * acc + timbre.breathiness * 3.0 * lp : acc;
    out[i] = static_cast<float>(env * voiced);
  }
  return out;
}

// FFT convolution, output truncated to the input length.
std::vector<float> convolve(const std::vector<float>& x, const std::vector<float>& kernel) {
  std::size_t size = 1;
  while (size < x.size() + kernel.size()) size <<= 1;
  const std::size_t bins = size / 2 + 1;
  std::vector<double> a(size, 0.0), b(size, 0.0);
  std::copy(x.begin(), x.end(), a.begin());
  std::copy(kernel.begin(), kernel.end(), b.begin());
  std::vector<std::complex<double>> fa(bins), fb(bins);
  auto* fa_ptr = reinterpret_cast<fftw_complex*>(fa.data());
  auto* fb_ptr = reinterpret_cast<fftw_complex*>(fb.data());
  fftw_plan pa = fftw_plan_dft_r2c_1d(static_cast<int>(size), a.data(), fa_ptr, FFTW_ESTIMATE);
  fftw_plan pb = fftw_plan_dft_r2c_1d(static_cast<int>(size), b.data(), fb_ptr, FFTW_ESTIMATE);
  fftw_execute(pa);
  fftw_execute(pb);
  for (std::size_t k = 0; k < bins; ++k) fa[k] *= fb[k];
  fftw_plan pi = fftw_plan_dft_c2r_1d(static_cast<int>(size), fa_ptr, a.data(), FFTW_ESTIMATE);
  fftw_execute(pi);
  fftw_destroy_plan(pa);
  fftw_destroy_plan(pb);
  fftw_destroy_plan(pi);
  std::vector<float> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<float>(a[i] / static_cast<double>(size));
  return y;
}

std::vector<float> apply_reverb(const std::vector<float>& dry, std::uint64_t seed) {
  // Exponentially decaying noise tail, RT60 0.8 s, 1 s long.
  constexpr double kRt60 = 0.8;
  const auto len = static_cast<std::size_t>(kFs);
  Rng rng(derive_seed({seed, kReverbTag}));
  std::vector<float> kernel(len);
  double tail_energy = 0.0;
  for (std::size_t i = 1; i < len; ++i) {
    const double env = std::exp(-6.907755 * static_cast<double>(i) / (kRt60 * kFs));
    kernel[i] = static_cast<float>(rng.normal() * env);
    tail_energy += kernel[i] * kernel[i];
  }
  // Wet tail at 1.5x the direct-path energy.
  const double scale = std::sqrt(1.5 / tail_energy);
  for (std::size_t i = 1; i < len; ++i) kernel[i] = static_cast<float>(kernel[i] * scale);
  kernel[0] = 1.0f;
  return convolve(dry, kernel);
}

double midi_hz(double semitones_from_a2) { return 110.0 * std::pow(2.0, semitones_from_a2 / 12.0); }

std::vector<float> render_instrumental(const InstrumentalStyle& style, std::uint64_t seed, std::size_t n) {
  static constexpr std::array<int, 7> kMajor{0, 2, 4, 5, 7, 9, 11};
  static constexpr std::array<int, 7> kMinor{0, 2, 3, 5, 7, 8, 10};
  const auto& scale = style.minor ? kMinor : kMajor;

  Rng rng(derive_seed({seed, kBandTag}));
  const double tempo = style.tempo_bpm * rng.uniform(0.98, 1.02);
  const double beat = 60.0 / tempo;
  const double step = beat / 4.0;
  const double bar = 4.0 * beat;
  const int inversion = static_cast<int>(rng.index(3));
  // Occasional hat variation per track.
  const std::uint16_t hat = static_cast<std::uint16_t>(style.hat ^ (1u << rng.index(16)));

  std::vector<float> out(n, 0.0f);

  // Pad: triads, band-limited sawtooth partials.
  std::array<double, 3> phases{};
  int last_bar = -1;
  std::array<double, 3> freqs{};
  double chord_start = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kFs;
    const int b = static_cast<int>(t / bar);
    if (b != last_bar) {
      last_bar = b;
      chord_start = b * bar;
      const int degree = style.progression[static_cast<std::size_t>(b) % 4];
      for (int v = 0; v < 3; ++v) {
        const int idx = degree + 2 * v;
        int semis = scale[static_cast<std::size_t>(idx % 7)] + 12 * (idx / 7) + style.root_semitone;
        if (v < inversion) semis += 12;
        freqs[v] = midi_hz(semis);
      }
    }
    const double env = std::min(1.0, (t - chord_start) / 0.05);
    double acc = 0.0;
    for (int v = 0; v < 3; ++v) {
      phases[v] += 2.0 * M_PI * freqs[v] / kFs;
      if (phases[v] > 2.0 * M_PI) phases[v] -= 2.0 * M_PI;
      const int partials = std::max(1, static_cast<int>(style.brightness_hz / freqs[v]));
      const double s1 = std::sin(phases[v]);
      const double c2 = 2.0 * std::cos(phases[v]);
      double prev = 0.0, cur = s1;
      for (int h = 1; h <= partials; ++h) {
        acc += cur / h;
        const double next = c2 * cur - prev;
        prev = cur;
        cur = next;
      }
    }
    out[i] = static_cast<float>(0.25 * env * acc);
  }

  // Drums: kick (pitch-swept sine), snare (noise + body), hat (high-passed noise).
  const double drum = style.drum_level;
  double lp_snare = 0.0, hp_prev_in = 0.0, hp_prev_out = 0.0;
  const double snare_a = std::exp(-2.0 * M_PI * 3000.0 / kFs);
  const double hat_a = std::exp(-2.0 * M_PI * 6000.0 / kFs);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kFs;
    const auto step_idx = static_cast<long>(t / step);
    const double since = t - static_cast<double>(step_idx) * step;
    const unsigned bit = 1u << (static_cast<unsigned long>(step_idx) % 16);
    double v = 0.0;
    const double white = rng.uniform(-1.0, 1.0);
    if (style.kick & bit) {
      const double f = 45.0 + 105.0 * std::exp(-since / 0.04);
      v += 0.9 * std::exp(-since / 0.15) * std::sin(2.0 * M_PI * f * since);
    }
    lp_snare = snare_a * lp_snare + (1.0 - snare_a) * white;
    if (style.snare & bit) {
      v += 0.6 * std::exp(-since / 0.12) * (lp_snare * 2.0 + 0.3 * std::sin(2.0 * M_PI * 180.0 * since));
    }
    const double hp = hat_a * (hp_prev_out + white - hp_prev_in);
    hp_prev_in = white;
    hp_prev_out = hp;
    if (hat & bit) v += 0.3 * std::exp(-since / 0.04) * hp;
    out[i] += static_cast<float>(drum * v);
  }
  return out;
}

double rms(const std::vector<float>& x) {
  double s = 0.0;
  for (float v : x) s += static_cast<double>(v) * v;
  return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

// Zero inside silent windows, 30 ms ramps at the vocal side of each edge.
void apply_mask(std::vector<float>& x, const std::vector<bool>& mask) {
  const auto win = static_cast<std::size_t>(audio::kActivityWindowSeconds * kFs);
  const auto ramp = static_cast<std::size_t>(0.03 * kFs);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t w = i / win;
    if (w >= mask.size()) continue;  // trailing partial window follows the last flag
    if (!mask[w]) {
      x[i] = 0.0f;
      continue;
    }
    const std::size_t pos = i - w * win;
    double g = 1.0;
    if (w > 0 && !mask[w - 1]) g = std::min(g, static_cast<double>(pos) / ramp);
    if (w + 1 < mask.size() && !mask[w + 1]) g = std::min(g, static_cast<double>(win - 1 - pos) / ramp);
    x[i] = static_cast<float>(x[i] * std::clamp(g, 0.0, 1.0));
  }
  if (!mask.empty() && !mask.back()) {
    for (std::size_t i = mask.size() * win; i < x.size(); ++i) x[i] = 0.0f;
  }
}

void check_duration(double duration_s) {
  if (!(duration_s >= kMinTrackSeconds && duration_s <= kMaxTrackSeconds)) {
    throw std::invalid_argument("track duration must be in [24, 120] s, got " + std::to_string(duration_s));
  }
}

}  // namespace

const char* to_string(Genre g) {
  switch (g) {
    case Genre::kDry:
      return "dry";
    case Genre::kReverb:
      return "reverb";
    case Genre::kVocoder:
      return "vocoder";
    case Genre::kElectronic:
      return "electronic";
    case Genre::kUnknown:
      return "unknown";
  }
  return "unknown";
}

Genre genre_from_string(const std::string& s) {
  if (s == "dry") return Genre::kDry;
  if (s == "reverb") return Genre::kReverb;
  if (s == "vocoder") return Genre::kVocoder;
  if (s == "electronic") return Genre::kElectronic;
  if (s == "unknown") return Genre::kUnknown;
  throw std::invalid_argument("unknown genre '" + s + "'");
}

double TrackRecord::vocal_fraction() const {
  if (vocal_mask.empty()) return 0.0;
  return static_cast<double>(std::count(vocal_mask.begin(), vocal_mask.end(), true)) / vocal_mask.size();
}

std::vector<bool> draw_vocal_mask(std::uint64_t seed, double duration_s, double silence_prob) {
  const auto n = static_cast<std::size_t>(std::floor(duration_s / audio::kActivityWindowSeconds + 1e-9));
  Rng rng(derive_seed({seed, kMaskTag}));
  std::vector<bool> mask(n, true);
  const std::size_t max_silent = n / 4;
  std::size_t silent = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (silent < max_silent && rng.bernoulli(silence_prob)) {
      mask[i] = false;
      ++silent;
    }
  }
  return mask;
}

audio::AudioClip render_voice_only(const SingerTimbre& timbre, std::uint64_t melody_seed, double duration_s) {
  audio::AudioClip clip;
  Rng rng(derive_seed({melody_seed, kKeyTag}));
  const Key key{static_cast<int>(rng.index(12)), rng.bernoulli(0.5)};
  clip.samples = render_voice(timbre, melody_seed, static_cast<std::size_t>(std::llround(duration_s * kFs)), key, {});
  return clip;
}

TrackRecord render_track(const SingerTimbre& timbre, const InstrumentalStyle& style, Genre genre,
                         std::uint64_t seed, double duration_s, const RenderOptions& options) {
  check_duration(duration_s);
  if (genre == Genre::kUnknown) throw std::invalid_argument("render_track: genre must be a synthetic genre");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * kFs));

  TrackRecord rec;
  rec.singer_id = timbre.singer_id;
  rec.genre = genre;
  rec.instrumental_style_id = style.style_id;
  rec.rendered_timbre = timbre;
  rec.vocal_mask = options.vocal_mask ? *options.vocal_mask : draw_vocal_mask(seed, duration_s, options.silence_prob);
  if (rec.vocal_mask.size() != static_cast<std::size_t>(std::floor(duration_s / 3.0 + 1e-9))) {
    throw std::invalid_argument("vocal mask length does not match duration");
  }

  VoiceParams vp;
  if (genre == Genre::kVocoder || genre == Genre::kElectronic) {
    vp.quantize_pitch = true;
    // Carrier-style: flat harmonic amplitudes, no breath.
    vp.flatten = 1.0;
    vp.flat_envelope = true;
    vp.breath = false;
  }
  const Key key = track_key(style, seed);
  std::vector<float> vocal = render_voice(timbre, seed, n, key, vp);
  apply_mask(vocal, rec.vocal_mask);
  if (genre == Genre::kReverb) vocal = apply_reverb(vocal, seed);

  InstrumentalStyle keyed = style;
  keyed.root_semitone = key.root;
  std::vector<float> inst = render_instrumental(keyed, seed, n);

  const double ratio = genre == Genre::kElectronic ? 2.0 : 1.0;
  const double v_rms = rms(vocal);
  const double i_rms = rms(inst);
  const double inst_gain = i_rms > 0.0 ? ratio * (v_rms > 0.0 ? v_rms : 0.1) / i_rms : 0.0;
  for (float& v : inst) v = static_cast<float>(v * inst_gain);

  // Common gain: mixture RMS 0.1, then peak-limit to 0.95.
  std::vector<float> mix(n);
  for (std::size_t i = 0; i < n; ++i) mix[i] = vocal[i] + inst[i];
  double gain = rms(mix) > 0.0 ? 0.1 / rms(mix) : 1.0;
  float peak = 0.0f;
  for (float v : mix) peak = std::max(peak, std::abs(v));
  if (peak * gain > 0.95) gain = 0.95 / peak;
  for (std::size_t i = 0; i < n; ++i) {
    vocal[i] = static_cast<float>(vocal[i] * gain);
    inst[i] = static_cast<float>(inst[i] * gain);
    mix[i] = vocal[i] + inst[i];
  }

  rec.stems.vocal.samples = std::move(vocal);
  rec.stems.instrumental.samples = std::move(inst);
  rec.stems.mixture.samples = std::move(mix);
  return rec;
}

TrackRecord clone_track(const SingerTimbre& source_timbre, const InstrumentalStyle& foreign_style,
                        const std::vector<StyleId>& source_real_styles, double perturbation_level,
                        Genre genre, std::uint64_t seed, double duration_s) {
  if (std::find(source_real_styles.begin(), source_real_styles.end(), foreign_style.style_id) !=
      source_real_styles.end()) {
    throw std::invalid_argument("clone_track: foreign style " + std::to_string(foreign_style.style_id) +
                                " is used by the source singer's real tracks");
  }
  if (perturbation_level < 0.0 || perturbation_level > 1.0) {
    throw std::invalid_argument("clone_track: perturbation level must be in [0, 1]");
  }
  Rng rng(derive_seed({seed, kCloneTag}));
  const SingerTimbre voice = perturb_timbre(source_timbre, perturbation_level, rng);
  TrackRecord rec = render_track(voice, foreign_style, genre, seed, duration_s);
  rec.is_clone = true;
  rec.clone_source_singer = source_timbre.singer_id;
  return rec;
}

}  // namespace singerlab::synth
