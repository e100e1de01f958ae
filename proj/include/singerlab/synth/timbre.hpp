#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "singerlab/common/rng.hpp"

namespace singerlab::synth {

using SingerId = std::uint32_t;

// Parametric singing voice. Ranges:
//   f0_base [110, 440] Hz, f0_range_semitones [2, 12], vibrato_rate [4, 7] Hz,
//   vibrato_depth [0.1, 0.8] st, harmonic_rolloff [3, 15] dB/oct,
//   formants F1 [300, 900], F2 [900, 2500], F3 [2500, 3500] Hz,
//   breathiness [0, 0.3].
struct SingerTimbre {
  SingerId singer_id = 0;
  double f0_base = 220.0;
  double f0_range_semitones = 7.0;
  double vibrato_rate = 5.5;
  double vibrato_depth = 0.3;
  double harmonic_rolloff = 9.0;
  std::array<double, 3> formant_centers{500.0, 1500.0, 3000.0};
  double breathiness = 0.1;

  std::vector<double> as_vector() const;
  bool within_ranges() const;
  bool operator==(const SingerTimbre&) const = default;
};

struct ParamRange {
  double lo;
  double hi;
};

inline constexpr ParamRange kF0Base{110.0, 440.0};
inline constexpr ParamRange kF0Range{2.0, 12.0};
inline constexpr ParamRange kVibratoRate{4.0, 7.0};
inline constexpr ParamRange kVibratoDepth{0.1, 0.8};
inline constexpr ParamRange kRolloff{3.0, 15.0};
inline constexpr std::array<ParamRange, 3> kFormants{{{300.0, 900.0}, {900.0, 2500.0}, {2500.0, 3500.0}}};
inline constexpr ParamRange kBreathiness{0.0, 0.3};

// Deterministic in (master_seed, singer_id).
SingerTimbre make_singer(std::uint64_t master_seed, SingerId singer_id);

// Gaussian perturbation of rolloff, formants and breathiness with standard
// deviation `level` times each parameter's range width, clamped back into
// range. level == 0 returns the input unchanged.
SingerTimbre perturb_timbre(const SingerTimbre& source, double level, Rng& rng);

using StyleId = std::uint32_t;

// Accompaniment family: key, chord progression, tempo, pad brightness and
// a 16-step drum pattern.
struct InstrumentalStyle {
  StyleId style_id = 0;
  int root_semitone = 0;            // relative to A2 (110 Hz)
  std::array<int, 4> progression{};  // scale degrees, one chord per bar
  bool minor = false;
  double tempo_bpm = 100.0;
  double brightness_hz = 3000.0;    // pad harmonics stop here
  std::uint16_t kick = 0;
  std::uint16_t snare = 0;
  std::uint16_t hat = 0;
  double drum_level = 0.5;
};

InstrumentalStyle make_style(std::uint64_t master_seed, StyleId style_id);

}  // namespace singerlab::synth
