#include "singerlab/synth/timbre.hpp"

#include <algorithm>
#include <cmath>

namespace singerlab::synth {

namespace {

constexpr std::uint64_t kSingerTag = 0x51;
constexpr std::uint64_t kStyleTag = 0x57;

double clamp_to(double v, ParamRange r) { return std::clamp(v, r.lo, r.hi); }
bool inside(double v, ParamRange r) { return v >= r.lo && v <= r.hi; }

}  // namespace

std::vector<double> SingerTimbre::as_vector() const {
  return {f0_base,          f0_range_semitones, vibrato_rate,       vibrato_depth, harmonic_rolloff,
          formant_centers[0], formant_centers[1], formant_centers[2], breathiness};
}

bool SingerTimbre::within_ranges() const {
  return inside(f0_base, kF0Base) && inside(f0_range_semitones, kF0Range) &&
         inside(vibrato_rate, kVibratoRate) && inside(vibrato_depth, kVibratoDepth) &&
         inside(harmonic_rolloff, kRolloff) && inside(formant_centers[0], kFormants[0]) &&
         inside(formant_centers[1], kFormants[1]) && inside(formant_centers[2], kFormants[2]) &&
         inside(breathiness, kBreathiness);
}

SingerTimbre make_singer(std::uint64_t master_seed, SingerId singer_id) {
  Rng rng(derive_seed({master_seed, kSingerTag, singer_id}));
  SingerTimbre t;
  t.singer_id = singer_id;
  // Log-uniform pitch so each octave is equally populated.
  t.f0_base = kF0Base.lo * std::pow(kF0Base.hi / kF0Base.lo, rng.uniform());
  t.f0_range_semitones = rng.uniform(kF0Range.lo, kF0Range.hi);
  t.vibrato_rate = rng.uniform(kVibratoRate.lo, kVibratoRate.hi);
  t.vibrato_depth = rng.uniform(kVibratoDepth.lo, kVibratoDepth.hi);
  t.harmonic_rolloff = rng.uniform(kRolloff.lo, kRolloff.hi);
  for (int i = 0; i < 3; ++i) t.formant_centers[i] = rng.uniform(kFormants[i].lo, kFormants[i].hi);
  t.breathiness = rng.uniform(kBreathiness.lo, kBreathiness.hi);
  return t;
}

SingerTimbre perturb_timbre(const SingerTimbre& source, double level, Rng& rng) {
  SingerTimbre t = source;
  if (level <= 0.0) return t;
  auto jitter = [&](double v, ParamRange r) { return clamp_to(v + rng.normal(0.0, level * (r.hi - r.lo)), r); };
  t.harmonic_rolloff = jitter(t.harmonic_rolloff, kRolloff);
  for (int i = 0; i < 3; ++i) t.formant_centers[i] = jitter(t.formant_centers[i], kFormants[i]);
  t.breathiness = jitter(t.breathiness, kBreathiness);
  return t;
}

InstrumentalStyle make_style(std::uint64_t master_seed, StyleId style_id) {
  Rng rng(derive_seed({master_seed, kStyleTag, style_id}));
  InstrumentalStyle s;
  s.style_id = style_id;
  s.root_semitone = static_cast<int>(rng.index(12));
  s.minor = rng.bernoulli(0.5);
  s.progression[0] = 0;
  for (int i = 1; i < 4; ++i) s.progression[i] = static_cast<int>(rng.index(7));
  s.tempo_bpm = rng.uniform(70.0, 150.0);
  s.brightness_hz = rng.uniform(1200.0, 6000.0);
  // Kick on the downbeat keeps every pattern rhythmically anchored.
  s.kick = static_cast<std::uint16_t>((rng.next() & 0xffff) | 0x1);
  s.kick &= 0x5555 | static_cast<std::uint16_t>(rng.next() & 0xffff);
  s.snare = static_cast<std::uint16_t>(rng.next() & 0xffff) & 0x5050;
  if (s.snare == 0) s.snare = 0x1010;
  s.hat = static_cast<std::uint16_t>(rng.next() & 0xffff) | 0x4444;
  s.drum_level = rng.uniform(0.3, 0.8);
  return s;
}

}  // namespace singerlab::synth
