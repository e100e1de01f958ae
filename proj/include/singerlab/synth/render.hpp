#pragma once

#include <optional>
#include <string>
#include <vector>

#include "singerlab/audio/audio_clip.hpp"
#include "singerlab/synth/timbre.hpp"

namespace singerlab::synth {

enum class Genre { kDry, kReverb, kVocoder, kElectronic, kUnknown };

const char* to_string(Genre g);
Genre genre_from_string(const std::string& s);
inline constexpr std::array<Genre, 4> kSynthGenres{Genre::kDry, Genre::kReverb, Genre::kVocoder,
                                                   Genre::kElectronic};

struct StemSet {
  audio::AudioClip vocal;
  audio::AudioClip instrumental;
  audio::AudioClip mixture;
};

struct TrackRecord {
  std::string track_id;
  SingerId singer_id = 0;
  Genre genre = Genre::kDry;
  StyleId instrumental_style_id = 0;
  StemSet stems;
  std::vector<bool> vocal_mask;  // one flag per 3 s window
  bool is_clone = false;
  std::optional<SingerId> clone_source_singer;
  SingerTimbre rendered_timbre;  // after any clone perturbation

  double duration_s() const { return stems.mixture.duration_s(); }
  double vocal_fraction() const;
};

inline constexpr double kMinTrackSeconds = 24.0;
inline constexpr double kMaxTrackSeconds = 120.0;

// Ground-truth vocal mask drawn from the track seed: each 3 s window goes
// silent with probability silence_prob, capped so at least 75% of windows
// stay vocal.
std::vector<bool> draw_vocal_mask(std::uint64_t seed, double duration_s, double silence_prob = 0.1);

struct RenderOptions {
  std::optional<std::vector<bool>> vocal_mask;  // overrides draw_vocal_mask
  double silence_prob = 0.1;
};

// Renders vocal stem (additive harmonic voice following a seeded melodic
// walk, genre effect applied), instrumental stem (sawtooth chord pad plus
// filtered-noise drums in `style`) and their sample-wise sum. Vocal and
// instrumental are balanced to RMS ratio 1:1, or 1:2 for electronic.
// Throws std::invalid_argument unless duration_s is in [24, 120].
TrackRecord render_track(const SingerTimbre& timbre, const InstrumentalStyle& style, Genre genre,
                         std::uint64_t seed, double duration_s, const RenderOptions& options = {});

// A cloned-voice track: source timbre perturbed by perturb_timbre(level)
// over an instrumental in a style the source never used. Throws
// std::invalid_argument if foreign_style is in source_real_styles.
TrackRecord clone_track(const SingerTimbre& source_timbre, const InstrumentalStyle& foreign_style,
                        const std::vector<StyleId>& source_real_styles, double perturbation_level,
                        Genre genre, std::uint64_t seed, double duration_s);

// Voice only, dry, no gating: used by the separability and clone-fidelity
// checks to compare timbres over an identical pitch contour.
audio::AudioClip render_voice_only(const SingerTimbre& timbre, std::uint64_t melody_seed, double duration_s);

}  // namespace singerlab::synth
