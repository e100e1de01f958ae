#pragma once

#include <filesystem>

#include "singerlab/audio/audio_clip.hpp"

namespace singerlab::audio {

// Reads RIFF/WAVE PCM 16-bit or IEEE float 32-bit; multichannel input is
// down-mixed to mono. The clip keeps the file's sample rate.
AudioClip read_wav(const std::filesystem::path& path);

// Writes mono 16-bit PCM; samples are clipped to [-1, 1].
void write_wav_pcm16(const std::filesystem::path& path, const AudioClip& clip);

// Reads a file and brings it to kSampleRate (windowed-sinc resampling when
// the source rate differs).
AudioClip load_audio_16k(const std::filesystem::path& path);

}  // namespace singerlab::audio
