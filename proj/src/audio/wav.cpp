#include "singerlab/audio/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "singerlab/audio/resample.hpp"
#include "singerlab/common/io.hpp"

namespace singerlab::audio {

namespace {

std::uint32_t read_u32(const char* p) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(p[0])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(p[3])) << 24;
}

std::uint16_t read_u16(const char* p) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]) |
                                    static_cast<unsigned char>(p[1]) << 8);
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const auto fail = [&](const std::string& why) {
    throw std::runtime_error("'" + path.string() + "': " + why);
  };
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    fail("not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t size = read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Some writers leave a bogus data size; clamp to the file end.
      if (id != "data") fail("truncated chunk '" + id + "'");
    }
    if (id == "fmt ") {
      if (size < 16) fail("short fmt chunk");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == 0xFFFE && size >= 26) format = read_u16(bytes.data() + body + 24);
    } else if (id == "data") {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
    }
    pos = body + size + (size & 1u);
  }
  if (channels == 0 || rate == 0) fail("missing fmt chunk");
  if (data == nullptr) fail("missing data chunk");

  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32) {
    fail("unsupported encoding (format " + std::to_string(format) + ", " + std::to_string(bits) +
         " bits); expected PCM16 or float32");
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frames = data_size / (bytes_per_sample * channels);
  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const char* p = data + (f * channels + c) * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(read_u16(p)) / 32768.0;
      } else {
        const std::uint32_t u = read_u32(p);
        float v;
        std::memcpy(&v, &u, sizeof(v));
        acc += v;
      }
    }
    clip.samples[f] = static_cast<float>(acc / channels);
  }
  for (float v : clip.samples) {
    if (!std::isfinite(v)) fail("non-finite sample");
  }
  return clip;
}

void write_wav_pcm16(const std::filesystem::path& path, const AudioClip& clip) {
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  std::string out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out += "RIFF";
  put_u32(out, 36 + 2 * n);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, 2 * n);
  for (float v : clip.samples) {
    const float c = std::clamp(v, -1.0f, 1.0f);
    const auto q = static_cast<std::int16_t>(std::lrint(c * 32767.0f));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  write_file_atomic(path, out);
}

AudioClip load_audio_16k(const std::filesystem::path& path) {
  AudioClip clip = read_wav(path);
  if (clip.sample_rate != kSampleRate) {
    clip.samples = resample(clip.samples, clip.sample_rate, kSampleRate);
    clip.sample_rate = kSampleRate;
  }
  return clip;
}

}  // namespace singerlab::audio
