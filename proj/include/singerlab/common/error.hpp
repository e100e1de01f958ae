#pragma once

#include <stdexcept>
#include <string>

namespace singerlab {

// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An upstream artifact is missing; names the command that produces it
// (CLI exit code 3).
class MissingArtifactError : public std::runtime_error {
 public:
  MissingArtifactError(const std::string& path, const std::string& producer)
      : std::runtime_error("missing artifact '" + path + "'; run `" + producer +
                           "` first"),
        path_(path),
        producer_(producer) {}

  const std::string& path() const { return path_; }
  const std::string& producer() const { return producer_; }

 private:
  std::string path_;
  std::string producer_;
};

// Training diverged (non-finite loss) or a frozen-parameter contract broke.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace singerlab
