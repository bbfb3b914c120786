#pragma once

#include <filesystem>
#include <string>

#include "refweave/config.hpp"

namespace refweave::testing {

/// Directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path source_dir();
std::filesystem::path data_path(const std::string& relative);  // under tests/data
std::filesystem::path catalog_path();
std::filesystem::path fixture_store_path();  // committed replay store
std::filesystem::path corpus_path();

/// Mock LLM with heuristic fallback, fast retries, the given network mode.
Config offline_config(const std::filesystem::path& data_dir, NetworkMode mode = NetworkMode::Live,
                      const std::filesystem::path& store = {});

std::string slurp(const std::filesystem::path& file);

}  // namespace refweave::testing
