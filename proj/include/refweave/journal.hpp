#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

namespace refweave {

/// Single-file append-only store of JSON records keyed by (kind, id). The
/// last record for a key wins; compaction rewrites the file with only those.
class Journal {
 public:
  using Snapshot = std::map<std::string, std::map<std::string, nlohmann::json>>;

  explicit Journal(std::filesystem::path file, std::size_t compact_every = 256);

  void append(const std::string& kind, const std::string& id, const nlohmann::json& data);
  /// Latest record per kind and id. A torn final line is ignored.
  Snapshot load() const;
  void compact();

  const std::filesystem::path& path() const { return file_; }

 private:
  Snapshot read_file() const;

  std::filesystem::path file_;
  std::size_t compact_every_;
  std::size_t appended_ = 0;
  mutable std::mutex mutex_;
  std::ofstream out_;
};

}  // namespace refweave
