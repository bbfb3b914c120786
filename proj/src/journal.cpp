#include "refweave/journal.hpp"

#include <spdlog/spdlog.h>

#include "refweave/error.hpp"

namespace refweave {

namespace fs = std::filesystem;

Journal::Journal(fs::path file, std::size_t compact_every)
    : file_(std::move(file)), compact_every_(compact_every) {
  if (file_.has_parent_path()) fs::create_directories(file_.parent_path());
  out_.open(file_, std::ios::app | std::ios::binary);
  if (!out_) throw Error(Errc::ConfigError, "cannot open journal " + file_.string());
}

void Journal::append(const std::string& kind, const std::string& id, const nlohmann::json& data) {
  nlohmann::json line = {{"kind", kind}, {"id", id}, {"data", data}};
  {
    std::lock_guard lock(mutex_);
    out_ << line.dump() << '\n';
    out_.flush();
    ++appended_;
    if (compact_every_ == 0 || appended_ < compact_every_) return;
  }
  compact();
}

Journal::Snapshot Journal::read_file() const {
  Snapshot snapshot;
  std::ifstream in(file_, std::ios::binary);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto rec = nlohmann::json::parse(line);
      snapshot[rec.at("kind").get<std::string>()][rec.at("id").get<std::string>()] = rec.at("data");
    } catch (const nlohmann::json::exception& e) {
      spdlog::warn("journal {}:{} skipped: {}", file_.string(), lineno, e.what());
    }
  }
  return snapshot;
}

Journal::Snapshot Journal::load() const {
  std::lock_guard lock(mutex_);
  return read_file();
}

void Journal::compact() {
  std::lock_guard lock(mutex_);
  const auto snapshot = read_file();
  const auto tmp = fs::path(file_.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    for (const auto& [kind, records] : snapshot) {
      for (const auto& [id, data] : records) {
        out << nlohmann::json{{"kind", kind}, {"id", id}, {"data", data}}.dump() << '\n';
      }
    }
  }
  out_.close();
  fs::rename(tmp, file_);
  out_.open(file_, std::ios::app | std::ios::binary);
  appended_ = 0;
}

}  // namespace refweave
