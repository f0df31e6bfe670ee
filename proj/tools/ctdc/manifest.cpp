#include "manifest.hpp"

#include <ctime>

#include "ctdc/io.hpp"
#include "ctdc/version.hpp"

namespace ctdc::cli {

namespace {

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Manifest::Manifest(std::string command)
    : command_(std::move(command)), started_(std::chrono::system_clock::now()), clock_(std::chrono::steady_clock::now()) {}

std::filesystem::path Manifest::path_for_directory(const std::filesystem::path& dir) { return dir / "manifest.json"; }

std::filesystem::path Manifest::path_for_file(const std::filesystem::path& file) {
  std::filesystem::path p = file;
  p += ".manifest.json";
  return p;
}

void Manifest::write(const std::filesystem::path& path) const {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["version"] = kVersion;
  j["config"] = config_;
  if (seed_) j["seed"] = *seed_;
  else j["seed"] = nullptr;
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  j["started_at"] = utc_timestamp(started_);
  j["wall_seconds"] = wall;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace ctdc::cli
