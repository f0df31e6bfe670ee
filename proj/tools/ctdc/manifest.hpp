#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace ctdc::cli {

// Provenance record written next to every command's outputs.
class Manifest {
 public:
  explicit Manifest(std::string command);

  nlohmann::ordered_json& config() { return config_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_input(const std::filesystem::path& p) { inputs_.push_back(p.string()); }
  void add_output(const std::filesystem::path& p) { outputs_.push_back(p.string()); }

  // Directory outputs get manifest.json inside; single files get <file>.manifest.json.
  static std::filesystem::path path_for_directory(const std::filesystem::path& dir);
  static std::filesystem::path path_for_file(const std::filesystem::path& file);

  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  std::optional<std::uint64_t> seed_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::chrono::system_clock::time_point started_;
  std::chrono::steady_clock::time_point clock_;
};

}  // namespace ctdc::cli
