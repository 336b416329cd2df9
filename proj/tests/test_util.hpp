#pragma once

#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>

// Fresh scratch directory under the system temp path, removed on destruction.
struct ScratchDir {
  std::filesystem::path path;

  ScratchDir() {
    auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int i = 0; i < 64; ++i) {
      auto candidate = base / ("tcat-test-" + std::to_string(rd()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create scratch directory");
  }

  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::string file(const std::string& name) const { return (path / name).string(); }
};
