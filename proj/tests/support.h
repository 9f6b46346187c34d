#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "swarmsense/error.h"

namespace testing {

// Fresh directory under the system temp dir, removed by the destructor.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

template <typename F>
swarmsense::ErrorCategory category_of(F&& f) {
  try {
    f();
  } catch (const swarmsense::Error& e) {
    return e.category();
  }
  throw std::runtime_error("expected a swarmsense::Error");
}

}  // namespace testing
