#pragma once
// Small shared conveniences for the test binaries.

#include <filesystem>
#include <random>
#include <string>

#include "doctest.h"
#include "samtr/errors.hpp"

namespace testutil {

// Asserts that fn throws samtr::Error with the given code.
template <typename Fn>
void expect_code(Fn&& fn, samtr::ErrorCode code) {
  bool threw = false;
  try {
    fn();
  } catch (const samtr::Error& e) {
    threw = true;
    CHECK(e.code() == code);
  }
  CHECK(threw);
}

// Fresh scratch directory under the system temp dir, cleaned up on scope
// exit.  Name component keeps parallel test binaries out of each other's way.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
