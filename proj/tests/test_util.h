// Helpers shared by the unit tests.

#ifndef SCD_TESTS_TEST_UTIL_H_
#define SCD_TESTS_TEST_UTIL_H_

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <system_error>

#include <gtest/gtest.h>
#include <unistd.h>

#include "scd/error.h"

namespace scd {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("scd_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string ReadText(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void WriteText(const std::filesystem::path &p, const std::string &s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace scd

#define EXPECT_SCD_ERROR(stmt, expected_code)                              \
  do {                                                                     \
    try {                                                                  \
      (void)(stmt);                                                        \
      ADD_FAILURE() << "expected scd::Error from " #stmt;                  \
    } catch (const ::scd::Error &e_) {                                     \
      EXPECT_EQ(e_.code(), expected_code)                                  \
          << ::scd::ErrorCodeName(e_.code()) << ": " << e_.detail();       \
    }                                                                      \
  } while (0)

#endif  // SCD_TESTS_TEST_UTIL_H_
