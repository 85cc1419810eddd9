// scd/log.cc

#include "scd/log.h"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <mutex>

namespace scd {
namespace {

LogLevel LevelFromEnv() {
  const char *env = std::getenv("SCD_LOG");
  if (env == nullptr) return LogLevel::kInfo;
  if (std::strcmp(env, "error") == 0) return LogLevel::kError;
  if (std::strcmp(env, "warn") == 0) return LogLevel::kWarn;
  if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
  return LogLevel::kInfo;
}

std::atomic<int> &LevelStorage() {
  static std::atomic<int> level{static_cast<int>(LevelFromEnv())};
  return level;
}

const char *LevelTag(LogLevel level) {
  switch (level) {
    case LogLevel::kError: return "E";
    case LogLevel::kWarn: return "W";
    case LogLevel::kInfo: return "I";
    case LogLevel::kDebug: return "D";
  }
  return "?";
}

}  // namespace

LogLevel CurrentLogLevel() {
  return static_cast<LogLevel>(LevelStorage().load());
}

void SetLogLevel(LogLevel level) { LevelStorage().store(static_cast<int>(level)); }

void LogMessage(LogLevel level, const std::string &message) {
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[scd " << LevelTag(level) << "] " << message << '\n';
}

}  // namespace scd
