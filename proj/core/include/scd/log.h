// scd/log.h
//
// Minimal stderr logging. Verbosity comes from the SCD_LOG environment
// variable (error, warn, info, debug); the default is info.

#ifndef SCD_LOG_H_
#define SCD_LOG_H_

#include <sstream>
#include <string>

namespace scd {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

LogLevel CurrentLogLevel();
void SetLogLevel(LogLevel level);
void LogMessage(LogLevel level, const std::string &message);

namespace internal {

class LogLine {
 public:
  explicit LogLine(LogLevel level) : level_(level) {}
  ~LogLine() { LogMessage(level_, stream_.str()); }
  std::ostringstream &stream() { return stream_; }

 private:
  LogLevel level_;
  std::ostringstream stream_;
};

}  // namespace internal
}  // namespace scd

#define SCD_LOG(level)                                             \
  if (::scd::LogLevel::level > ::scd::CurrentLogLevel()) {         \
  } else                                                           \
    ::scd::internal::LogLine(::scd::LogLevel::level).stream()

#endif  // SCD_LOG_H_
