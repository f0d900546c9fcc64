#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace epifilter {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

// Verbosity is taken from EPIFILTER_LOG (error|warn|info|debug); default warn.
inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("EPIFILTER_LOG");
    if (!env) return LogLevel::warn;
    std::string v = env;
    if (v == "error") return LogLevel::error;
    if (v == "info") return LogLevel::info;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::warn;
  }();
  return level;
}

inline void log_msg(LogLevel lvl, const std::string& msg) {
  if (lvl > log_level()) return;
  const char* tag = lvl == LogLevel::error  ? "error"
                    : lvl == LogLevel::warn ? "warn"
                    : lvl == LogLevel::info ? "info"
                                            : "debug";
  std::cerr << "[" << tag << "] " << msg << "\n";
}

inline void log_error(const std::string& m) { log_msg(LogLevel::error, m); }
inline void log_warn(const std::string& m) { log_msg(LogLevel::warn, m); }
inline void log_info(const std::string& m) { log_msg(LogLevel::info, m); }
inline void log_debug(const std::string& m) { log_msg(LogLevel::debug, m); }

}  // namespace epifilter
