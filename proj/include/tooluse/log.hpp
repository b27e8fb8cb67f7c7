#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace tooluse {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Level comes from TOOLUSE_LOG (error|warn|info|debug), default info.
inline LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("TOOLUSE_LOG");
        if (!env) return LogLevel::Info;
        std::string_view s(env);
        if (s == "error") return LogLevel::Error;
        if (s == "warn") return LogLevel::Warn;
        if (s == "debug") return LogLevel::Debug;
        return LogLevel::Info;
    }();
    return level;
}

inline void log_line(LogLevel lvl, std::string_view tag, const std::string& msg) {
    if (lvl > log_level()) return;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    std::cerr << "[" << tag << "] " << msg << "\n";
}

inline void log_error(const std::string& msg) { log_line(LogLevel::Error, "error", msg); }
inline void log_warn(const std::string& msg) { log_line(LogLevel::Warn, "warn", msg); }
inline void log_info(const std::string& msg) { log_line(LogLevel::Info, "info", msg); }
inline void log_debug(const std::string& msg) { log_line(LogLevel::Debug, "debug", msg); }

}  // namespace tooluse
