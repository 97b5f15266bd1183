#include "mx/util.hpp"

#include <cstring>
#include <mutex>

namespace mx {

LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("MX_LOG");
        if (!env) return LogLevel::kWarn;
        if (std::strcmp(env, "error") == 0) return LogLevel::kError;
        if (std::strcmp(env, "warn") == 0) return LogLevel::kWarn;
        if (std::strcmp(env, "info") == 0) return LogLevel::kInfo;
        if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
        return LogLevel::kWarn;
    }();
    return level;
}

void log_msg(LogLevel level, const std::string& msg) {
    if (int(level) > int(log_level())) return;
    static std::mutex mu;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::lock_guard<std::mutex> lock(mu);
    std::fprintf(stderr, "[mx:%s] %s\n", names[int(level)], msg.c_str());
}

}  // namespace mx
