#include "cbct/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace cbct {

LogLevel log_threshold() {
    static LogLevel cached = [] {
        const char* env = std::getenv("CBCT_PROJ_LOG");
        if (!env) return LogLevel::Warn;
        if (!std::strcmp(env, "debug")) return LogLevel::Debug;
        if (!std::strcmp(env, "info")) return LogLevel::Info;
        if (!std::strcmp(env, "warn")) return LogLevel::Warn;
        if (!std::strcmp(env, "error")) return LogLevel::Error;
        if (!std::strcmp(env, "off")) return LogLevel::Off;
        std::fprintf(stderr, "[cbct] unknown CBCT_PROJ_LOG value '%s', using warn\n", env);
        return LogLevel::Warn;
    }();
    return cached;
}

void log_message(LogLevel level, const std::string& msg) {
    if (level < log_threshold()) return;
    const char* tag = "info";
    switch (level) {
        case LogLevel::Debug: tag = "debug"; break;
        case LogLevel::Info: tag = "info"; break;
        case LogLevel::Warn: tag = "warn"; break;
        case LogLevel::Error: tag = "error"; break;
        case LogLevel::Off: return;
    }
    std::fprintf(stderr, "[cbct %s] %s\n", tag, msg.c_str());
}

} // namespace cbct
