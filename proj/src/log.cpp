#include "dynreg/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <mutex>

namespace dynreg {
namespace {

std::shared_ptr<spdlog::logger> logger() {
    static std::once_flag once;
    static std::shared_ptr<spdlog::logger> instance;
    std::call_once(once, [] {
        instance = spdlog::stderr_color_mt("dynreg");
        instance->set_pattern("[%l] %v");
        instance->set_level(spdlog::level::warn);
    });
    return instance;
}

}  // namespace

void init_logging() {
    auto log = logger();
    if (const char* env = std::getenv("DYNREG_LOG_LEVEL")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to "off"; only accept that when asked for.
        if (level != spdlog::level::off || std::string(env) == "off") {
            log->set_level(level);
        } else {
            log->warn("ignoring unknown DYNREG_LOG_LEVEL '{}'", env);
        }
    }
}

void log_debug(const std::string& message) { logger()->debug(message); }
void log_info(const std::string& message) { logger()->info(message); }
void log_warn(const std::string& message) { logger()->warn(message); }
void log_error(const std::string& message) { logger()->error(message); }

}  // namespace dynreg
