#pragma once

#include <string>

namespace dynreg {

/**
 * @brief Configure the harness logger.
 *
 * Verbosity comes from the DYNREG_LOG_LEVEL environment variable
 * (trace, debug, info, warn, error, off; default warn). Messages go to stderr.
 */
void init_logging();

void log_debug(const std::string& message);
void log_info(const std::string& message);
void log_warn(const std::string& message);
void log_error(const std::string& message);

}  // namespace dynreg
