#pragma once

#include <spdlog/spdlog.h>

namespace roa {

/// Logger writing to stderr. Level comes from ROA_LOG (error|info|debug),
/// defaulting to error.
spdlog::logger& log();

}  // namespace roa
