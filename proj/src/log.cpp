#include "roa/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include <cstdlib>
#include <memory>

namespace roa {

namespace {

spdlog::level::level_enum level_from_env() {
  const char* value = std::getenv("ROA_LOG");
  if (value == nullptr || *value == '\0') return spdlog::level::warn;
  // Unknown names map to off.
  return spdlog::level::from_str(value);
}

std::shared_ptr<spdlog::logger> make_logger() {
  auto logger = std::make_shared<spdlog::logger>("roa", std::make_shared<spdlog::sinks::stderr_sink_mt>());
  logger->set_level(level_from_env());
  logger->set_pattern("[%l] %v");
  return logger;
}

}  // namespace

spdlog::logger& log() {
  static const std::shared_ptr<spdlog::logger> logger = make_logger();
  return *logger;
}

}  // namespace roa
