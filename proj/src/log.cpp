#include "gvf/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace gvf {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
    auto lg = std::make_shared<spdlog::logger>("gvf", sink);
    lg->set_pattern("[gvf %l] %v");
    const char* env = std::getenv("GVF_LOG");
    std::string level = env ? env : "error";
    if (level == "debug") {
      lg->set_level(spdlog::level::debug);
    } else if (level == "info") {
      lg->set_level(spdlog::level::info);
    } else {
      lg->set_level(spdlog::level::err);
    }
    return lg;
  }();
  return instance;
}

}  // namespace gvf
