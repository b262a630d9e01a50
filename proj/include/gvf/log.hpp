#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace gvf {

// Shared stderr logger. Level comes from GVF_LOG (error, info, debug);
// defaults to error so library users see nothing unless they opt in.
std::shared_ptr<spdlog::logger> logger();

}  // namespace gvf
