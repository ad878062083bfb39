#pragma once

#include <spdlog/spdlog.h>

namespace depf::log {

/// Applies DEPF_LOG (off | info | debug; default off) to the library logger.
/// Safe to call repeatedly; the environment is read once.
void init_from_env();

}  // namespace depf::log
