#include "depf/log.hpp"

#include <cstdlib>
#include <mutex>
#include <string_view>

namespace depf::log {

void init_from_env() {
  static std::once_flag once;
  std::call_once(once, [] {
    const char* env = std::getenv("DEPF_LOG");
    const std::string_view level = env ? env : "off";
    if (level == "debug") {
      spdlog::set_level(spdlog::level::debug);
    } else if (level == "info") {
      spdlog::set_level(spdlog::level::info);
    } else {
      spdlog::set_level(spdlog::level::off);
    }
  });
}

}  // namespace depf::log
