#pragma once

#include <iostream>
#include <mutex>
#include <string_view>

namespace imbassl {

inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

inline void log_warning(std::string_view message) {
  std::lock_guard lock(log_mutex());
  std::cerr << "warning: " << message << '\n';
}

inline void log_info(std::string_view message) {
  std::lock_guard lock(log_mutex());
  std::cerr << message << '\n';
}

}  // namespace imbassl
