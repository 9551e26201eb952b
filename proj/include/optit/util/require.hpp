#pragma once
#include <stdexcept>
#include <string>

namespace optit {

// Contract checks that stay on in release builds.
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_state(bool cond, const std::string& msg) {
  if (!cond) throw std::logic_error(msg);
}

}  // namespace optit
