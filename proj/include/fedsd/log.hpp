#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace fedsd {

using WarningHandler = std::function<void(std::string_view)>;

namespace detail {
struct WarningState {
  std::mutex mutex;
  WarningHandler handler = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
};
inline WarningState& warning_state() {
  static WarningState state;
  return state;
}
}  // namespace detail

/// Replaces the process-wide warning sink and returns the previous one.
inline WarningHandler set_warning_handler(WarningHandler handler) {
  auto& st = detail::warning_state();
  std::lock_guard lock(st.mutex);
  std::swap(st.handler, handler);
  return handler;
}

inline void warn(std::string_view message) {
  auto& st = detail::warning_state();
  std::lock_guard lock(st.mutex);
  if (st.handler) st.handler(message);
}

}  // namespace fedsd
