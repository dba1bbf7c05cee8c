#pragma once

#include <iostream>
#include <sstream>
#include <string_view>

namespace cen::log {

enum class Level { Quiet = 0, Info = 1, Debug = 2 };

void set_level(Level level) noexcept;
Level level() noexcept;

template <typename... Args>
void info(const Args&... args) {
  if (level() < Level::Info) return;
  std::ostringstream os;
  (os << ... << args);
  std::clog << "[cen] " << os.str() << '\n';
}

template <typename... Args>
void debug(const Args&... args) {
  if (level() < Level::Debug) return;
  std::ostringstream os;
  (os << ... << args);
  std::clog << "[cen:debug] " << os.str() << '\n';
}

}  // namespace cen::log
