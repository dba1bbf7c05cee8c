#include "cen/log.hpp"

#include <atomic>

namespace cen::log {

namespace {
std::atomic<Level> g_level{Level::Info};
}

void set_level(Level level) noexcept { g_level.store(level, std::memory_order_relaxed); }
Level level() noexcept { return g_level.load(std::memory_order_relaxed); }

}  // namespace cen::log
