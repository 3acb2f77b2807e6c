#include <algorithm>
#include <atomic>
#include <iostream>
#include <mutex>
#include <thread>

#include "pgu/log.hpp"
#include "pgu/parallel.hpp"

namespace pgu {
namespace {
std::atomic<std::size_t> g_threads{0};
std::atomic<int> g_level{static_cast<int>(log::Level::warning)};
std::mutex g_log_mutex;
}  // namespace

std::size_t default_threads() {
  const std::size_t n = g_threads.load();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_default_threads(std::size_t n) { g_threads.store(n); }

namespace log {

void set_level(Level level) { g_level.store(static_cast<int>(level)); }
Level level() { return static_cast<Level>(g_level.load()); }

void warn(std::string_view message) {
  if (g_level.load() < static_cast<int>(Level::warning)) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << "warning: " << message << '\n';
}

void info(std::string_view message) {
  if (g_level.load() < static_cast<int>(Level::info)) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << message << '\n';
}

}  // namespace log
}  // namespace pgu
