#include "driveby/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace driveby::log {

namespace {

Level from_env() {
  const char* v = std::getenv("DRIVEBY_LOG");
  if (!v) return Level::warn;
  const std::string s(v);
  if (s == "error") return Level::error;
  if (s == "info") return Level::info;
  if (s == "debug") return Level::debug;
  return Level::warn;
}

std::atomic<int>& current() {
  static std::atomic<int> level{static_cast<int>(from_env())};
  return level;
}

constexpr const char* kNames[] = {"error", "warn", "info", "debug"};

}  // namespace

Level threshold() { return static_cast<Level>(current().load()); }
void set_threshold(Level level) { current().store(static_cast<int>(level)); }

void write(Level level, std::string_view message) {
  if (static_cast<int>(level) > current().load()) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << "[driveby " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace driveby::log
