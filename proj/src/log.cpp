#include "amoc/log.hpp"

#include <iostream>
#include <mutex>

namespace amoc::log {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

Sink& current_sink() {
  static Sink sink = [](Level level, const std::string& message) {
    std::cerr << (level == Level::warning ? "warning: " : "") << message << '\n';
  };
  return sink;
}

void emit(Level level, const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (current_sink()) current_sink()(level, message);
}

}  // namespace

Sink set_sink(Sink sink) {
  std::lock_guard lock(sink_mutex());
  Sink previous = std::move(current_sink());
  current_sink() = std::move(sink);
  return previous;
}

void info(const std::string& message) { emit(Level::info, message); }
void warn(const std::string& message) { emit(Level::warning, message); }

}  // namespace amoc::log
