#pragma once

#include <functional>
#include <string>

namespace amoc::log {

enum class Level { info, warning };

using Sink = std::function<void(Level, const std::string&)>;

// Replaces the process-wide sink (default: stderr). Returns the previous one.
Sink set_sink(Sink sink);

void info(const std::string& message);
void warn(const std::string& message);

}  // namespace amoc::log
