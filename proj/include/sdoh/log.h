#pragma once

#include <functional>
#include <string_view>

namespace sdoh::log {

// Warnings go to stderr unless a sink is installed (tests capture them).
void warn(std::string_view message);
void info(std::string_view message);

using Sink = std::function<void(std::string_view level, std::string_view message)>;
// Returns the previous sink; pass nullptr to restore stderr.
Sink set_sink(Sink sink);
void set_quiet(bool quiet);

}  // namespace sdoh::log
