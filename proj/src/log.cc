#include "sdoh/log.h"

#include <iostream>
#include <mutex>

namespace sdoh::log {
namespace {

std::mutex g_mu;
Sink g_sink;
bool g_quiet = false;

void emit(std::string_view level, std::string_view message) {
  std::lock_guard lock(g_mu);
  if (g_sink) {
    g_sink(level, message);
    return;
  }
  if (g_quiet && level == "info") return;
  std::cerr << "[" << level << "] " << message << '\n';
}

}  // namespace

void warn(std::string_view message) { emit("warn", message); }
void info(std::string_view message) { emit("info", message); }

Sink set_sink(Sink sink) {
  std::lock_guard lock(g_mu);
  Sink prev = std::move(g_sink);
  g_sink = std::move(sink);
  return prev;
}

void set_quiet(bool quiet) {
  std::lock_guard lock(g_mu);
  g_quiet = quiet;
}

}  // namespace sdoh::log
