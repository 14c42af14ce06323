#include "maup/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace maup::log {

namespace {
std::atomic<bool> g_quiet{false};
std::mutex g_mutex;
} // namespace

void set_quiet(bool quiet) noexcept { g_quiet = quiet; }

void warn(std::string_view message) {
	std::lock_guard lock(g_mutex);
	std::clog << "[maup] warning: " << message << '\n';
}

void info(std::string_view message) {
	if (g_quiet) {
		return;
	}
	std::lock_guard lock(g_mutex);
	std::clog << "[maup] " << message << '\n';
}

} // namespace maup::log
