#pragma once

#include <string_view>

namespace maup::log {

void set_quiet(bool quiet) noexcept;
void warn(std::string_view message);
void info(std::string_view message);

} // namespace maup::log
