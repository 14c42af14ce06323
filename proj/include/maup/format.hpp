#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace maup {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
	char buf[64];
	const auto res = std::to_chars(buf, buf + sizeof(buf), v);
	return std::string(buf, res.ptr);
}

inline std::string format_optional(const std::optional<double> &v) { return v ? format_double(*v) : std::string(); }

/// Strict full-string parse; nullopt on trailing garbage or empty input.
inline std::optional<double> parse_double(std::string_view s) {
	while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
		s.remove_prefix(1);
	}
	while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
		s.remove_suffix(1);
	}
	if (s.empty()) {
		return std::nullopt;
	}
	if (s.front() == '+') {
		s.remove_prefix(1);
	}
	double v = 0.0;
	const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
	if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
		return std::nullopt;
	}
	return v;
}

/// Splits on `sep` without quote handling; views point into `line`.
inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
	std::vector<std::string_view> out;
	std::size_t pos = 0;
	while (true) {
		const std::size_t next = line.find(sep, pos);
		if (next == std::string_view::npos) {
			out.push_back(line.substr(pos));
			return out;
		}
		out.push_back(line.substr(pos, next - pos));
		pos = next + 1;
	}
}

} // namespace maup
