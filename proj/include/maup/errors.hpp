#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace maup {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent input values (dimensions, ranges, configuration).
class InvalidArgument : public Error {
public:
	using Error::Error;
};

/// Malformed zone geometry. Carries the offending zone id.
class GeometryError : public Error {
public:
	GeometryError(std::int64_t zone_id, const std::string &what)
	    : Error("zone " + std::to_string(zone_id) + ": " + what), zone_id_(zone_id) {}

	std::int64_t zone_id() const noexcept { return zone_id_; }

private:
	std::int64_t zone_id_;
};

/// A statistic is undefined for the given input (e.g. zero variance).
class UndefinedStatistic : public Error {
public:
	explicit UndefinedStatistic(const std::string &reason) : Error(reason), reason_(reason) {}

	const std::string &reason() const noexcept { return reason_; }

private:
	std::string reason_;
};

/// File-level failures: unreadable files, malformed headers, bad formats.
class IoError : public Error {
public:
	using Error::Error;
};

} // namespace maup
