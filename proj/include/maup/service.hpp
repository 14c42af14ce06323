#pragma once

#include "maup/run_store.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace maup {

struct HttpResponse {
	int status = 200;
	std::string body;
	std::string content_type = "application/json";
};

/// A malformed request; rendered as HTTP 400.
class BadRequest : public InvalidArgument {
public:
	using InvalidArgument::InvalidArgument;
};

/// A well-formed request for something the store does not hold; HTTP 404.
class NotFound : public Error {
public:
	using Error::Error;
};

/// Read-only query layer over sealed runs. All members are const and the
/// stores are immutable, so one instance serves concurrent requests.
class AnalyticsService {
public:
	explicit AnalyticsService(std::vector<RunStore> runs);
	static AnalyticsService open(const std::filesystem::path &root);

	using Query = std::map<std::string, std::string>;

	/// Routes one request; never throws. Unknown routes give 404.
	HttpResponse handle(std::string_view method, std::string_view path, const Query &query,
	                    std::string_view body) const;

	nlohmann::json runs() const;
	nlohmann::json map(const Query &q) const;
	nlohmann::json scatter(const Query &q) const;
	nlohmann::json attribution(const Query &q) const;
	nlohmann::json temporal(const Query &q) const;
	nlohmann::json meta(const Query &q) const;
	/// Body: {shape, scale, origin, tool, geometry | ids, subset_index?, expand?, run?}.
	nlohmann::json resolve_selection(const nlohmann::json &request) const;

private:
	const RunStore &run_for(const std::optional<std::string> &run_id) const;

	std::vector<RunStore> runs_;
};

struct ServeOptions {
	std::string host = "127.0.0.1";
	/// 0 picks a free port.
	int port = 8080;
	std::filesystem::path static_dir;
	int threads = 8;
};

/// httplib front end. bind() reports the port; run() blocks until stop().
class HttpServer {
public:
	HttpServer(const AnalyticsService &service, ServeOptions options);
	~HttpServer();
	HttpServer(const HttpServer &) = delete;
	HttpServer &operator=(const HttpServer &) = delete;

	/// Throws IoError("port busy") when the port cannot be bound.
	int bind();
	void run();
	/// Blocks until run() is accepting connections.
	void wait_until_ready() const;
	void stop();

private:
	struct Impl;
	std::unique_ptr<Impl> impl_;
};

} // namespace maup
