#include "maup/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

namespace maup {

namespace {

using Query = AnalyticsService::Query;

const std::string &required(const Query &q, const std::string &key) {
	const auto it = q.find(key);
	if (it == q.end() || it->second.empty()) {
		throw BadRequest("missing parameter '" + key + "'");
	}
	return it->second;
}

std::optional<std::string> optional_param(const Query &q, const std::string &key) {
	const auto it = q.find(key);
	if (it == q.end() || it->second.empty()) {
		return std::nullopt;
	}
	return it->second;
}

std::size_t parse_index(std::string_view text, const std::string &what) {
	std::size_t v = 0;
	const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
	if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
		throw BadRequest(what + " must be a non-negative integer, got '" + std::string(text) + "'");
	}
	return v;
}

Shape parse_shape(const std::string &s) {
	try {
		return shape_from_string(s);
	} catch (const InvalidArgument &e) {
		throw BadRequest(e.what());
	}
}

GridSize parse_scale(const std::string &s) {
	GridSize size;
	try {
		size = GridSize::parse(s);
	} catch (const InvalidArgument &e) {
		throw BadRequest(e.what());
	}
	if (standard_level(size) < 0) {
		throw BadRequest("scale must be one of 50x25, 100x50, 200x100");
	}
	return size;
}

ColorMetric parse_metric(const std::string &s) {
	try {
		return color_metric_from_string(s);
	} catch (const InvalidArgument &e) {
		throw BadRequest(e.what());
	}
}

nlohmann::json optional_json(const std::optional<double> &v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json bbox_json(const BBox &b) {
	return {{"lon_min", b.lon_min}, {"lon_max", b.lon_max}, {"lat_min", b.lat_min}, {"lat_max", b.lat_max}};
}

nlohmann::json vsup_cell_json(const VsupCell &c) { return {{"level", c.error_level}, {"bin", c.value_bin}}; }

const ComboData &combo_for(const RunStore &run, const Query &q) {
	const ComboKey key{parse_shape(required(q, "shape")), parse_scale(required(q, "scale"))};
	const ComboData *c = run.find(key);
	if (c == nullptr) {
		throw NotFound("run " + run.run_id() + " has no " + key.dir_name() + " products");
	}
	return *c;
}

nlohmann::json header(const RunStore &run, const ComboKey &key) {
	return {{"run_id", run.run_id()}, {"shape", to_string(key.shape)}, {"scale", key.scale.label()}};
}

// --- selection geometry -----------------------------------------------------------

struct Vec2 {
	double x = 0.0;
	double y = 0.0;
};

double finite_number(const nlohmann::json &j, const char *key) {
	if (!j.contains(key) || !j.at(key).is_number()) {
		throw BadRequest(std::string("malformed geometry: '") + key + "' must be a number");
	}
	const double v = j.at(key).get<double>();
	if (!std::isfinite(v)) {
		throw BadRequest(std::string("malformed geometry: '") + key + "' is not finite");
	}
	return v;
}

Vec2 parse_vertex(const nlohmann::json &j) {
	if (j.is_array()) {
		if (j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
			throw BadRequest("malformed geometry: lasso vertices must be [x, y]");
		}
		const Vec2 v{j[0].get<double>(), j[1].get<double>()};
		if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
			throw BadRequest("malformed geometry: lasso vertex is not finite");
		}
		return v;
	}
	if (j.is_object()) {
		return {finite_number(j, "x"), finite_number(j, "y")};
	}
	throw BadRequest("malformed geometry: lasso vertices must be [x, y] or {x, y}");
}

/// Even-odd rule.
bool inside_polygon(const std::vector<Vec2> &poly, Vec2 p) noexcept {
	bool inside = false;
	for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
		const Vec2 a = poly[i];
		const Vec2 b = poly[j];
		if ((a.y > p.y) != (b.y > p.y)) {
			const double x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
			if (p.x < x_cross) {
				inside = !inside;
			}
		}
	}
	return inside;
}

struct Candidate {
	std::size_t region;
	Vec2 at;
	double radius = 0.0; // attribution dots only
};

enum class Tool { point, rect, lasso };

Tool parse_tool(const std::string &s) {
	if (s == "point") {
		return Tool::point;
	}
	if (s == "rect") {
		return Tool::rect;
	}
	if (s == "lasso") {
		return Tool::lasso;
	}
	throw BadRequest("tool must be point, rect or lasso");
}

/// Rect and lasso membership by representative point. Point selection is
/// origin specific and handled by the caller.
std::vector<std::size_t> select_area(Tool tool, const nlohmann::json &geometry, const std::vector<Candidate> &cands) {
	std::vector<std::size_t> out;
	if (tool == Tool::rect) {
		double x0 = finite_number(geometry, "x0");
		double x1 = finite_number(geometry, "x1");
		double y0 = finite_number(geometry, "y0");
		double y1 = finite_number(geometry, "y1");
		if (x0 > x1) {
			std::swap(x0, x1);
		}
		if (y0 > y1) {
			std::swap(y0, y1);
		}
		for (const auto &c : cands) {
			if (c.at.x >= x0 && c.at.x <= x1 && c.at.y >= y0 && c.at.y <= y1) {
				out.push_back(c.region);
			}
		}
	} else {
		if (!geometry.contains("points") || !geometry.at("points").is_array()) {
			throw BadRequest("malformed geometry: lasso needs a 'points' array");
		}
		std::vector<Vec2> poly;
		for (const auto &v : geometry.at("points")) {
			poly.push_back(parse_vertex(v));
		}
		if (poly.size() < 3) {
			throw BadRequest("malformed geometry: lasso needs at least 3 vertices");
		}
		for (const auto &c : cands) {
			if (inside_polygon(poly, c.at)) {
				out.push_back(c.region);
			}
		}
	}
	std::sort(out.begin(), out.end());
	return out;
}

Vec2 parse_point(const nlohmann::json &geometry) { return {finite_number(geometry, "x"), finite_number(geometry, "y")}; }

/// Nearest candidate; ties to the lowest region id. With `within_radius`, only
/// candidates whose disc contains the point qualify.
std::vector<std::size_t> select_nearest(Vec2 p, const std::vector<Candidate> &cands, bool within_radius) {
	std::optional<std::size_t> best;
	double best_d2 = std::numeric_limits<double>::infinity();
	for (const auto &c : cands) {
		const double dx = c.at.x - p.x;
		const double dy = c.at.y - p.y;
		const double d2 = dx * dx + dy * dy;
		if (within_radius && d2 > c.radius * c.radius) {
			continue;
		}
		if (d2 < best_d2 || (d2 == best_d2 && best && c.region < *best)) {
			best_d2 = d2;
			best = c.region;
		}
	}
	return best ? std::vector<std::size_t>{*best} : std::vector<std::size_t>{};
}

std::vector<GridSize> expansion_targets(const nlohmann::json &request, const GridSize &origin) {
	std::vector<GridSize> targets{origin};
	if (!request.contains("expand") || request.at("expand").is_null()) {
		return targets;
	}
	const auto &e = request.at("expand");
	if ((e.is_boolean() && e.get<bool>()) || (e.is_string() && e.get<std::string>() == "all")) {
		targets.assign(std::begin(kStandardScales), std::end(kStandardScales));
		return targets;
	}
	if (e.is_boolean()) {
		return targets;
	}
	if (!e.is_array()) {
		throw BadRequest("expand must be a list of scales, \"all\" or a boolean");
	}
	for (const auto &s : e) {
		if (!s.is_string()) {
			throw BadRequest("expand entries must be scale labels");
		}
		const GridSize size = parse_scale(s.get<std::string>());
		if (std::find(targets.begin(), targets.end(), size) == targets.end()) {
			targets.push_back(size);
		}
	}
	std::sort(targets.begin(), targets.end(),
	          [](const GridSize &a, const GridSize &b) { return standard_level(a) < standard_level(b); });
	return targets;
}

std::vector<std::size_t> map_to_scale(const std::vector<std::size_t> &ids, const GridSize &from, const GridSize &to) {
	if (from == to) {
		return ids;
	}
	std::set<std::size_t> out;
	const bool finer = standard_level(to) > standard_level(from);
	for (const std::size_t id : ids) {
		if (finer) {
			for (const std::size_t c : child_cells(from, id, to)) {
				out.insert(c);
			}
		} else {
			out.insert(parent_cell(from, id, to));
		}
	}
	return {out.begin(), out.end()};
}

HttpResponse json_response(int status, const nlohmann::json &j) { return {status, j.dump(), "application/json"}; }

HttpResponse error_response(int status, const std::string &message) {
	return json_response(status, {{"error", message}, {"status", status}});
}

} // namespace

AnalyticsService::AnalyticsService(std::vector<RunStore> runs) : runs_(std::move(runs)) {
	if (runs_.empty()) {
		throw InvalidArgument("analytics service needs at least one sealed run");
	}
}

AnalyticsService AnalyticsService::open(const std::filesystem::path &root) { return AnalyticsService(open_stores(root)); }

const RunStore &AnalyticsService::run_for(const std::optional<std::string> &run_id) const {
	if (!run_id) {
		if (runs_.size() == 1) {
			return runs_.front();
		}
		throw BadRequest("several runs are served; pass 'run'");
	}
	for (const auto &r : runs_) {
		if (r.run_id() == *run_id) {
			return r;
		}
	}
	throw NotFound("unknown run '" + *run_id + "'");
}

nlohmann::json AnalyticsService::runs() const {
	nlohmann::json list = nlohmann::json::array();
	for (const auto &r : runs_) {
		const auto &m = r.manifest();
		nlohmann::json combos = nlohmann::json::array();
		for (const auto &c : m.combos) {
			combos.push_back({{"shape", to_string(c.shape)}, {"scale", c.scale.label()}});
		}
		list.push_back({{"run_id", m.run_id},
		                {"sealed", m.sealed},
		                {"combinations", std::move(combos)},
		                {"global_rmse", m.rmse},
		                {"train_days", m.train_days},
		                {"test_days", m.test_days},
		                {"slots_per_day", m.slots_per_day}});
	}
	return {{"runs", std::move(list)}};
}

nlohmann::json AnalyticsService::map(const Query &q) const {
	const RunStore &run = run_for(optional_param(q, "run"));
	const ComboData &c = combo_for(run, q);
	nlohmann::json cells = nlohmann::json::array();
	for (std::size_t i = 0; i < c.diags.size(); ++i) {
		const auto &d = c.diags[i];
		cells.push_back({{"region_id", d.region},
		                 {"vsup", vsup_cell_json(c.vsup.cells[i])},
		                 {"mean_volume", d.mean_volume},
		                 {"mean_abs_error", d.mean_abs_error}});
	}
	auto out = header(run, c.key);
	out["w"] = c.grid.w();
	out["h"] = c.grid.h();
	out["bbox"] = bbox_json(c.grid.bbox());
	out["vsup"] = {{"value_bins", kValueBins},
	               {"error_levels", kErrorLevels},
	               {"max_value", c.vsup.scale.max_value},
	               {"max_error", c.vsup.scale.max_error}};
	out["cells"] = std::move(cells);
	return out;
}

nlohmann::json AnalyticsService::scatter(const Query &q) const {
	const RunStore &run = run_for(optional_param(q, "run"));
	const ComboData &c = combo_for(run, q);
	nlohmann::json points = nlohmann::json::array();
	for (const auto &p : c.scatter) {
		points.push_back({{"region_id", p.region},
		                  {"z_value", p.z_value},
		                  {"z_lag", p.z_lag},
		                  {"lisa", p.lisa},
		                  {"z_error", optional_json(p.z_error)}});
	}
	auto out = header(run, c.key);
	out["points"] = std::move(points);
	out["summary"] = summary_to_json(c.moran);
	return out;
}

nlohmann::json AnalyticsService::attribution(const Query &q) const {
	const RunStore &run = run_for(optional_param(q, "run"));
	const Shape shape = parse_shape(required(q, "shape"));
	const ColorMetric metric = parse_metric(optional_param(q, "metric").value_or("prmse"));
	const HierarchyArrangement *arr = run.layout(shape);
	if (arr == nullptr) {
		throw NotFound("run " + run.run_id() + " has no " + to_string(shape) + " layout");
	}
	nlohmann::json out = layout_to_json(*arr, metric);
	if (const auto scale = optional_param(q, "scale")) {
		const GridSize size = parse_scale(*scale);
		if (!arr->levels_present[static_cast<std::size_t>(standard_level(size))]) {
			throw NotFound("layout has no " + size.label() + " level");
		}
		nlohmann::json kept = nlohmann::json::array();
		for (auto &plot : out.at("plots")) {
			if (plot.at("scale") == size.label()) {
				kept.push_back(std::move(plot));
			}
		}
		out["plots"] = std::move(kept);
	}
	out["run_id"] = run.run_id();
	out["shape"] = to_string(shape);
	nlohmann::json levels = nlohmann::json::array();
	for (int l = 0; l < 3; ++l) {
		if (arr->levels_present[static_cast<std::size_t>(l)]) {
			levels.push_back(kStandardScales[l].label());
		}
	}
	out["scales_present"] = std::move(levels);
	return out;
}

nlohmann::json AnalyticsService::temporal(const Query &q) const {
	const RunStore &run = run_for(optional_param(q, "run"));
	const ComboData &c = combo_for(run, q);
	const std::size_t region = parse_index(required(q, "region"), "region");
	if (region >= c.grid.cell_count()) {
		throw BadRequest("region " + std::to_string(region) + " outside " + c.key.scale.label());
	}
	const int days = run.manifest().test_days;
	const int spd = run.manifest().slots_per_day;
	const auto cells = temporal_cells(c.observed_test, c.predicted, region, c.temporal, days, spd);
	nlohmann::json matrix = nlohmann::json::array();
	nlohmann::json observed = nlohmann::json::array();
	nlohmann::json predicted = nlohmann::json::array();
	for (int d = 0; d < days; ++d) {
		nlohmann::json row = nlohmann::json::array();
		nlohmann::json obs_row = nlohmann::json::array();
		nlohmann::json pred_row = nlohmann::json::array();
		for (int s = 0; s < spd; ++s) {
			const auto t = static_cast<std::size_t>(d * spd + s);
			row.push_back(vsup_cell_json(cells[static_cast<std::size_t>(d)][static_cast<std::size_t>(s)]));
			obs_row.push_back(c.observed_test.at(t, region));
			pred_row.push_back(c.predicted.at(t, region));
		}
		matrix.push_back(std::move(row));
		observed.push_back(std::move(obs_row));
		predicted.push_back(std::move(pred_row));
	}
	auto out = header(run, c.key);
	out["region_id"] = region;
	out["days"] = days;
	out["slots_per_day"] = spd;
	out["test_start_date"] = c.meta.at("test").at("start_date");
	out["vsup_scale"] = {{"max_value", c.temporal.max_value}, {"max_error", c.temporal.max_error}};
	out["cells"] = std::move(matrix);
	out["observed"] = std::move(observed);
	out["predicted"] = std::move(predicted);
	return out;
}

nlohmann::json AnalyticsService::meta(const Query &q) const {
	const RunStore &run = run_for(optional_param(q, "run"));
	const ComboData &c = combo_for(run, q);
	auto out = c.meta;
	out["run_id"] = run.run_id();
	out["cleaning_report"] = run.cleaning_report();
	out["undefined_regions"] = std::count_if(c.diags.begin(), c.diags.end(),
	                                         [](const RegionDiagnostics &d) { return !d.fully_defined(); });
	return out;
}

nlohmann::json AnalyticsService::resolve_selection(const nlohmann::json &request) const {
	if (!request.is_object()) {
		throw BadRequest("selection request must be a JSON object");
	}
	const auto str = [&](const char *key) -> std::string {
		if (!request.contains(key) || !request.at(key).is_string()) {
			throw BadRequest(std::string("selection needs string field '") + key + "'");
		}
		return request.at(key).get<std::string>();
	};
	std::optional<std::string> run_id;
	if (request.contains("run") && request.at("run").is_string()) {
		run_id = request.at("run").get<std::string>();
	}
	const RunStore &run = run_for(run_id);
	const Shape shape = parse_shape(str("shape"));
	const GridSize scale = parse_scale(str("scale"));
	const std::string origin = str("origin");
	if (origin != "map" && origin != "scatter" && origin != "attribution") {
		throw BadRequest("origin must be map, scatter or attribution");
	}
	const std::size_t cell_count = static_cast<std::size_t>(scale.w) * static_cast<std::size_t>(scale.h);

	std::vector<std::size_t> ids;
	std::string tool_name = "ids";
	if (request.contains("ids")) {
		if (!request.at("ids").is_array()) {
			throw BadRequest("ids must be an array");
		}
		std::set<std::size_t> unique;
		for (const auto &v : request.at("ids")) {
			if (!v.is_number_unsigned() || v.get<std::size_t>() >= cell_count) {
				throw BadRequest("ids must be region ids of " + scale.label());
			}
			unique.insert(v.get<std::size_t>());
		}
		ids.assign(unique.begin(), unique.end());
	} else {
		tool_name = str("tool");
		const Tool tool = parse_tool(tool_name);
		if (!request.contains("geometry") || !request.at("geometry").is_object()) {
			throw BadRequest("malformed geometry: missing 'geometry' object");
		}
		const auto &geometry = request.at("geometry");
		std::vector<Candidate> cands;
		if (origin == "map") {
			const ComboData *c = run.find({shape, scale});
			if (c == nullptr) {
				throw NotFound("run " + run.run_id() + " has no " + ComboKey{shape, scale}.dir_name() + " products");
			}
			if (tool == Tool::point) {
				const Vec2 p = parse_point(geometry);
				if (const auto hit = c->grid.assign({p.x, p.y})) {
					ids.push_back(hit->index);
				}
			} else {
				for (std::size_t i = 0; i < c->grid.cell_count(); ++i) {
					const Point center = c->grid.cell_center(i);
					cands.push_back({i, {center.lon, center.lat}});
				}
				ids = select_area(tool, geometry, cands);
			}
		} else if (origin == "scatter") {
			const ComboData *c = run.find({shape, scale});
			if (c == nullptr) {
				throw NotFound("run " + run.run_id() + " has no " + ComboKey{shape, scale}.dir_name() + " products");
			}
			for (const auto &p : c->scatter) {
				if (c->diags[p.region].fully_defined()) {
					cands.push_back({p.region, {p.z_value, p.z_lag}});
				}
			}
			ids = tool == Tool::point ? select_nearest(parse_point(geometry), cands, false)
			                          : select_area(tool, geometry, cands);
		} else {
			const HierarchyArrangement *arr = run.layout(shape);
			if (arr == nullptr) {
				throw NotFound("run " + run.run_id() + " has no " + to_string(shape) + " layout");
			}
			int subset = 0;
			if (request.contains("subset_index")) {
				if (!request.at("subset_index").is_number_integer()) {
					throw BadRequest("subset_index must be an integer");
				}
				subset = request.at("subset_index").get<int>();
			}
			const auto plot = std::find_if(arr->plots.begin(), arr->plots.end(), [&](const HierarchyPlot &p) {
				return p.scale == scale && p.subset_index == subset;
			});
			if (plot == arr->plots.end()) {
				throw NotFound("no " + scale.label() + " plot with subset_index " + std::to_string(subset));
			}
			for (const auto &col : plot->layout.columns) {
				for (const auto &d : col) {
					cands.push_back({d.dot.region, {d.x, d.y}, 0.5 * d.dot.diameter});
				}
			}
			ids = tool == Tool::point ? select_nearest(parse_point(geometry), cands, true)
			                          : select_area(tool, geometry, cands);
		}
	}

	nlohmann::json resolved = nlohmann::json::object();
	for (const auto &target : expansion_targets(request, scale)) {
		resolved[target.label()] = map_to_scale(ids, scale, target);
	}
	return {{"run_id", run.run_id()}, {"shape", to_string(shape)}, {"scale", scale.label()}, {"origin", origin},
	        {"tool", tool_name},      {"count", ids.size()},          {"ids", std::move(resolved)}};
}

HttpResponse AnalyticsService::handle(std::string_view method, std::string_view path, const Query &query,
                                      std::string_view body) const {
	try {
		if (method == "GET") {
			if (path == "/api/runs") {
				return json_response(200, runs());
			}
			if (path == "/api/map") {
				return json_response(200, map(query));
			}
			if (path == "/api/scatter") {
				return json_response(200, scatter(query));
			}
			if (path == "/api/attribution") {
				return json_response(200, attribution(query));
			}
			if (path == "/api/temporal") {
				return json_response(200, temporal(query));
			}
			if (path == "/api/meta") {
				return json_response(200, meta(query));
			}
		} else if (method == "POST" && path == "/api/selection/resolve") {
			nlohmann::json request;
			try {
				request = nlohmann::json::parse(body);
			} catch (const nlohmann::json::exception &e) {
				throw BadRequest(std::string("request body is not JSON: ") + e.what());
			}
			return json_response(200, resolve_selection(request));
		}
		return error_response(404, "no route for " + std::string(method) + " " + std::string(path));
	} catch (const BadRequest &e) {
		return error_response(400, e.what());
	} catch (const NotFound &e) {
		return error_response(404, e.what());
	} catch (const std::exception &e) {
		return error_response(500, e.what());
	}
}

// --- HTTP front end ---------------------------------------------------------------

struct HttpServer::Impl {
	Impl(const AnalyticsService &s, ServeOptions o) : service(s), options(std::move(o)) {}

	const AnalyticsService &service;
	ServeOptions options;
	httplib::Server server;
	bool bound = false;
};

HttpServer::HttpServer(const AnalyticsService &service, ServeOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
	auto &server = impl_->server;
	const int threads = std::max(1, impl_->options.threads);
	server.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
	// No SO_REUSEPORT: a second server on a taken port must fail to bind.
	server.set_socket_options([](socket_t sock) {
		int yes = 1;
		setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void *>(&yes), sizeof(yes));
	});
	if (!impl_->options.static_dir.empty() && !server.set_mount_point("/", impl_->options.static_dir.string())) {
		throw IoError("static directory " + impl_->options.static_dir.string() + " does not exist");
	}
	const auto dispatch = [this](const httplib::Request &req, httplib::Response &res) {
		AnalyticsService::Query query;
		for (const auto &[k, v] : req.params) {
			query.emplace(k, v);
		}
		const HttpResponse r = impl_->service.handle(req.method, req.path, query, req.body);
		res.status = r.status;
		res.set_content(r.body, r.content_type);
	};
	server.Get(".*", dispatch);
	server.Post(".*", dispatch);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
	auto &o = impl_->options;
	if (o.port == 0) {
		const int port = impl_->server.bind_to_any_port(o.host);
		if (port < 0) {
			throw IoError("port busy: no free port on " + o.host);
		}
		o.port = port;
	} else if (!impl_->server.bind_to_port(o.host, o.port)) {
		throw IoError("port busy: " + o.host + ":" + std::to_string(o.port));
	}
	impl_->bound = true;
	return o.port;
}

void HttpServer::run() {
	if (!impl_->bound) {
		bind();
	}
	impl_->server.listen_after_bind();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void HttpServer::stop() {
	if (impl_ && impl_->server.is_running()) {
		impl_->server.stop();
	}
}

} // namespace maup
