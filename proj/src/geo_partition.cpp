#include "maup/geo_partition.hpp"

#include "maup/log.hpp"
#include "maup/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace maup {

void BBox::validate() const {
	if (!(std::isfinite(lon_min) && std::isfinite(lon_max) && std::isfinite(lat_min) && std::isfinite(lat_max))) {
		throw InvalidArgument("bbox: non-finite bounds");
	}
	if (!(lon_min < lon_max) || !(lat_min < lat_max)) {
		throw InvalidArgument("bbox: degenerate extent (require lon_min < lon_max and lat_min < lat_max)");
	}
}

// --- grid -------------------------------------------------------------------

GridScheme::GridScheme(const BBox &bbox, int w, int h) : bbox_(bbox), w_(w), h_(h) {
	if (w < 1 || h < 1) {
		throw InvalidArgument("grid: dimensions must be positive, got " + std::to_string(w) + "x" + std::to_string(h));
	}
	bbox_.validate();
}

double GridScheme::col_edge(int c) const noexcept {
	if (c >= w_) {
		return bbox_.lon_max;
	}
	return bbox_.lon_min + bbox_.width() * static_cast<double>(c) / static_cast<double>(w_);
}

double GridScheme::row_edge(int r) const noexcept {
	if (r >= h_) {
		return bbox_.lat_max;
	}
	return bbox_.lat_min + bbox_.height() * static_cast<double>(r) / static_cast<double>(h_);
}

BBox GridScheme::cell_bbox(std::size_t index) const {
	if (index >= cell_count()) {
		throw InvalidArgument("grid: cell index out of range");
	}
	const int c = col_of(index);
	const int r = row_of(index);
	return {col_edge(c), col_edge(c + 1), row_edge(r), row_edge(r + 1)};
}

Point GridScheme::cell_center(std::size_t index) const {
	const BBox b = cell_bbox(index);
	return {0.5 * (b.lon_min + b.lon_max), 0.5 * (b.lat_min + b.lat_max)};
}

namespace {

// Index of the half-open slot [edge(i), edge(i+1)) containing v, consistent with
// the edge function; the last slot is closed.
template <typename EdgeFn>
int slot_of(double v, double lo, double span, int count, EdgeFn edge) noexcept {
	auto i = static_cast<int>(std::floor((v - lo) / span * count));
	i = std::clamp(i, 0, count - 1);
	while (i + 1 < count && v >= edge(i + 1)) {
		++i;
	}
	while (i > 0 && v < edge(i)) {
		--i;
	}
	return i;
}

} // namespace

std::optional<RegionId> GridScheme::assign(Point p) const noexcept {
	if (!bbox_.contains(p)) {
		return std::nullopt;
	}
	const int c = slot_of(p.lon, bbox_.lon_min, bbox_.width(), w_, [this](int i) { return col_edge(i); });
	const int r = slot_of(p.lat, bbox_.lat_min, bbox_.height(), h_, [this](int i) { return row_edge(i); });
	return RegionId{SchemeKind::grid, index_of(c, r)};
}

GridScheme build_grid(const BBox &bbox, int w, int h) { return GridScheme(bbox, w, h); }

GridSize GridSize::parse(const std::string &text) {
	const auto x = text.find('x');
	if (x == std::string::npos || x == 0 || x + 1 >= text.size()) {
		throw InvalidArgument("scale '" + text + "' is not of the form WxH");
	}
	GridSize s;
	try {
		std::size_t used = 0;
		s.w = std::stoi(text.substr(0, x), &used);
		if (used != x) {
			throw InvalidArgument("");
		}
		s.h = std::stoi(text.substr(x + 1), &used);
		if (used != text.size() - x - 1) {
			throw InvalidArgument("");
		}
	} catch (const std::exception &) {
		throw InvalidArgument("scale '" + text + "' is not of the form WxH");
	}
	if (s.w < 1 || s.h < 1) {
		throw InvalidArgument("scale '" + text + "' must have positive dimensions");
	}
	return s;
}

int standard_level(const GridSize &size) noexcept {
	for (int i = 0; i < 3; ++i) {
		if (kStandardScales[i] == size) {
			return i;
		}
	}
	return -1;
}

// --- polygon primitives -----------------------------------------------------

double ring_signed_area(std::span<const Point> ring) noexcept {
	const std::size_t n = ring.size();
	if (n < 3) {
		return 0.0;
	}
	// Shoelace relative to the first vertex to limit cancellation at large offsets.
	const Point o = ring[0];
	double twice = 0.0;
	for (std::size_t i = 1; i + 1 < n; ++i) {
		const double ax = ring[i].lon - o.lon;
		const double ay = ring[i].lat - o.lat;
		const double bx = ring[i + 1].lon - o.lon;
		const double by = ring[i + 1].lat - o.lat;
		twice += ax * by - bx * ay;
	}
	return 0.5 * twice;
}

double polygon_area(const Polygon &poly) noexcept {
	double a = std::abs(ring_signed_area(poly.outer));
	for (const auto &hole : poly.holes) {
		a -= std::abs(ring_signed_area(hole));
	}
	return a;
}

double zone_area(const Zone &zone) noexcept {
	double a = 0.0;
	for (const auto &part : zone.parts) {
		a += polygon_area(part);
	}
	return a;
}

namespace {

double cross(Point o, Point a, Point b) noexcept {
	return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
}

int orientation(Point a, Point b, Point c) noexcept {
	const double det = cross(a, b, c);
	// Forward error bound of the 2x2 determinant; results inside it count as collinear.
	const double mag = std::abs((b.lon - a.lon) * (c.lat - a.lat)) + std::abs((b.lat - a.lat) * (c.lon - a.lon));
	const double bound = 4.0 * std::numeric_limits<double>::epsilon() * mag;
	if (det > bound) {
		return 1;
	}
	if (det < -bound) {
		return -1;
	}
	return 0;
}

bool within_box(Point p, Point a, Point b, double tol) noexcept {
	return p.lon >= std::min(a.lon, b.lon) - tol && p.lon <= std::max(a.lon, b.lon) + tol &&
	       p.lat >= std::min(a.lat, b.lat) - tol && p.lat <= std::max(a.lat, b.lat) + tol;
}

bool on_segment(Point p, Point a, Point b) noexcept {
	if (!within_box(p, a, b, kSnapTolerance)) {
		return false;
	}
	const double len = std::hypot(b.lon - a.lon, b.lat - a.lat);
	if (len == 0.0) {
		return std::hypot(p.lon - a.lon, p.lat - a.lat) <= kSnapTolerance;
	}
	return std::abs(cross(a, b, p)) / len <= kSnapTolerance;
}

bool segments_intersect(Point p1, Point p2, Point p3, Point p4) noexcept {
	const int d1 = orientation(p3, p4, p1);
	const int d2 = orientation(p3, p4, p2);
	const int d3 = orientation(p1, p2, p3);
	const int d4 = orientation(p1, p2, p4);
	if (d1 * d2 < 0 && d3 * d4 < 0) {
		return true;
	}
	return (d1 == 0 && within_box(p1, p3, p4, 0.0)) || (d2 == 0 && within_box(p2, p3, p4, 0.0)) ||
	       (d3 == 0 && within_box(p3, p1, p2, 0.0)) || (d4 == 0 && within_box(p4, p1, p2, 0.0));
}

void validate_ring(std::int64_t zone_id, const Ring &ring, const char *what) {
	const std::size_t n = ring.size();
	if (n < 3) {
		throw GeometryError(zone_id, std::string(what) + " ring has fewer than 3 vertices");
	}
	for (const auto &p : ring) {
		if (!std::isfinite(p.lon) || !std::isfinite(p.lat)) {
			throw GeometryError(zone_id, std::string(what) + " ring has a non-finite vertex");
		}
	}
	if (std::abs(ring_signed_area(ring)) <= 0.0) {
		throw GeometryError(zone_id, std::string(what) + " ring has zero area");
	}
	for (std::size_t i = 0; i < n; ++i) {
		const Point a = ring[i];
		const Point b = ring[(i + 1) % n];
		if (a.lon == b.lon && a.lat == b.lat) {
			throw GeometryError(zone_id, std::string(what) + " ring has a repeated vertex");
		}
		for (std::size_t j = i + 1; j < n; ++j) {
			// Adjacent edges share a vertex by construction.
			if (j == i + 1 || (i == 0 && j == n - 1)) {
				continue;
			}
			if (segments_intersect(a, b, ring[j], ring[(j + 1) % n])) {
				throw GeometryError(zone_id, std::string(what) + " ring self-intersects");
			}
		}
	}
}

} // namespace

Location locate(std::span<const Point> ring, Point p) noexcept {
	const std::size_t n = ring.size();
	bool inside = false;
	for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
		const Point a = ring[j];
		const Point b = ring[i];
		if (on_segment(p, a, b)) {
			return Location::boundary;
		}
		if ((b.lat > p.lat) != (a.lat > p.lat)) {
			const double x = b.lon + (p.lat - b.lat) * (a.lon - b.lon) / (a.lat - b.lat);
			if (p.lon < x) {
				inside = !inside;
			}
		}
	}
	return inside ? Location::inside : Location::outside;
}

Location locate(const Polygon &poly, Point p) noexcept {
	const Location outer = locate(poly.outer, p);
	if (outer != Location::inside) {
		return outer;
	}
	for (const auto &hole : poly.holes) {
		const Location h = locate(hole, p);
		if (h == Location::inside) {
			return Location::outside;
		}
		if (h == Location::boundary) {
			return Location::boundary;
		}
	}
	return Location::inside;
}

void validate_zone(const Zone &zone) {
	if (zone.parts.empty()) {
		throw GeometryError(zone.zone_id, "no polygon parts");
	}
	for (const auto &part : zone.parts) {
		validate_ring(zone.zone_id, part.outer, "outer");
		for (const auto &hole : part.holes) {
			validate_ring(zone.zone_id, hole, "hole");
		}
		if (polygon_area(part) <= 0.0) {
			throw GeometryError(zone.zone_id, "holes cover the whole polygon");
		}
	}
}

// --- zone scheme --------------------------------------------------------------

namespace {

BBox ring_bounds(std::span<const Point> ring) noexcept {
	BBox b{ring[0].lon, ring[0].lon, ring[0].lat, ring[0].lat};
	for (const auto &p : ring) {
		b.lon_min = std::min(b.lon_min, p.lon);
		b.lon_max = std::max(b.lon_max, p.lon);
		b.lat_min = std::min(b.lat_min, p.lat);
		b.lat_max = std::max(b.lat_max, p.lat);
	}
	return b;
}

BBox merge(const BBox &a, const BBox &b) noexcept {
	return {std::min(a.lon_min, b.lon_min), std::max(a.lon_max, b.lon_max), std::min(a.lat_min, b.lat_min),
	        std::max(a.lat_max, b.lat_max)};
}

} // namespace

ZoneScheme::ZoneScheme(std::vector<Zone> zones) : zones_(std::move(zones)) {
	if (zones_.empty()) {
		throw InvalidArgument("zone scheme: no zones");
	}
	std::stable_sort(zones_.begin(), zones_.end(),
	                 [](const Zone &a, const Zone &b) { return a.zone_id < b.zone_id; });
	for (std::size_t i = 1; i < zones_.size(); ++i) {
		if (zones_[i].zone_id == zones_[i - 1].zone_id) {
			throw GeometryError(zones_[i].zone_id, "duplicate zone_id");
		}
	}
	areas_.reserve(zones_.size());
	zone_bounds_.reserve(zones_.size());
	for (const auto &z : zones_) {
		validate_zone(z);
		areas_.push_back(zone_area(z));
		BBox b = ring_bounds(z.parts.front().outer);
		for (const auto &part : z.parts) {
			b = merge(b, ring_bounds(part.outer));
		}
		zone_bounds_.push_back(b);
	}
	bounds_ = zone_bounds_.front();
	for (const auto &b : zone_bounds_) {
		bounds_ = merge(bounds_, b);
	}
	build_index();
}

void ZoneScheme::build_index() {
	const auto side = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(zones_.size()))));
	index_nx_ = side;
	index_ny_ = side;
	buckets_.assign(static_cast<std::size_t>(index_nx_) * static_cast<std::size_t>(index_ny_), {});
	const double bw = std::max(bounds_.width(), kSnapTolerance) / index_nx_;
	const double bh = std::max(bounds_.height(), kSnapTolerance) / index_ny_;
	auto bucket_range = [&](double lo, double hi, double origin, double step, int count) {
		auto a = static_cast<int>(std::floor((lo - kSnapTolerance - origin) / step));
		auto b = static_cast<int>(std::floor((hi + kSnapTolerance - origin) / step));
		return std::pair{std::clamp(a, 0, count - 1), std::clamp(b, 0, count - 1)};
	};
	for (std::size_t z = 0; z < zones_.size(); ++z) {
		const BBox &b = zone_bounds_[z];
		const auto [c0, c1] = bucket_range(b.lon_min, b.lon_max, bounds_.lon_min, bw, index_nx_);
		const auto [r0, r1] = bucket_range(b.lat_min, b.lat_max, bounds_.lat_min, bh, index_ny_);
		for (int r = r0; r <= r1; ++r) {
			for (int c = c0; c <= c1; ++c) {
				buckets_[static_cast<std::size_t>(r * index_nx_ + c)].push_back(z);
			}
		}
	}
}

std::optional<RegionId> ZoneScheme::assign(Point p) const {
	if (!std::isfinite(p.lon) || !std::isfinite(p.lat)) {
		return std::nullopt;
	}
	if (p.lon < bounds_.lon_min - kSnapTolerance || p.lon > bounds_.lon_max + kSnapTolerance ||
	    p.lat < bounds_.lat_min - kSnapTolerance || p.lat > bounds_.lat_max + kSnapTolerance) {
		return std::nullopt;
	}
	const double bw = std::max(bounds_.width(), kSnapTolerance) / index_nx_;
	const double bh = std::max(bounds_.height(), kSnapTolerance) / index_ny_;
	const int c = std::clamp(static_cast<int>(std::floor((p.lon - bounds_.lon_min) / bw)), 0, index_nx_ - 1);
	const int r = std::clamp(static_cast<int>(std::floor((p.lat - bounds_.lat_min) / bh)), 0, index_ny_ - 1);
	// Bucket lists are ascending in ordinal, hence in zone_id: the first hit wins ties.
	for (const std::size_t z : buckets_[static_cast<std::size_t>(r * index_nx_ + c)]) {
		const BBox &b = zone_bounds_[z];
		if (p.lon < b.lon_min - kSnapTolerance || p.lon > b.lon_max + kSnapTolerance ||
		    p.lat < b.lat_min - kSnapTolerance || p.lat > b.lat_max + kSnapTolerance) {
			continue;
		}
		for (const auto &part : zones_[z].parts) {
			if (locate(part, p) != Location::outside) {
				return RegionId{SchemeKind::zone, z};
			}
		}
	}
	return std::nullopt;
}

// --- clipping -----------------------------------------------------------------

namespace {

enum class Axis { lon, lat };

double coord(Point p, Axis axis) noexcept { return axis == Axis::lon ? p.lon : p.lat; }

// Sutherland-Hodgman against one axis-aligned half-plane. The half-plane is
// convex, so the signed area of the output equals the clipped area even for
// non-convex input (degenerate bridge edges contribute nothing). Vertices within
// the snap tolerance of the line are snapped onto it.
Ring clip_half_plane(const Ring &ring, Axis axis, double bound, bool keep_greater) {
	Ring out;
	const std::size_t n = ring.size();
	if (n == 0) {
		return out;
	}
	out.reserve(n + 4);
	auto inside = [&](Point p) {
		const double v = coord(p, axis);
		return keep_greater ? v >= bound - kSnapTolerance : v <= bound + kSnapTolerance;
	};
	auto snapped = [&](Point p) {
		if (std::abs(coord(p, axis) - bound) <= kSnapTolerance) {
			(axis == Axis::lon ? p.lon : p.lat) = bound;
		}
		return p;
	};
	for (std::size_t i = 0; i < n; ++i) {
		const Point cur = ring[i];
		const Point next = ring[(i + 1) % n];
		const bool cur_in = inside(cur);
		const bool next_in = inside(next);
		if (cur_in) {
			out.push_back(snapped(cur));
		}
		if (cur_in != next_in) {
			const double t = (bound - coord(cur, axis)) / (coord(next, axis) - coord(cur, axis));
			Point x;
			if (axis == Axis::lon) {
				x = {bound, cur.lat + t * (next.lat - cur.lat)};
			} else {
				x = {cur.lon + t * (next.lon - cur.lon), bound};
			}
			out.push_back(x);
		}
	}
	return out;
}

Ring clip_slab(const Ring &ring, Axis axis, double lo, double hi) {
	Ring r = clip_half_plane(ring, axis, lo, true);
	if (r.size() < 3) {
		return {};
	}
	r = clip_half_plane(r, axis, hi, false);
	if (r.size() < 3) {
		return {};
	}
	return r;
}

double clipped_ring_area(const Ring &ring, const BBox &box) {
	const Ring slab = clip_slab(ring, Axis::lon, box.lon_min, box.lon_max);
	if (slab.empty()) {
		return 0.0;
	}
	return std::abs(ring_signed_area(clip_slab(slab, Axis::lat, box.lat_min, box.lat_max)));
}

// Adds sign * |ring & cell| to `areas` for every grid cell the ring touches.
void accumulate_ring(const Ring &ring, double sign, const GridScheme &grid, std::map<std::size_t, double> &areas) {
	const BBox rb = ring_bounds(ring);
	const BBox &gb = grid.bbox();
	if (rb.lon_max < gb.lon_min || rb.lon_min > gb.lon_max || rb.lat_max < gb.lat_min || rb.lat_min > gb.lat_max) {
		return;
	}
	auto range = [](double lo, double hi, double origin, double span, int count) {
		auto a = static_cast<int>(std::floor((lo - origin) / span * count)) - 1;
		auto b = static_cast<int>(std::floor((hi - origin) / span * count)) + 1;
		return std::pair{std::clamp(a, 0, count - 1), std::clamp(b, 0, count - 1)};
	};
	const auto [c0, c1] = range(rb.lon_min, rb.lon_max, gb.lon_min, gb.width(), grid.w());
	for (int c = c0; c <= c1; ++c) {
		const Ring column = clip_slab(ring, Axis::lon, grid.col_edge(c), grid.col_edge(c + 1));
		if (column.empty()) {
			continue;
		}
		const BBox cb = ring_bounds(column);
		const auto [r0, r1] = range(cb.lat_min, cb.lat_max, gb.lat_min, gb.height(), grid.h());
		for (int r = r0; r <= r1; ++r) {
			const Ring cell = clip_slab(column, Axis::lat, grid.row_edge(r), grid.row_edge(r + 1));
			if (cell.empty()) {
				continue;
			}
			const double a = std::abs(ring_signed_area(cell));
			if (a > 0.0) {
				areas[grid.index_of(c, r)] += sign * a;
			}
		}
	}
}

} // namespace

double clipped_area(const Polygon &poly, const BBox &box) {
	double a = clipped_ring_area(poly.outer, box);
	for (const auto &hole : poly.holes) {
		a -= clipped_ring_area(hole, box);
	}
	return std::max(a, 0.0);
}

double FractionMap::fraction(std::size_t zone, std::size_t cell) const noexcept {
	if (zone >= per_zone.size()) {
		return 0.0;
	}
	const auto &cells = per_zone[zone];
	const auto it = std::lower_bound(cells.begin(), cells.end(), cell,
	                                 [](const CellFraction &cf, std::size_t c) { return cf.cell < c; });
	return it != cells.end() && it->cell == cell ? it->fraction : 0.0;
}

FractionMap intersection_fractions(const ZoneScheme &zones, const GridScheme &grid) {
	FractionMap out;
	out.grid_w = grid.w();
	out.grid_h = grid.h();
	out.grid_bbox = grid.bbox();
	out.per_zone.resize(zones.size());
	out.outside_share.resize(zones.size(), 0.0);

	std::size_t partial = 0;
	for (std::size_t z = 0; z < zones.size(); ++z) {
		std::map<std::size_t, double> areas;
		for (const auto &part : zones.zones()[z].parts) {
			accumulate_ring(part.outer, 1.0, grid, areas);
			for (const auto &hole : part.holes) {
				accumulate_ring(hole, -1.0, grid, areas);
			}
		}
		const double total = zones.area(z);
		double sum = 0.0;
		auto &cells = out.per_zone[z];
		for (const auto &[cell, area] : areas) {
			const double f = area / total;
			if (f > 1e-15) {
				cells.push_back({cell, f});
				sum += f;
			}
		}
		out.outside_share[z] = std::max(0.0, 1.0 - sum);
		if (out.outside_share[z] > 1e-9) {
			++partial;
		}
	}
	if (partial > 0) {
		log::warn(std::to_string(partial) + " zone(s) extend beyond the grid bbox; their outside mass is dropped");
	}
	return out;
}

// --- GeoJSON ------------------------------------------------------------------

namespace {

Ring parse_ring(std::int64_t zone_id, const nlohmann::json &coords) {
	if (!coords.is_array()) {
		throw GeometryError(zone_id, "ring is not an array");
	}
	Ring ring;
	ring.reserve(coords.size());
	for (const auto &pt : coords) {
		if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number()) {
			throw GeometryError(zone_id, "malformed coordinate");
		}
		const Point p{pt[0].get<double>(), pt[1].get<double>()};
		if (!ring.empty() && std::abs(ring.back().lon - p.lon) <= kSnapTolerance &&
		    std::abs(ring.back().lat - p.lat) <= kSnapTolerance) {
			continue;
		}
		ring.push_back(p);
	}
	// Closing vertex.
	if (ring.size() > 1 && std::abs(ring.front().lon - ring.back().lon) <= kSnapTolerance &&
	    std::abs(ring.front().lat - ring.back().lat) <= kSnapTolerance) {
		ring.pop_back();
	}
	return ring;
}

Polygon parse_polygon(std::int64_t zone_id, const nlohmann::json &rings) {
	if (!rings.is_array() || rings.empty()) {
		throw GeometryError(zone_id, "polygon has no rings");
	}
	Polygon poly;
	poly.outer = parse_ring(zone_id, rings[0]);
	for (std::size_t i = 1; i < rings.size(); ++i) {
		poly.holes.push_back(parse_ring(zone_id, rings[i]));
	}
	return poly;
}

nlohmann::json ring_json(const Ring &ring) {
	auto arr = nlohmann::json::array();
	for (const auto &p : ring) {
		arr.push_back({p.lon, p.lat});
	}
	if (!ring.empty()) {
		arr.push_back({ring.front().lon, ring.front().lat});
	}
	return arr;
}

nlohmann::json polygon_json(const Polygon &poly) {
	auto rings = nlohmann::json::array();
	rings.push_back(ring_json(poly.outer));
	for (const auto &hole : poly.holes) {
		rings.push_back(ring_json(hole));
	}
	return rings;
}

} // namespace

ZoneScheme read_zones_geojson(const std::filesystem::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw IoError("cannot open zone file " + path.string());
	}
	nlohmann::json doc;
	try {
		in >> doc;
	} catch (const nlohmann::json::exception &e) {
		throw IoError("zone file " + path.string() + ": " + e.what());
	}
	if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
	    !doc["features"].is_array()) {
		throw IoError("zone file " + path.string() + ": expected a GeoJSON FeatureCollection");
	}
	std::vector<Zone> zones;
	for (const auto &feature : doc["features"]) {
		const auto props = feature.value("properties", nlohmann::json::object());
		if (!props.is_object() || !props.contains("zone_id") || !props["zone_id"].is_number_integer()) {
			throw IoError("zone file " + path.string() + ": feature without integer zone_id");
		}
		Zone zone;
		zone.zone_id = props["zone_id"].get<std::int64_t>();
		const auto &geom = feature.at("geometry");
		const std::string type = geom.value("type", "");
		const auto &coords = geom.at("coordinates");
		if (type == "Polygon") {
			zone.parts.push_back(parse_polygon(zone.zone_id, coords));
		} else if (type == "MultiPolygon") {
			for (const auto &poly : coords) {
				zone.parts.push_back(parse_polygon(zone.zone_id, poly));
			}
		} else {
			throw GeometryError(zone.zone_id, "unsupported geometry type '" + type + "'");
		}
		zones.push_back(std::move(zone));
	}
	return ZoneScheme(std::move(zones));
}

void write_zones_geojson(const std::filesystem::path &path, const ZoneScheme &zones) {
	auto features = nlohmann::json::array();
	for (const auto &z : zones.zones()) {
		nlohmann::json geom;
		if (z.parts.size() == 1) {
			geom = {{"type", "Polygon"}, {"coordinates", polygon_json(z.parts.front())}};
		} else {
			auto polys = nlohmann::json::array();
			for (const auto &p : z.parts) {
				polys.push_back(polygon_json(p));
			}
			geom = {{"type", "MultiPolygon"}, {"coordinates", polys}};
		}
		features.push_back({{"type", "Feature"}, {"properties", {{"zone_id", z.zone_id}}}, {"geometry", geom}});
	}
	std::ofstream out(path);
	if (!out) {
		throw IoError("cannot write zone file " + path.string());
	}
	out << nlohmann::json{{"type", "FeatureCollection"}, {"features", features}}.dump() << '\n';
}

ZoneScheme make_jittered_zones(const BBox &bbox, int nx, int ny, std::uint64_t seed, double jitter) {
	bbox.validate();
	if (nx < 1 || ny < 1) {
		throw InvalidArgument("jittered zones: lattice dimensions must be positive");
	}
	if (jitter < 0.0 || jitter >= 0.5) {
		throw InvalidArgument("jittered zones: jitter must lie in [0, 0.5)");
	}
	Rng rng(seed);
	const double dx = bbox.width() / nx;
	const double dy = bbox.height() / ny;
	std::vector<Point> lattice(static_cast<std::size_t>((nx + 1) * (ny + 1)));
	auto at = [&](int i, int j) -> Point & { return lattice[static_cast<std::size_t>(j * (nx + 1) + i)]; };
	for (int j = 0; j <= ny; ++j) {
		for (int i = 0; i <= nx; ++i) {
			double lon = i == nx ? bbox.lon_max : bbox.lon_min + dx * i;
			double lat = j == ny ? bbox.lat_max : bbox.lat_min + dy * j;
			const double ox = (rng.uniform() - 0.5) * jitter * dx;
			const double oy = (rng.uniform() - 0.5) * jitter * dy;
			if (i > 0 && i < nx) {
				lon += ox;
			}
			if (j > 0 && j < ny) {
				lat += oy;
			}
			at(i, j) = {lon, lat};
		}
	}
	std::vector<Zone> zones;
	zones.reserve(static_cast<std::size_t>(nx * ny));
	for (int j = 0; j < ny; ++j) {
		for (int i = 0; i < nx; ++i) {
			Zone z;
			z.zone_id = 1 + j * nx + i;
			z.parts.push_back({{at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)}, {}});
			zones.push_back(std::move(z));
		}
	}
	return ZoneScheme(std::move(zones));
}

} // namespace maup
