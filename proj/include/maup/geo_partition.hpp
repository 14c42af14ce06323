#pragma once

#include "maup/errors.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace maup {

/// Vertex snap tolerance (degrees) used by clipping and containment tests.
inline constexpr double kSnapTolerance = 1e-12;

struct Point {
	double lon = 0.0;
	double lat = 0.0;

	friend bool operator==(const Point &, const Point &) = default;
};

/// Axis-aligned study extent in planar lon/lat degrees.
struct BBox {
	double lon_min = 0.0;
	double lon_max = 0.0;
	double lat_min = 0.0;
	double lat_max = 0.0;

	/// Throws InvalidArgument unless lon_min < lon_max and lat_min < lat_max.
	void validate() const;

	double width() const noexcept { return lon_max - lon_min; }
	double height() const noexcept { return lat_max - lat_min; }
	double area() const noexcept { return width() * height(); }
	bool contains(Point p) const noexcept {
		return p.lon >= lon_min && p.lon <= lon_max && p.lat >= lat_min && p.lat <= lat_max;
	}
};

/// The Shenzhen study extent used by the defaults and the synthetic generator.
inline constexpr BBox kShenzhenBBox{113.775, 114.629, 22.443, 22.855};

enum class SchemeKind { grid, zone };

struct RegionId {
	SchemeKind kind = SchemeKind::grid;
	std::size_t index = 0;

	friend bool operator==(const RegionId &, const RegionId &) = default;
};

/// Uniform w x h grid over a bbox. Cell (col 0, row 0) sits at (lon_min, lat_min);
/// cell index = row * w + col.
class GridScheme {
public:
	GridScheme(const BBox &bbox, int w, int h);

	const BBox &bbox() const noexcept { return bbox_; }
	int w() const noexcept { return w_; }
	int h() const noexcept { return h_; }
	std::size_t cell_count() const noexcept { return static_cast<std::size_t>(w_) * static_cast<std::size_t>(h_); }
	double cell_width() const noexcept { return bbox_.width() / w_; }
	double cell_height() const noexcept { return bbox_.height() / h_; }

	/// Column edge c in [0, w]; edge w is exactly lon_max.
	double col_edge(int c) const noexcept;
	/// Row edge r in [0, h]; edge h is exactly lat_max.
	double row_edge(int r) const noexcept;

	std::size_t index_of(int col, int row) const noexcept {
		return static_cast<std::size_t>(row) * static_cast<std::size_t>(w_) + static_cast<std::size_t>(col);
	}
	int col_of(std::size_t index) const noexcept { return static_cast<int>(index % static_cast<std::size_t>(w_)); }
	int row_of(std::size_t index) const noexcept { return static_cast<int>(index / static_cast<std::size_t>(w_)); }

	BBox cell_bbox(std::size_t index) const;
	Point cell_center(std::size_t index) const;

	/// Floor-division lookup. Points on a shared edge go to the higher-index cell,
	/// points on the bbox max edges go to the last cell, points outside give nullopt.
	std::optional<RegionId> assign(Point p) const noexcept;

private:
	BBox bbox_;
	int w_;
	int h_;
};

GridScheme build_grid(const BBox &bbox, int w, int h);

/// Grid resolution label such as "50x25".
struct GridSize {
	int w = 0;
	int h = 0;

	std::string label() const { return std::to_string(w) + "x" + std::to_string(h); }
	/// Parses "WxH"; throws InvalidArgument.
	static GridSize parse(const std::string &text);
	friend auto operator<=>(const GridSize &, const GridSize &) = default;
};

/// The three dyadic scales, coarsest first.
inline constexpr GridSize kStandardScales[3] = {{50, 25}, {100, 50}, {200, 100}};

/// Position of `size` in kStandardScales, or -1.
int standard_level(const GridSize &size) noexcept;

/// Open ring: the closing vertex is not repeated.
using Ring = std::vector<Point>;

struct Polygon {
	Ring outer;
	std::vector<Ring> holes;
};

struct Zone {
	std::int64_t zone_id = 0;
	std::vector<Polygon> parts;
};

enum class Location { outside, boundary, inside };

double ring_signed_area(std::span<const Point> ring) noexcept;
double polygon_area(const Polygon &poly) noexcept;
double zone_area(const Zone &zone) noexcept;
Location locate(std::span<const Point> ring, Point p) noexcept;
Location locate(const Polygon &poly, Point p) noexcept;

/// Checks vertex count, non-zero area and simplicity of every ring; throws GeometryError.
void validate_zone(const Zone &zone);

/// Set of interior-disjoint zone polygons. Zones are ordered by zone_id; the
/// ordinal of a zone is its position in that order.
class ZoneScheme {
public:
	explicit ZoneScheme(std::vector<Zone> zones);

	const std::vector<Zone> &zones() const noexcept { return zones_; }
	std::size_t size() const noexcept { return zones_.size(); }
	double area(std::size_t ordinal) const { return areas_.at(ordinal); }
	const BBox &bounds() const noexcept { return bounds_; }

	/// The zone containing p, boundary ties resolved to the lowest zone_id.
	std::optional<RegionId> assign(Point p) const;

private:
	void build_index();

	std::vector<Zone> zones_;
	std::vector<double> areas_;
	std::vector<BBox> zone_bounds_;
	BBox bounds_;

	// Uniform bucket index over zone bounding boxes.
	int index_nx_ = 1;
	int index_ny_ = 1;
	std::vector<std::vector<std::size_t>> buckets_;
};

struct CellFraction {
	std::size_t cell = 0;
	double fraction = 0.0;
};

/// Sparse zone x cell area fractions S(r & g) / S(r) for one (zones, grid) pair.
struct FractionMap {
	int grid_w = 0;
	int grid_h = 0;
	BBox grid_bbox;
	/// Indexed by zone ordinal; cells ascending.
	std::vector<std::vector<CellFraction>> per_zone;
	/// 1 - sum of fractions, i.e. the share of each zone lying outside the grid.
	std::vector<double> outside_share;

	double fraction(std::size_t zone, std::size_t cell) const noexcept;
};

FractionMap intersection_fractions(const ZoneScheme &zones, const GridScheme &grid);

/// Area of the part of `poly` inside the axis-aligned box.
double clipped_area(const Polygon &poly, const BBox &box);

/// Reads a GeoJSON FeatureCollection of Polygon / MultiPolygon features carrying
/// an integer "zone_id" property.
ZoneScheme read_zones_geojson(const std::filesystem::path &path);
void write_zones_geojson(const std::filesystem::path &path, const ZoneScheme &zones);

/// Quadrilateral tessellation of the bbox from a jittered nx x ny vertex lattice.
/// Boundary vertices only slide along the bbox edges, so the zones tile the bbox.
ZoneScheme make_jittered_zones(const BBox &bbox, int nx, int ny, std::uint64_t seed, double jitter = 0.3);

} // namespace maup
