#include <doctest.h>

#include "maup/geo_partition.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace maup;
using maup::testing::rect_zone;

namespace {

const BBox kUnit{0.0, 2.0, 0.0, 2.0};

std::vector<double> fractions_of(const FractionMap &fm, std::size_t zone, std::size_t cells) {
	std::vector<double> out(cells, 0.0);
	for (const auto &cf : fm.per_zone.at(zone)) {
		out.at(cf.cell) = cf.fraction;
	}
	return out;
}

Zone reversed(Zone z) {
	for (auto &part : z.parts) {
		std::reverse(part.outer.begin(), part.outer.end());
		for (auto &hole : part.holes) {
			std::reverse(hole.begin(), hole.end());
		}
	}
	return z;
}

} // namespace

TEST_CASE("grid cell counts at the standard scales") {
	CHECK(build_grid(kShenzhenBBox, 50, 25).cell_count() == 1250);
	CHECK(build_grid(kShenzhenBBox, 200, 100).cell_count() == 20000);

	const GridScheme single = build_grid(kShenzhenBBox, 1, 1);
	const BBox cell = single.cell_bbox(0);
	CHECK(cell.lon_min == kShenzhenBBox.lon_min);
	CHECK(cell.lon_max == kShenzhenBBox.lon_max);
	CHECK(cell.lat_min == kShenzhenBBox.lat_min);
	CHECK(cell.lat_max == kShenzhenBBox.lat_max);
}

TEST_CASE("grid construction rejects bad input") {
	CHECK_THROWS_AS(build_grid(kShenzhenBBox, 0, 25), InvalidArgument);
	CHECK_THROWS_AS(build_grid(kShenzhenBBox, 50, -1), InvalidArgument);
	CHECK_THROWS_AS(build_grid(BBox{1, 1, 0, 1}, 2, 2), InvalidArgument);
	CHECK_THROWS_AS(build_grid(BBox{0, 1, 3, 2}, 2, 2), InvalidArgument);
}

TEST_CASE("cell widths and areas are uniform and tile the bbox") {
	const GridScheme g = build_grid(kShenzhenBBox, 50, 25);
	CHECK(g.cell_width() == doctest::Approx((114.629 - 113.775) / 50).epsilon(1e-15));
	CHECK(g.col_edge(50) == kShenzhenBBox.lon_max);
	CHECK(g.row_edge(25) == kShenzhenBBox.lat_max);
	double total = 0.0;
	for (std::size_t i = 0; i < g.cell_count(); ++i) {
		total += g.cell_bbox(i).area();
	}
	CHECK(std::abs(total - kShenzhenBBox.area()) <= 1e-12 * kShenzhenBBox.area());
}

TEST_CASE("grid point assignment and tie rule") {
	const GridScheme g50 = build_grid(kShenzhenBBox, 50, 25);
	auto corner = g50.assign({kShenzhenBBox.lon_min, kShenzhenBBox.lat_min});
	REQUIRE(corner);
	CHECK(corner->index == 0);
	CHECK(corner->kind == SchemeKind::grid);

	const GridScheme g2 = build_grid(kShenzhenBBox, 2, 2);
	const Point center{(kShenzhenBBox.lon_min + kShenzhenBBox.lon_max) / 2,
	                   (kShenzhenBBox.lat_min + kShenzhenBBox.lat_max) / 2};
	auto mid = g2.assign(center);
	REQUIRE(mid);
	CHECK(mid->index == 3);

	CHECK_FALSE(g50.assign({0.0, 0.0}));
	CHECK_FALSE(g50.assign({kShenzhenBBox.lon_max + 1e-9, 22.5}));

	auto top_right = g50.assign({kShenzhenBBox.lon_max, kShenzhenBBox.lat_max});
	REQUIRE(top_right);
	CHECK(top_right->index == g50.cell_count() - 1);

	// Shared vertical edge between cells 0 and 1 goes to cell 1.
	const GridScheme unit = build_grid(kUnit, 2, 2);
	CHECK(unit.assign({1.0, 0.5})->index == 1);
	CHECK(unit.assign({0.5, 1.0})->index == 2);
	CHECK(unit.assign({2.0, 0.5})->index == 1);
}

TEST_CASE("grid assignment is total on the interior and agrees with cell boxes") {
	const GridScheme g = build_grid(kShenzhenBBox, 37, 19);
	Rng rng(11);
	for (int i = 0; i < 20000; ++i) {
		const Point p{kShenzhenBBox.lon_min + kShenzhenBBox.width() * rng.uniform(),
		              kShenzhenBBox.lat_min + kShenzhenBBox.height() * rng.uniform()};
		auto id = g.assign(p);
		REQUIRE(id);
		CHECK(g.cell_bbox(id->index).contains(p));
	}
}

TEST_CASE("fractions: square over four cells and identity zone") {
	const GridScheme g = build_grid(BBox{0, 4, 0, 4}, 4, 4);
	const ZoneScheme zones({rect_zone(10, 1, 1, 3, 3), rect_zone(20, 0, 0, 1, 1)});
	const FractionMap fm = intersection_fractions(zones, g);

	const auto square = fractions_of(fm, 0, g.cell_count());
	for (std::size_t cell : {g.index_of(1, 1), g.index_of(2, 1), g.index_of(1, 2), g.index_of(2, 2)}) {
		CHECK(square[cell] == doctest::Approx(0.25).epsilon(1e-12));
	}
	CHECK(std::accumulate(square.begin(), square.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
	CHECK(fm.per_zone[0].size() == 4);

	const auto ident = fractions_of(fm, 1, g.cell_count());
	CHECK(ident[0] == doctest::Approx(1.0).epsilon(1e-12));
	CHECK(fm.per_zone[1].size() == 1);
	CHECK(fm.outside_share[1] == doctest::Approx(0.0));
}

TEST_CASE("fractions: L-shaped zone matches a point-sampling oracle") {
	// Full cell (0,0), half of (1,0), half of (0,1) on a 2x2 grid over [0,2]^2.
	const Zone ell{7, {Polygon{{{0, 0}, {1.5, 0}, {1.5, 1}, {1, 1}, {1, 1.5}, {0, 1.5}}, {}}}};
	const GridScheme g = build_grid(kUnit, 2, 2);
	const ZoneScheme zones({ell});
	const auto frac = fractions_of(intersection_fractions(zones, g), 0, 4);
	CHECK(frac[0] == doctest::Approx(0.5).epsilon(1e-12));
	CHECK(frac[1] == doctest::Approx(0.25).epsilon(1e-12));
	CHECK(frac[2] == doctest::Approx(0.25).epsilon(1e-12));
	CHECK(frac[3] == 0.0);

	// Stratified sampling over the zone's bounding box: one jittered sample
	// per cell of a 1000 x 1000 lattice, classified by hand-written tests.
	Rng rng(2024);
	const int side = 1000;
	std::vector<double> hits(4, 0.0);
	double inside = 0.0;
	for (int i = 0; i < side; ++i) {
		for (int j = 0; j < side; ++j) {
			const double x = 1.5 * (i + rng.uniform()) / side;
			const double y = 1.5 * (j + rng.uniform()) / side;
			const bool in_ell = (x < 1.5 && y < 1.0) || (x < 1.0 && y < 1.5);
			if (!in_ell) {
				continue;
			}
			inside += 1;
			hits[(y >= 1.0 ? 2 : 0) + (x >= 1.0 ? 1 : 0)] += 1;
		}
	}
	for (int c = 0; c < 4; ++c) {
		CHECK(std::abs(hits[c] / inside - frac[c]) < 1e-3);
	}
}

TEST_CASE("fractions: partition of unity and orientation invariance on random zones") {
	Rng rng(99);
	for (int trial = 0; trial < 20; ++trial) {
		const GridScheme g = build_grid(kShenzhenBBox, 3 + static_cast<int>(rng.below(20)), 2 + static_cast<int>(rng.below(12)));
		auto raw = maup::testing::random_zones(rng, kShenzhenBBox, 6);
		std::vector<Zone> flipped;
		for (const auto &z : raw) {
			flipped.push_back(reversed(z));
		}
		const ZoneScheme zones(raw);
		const ZoneScheme zones_flipped(flipped);
		const FractionMap a = intersection_fractions(zones, g);
		const FractionMap b = intersection_fractions(zones_flipped, g);
		for (std::size_t z = 0; z < zones.size(); ++z) {
			double sum = 0.0;
			for (const auto &cf : a.per_zone[z]) {
				sum += cf.fraction;
				CHECK(cf.fraction >= 0.0);
			}
			CHECK(std::abs(sum - 1.0) <= 1e-9);
			REQUIRE(a.per_zone[z].size() == b.per_zone[z].size());
			for (std::size_t i = 0; i < a.per_zone[z].size(); ++i) {
				CHECK(a.per_zone[z][i].cell == b.per_zone[z][i].cell);
				CHECK(std::abs(a.per_zone[z][i].fraction - b.per_zone[z][i].fraction) <= 1e-12);
			}
		}
	}
}

TEST_CASE("fractions: zones partly outside the grid report their outside share") {
	const GridScheme g = build_grid(kUnit, 2, 2);
	const ZoneScheme zones({rect_zone(1, 1, 1, 3, 3)});
	const FractionMap fm = intersection_fractions(zones, g);
	CHECK(fm.outside_share[0] == doctest::Approx(0.75).epsilon(1e-12));
	CHECK(fm.fraction(0, 3) == doctest::Approx(0.25).epsilon(1e-12));
	CHECK(fm.fraction(0, 0) == 0.0);
}

TEST_CASE("fractions: holes are subtracted") {
	Zone donut{3, {Polygon{{{0, 0}, {2, 0}, {2, 2}, {0, 2}}, {{{0.5, 0.5}, {1.5, 0.5}, {1.5, 1.5}, {0.5, 1.5}}}}}};
	CHECK(zone_area(donut) == doctest::Approx(3.0));
	const GridScheme g = build_grid(kUnit, 2, 2);
	const auto frac = fractions_of(intersection_fractions(ZoneScheme({donut}), g), 0, 4);
	for (double f : frac) {
		CHECK(f == doctest::Approx(0.25).epsilon(1e-12));
	}
}

TEST_CASE("zone assignment resolves shared boundaries to the lowest zone_id") {
	const ZoneScheme zones({rect_zone(9, 1, 0, 2, 1), rect_zone(4, 0, 0, 1, 1)});
	// Ordinals follow zone_id order.
	CHECK(zones.zones()[0].zone_id == 4);
	auto left = zones.assign({0.5, 0.5});
	REQUIRE(left);
	CHECK(left->kind == SchemeKind::zone);
	CHECK(left->index == 0);
	CHECK(zones.assign({1.5, 0.5})->index == 1);
	CHECK(zones.assign({1.0, 0.5})->index == 0);
	CHECK_FALSE(zones.assign({3.0, 0.5}));
}

TEST_CASE("point location on rings") {
	const Ring square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
	CHECK(locate(square, Point{0.5, 0.5}) == Location::inside);
	CHECK(locate(square, Point{1.0, 0.5}) == Location::boundary);
	CHECK(locate(square, Point{0.0, 0.0}) == Location::boundary);
	CHECK(locate(square, Point{1.5, 0.5}) == Location::outside);
	CHECK(ring_signed_area(square) == doctest::Approx(1.0));
	const Ring cw(square.rbegin(), square.rend());
	CHECK(ring_signed_area(cw) == doctest::Approx(-1.0));
}

TEST_CASE("invalid geometry is reported with the zone id") {
	const Zone bowtie{42, {Polygon{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}, {}}}};
	try {
		validate_zone(bowtie);
		FAIL("expected GeometryError");
	} catch (const GeometryError &e) {
		CHECK(e.zone_id() == 42);
	}
	CHECK_THROWS_AS(validate_zone(Zone{5, {Polygon{{{0, 0}, {1, 0}}, {}}}}), GeometryError);
	CHECK_THROWS_AS(validate_zone(Zone{6, {Polygon{{{0, 0}, {1, 0}, {2, 0}}, {}}}}), GeometryError);
	CHECK_THROWS_AS(ZoneScheme({rect_zone(1, 0, 0, 1, 1), rect_zone(1, 1, 0, 2, 1)}), GeometryError);
	CHECK_THROWS_AS(ZoneScheme(std::vector<Zone>{}), InvalidArgument);
}

TEST_CASE("grid size labels") {
	CHECK(GridSize::parse("50x25") == GridSize{50, 25});
	CHECK(GridSize{200, 100}.label() == "200x100");
	CHECK_THROWS_AS(GridSize::parse("50by25"), InvalidArgument);
	CHECK_THROWS_AS(GridSize::parse("0x5"), InvalidArgument);
	CHECK(standard_level({100, 50}) == 1);
	CHECK(standard_level({64, 32}) == -1);
}

TEST_CASE("jittered zones tile the bbox and survive a GeoJSON round trip") {
	const ZoneScheme zones = make_jittered_zones(kShenzhenBBox, 12, 6, 7);
	CHECK(zones.size() == 72);
	double total = 0.0;
	for (std::size_t i = 0; i < zones.size(); ++i) {
		total += zones.area(i);
	}
	CHECK(std::abs(total - kShenzhenBBox.area()) <= 1e-9 * kShenzhenBBox.area());

	const GridScheme g = build_grid(kShenzhenBBox, 50, 25);
	const FractionMap fm = intersection_fractions(zones, g);
	// Every cell is covered exactly once by zone area.
	std::vector<double> covered(g.cell_count(), 0.0);
	for (std::size_t z = 0; z < zones.size(); ++z) {
		for (const auto &cf : fm.per_zone[z]) {
			covered[cf.cell] += cf.fraction * zones.area(z);
		}
	}
	const double cell_area = g.cell_bbox(0).area();
	for (double c : covered) {
		CHECK(std::abs(c - cell_area) <= 1e-9 * cell_area);
	}

	maup::testing::TempDir tmp;
	write_zones_geojson(tmp / "zones.geojson", zones);
	const ZoneScheme back = read_zones_geojson(tmp / "zones.geojson");
	REQUIRE(back.size() == zones.size());
	for (std::size_t i = 0; i < zones.size(); ++i) {
		CHECK(back.zones()[i].zone_id == zones.zones()[i].zone_id);
		CHECK(back.area(i) == doctest::Approx(zones.area(i)).epsilon(1e-14));
	}
}

TEST_CASE("GeoJSON reader errors") {
	maup::testing::TempDir tmp;
	CHECK_THROWS_AS(read_zones_geojson(tmp / "absent.geojson"), IoError);
	maup::testing::write_file(tmp / "bad.geojson", R"({"type":"FeatureCollection","features":[
	  {"type":"Feature","properties":{},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}}]})");
	CHECK_THROWS_AS(read_zones_geojson(tmp / "bad.geojson"), IoError);
	maup::testing::write_file(tmp / "multi.geojson", R"({"type":"FeatureCollection","features":[
	  {"type":"Feature","properties":{"zone_id":3},"geometry":{"type":"MultiPolygon","coordinates":[
	    [[[0,0],[1,0],[1,1],[0,1],[0,0]]], [[[2,0],[3,0],[3,1],[2,1],[2,0]]]]}}]})");
	const ZoneScheme multi = read_zones_geojson(tmp / "multi.geojson");
	CHECK(multi.size() == 1);
	CHECK(multi.area(0) == doctest::Approx(2.0));
	CHECK(multi.zones()[0].parts[0].outer.size() == 4);
}
