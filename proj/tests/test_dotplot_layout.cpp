#include <doctest.h>

#include "maup/dotplot_layout.hpp"
#include "support.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

using namespace maup;
using maup::testing::brute_force_layout_optimum;
using maup::testing::dots_from_diameters;

namespace {

std::vector<double> random_diameters(Rng &rng, std::size_t k) {
	std::vector<double> d(k);
	for (auto &x : d) {
		x = 1.0 + 19.0 * rng.uniform();
	}
	return d;
}

std::vector<std::size_t> flattened_regions(const DotLayout &layout) {
	std::vector<std::size_t> out;
	for (const auto &col : layout.columns) {
		for (const auto &p : col) {
			out.push_back(p.dot.region);
		}
	}
	return out;
}

RegionDiagnostics diag(std::size_t region, double volume, double mae) {
	RegionDiagnostics d;
	d.region = region;
	d.mean_volume = volume;
	d.mean_abs_error = mae;
	d.prmse = mae / (volume + 1.0);
	d.u = 0.1;
	d.corr = 0.5;
	return d;
}

std::vector<RegionDiagnostics> scale_diags(const GridSize &size, Rng &rng) {
	std::vector<RegionDiagnostics> out;
	for (std::size_t i = 0; i < static_cast<std::size_t>(size.w * size.h); ++i) {
		const double v = 50.0 * rng.uniform() * rng.uniform();
		out.push_back(diag(i, v, v * (0.1 + 0.2 * rng.uniform())));
	}
	return out;
}

} // namespace

TEST_CASE("regions sort by error with index tie-break and a diameter floor") {
	const std::vector<RegionDiagnostics> diags{diag(0, 4.0, 5.0), diag(1, 0.0, 2.0), diag(2, 9.0, 2.0)};
	const DiameterScale scale{1.0, 0.5};
	const auto dots = sort_regions(diags, scale);
	REQUIRE(dots.size() == 3);
	CHECK(dots[0].region == 1);
	CHECK(dots[1].region == 2);
	CHECK(dots[2].region == 0);
	CHECK(dots[0].diameter == 1.0);
	CHECK(dots[1].diameter == 5.5);
	CHECK(dots[2].color_value(ColorMetric::u) == 0.1);

	const DiameterScale fitted = DiameterScale::fit(200.0, 25.0);
	CHECK(fitted.diameter(200.0) == doctest::Approx(25.0));
	CHECK(fitted.diameter(0.0) == 1.0);
	CHECK(DiameterScale::fit(0.0, 25.0).gamma == 0.0);
}

TEST_CASE("objective evaluation") {
	const std::vector<double> d{2, 2, 3, 1};
	const std::vector<std::size_t> c{2, 2};
	// H = {4, 4}, W_i = {2, 3}, Hbar = 4: 0 + |5/4 - 1|
	CHECK(layout_objective(d, c, 1.0, 1.0) == doctest::Approx(0.25));
	CHECK_THROWS_AS(layout_objective(d, std::vector<std::size_t>{2, 1}, 1.0, 1.0), InvalidArgument);
	CHECK_THROWS_AS(layout_objective(d, std::vector<std::size_t>{4, 0}, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("single dot") {
	const std::vector<double> d{3.0};
	const auto layout = optimize_layout(dots_from_diameters(d), 4.0, 2.0);
	CHECK(layout.n() == 1);
	CHECK(layout.objective == doctest::Approx(1.0));
	CHECK(layout.columns[0][0].x == 1.5);
	CHECK(layout.columns[0][0].y == 1.5);
}

TEST_CASE("sixteen equal dots in a square pack four by four") {
	const std::vector<double> d(16, 5.0);
	const auto layout = optimize_layout(dots_from_diameters(d), 100.0, 100.0);
	CHECK(layout.n() == 4);
	CHECK(layout.counts() == std::vector<std::size_t>{4, 4, 4, 4});
	CHECK(layout.objective == 0.0);

	std::vector<std::size_t> best;
	CHECK(brute_force_layout_optimum(d, 100.0, 100.0, &best) == 0.0);
	CHECK(best == std::vector<std::size_t>{4, 4, 4, 4});
}

TEST_CASE("solver is near the exhaustive optimum when that optimum has several columns") {
	Rng rng(31);
	int multi = 0;
	int good = 0;
	for (int trial = 0; trial < 100; ++trial) {
		const std::size_t k = 1 + rng.below(10);
		const auto d = random_diameters(rng, k);
		const double W = 50.0 + 400.0 * rng.uniform();
		const double H = 50.0 + 400.0 * rng.uniform();
		const auto layout = optimize_layout(dots_from_diameters(d), W, H);
		std::vector<std::size_t> best_counts;
		const double best = brute_force_layout_optimum(d, W, H, &best_counts);
		CHECK(layout.objective >= best - 1e-12);
		CHECK(layout.objective == doctest::Approx(layout_objective(d, layout.counts(), W, H)));
		if (best_counts.size() > 1) {
			++multi;
			if (layout.objective <= 1.1 * best + 1e-12) {
				++good;
			}
		}
	}
	CHECK(good == multi);
}

TEST_CASE("a single column zeroes the height term") {
	// Only the aspect term remains: |d_max / sum(d) - W / H|.
	const std::vector<double> d{3.0, 7.0, 2.0, 5.0};
	CHECK(layout_objective(d, std::vector<std::size_t>{4}, 400.0, 300.0) ==
	      doctest::Approx(std::abs(7.0 / 17.0 - 4.0 / 3.0)));
}

TEST_CASE("layout preserves order, counts and geometry") {
	Rng rng(32);
	for (int trial = 0; trial < 500; ++trial) {
		const std::size_t k = 1 + rng.below(200);
		const auto d = random_diameters(rng, k);
		const double W = 10.0 + 500.0 * rng.uniform();
		const double H = 10.0 + 500.0 * rng.uniform();
		const auto layout = optimize_layout(dots_from_diameters(d), W, H);

		std::vector<std::size_t> expected(k);
		std::iota(expected.begin(), expected.end(), 0);
		REQUIRE(flattened_regions(layout) == expected);
		const auto counts = layout.counts();
		CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == k);
		CHECK(layout.iterations <= 10 * k);

		// Initial objective bounds the accepted result.
		const auto n0 = static_cast<std::size_t>(
		    std::clamp(std::llround(std::sqrt(static_cast<double>(k) * W / H)), 1LL, static_cast<long long>(k)));
		CHECK(layout.objective <= layout_objective(d, greedy_columns(d, n0), W, H) + 1e-12);

		double left = 0.0;
		for (const auto &col : layout.columns) {
			double width = 0.0;
			for (const auto &p : col) {
				width = std::max(width, p.dot.diameter);
			}
			double top = 0.0;
			for (const auto &p : col) {
				CHECK(p.y == doctest::Approx(top + p.dot.diameter / 2));
				CHECK(p.x == doctest::Approx(left + width / 2));
				top += p.dot.diameter;
			}
			left += width;
		}
		CHECK(layout.content_width == doctest::Approx(left));
	}
}

TEST_CASE("greedy columns") {
	const std::vector<double> d{1, 1, 1, 1, 1, 1};
	CHECK(greedy_columns(d, 3) == std::vector<std::size_t>{2, 2, 2});
	CHECK(greedy_columns(d, 1) == std::vector<std::size_t>{6});
	CHECK(greedy_columns(d, 6) == std::vector<std::size_t>{1, 1, 1, 1, 1, 1});
	const std::vector<double> skew{10, 1, 1, 1};
	const auto c = greedy_columns(skew, 3);
	CHECK(c.size() == 3);
	CHECK(std::accumulate(c.begin(), c.end(), std::size_t{0}) == 4);
	CHECK_THROWS_AS(greedy_columns(d, 0), InvalidArgument);
	CHECK_THROWS_AS(greedy_columns(d, 7), InvalidArgument);
}

TEST_CASE("layout preconditions") {
	CHECK_THROWS_AS(optimize_layout(std::span<const DotSpec>{}, 1.0, 1.0), InvalidArgument);
	const std::vector<double> d{1.0, 2.0};
	CHECK_THROWS_AS(optimize_layout(dots_from_diameters(d), 0.0, 1.0), InvalidArgument);
	const std::vector<double> bad{1.0, 0.0};
	CHECK_THROWS_AS(optimize_layout(dots_from_diameters(bad), 1.0, 1.0), InvalidArgument);
}

TEST_CASE("dyadic child and parent maps") {
	const auto kids = child_cells({50, 25}, 0, {100, 50});
	CHECK(std::set<std::size_t>(kids.begin(), kids.end()) == std::set<std::size_t>{0, 1, 100, 101});
	const auto grand = child_cells({50, 25}, 0, {200, 100});
	CHECK(grand.size() == 16);
	Rng rng(2);
	for (int i = 0; i < 200; ++i) {
		const std::size_t coarse = rng.below(1250);
		for (std::size_t fine : child_cells({50, 25}, coarse, {200, 100})) {
			CHECK(parent_cell({200, 100}, fine, {50, 25}) == coarse);
			const std::size_t mid = parent_cell({200, 100}, fine, {100, 50});
			CHECK(parent_cell({100, 50}, mid, {50, 25}) == coarse);
		}
	}
	CHECK_THROWS_AS(child_cells({50, 25}, 1250, {100, 50}), InvalidArgument);
	CHECK_THROWS_AS(child_cells({50, 25}, 0, {75, 50}), InvalidArgument);
	CHECK(child_map_json(std::vector<GridSize>{{50, 25}, {100, 50}}).at("50x25->100x50").size() == 1250);
}

TEST_CASE("volume subsets") {
	std::vector<DotSpec> uniform(12);
	for (std::size_t i = 0; i < 12; ++i) {
		uniform[i].region = i;
		uniform[i].volume = 2.0;
	}
	CHECK(volume_subsets(uniform, 4) == std::vector<int>{0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3});

	std::vector<DotSpec> heavy(5);
	const double vols[5] = {10, 60, 10, 10, 10};
	for (std::size_t i = 0; i < 5; ++i) {
		heavy[i].volume = vols[i];
	}
	const auto s = volume_subsets(heavy, 4);
	CHECK(s[1] == 0);
	CHECK(s == std::vector<int>{0, 0, 2, 3, 3});

	std::vector<DotSpec> zero(8);
	CHECK(volume_subsets(zero, 4) == std::vector<int>{0, 0, 1, 1, 2, 2, 3, 3});
}

TEST_CASE("three-level hierarchy") {
	Rng rng(12);
	std::vector<std::optional<ScaleDiagnostics>> levels;
	for (const auto &size : kStandardScales) {
		levels.push_back(ScaleDiagnostics{size, scale_diags(size, rng)});
	}
	const HierarchyOptions opts;
	const auto arr = arrange_hierarchy(levels, opts);
	REQUIRE(arr.plots.size() == 21);
	int per_level[3] = {0, 0, 0};
	std::size_t dots_per_level[3] = {0, 0, 0};
	for (const auto &plot : arr.plots) {
		++per_level[plot.level];
		dots_per_level[plot.level] += plot.layout.dot_count();
		CHECK(plot.scale == kStandardScales[plot.level]);
	}
	CHECK(per_level[0] == 1);
	CHECK(per_level[1] == 4);
	CHECK(per_level[2] == 16);
	CHECK(dots_per_level[0] == 1250);
	CHECK(dots_per_level[1] == 5000);
	CHECK(dots_per_level[2] == 20000);

	// Subset volume shares sit within one boundary dot of a quarter.
	double total = 0.0;
	for (const auto &d : levels[1]->diags) {
		total += d.mean_volume;
	}
	double max_dot = 0.0;
	for (const auto &d : levels[1]->diags) {
		max_dot = std::max(max_dot, d.mean_volume);
	}
	for (const auto &plot : arr.plots) {
		if (plot.level != 1) {
			continue;
		}
		double vol = 0.0;
		for (const auto &col : plot.layout.columns) {
			for (const auto &p : col) {
				vol += p.dot.volume;
			}
		}
		CHECK(std::abs(vol - total / 4) <= max_dot + 1e-9);
	}

	double coarse_max = 0.0;
	for (const auto &d : levels[0]->diags) {
		coarse_max = std::max(coarse_max, d.mean_volume);
	}
	CHECK(arr.diameters.diameter(coarse_max) == doctest::Approx(opts.H / 12));

	const auto back = arrangement_from_json(arrangement_to_json(arr));
	REQUIRE(back.plots.size() == arr.plots.size());
	CHECK(arrangement_to_json(back) == arrangement_to_json(arr));

	const auto range = color_range(arr, ColorMetric::u);
	REQUIRE(range);
	CHECK(range->first == 0.1);
	CHECK(range->second == 0.1);

	const auto exported = layout_to_json(arr, ColorMetric::prmse);
	CHECK(exported.at("metric") == "prmse");
	CHECK(exported.at("plots").size() == 21);
	const auto &dot = exported.at("plots")[0].at("dots")[0];
	for (const char *key : {"region_id", "x", "y", "diameter", "color_value"}) {
		CHECK(dot.contains(key));
	}
	CHECK(exported.at("child_map").contains("100x50->200x100"));
}

TEST_CASE("hierarchy with missing scales") {
	Rng rng(13);
	std::vector<std::optional<ScaleDiagnostics>> levels{ScaleDiagnostics{kStandardScales[0], scale_diags(kStandardScales[0], rng)},
	                                                    ScaleDiagnostics{kStandardScales[1], scale_diags(kStandardScales[1], rng)},
	                                                    std::nullopt};
	CHECK_THROWS_WITH_AS(arrange_hierarchy(levels, {}), doctest::Contains("missing scale 200x100"), InvalidArgument);
	const auto partial = arrange_hierarchy(levels, {}, false);
	CHECK(partial.plots.size() == 5);
	CHECK(partial.levels_present == std::array<bool, 3>{true, true, false});
}
