#pragma once

#include "maup/geo_partition.hpp"
#include "maup/metrics.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace maup {

enum class ColorMetric { prmse, u, corr };

std::string to_string(ColorMetric metric);
ColorMetric color_metric_from_string(const std::string &s);
std::optional<double> metric_value(const RegionDiagnostics &d, ColorMetric metric) noexcept;

/// diameter = d_min + gamma * volume; one scale is shared by all plots of a
/// hierarchy so dot sizes compare across scales.
struct DiameterScale {
	double d_min = 1.0;
	double gamma = 0.0;

	double diameter(double volume) const noexcept { return d_min + gamma * volume; }
	/// gamma such that `max_volume` maps to diameter `target` (gamma = 0 if unattainable).
	static DiameterScale fit(double max_volume, double target, double d_min = 1.0) noexcept;
};

struct DotSpec {
	std::size_t region = 0;
	double diameter = 1.0;
	double sort_key = 0.0; // mean abs error
	double volume = 0.0;
	/// prmse, u, corr (indexed by ColorMetric).
	std::array<std::optional<double>, 3> metrics;

	std::optional<double> color_value(ColorMetric metric) const noexcept {
		return metrics[static_cast<std::size_t>(metric)];
	}
};

/// Ascending by mean abs error, ties by region index.
std::vector<DotSpec> sort_regions(std::span<const RegionDiagnostics> diags, const DiameterScale &scale);

struct PlacedDot {
	DotSpec dot;
	double x = 0.0; // center, from the left
	double y = 0.0; // center, from the top
};

struct DotLayout {
	double W = 0.0;
	double H = 0.0;
	std::vector<std::vector<PlacedDot>> columns;
	double objective = 0.0;
	std::size_t iterations = 0;
	double content_width = 0.0;  // sum of column widths
	double content_height = 0.0; // tallest column

	std::size_t n() const noexcept { return columns.size(); }
	std::vector<std::size_t> counts() const;
	std::size_t dot_count() const noexcept;
};

/// Column-packing objective for contiguous column sizes `counts` over the
/// ordered diameters:
///   sum_i |H_i - Hbar| + |sum_i W_i / Hbar - W / H|
/// with H_i the column height sum, W_i the column max, Hbar = sum_i H_i / n.
double layout_objective(std::span<const double> diameters, std::span<const std::size_t> counts, double W, double H);

/// Greedy column sizes for n columns, each column closing once its cumulative
/// height would pass the next multiple of (total / n).
std::vector<std::size_t> greedy_columns(std::span<const double> diameters, std::size_t n);

/// Packs the ordered dots into contiguous columns minimizing layout_objective.
/// Starts from n = round(sqrt(k W / H)) with greedy sizes, then runs
/// first-improvement local search over single boundary-dot moves and n +/- 1
/// (greedy refill followed by its own boundary descent), accepting strict
/// decreases, for at most 10 k moves. The search is local: it does not visit
/// distant column counts such as the single column.
DotLayout optimize_layout(std::span<const DotSpec> dots, double W, double H);

/// Children of a coarse cell at a finer dyadic scale: (f*col + a, f*row + b).
std::vector<std::size_t> child_cells(const GridSize &coarse, std::size_t index, const GridSize &fine);
std::size_t parent_cell(const GridSize &fine, std::size_t index, const GridSize &coarse);

/// Splits an error-sorted list into `parts` contiguous subsets of about equal
/// volume. A dot stays in the subset it overflows; returns subset index per dot.
std::vector<int> volume_subsets(std::span<const DotSpec> sorted, int parts);

struct ScaleDiagnostics {
	GridSize size;
	std::vector<RegionDiagnostics> diags;
};

struct HierarchyOptions {
	double W = 400.0;
	double H = 300.0;
	double d_min = 1.0;
};

struct HierarchyPlot {
	int level = 0;
	GridSize scale;
	int subset_index = 0;
	DotLayout layout;
};

struct HierarchyArrangement {
	DiameterScale diameters;
	std::vector<HierarchyPlot> plots;
	std::array<bool, 3> levels_present{};
};

/// Level l (0 = 50x25) is split into 4^l volume subsets, each laid out on its
/// own. `levels` holds one entry per standard scale; with require_all a
/// missing scale is an error, otherwise absent levels are skipped.
HierarchyArrangement arrange_hierarchy(std::span<const std::optional<ScaleDiagnostics>> levels,
                                       const HierarchyOptions &options, bool require_all = true);

/// Min / max of a metric over every dot of every plot; nullopt if never defined.
std::optional<std::pair<double, double>> color_range(const HierarchyArrangement &arrangement, ColorMetric metric);

/// Layout export: {metric, color_range, diameter_scale, plots:[{scale,
/// subset_index, W, H, dots:[{region_id, x, y, diameter, color_value}]}], child_map}.
nlohmann::json layout_to_json(const HierarchyArrangement &arrangement, ColorMetric metric);

/// Metric-neutral form carrying every metric per dot; inverse of arrangement_from_json.
nlohmann::json arrangement_to_json(const HierarchyArrangement &arrangement);
HierarchyArrangement arrangement_from_json(const nlohmann::json &j);

/// Child map section of the layout export: {"50x25->100x50": [[ids]...], ...}.
nlohmann::json child_map_json(std::span<const GridSize> scales);

} // namespace maup
