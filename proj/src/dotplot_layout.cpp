#include "maup/dotplot_layout.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace maup {

std::string to_string(ColorMetric metric) {
	switch (metric) {
	case ColorMetric::prmse:
		return "prmse";
	case ColorMetric::u:
		return "u";
	case ColorMetric::corr:
		return "corr";
	}
	return "unknown";
}

ColorMetric color_metric_from_string(const std::string &s) {
	if (s == "prmse") {
		return ColorMetric::prmse;
	}
	if (s == "u") {
		return ColorMetric::u;
	}
	if (s == "corr") {
		return ColorMetric::corr;
	}
	throw InvalidArgument("unknown metric '" + s + "' (expected prmse, u or corr)");
}

std::optional<double> metric_value(const RegionDiagnostics &d, ColorMetric metric) noexcept {
	switch (metric) {
	case ColorMetric::prmse:
		return d.prmse;
	case ColorMetric::u:
		return d.u;
	case ColorMetric::corr:
		return d.corr;
	}
	return std::nullopt;
}

DiameterScale DiameterScale::fit(double max_volume, double target, double d_min) noexcept {
	DiameterScale s{d_min, 0.0};
	if (max_volume > 0.0 && target > d_min) {
		s.gamma = (target - d_min) / max_volume;
	}
	return s;
}

std::vector<DotSpec> sort_regions(std::span<const RegionDiagnostics> diags, const DiameterScale &scale) {
	std::vector<DotSpec> dots;
	dots.reserve(diags.size());
	for (const auto &d : diags) {
		DotSpec s;
		s.region = d.region;
		s.volume = std::max(0.0, d.mean_volume);
		s.diameter = scale.diameter(s.volume);
		s.sort_key = d.mean_abs_error;
		s.metrics = {d.prmse, d.u, d.corr};
		dots.push_back(s);
	}
	std::sort(dots.begin(), dots.end(), [](const DotSpec &a, const DotSpec &b) {
		if (a.sort_key != b.sort_key) {
			return a.sort_key < b.sort_key;
		}
		return a.region < b.region;
	});
	return dots;
}

std::vector<std::size_t> DotLayout::counts() const {
	std::vector<std::size_t> c;
	c.reserve(columns.size());
	for (const auto &col : columns) {
		c.push_back(col.size());
	}
	return c;
}

std::size_t DotLayout::dot_count() const noexcept {
	std::size_t k = 0;
	for (const auto &col : columns) {
		k += col.size();
	}
	return k;
}

double layout_objective(std::span<const double> diameters, std::span<const std::size_t> counts, double W, double H) {
	if (counts.empty()) {
		throw InvalidArgument("layout objective: no columns");
	}
	std::size_t pos = 0;
	std::vector<double> heights;
	double width_sum = 0.0;
	for (const std::size_t c : counts) {
		if (c == 0 || pos + c > diameters.size()) {
			throw InvalidArgument("layout objective: invalid column sizes");
		}
		double h = 0.0;
		double wmax = 0.0;
		for (std::size_t j = pos; j < pos + c; ++j) {
			h += diameters[j];
			wmax = std::max(wmax, diameters[j]);
		}
		heights.push_back(h);
		width_sum += wmax;
		pos += c;
	}
	if (pos != diameters.size()) {
		throw InvalidArgument("layout objective: column sizes do not cover all dots");
	}
	const double hbar = std::accumulate(heights.begin(), heights.end(), 0.0) / static_cast<double>(heights.size());
	double dev = 0.0;
	for (const double h : heights) {
		dev += std::abs(h - hbar);
	}
	return dev + std::abs(width_sum / hbar - W / H);
}

std::vector<std::size_t> greedy_columns(std::span<const double> diameters, std::size_t n) {
	const std::size_t k = diameters.size();
	if (n == 0 || n > k) {
		throw InvalidArgument("greedy columns: column count must lie in [1, k]");
	}
	const double total = std::accumulate(diameters.begin(), diameters.end(), 0.0);
	const double target = total / static_cast<double>(n);
	std::vector<std::size_t> counts;
	counts.reserve(n);
	std::size_t i = 0;
	double cum = 0.0;
	for (std::size_t col = 0; col + 1 < n; ++col) {
		const std::size_t must_leave = n - 1 - col;
		const double boundary = target * static_cast<double>(col + 1);
		std::size_t c = 0;
		do {
			cum += diameters[i++];
			++c;
		} while (i < k - must_leave && cum + 0.5 * diameters[i] <= boundary);
		counts.push_back(c);
	}
	counts.push_back(k - i);
	return counts;
}

namespace {

// Range-maximum over the diameters (sparse table).
class RangeMax {
public:
	explicit RangeMax(std::span<const double> v) {
		const std::size_t k = v.size();
		levels_.emplace_back(v.begin(), v.end());
		for (std::size_t len = 2; len <= k; len *= 2) {
			const auto &prev = levels_.back();
			std::vector<double> next(k - len + 1);
			for (std::size_t i = 0; i + len <= k; ++i) {
				next[i] = std::max(prev[i], prev[i + len / 2]);
			}
			levels_.push_back(std::move(next));
		}
	}

	// Max over [a, b), a < b.
	double query(std::size_t a, std::size_t b) const noexcept {
		const std::size_t len = b - a;
		const auto lvl = static_cast<std::size_t>(std::bit_width(len) - 1);
		const std::size_t span = std::size_t{1} << lvl;
		return std::max(levels_[lvl][a], levels_[lvl][b - span]);
	}

private:
	std::vector<std::vector<double>> levels_;
};

class ColumnSearch {
public:
	ColumnSearch(std::span<const double> d, double W, double H) : d_(d), rmq_(d), target_ratio_(W / H) {
		prefix_.resize(d.size() + 1, 0.0);
		for (std::size_t i = 0; i < d.size(); ++i) {
			prefix_[i + 1] = prefix_[i] + d[i];
		}
	}

	// starts has n+1 entries: column i covers [starts[i], starts[i+1]).
	double evaluate(const std::vector<std::size_t> &starts) const noexcept {
		const std::size_t n = starts.size() - 1;
		const double hbar = prefix_.back() / static_cast<double>(n);
		double dev = 0.0;
		double widths = 0.0;
		for (std::size_t i = 0; i < n; ++i) {
			dev += std::abs(height(starts[i], starts[i + 1]) - hbar);
			widths += rmq_.query(starts[i], starts[i + 1]);
		}
		return dev + std::abs(widths / hbar - target_ratio_);
	}

	// Objective after moving boundary b (start of column b) to `moved`, given
	// the current per-column deviation / width totals.
	double evaluate_move(const std::vector<std::size_t> &starts, std::size_t b, std::size_t moved, double dev,
	                     double widths) const noexcept {
		const std::size_t n = starts.size() - 1;
		const double hbar = prefix_.back() / static_cast<double>(n);
		const std::size_t a0 = starts[b - 1];
		const std::size_t a1 = starts[b];
		const std::size_t a2 = starts[b + 1];
		dev -= std::abs(height(a0, a1) - hbar) + std::abs(height(a1, a2) - hbar);
		widths -= rmq_.query(a0, a1) + rmq_.query(a1, a2);
		dev += std::abs(height(a0, moved) - hbar) + std::abs(height(moved, a2) - hbar);
		widths += rmq_.query(a0, moved) + rmq_.query(moved, a2);
		return dev + std::abs(widths / hbar - target_ratio_);
	}

	void totals(const std::vector<std::size_t> &starts, double &dev, double &widths) const noexcept {
		const std::size_t n = starts.size() - 1;
		const double hbar = prefix_.back() / static_cast<double>(n);
		dev = 0.0;
		widths = 0.0;
		for (std::size_t i = 0; i < n; ++i) {
			dev += std::abs(height(starts[i], starts[i + 1]) - hbar);
			widths += rmq_.query(starts[i], starts[i + 1]);
		}
	}

	std::vector<std::size_t> starts_for(std::size_t n) const {
		const auto counts = greedy_columns(d_, n);
		std::vector<std::size_t> starts{0};
		for (const std::size_t c : counts) {
			starts.push_back(starts.back() + c);
		}
		return starts;
	}

private:
	double height(std::size_t a, std::size_t b) const noexcept { return prefix_[b] - prefix_[a]; }

	std::span<const double> d_;
	RangeMax rmq_;
	double target_ratio_;
	std::vector<double> prefix_;
};

} // namespace

DotLayout optimize_layout(std::span<const DotSpec> dots, double W, double H) {
	const std::size_t k = dots.size();
	if (k == 0) {
		throw InvalidArgument("optimize_layout: no dots (k = 0)");
	}
	if (!(W > 0.0) || !(H > 0.0) || !std::isfinite(W) || !std::isfinite(H)) {
		throw InvalidArgument("optimize_layout: enclosing rectangle must be positive");
	}
	std::vector<double> d(k);
	for (std::size_t i = 0; i < k; ++i) {
		if (!(dots[i].diameter > 0.0) || !std::isfinite(dots[i].diameter)) {
			throw InvalidArgument("optimize_layout: diameters must be positive");
		}
		d[i] = dots[i].diameter;
	}

	const ColumnSearch search(d, W, H);
	const auto estimate = std::llround(std::sqrt(static_cast<double>(k) * W / H));
	const auto n0 = static_cast<std::size_t>(std::clamp<long long>(estimate, 1, static_cast<long long>(k)));

	// Every accepted step, including steps of rejected n +/- 1 trials, spends budget.
	const std::size_t max_moves = 10 * k;
	std::size_t moves = 0;

	// First-improvement boundary descent; returns the final objective.
	auto descend = [&](std::vector<std::size_t> &starts) {
		double f = search.evaluate(starts);
		while (moves < max_moves) {
			double dev = 0.0;
			double widths = 0.0;
			search.totals(starts, dev, widths);
			const std::size_t n = starts.size() - 1;
			bool improved = false;
			for (std::size_t b = 1; b < n && !improved; ++b) {
				// Last dot of column b-1 moves right, then first dot of column b moves left.
				if (starts[b] - starts[b - 1] > 1 && search.evaluate_move(starts, b, starts[b] - 1, dev, widths) < f) {
					--starts[b];
					improved = true;
				} else if (starts[b + 1] - starts[b] > 1 &&
				           search.evaluate_move(starts, b, starts[b] + 1, dev, widths) < f) {
					++starts[b];
					improved = true;
				}
			}
			if (!improved) {
				break;
			}
			f = search.evaluate(starts);
			++moves;
		}
		return f;
	};

	std::vector<std::size_t> starts = search.starts_for(n0);
	double best = descend(starts);
	// Column-count moves: refill greedily at n +/- 1, descend, keep strict gains.
	bool improved = true;
	while (improved && moves < max_moves) {
		improved = false;
		const std::size_t n = starts.size() - 1;
		for (const std::size_t m : {n - 1, n + 1}) {
			if (m < 1 || m > k || moves >= max_moves) {
				continue;
			}
			auto candidate = search.starts_for(m);
			++moves;
			const double f = descend(candidate);
			if (f < best) {
				starts = std::move(candidate);
				best = f;
				improved = true;
				break;
			}
		}
	}

	DotLayout layout;
	layout.W = W;
	layout.H = H;
	layout.objective = best;
	layout.iterations = moves;
	const std::size_t n = starts.size() - 1;
	layout.columns.resize(n);
	double x0 = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		auto &col = layout.columns[i];
		double width = 0.0;
		for (std::size_t j = starts[i]; j < starts[i + 1]; ++j) {
			width = std::max(width, d[j]);
		}
		double y = 0.0;
		for (std::size_t j = starts[i]; j < starts[i + 1]; ++j) {
			col.push_back({dots[j], x0 + 0.5 * width, y + 0.5 * d[j]});
			y += d[j];
		}
		layout.content_height = std::max(layout.content_height, y);
		x0 += width;
	}
	layout.content_width = x0;
	return layout;
}

// --- hierarchy --------------------------------------------------------------------

namespace {

std::size_t refinement(const GridSize &coarse, const GridSize &fine) {
	if (coarse.w < 1 || coarse.h < 1 || fine.w % coarse.w != 0 || fine.h % coarse.h != 0 ||
	    fine.w / coarse.w != fine.h / coarse.h || fine.w < coarse.w) {
		throw InvalidArgument("scales " + coarse.label() + " and " + fine.label() + " are not a dyadic refinement");
	}
	return static_cast<std::size_t>(fine.w / coarse.w);
}

} // namespace

std::vector<std::size_t> child_cells(const GridSize &coarse, std::size_t index, const GridSize &fine) {
	const std::size_t f = refinement(coarse, fine);
	const auto cw = static_cast<std::size_t>(coarse.w);
	if (index >= cw * static_cast<std::size_t>(coarse.h)) {
		throw InvalidArgument("child_cells: region " + std::to_string(index) + " outside " + coarse.label());
	}
	const std::size_t col = index % cw;
	const std::size_t row = index / cw;
	const auto fw = static_cast<std::size_t>(fine.w);
	std::vector<std::size_t> out;
	out.reserve(f * f);
	for (std::size_t b = 0; b < f; ++b) {
		for (std::size_t a = 0; a < f; ++a) {
			out.push_back((row * f + b) * fw + col * f + a);
		}
	}
	return out;
}

std::size_t parent_cell(const GridSize &fine, std::size_t index, const GridSize &coarse) {
	const std::size_t f = refinement(coarse, fine);
	const auto fw = static_cast<std::size_t>(fine.w);
	if (index >= fw * static_cast<std::size_t>(fine.h)) {
		throw InvalidArgument("parent_cell: region " + std::to_string(index) + " outside " + fine.label());
	}
	return (index / fw / f) * static_cast<std::size_t>(coarse.w) + (index % fw) / f;
}

std::vector<int> volume_subsets(std::span<const DotSpec> sorted, int parts) {
	if (parts < 1) {
		throw InvalidArgument("volume_subsets: parts must be positive");
	}
	std::vector<int> out(sorted.size(), 0);
	double total = 0.0;
	for (const auto &d : sorted) {
		total += d.volume;
	}
	if (total <= 0.0) {
		// No volume to balance: fall back to equal counts.
		for (std::size_t i = 0; i < sorted.size(); ++i) {
			out[i] = static_cast<int>(i * static_cast<std::size_t>(parts) / sorted.size());
		}
		return out;
	}
	int s = 0;
	double cum = 0.0;
	for (std::size_t i = 0; i < sorted.size(); ++i) {
		out[i] = s;
		cum += sorted[i].volume;
		while (s < parts - 1 && cum * parts >= total * (s + 1)) {
			++s;
		}
	}
	return out;
}

HierarchyArrangement arrange_hierarchy(std::span<const std::optional<ScaleDiagnostics>> levels,
                                       const HierarchyOptions &options, bool require_all) {
	if (levels.size() != 3) {
		throw InvalidArgument("arrange_hierarchy: expected one entry per standard scale");
	}
	HierarchyArrangement out;
	int coarsest = -1;
	for (int l = 0; l < 3; ++l) {
		const auto &level = levels[static_cast<std::size_t>(l)];
		if (!level) {
			if (require_all) {
				throw InvalidArgument("arrange_hierarchy: missing scale " + kStandardScales[l].label());
			}
			continue;
		}
		if (level->size != kStandardScales[l]) {
			throw InvalidArgument("arrange_hierarchy: level " + std::to_string(l) + " must be " +
			                      kStandardScales[l].label() + ", got " + level->size.label());
		}
		if (level->diags.size() != static_cast<std::size_t>(level->size.w * level->size.h)) {
			throw InvalidArgument("arrange_hierarchy: diagnostics count does not match " + level->size.label());
		}
		out.levels_present[static_cast<std::size_t>(l)] = true;
		if (coarsest < 0) {
			coarsest = l;
		}
	}
	if (coarsest < 0) {
		throw InvalidArgument("arrange_hierarchy: no scales given");
	}

	double max_volume = 0.0;
	for (const auto &d : levels[static_cast<std::size_t>(coarsest)]->diags) {
		max_volume = std::max(max_volume, d.mean_volume);
	}
	out.diameters = DiameterScale::fit(max_volume, options.H / 12.0, options.d_min);

	for (int l = 0; l < 3; ++l) {
		const auto &level = levels[static_cast<std::size_t>(l)];
		if (!level) {
			continue;
		}
		const auto dots = sort_regions(level->diags, out.diameters);
		const int parts = 1 << (2 * l);
		const auto subset = volume_subsets(dots, parts);
		std::size_t begin = 0;
		for (int s = 0; s < parts; ++s) {
			std::size_t end = begin;
			while (end < dots.size() && subset[end] == s) {
				++end;
			}
			HierarchyPlot plot;
			plot.level = l;
			plot.scale = level->size;
			plot.subset_index = s;
			if (end > begin) {
				plot.layout = optimize_layout(std::span(dots).subspan(begin, end - begin), options.W, options.H);
			} else {
				plot.layout.W = options.W;
				plot.layout.H = options.H;
			}
			out.plots.push_back(std::move(plot));
			begin = end;
		}
	}
	return out;
}

std::optional<std::pair<double, double>> color_range(const HierarchyArrangement &arrangement, ColorMetric metric) {
	std::optional<std::pair<double, double>> range;
	for (const auto &plot : arrangement.plots) {
		for (const auto &col : plot.layout.columns) {
			for (const auto &p : col) {
				const auto v = p.dot.color_value(metric);
				if (!v) {
					continue;
				}
				if (!range) {
					range = std::pair{*v, *v};
				} else {
					range->first = std::min(range->first, *v);
					range->second = std::max(range->second, *v);
				}
			}
		}
	}
	return range;
}

nlohmann::json child_map_json(std::span<const GridSize> scales) {
	nlohmann::json out = nlohmann::json::object();
	for (std::size_t i = 0; i < scales.size(); ++i) {
		for (std::size_t j = i + 1; j < scales.size(); ++j) {
			auto table = nlohmann::json::array();
			const auto cells = static_cast<std::size_t>(scales[i].w * scales[i].h);
			for (std::size_t c = 0; c < cells; ++c) {
				table.push_back(child_cells(scales[i], c, scales[j]));
			}
			out[scales[i].label() + "->" + scales[j].label()] = std::move(table);
		}
	}
	return out;
}

nlohmann::json layout_to_json(const HierarchyArrangement &arrangement, ColorMetric metric) {
	nlohmann::json plots = nlohmann::json::array();
	for (const auto &plot : arrangement.plots) {
		nlohmann::json dots = nlohmann::json::array();
		for (const auto &col : plot.layout.columns) {
			for (const auto &p : col) {
				const auto v = p.dot.color_value(metric);
				dots.push_back({{"region_id", p.dot.region},
				                {"x", p.x},
				                {"y", p.y},
				                {"diameter", p.dot.diameter},
				                {"volume", p.dot.volume},
				                {"mean_abs_error", p.dot.sort_key},
				                {"color_value", v ? nlohmann::json(*v) : nlohmann::json(nullptr)}});
			}
		}
		plots.push_back({{"scale", plot.scale.label()},
		                 {"level", plot.level},
		                 {"subset_index", plot.subset_index},
		                 {"W", plot.layout.W},
		                 {"H", plot.layout.H},
		                 {"n", plot.layout.n()},
		                 {"counts", plot.layout.counts()},
		                 {"objective", plot.layout.objective},
		                 {"content_width", plot.layout.content_width},
		                 {"content_height", plot.layout.content_height},
		                 {"dots", std::move(dots)}});
	}
	const auto range = color_range(arrangement, metric);
	return {{"metric", to_string(metric)},
	        {"color_range", range ? nlohmann::json{{"min", range->first}, {"max", range->second}}
	                              : nlohmann::json(nullptr)},
	        {"diameter_scale", {{"d_min", arrangement.diameters.d_min}, {"gamma", arrangement.diameters.gamma}}},
	        {"plots", std::move(plots)},
	        {"child_map", child_map_json(kStandardScales)}};
}

namespace {

constexpr const char *kMetricKeys[3] = {"prmse", "u", "corr"};

} // namespace

nlohmann::json arrangement_to_json(const HierarchyArrangement &arrangement) {
	nlohmann::json plots = nlohmann::json::array();
	for (const auto &plot : arrangement.plots) {
		nlohmann::json columns = nlohmann::json::array();
		for (const auto &col : plot.layout.columns) {
			nlohmann::json dots = nlohmann::json::array();
			for (const auto &p : col) {
				nlohmann::json dot{{"region_id", p.dot.region},   {"x", p.x},
				                   {"y", p.y},                    {"diameter", p.dot.diameter},
				                   {"volume", p.dot.volume},      {"mean_abs_error", p.dot.sort_key}};
				for (std::size_t m = 0; m < 3; ++m) {
					dot[kMetricKeys[m]] = p.dot.metrics[m] ? nlohmann::json(*p.dot.metrics[m]) : nlohmann::json(nullptr);
				}
				dots.push_back(std::move(dot));
			}
			columns.push_back(std::move(dots));
		}
		plots.push_back({{"level", plot.level},
		                 {"scale", plot.scale.label()},
		                 {"subset_index", plot.subset_index},
		                 {"W", plot.layout.W},
		                 {"H", plot.layout.H},
		                 {"objective", plot.layout.objective},
		                 {"iterations", plot.layout.iterations},
		                 {"content_width", plot.layout.content_width},
		                 {"content_height", plot.layout.content_height},
		                 {"columns", std::move(columns)}});
	}
	return {{"diameter_scale", {{"d_min", arrangement.diameters.d_min}, {"gamma", arrangement.diameters.gamma}}},
	        {"levels_present", arrangement.levels_present},
	        {"plots", std::move(plots)}};
}

HierarchyArrangement arrangement_from_json(const nlohmann::json &j) {
	HierarchyArrangement out;
	out.diameters.d_min = j.at("diameter_scale").at("d_min").get<double>();
	out.diameters.gamma = j.at("diameter_scale").at("gamma").get<double>();
	out.levels_present = j.at("levels_present").get<std::array<bool, 3>>();
	for (const auto &pj : j.at("plots")) {
		HierarchyPlot plot;
		plot.level = pj.at("level").get<int>();
		plot.scale = GridSize::parse(pj.at("scale").get<std::string>());
		plot.subset_index = pj.at("subset_index").get<int>();
		plot.layout.W = pj.at("W").get<double>();
		plot.layout.H = pj.at("H").get<double>();
		plot.layout.objective = pj.at("objective").get<double>();
		plot.layout.iterations = pj.at("iterations").get<std::size_t>();
		plot.layout.content_width = pj.at("content_width").get<double>();
		plot.layout.content_height = pj.at("content_height").get<double>();
		for (const auto &cj : pj.at("columns")) {
			std::vector<PlacedDot> col;
			for (const auto &dj : cj) {
				PlacedDot p;
				p.dot.region = dj.at("region_id").get<std::size_t>();
				p.x = dj.at("x").get<double>();
				p.y = dj.at("y").get<double>();
				p.dot.diameter = dj.at("diameter").get<double>();
				p.dot.volume = dj.at("volume").get<double>();
				p.dot.sort_key = dj.at("mean_abs_error").get<double>();
				for (std::size_t m = 0; m < 3; ++m) {
					const auto &v = dj.at(kMetricKeys[m]);
					if (!v.is_null()) {
						p.dot.metrics[m] = v.get<double>();
					}
				}
				col.push_back(p);
			}
			plot.layout.columns.push_back(std::move(col));
		}
		out.plots.push_back(std::move(plot));
	}
	return out;
}

} // namespace maup
