#include "maup/metrics.hpp"

#include "maup/format.hpp"

#include <algorithm>
#include <cmath>

namespace maup {

namespace {

void append_reason(std::string &reasons, const char *code) {
	if (!reasons.empty()) {
		reasons.push_back(';');
	}
	reasons += code;
}

bool is_constant(std::span<const double> v) noexcept {
	return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
}

void check_matching(const FlowTensor &observed, const FlowTensor &predicted) {
	if (observed.w() != predicted.w() || observed.h() != predicted.h() ||
	    observed.t_first() != predicted.t_first() || observed.t_last() != predicted.t_last()) {
		throw InvalidArgument("metrics: observed and predicted tensors differ in dimensions or slot range");
	}
}

} // namespace

RegionDiagnostics series_metrics(std::span<const double> observed, std::span<const double> predicted) {
	if (observed.size() != predicted.size()) {
		throw InvalidArgument("metrics: series lengths differ");
	}
	RegionDiagnostics d;
	const std::size_t n = observed.size();
	d.n_slots = n;
	if (n == 0) {
		d.undefined_reason = "empty_series";
		return d;
	}
	const auto nd = static_cast<double>(n);

	double sum_x = 0.0;
	double sum_y = 0.0;
	double sum_abs = 0.0;
	double sum_sq = 0.0;
	double sum_xx = 0.0;
	double sum_yy = 0.0;
	for (std::size_t t = 0; t < n; ++t) {
		const double x = observed[t];
		const double y = predicted[t];
		const double e = y - x;
		sum_x += x;
		sum_y += y;
		sum_abs += std::abs(e);
		sum_sq += e * e;
		sum_xx += x * x;
		sum_yy += y * y;
	}
	const double mean_x = sum_x / nd;
	const double mean_y = sum_y / nd;
	const double rmse = std::sqrt(sum_sq / nd);
	d.mean_volume = mean_x;
	d.mean_abs_error = sum_abs / nd;

	if (mean_x != 0.0) {
		d.prmse = rmse / mean_x;
	} else {
		append_reason(d.undefined_reason, "zero_mean");
	}

	const double denom = std::sqrt(sum_yy / nd) + std::sqrt(sum_xx / nd);
	if (denom > 0.0) {
		d.u = std::min(1.0, rmse / denom);
	} else {
		append_reason(d.undefined_reason, "all_zero");
	}

	if (is_constant(observed) || is_constant(predicted)) {
		append_reason(d.undefined_reason, "constant_series");
	} else {
		double sxy = 0.0;
		double sxx = 0.0;
		double syy = 0.0;
		for (std::size_t t = 0; t < n; ++t) {
			const double dx = observed[t] - mean_x;
			const double dy = predicted[t] - mean_y;
			sxy += dx * dy;
			sxx += dx * dx;
			syy += dy * dy;
		}
		d.corr = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
	}
	return d;
}

std::vector<RegionDiagnostics> region_metrics(const FlowTensor &observed, const FlowTensor &predicted) {
	check_matching(observed, predicted);
	std::vector<RegionDiagnostics> out;
	out.reserve(observed.cell_count());
	for (std::size_t g = 0; g < observed.cell_count(); ++g) {
		const auto x = observed.series(g);
		const auto y = predicted.series(g);
		auto d = series_metrics(x, y);
		d.region = g;
		out.push_back(std::move(d));
	}
	return out;
}

double global_rmse(const FlowTensor &observed, const FlowTensor &predicted) {
	check_matching(observed, predicted);
	double sum_sq = 0.0;
	for (std::size_t t = 0; t < observed.slot_count(); ++t) {
		for (std::size_t g = 0; g < observed.cell_count(); ++g) {
			const double e = predicted.at(t, g) - observed.at(t, g);
			sum_sq += e * e;
		}
	}
	return std::sqrt(sum_sq / static_cast<double>(observed.size()));
}

int VsupScale::base_value_bin(double value) const noexcept {
	if (!(max_value > 0.0) || !(value > 0.0)) {
		return 0;
	}
	const auto bin = static_cast<int>(std::floor(value / max_value * kValueBins));
	return std::clamp(bin, 0, kValueBins - 1);
}

int VsupScale::error_level(double error) const noexcept {
	if (!(max_error > 0.0) || !(error > 0.0)) {
		return 0;
	}
	const auto level = static_cast<int>(std::floor(error / max_error * kErrorLevels));
	return std::clamp(level, 0, kErrorLevels - 1);
}

VsupCell VsupScale::classify(double value, double error) const noexcept {
	const int level = error_level(error);
	return {level, base_value_bin(value) >> level};
}

VsupScale vsup_scale(std::span<const RegionDiagnostics> diags) {
	VsupScale s;
	for (const auto &d : diags) {
		s.max_value = std::max(s.max_value, d.mean_volume);
		s.max_error = std::max(s.max_error, d.mean_abs_error);
	}
	return s;
}

VsupAssignment vsup_assign(std::span<const RegionDiagnostics> diags) {
	if (diags.empty()) {
		throw InvalidArgument("vsup_assign: empty diagnostics list");
	}
	VsupAssignment out;
	out.scale = vsup_scale(diags);
	out.cells.reserve(diags.size());
	for (const auto &d : diags) {
		out.cells.push_back(out.scale.classify(d.mean_volume, d.mean_abs_error));
	}
	return out;
}

VsupScale temporal_scale(const FlowTensor &observed, const FlowTensor &predicted) {
	check_matching(observed, predicted);
	VsupScale s;
	for (std::size_t t = 0; t < observed.slot_count(); ++t) {
		for (std::size_t g = 0; g < observed.cell_count(); ++g) {
			const double x = observed.at(t, g);
			s.max_value = std::max(s.max_value, x);
			s.max_error = std::max(s.max_error, std::abs(predicted.at(t, g) - x));
		}
	}
	return s;
}

std::vector<std::vector<VsupCell>> temporal_cells(const FlowTensor &observed, const FlowTensor &predicted,
                                                  std::size_t region, const VsupScale &scale, int test_days,
                                                  int slots_per_day) {
	check_matching(observed, predicted);
	if (region >= observed.cell_count()) {
		throw InvalidArgument("temporal_cells: invalid region " + std::to_string(region));
	}
	if (test_days < 1 || slots_per_day < 1 ||
	    static_cast<std::size_t>(test_days) * static_cast<std::size_t>(slots_per_day) != observed.slot_count()) {
		throw InvalidArgument("temporal_cells: test window does not span " + std::to_string(test_days) + " days");
	}
	std::vector<std::vector<VsupCell>> out(static_cast<std::size_t>(test_days));
	for (int day = 0; day < test_days; ++day) {
		auto &row = out[static_cast<std::size_t>(day)];
		row.reserve(static_cast<std::size_t>(slots_per_day));
		for (int s = 0; s < slots_per_day; ++s) {
			const auto t = static_cast<std::size_t>(day * slots_per_day + s);
			const double x = observed.at(t, region);
			const double y = predicted.at(t, region);
			row.push_back(scale.classify(x, std::abs(y - x)));
		}
	}
	return out;
}

void write_diagnostics_csv(std::ostream &out, std::span<const RegionDiagnostics> diags) {
	out << kDiagnosticsHeader << '\n';
	for (const auto &d : diags) {
		out << d.region << ',' << format_double(d.mean_volume) << ',' << format_double(d.mean_abs_error) << ','
		    << format_optional(d.prmse) << ',' << format_optional(d.u) << ',' << format_optional(d.corr) << ','
		    << d.n_slots << ',' << d.undefined_reason << '\n';
	}
}

namespace {

std::optional<double> optional_field(std::string_view f, std::size_t line) {
	if (f.empty()) {
		return std::nullopt;
	}
	const auto v = parse_double(f);
	if (!v) {
		throw IoError("diagnostics line " + std::to_string(line) + ": bad number '" + std::string(f) + "'");
	}
	return v;
}

} // namespace

std::vector<RegionDiagnostics> read_diagnostics_csv(std::istream &in) {
	std::string line;
	if (!std::getline(in, line) || line != kDiagnosticsHeader) {
		throw IoError("diagnostics: malformed header");
	}
	std::vector<RegionDiagnostics> out;
	std::size_t line_no = 1;
	while (std::getline(in, line)) {
		++line_no;
		if (line.empty()) {
			continue;
		}
		const auto f = split_fields(line);
		if (f.size() != 8) {
			throw IoError("diagnostics line " + std::to_string(line_no) + ": expected 8 fields");
		}
		RegionDiagnostics d;
		const auto region = parse_double(f[0]);
		const auto volume = optional_field(f[1], line_no);
		const auto mae = optional_field(f[2], line_no);
		const auto slots = parse_double(f[6]);
		if (!region || *region < 0 || !volume || !mae || !slots || *slots < 0) {
			throw IoError("diagnostics line " + std::to_string(line_no) + ": missing required field");
		}
		d.region = static_cast<std::size_t>(*region);
		d.mean_volume = *volume;
		d.mean_abs_error = *mae;
		d.prmse = optional_field(f[3], line_no);
		d.u = optional_field(f[4], line_no);
		d.corr = optional_field(f[5], line_no);
		d.n_slots = static_cast<std::size_t>(*slots);
		d.undefined_reason = std::string(f[7]);
		out.push_back(std::move(d));
	}
	return out;
}

} // namespace maup
