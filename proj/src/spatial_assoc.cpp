#include "maup/spatial_assoc.hpp"

#include "maup/format.hpp"
#include "maup/random.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace maup {

SpatialWeights::SpatialWeights(int w, int h, WeightMode mode) : w_(w), h_(h), mode_(mode) {
	if (w < 1 || h < 1) {
		throw InvalidArgument("weights: grid dimensions must be positive");
	}
	neighbors_.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
	for (int r = 0; r < h; ++r) {
		for (int c = 0; c < w; ++c) {
			auto &list = neighbors_[static_cast<std::size_t>(r * w + c)];
			for (int dr = -1; dr <= 1; ++dr) {
				for (int dc = -1; dc <= 1; ++dc) {
					const int rr = r + dr;
					const int cc = c + dc;
					if ((dr == 0 && dc == 0) || rr < 0 || rr >= h || cc < 0 || cc >= w) {
						continue;
					}
					list.push_back(static_cast<std::size_t>(rr * w + cc));
				}
			}
			std::sort(list.begin(), list.end());
		}
	}
}

double SpatialWeights::weight(std::size_t cell) const noexcept {
	const auto &list = neighbors_[cell];
	if (list.empty()) {
		return 0.0;
	}
	return mode_ == WeightMode::binary ? 1.0 : 1.0 / static_cast<double>(list.size());
}

double SpatialWeights::total_weight() const noexcept {
	double s = 0.0;
	for (std::size_t i = 0; i < neighbors_.size(); ++i) {
		s += weight(i) * static_cast<double>(neighbors_[i].size());
	}
	return s;
}

double SpatialWeights::lag(std::size_t cell, std::span<const double> values) const noexcept {
	double s = 0.0;
	for (const std::size_t j : neighbors_[cell]) {
		s += values[j];
	}
	return weight(cell) * s;
}

SpatialWeights build_weights(int w, int h, WeightMode mode) { return SpatialWeights(w, h, mode); }

namespace {

double mean_of(std::span<const double> v) noexcept {
	return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool all_equal(std::span<const double> v) noexcept {
	return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
}

} // namespace

double moran_global(std::span<const double> values, const SpatialWeights &weights) {
	if (values.size() != weights.size()) {
		throw InvalidArgument("moran: value count does not match the weights grid");
	}
	if (values.size() < 2) {
		throw UndefinedStatistic("fewer than 2 cells");
	}
	if (all_equal(values)) {
		throw UndefinedStatistic("zero variance");
	}
	const double s0 = weights.total_weight();
	if (s0 <= 0.0) {
		throw UndefinedStatistic("no neighbors");
	}
	const double mean = mean_of(values);
	std::vector<double> z(values.size());
	double sum_sq = 0.0;
	for (std::size_t i = 0; i < values.size(); ++i) {
		z[i] = values[i] - mean;
		sum_sq += z[i] * z[i];
	}
	if (sum_sq <= 0.0) {
		throw UndefinedStatistic("zero variance");
	}
	double cross = 0.0;
	for (std::size_t i = 0; i < z.size(); ++i) {
		cross += z[i] * weights.lag(i, z);
	}
	return static_cast<double>(values.size()) / s0 * (cross / sum_sq);
}

std::vector<double> standardize(std::span<const double> values) {
	if (values.empty() || all_equal(values)) {
		throw UndefinedStatistic("zero variance");
	}
	const double mean = mean_of(values);
	double var = 0.0;
	for (const double v : values) {
		var += (v - mean) * (v - mean);
	}
	var /= static_cast<double>(values.size());
	if (var <= 0.0) {
		throw UndefinedStatistic("zero variance");
	}
	const double sd = std::sqrt(var);
	std::vector<double> z(values.size());
	for (std::size_t i = 0; i < values.size(); ++i) {
		z[i] = (values[i] - mean) / sd;
	}
	return z;
}

double pearson_p_value(double r, std::size_t n) {
	if (n <= 2 || !std::isfinite(r)) {
		return 1.0;
	}
	const double ar = std::abs(r);
	if (ar >= 1.0) {
		return 0.0;
	}
	const double dof = static_cast<double>(n - 2);
	const double t = ar * std::sqrt(dof / (1.0 - ar * ar));
	const boost::math::students_t dist(dof);
	return 2.0 * boost::math::cdf(boost::math::complement(dist, t));
}

LisaResult lisa(std::span<const double> values, int w, int h, const LisaOptions &options) {
	const SpatialWeights row = build_weights(w, h, WeightMode::row_standardized);
	const SpatialWeights binary = build_weights(w, h, WeightMode::binary);
	const std::size_t n = row.size();
	if (values.size() != n) {
		throw InvalidArgument("lisa: value count does not match the grid");
	}
	if (!options.errors.empty() && options.errors.size() != n) {
		throw InvalidArgument("lisa: error count does not match the grid");
	}
	if (!options.error_mask.empty() && options.error_mask.size() != n) {
		throw InvalidArgument("lisa: error mask size does not match the grid");
	}

	LisaResult out;
	out.summary.n = n;
	out.summary.global_i = moran_global(values, row);
	out.summary.global_i_binary = moran_global(values, binary);

	const std::vector<double> z = standardize(values);
	out.points.resize(n);
	for (std::size_t i = 0; i < n; ++i) {
		auto &p = out.points[i];
		p.region = i;
		p.z_value = z[i];
		p.z_lag = row.lag(i, z);
		p.lisa = p.z_value * p.z_lag;
	}

	// OLS of z_lag on z_value.
	double mz = 0.0;
	double ml = 0.0;
	for (const auto &p : out.points) {
		mz += p.z_value;
		ml += p.z_lag;
	}
	mz /= static_cast<double>(n);
	ml /= static_cast<double>(n);
	double szz = 0.0;
	double szl = 0.0;
	double sll = 0.0;
	for (const auto &p : out.points) {
		szz += (p.z_value - mz) * (p.z_value - mz);
		szl += (p.z_value - mz) * (p.z_lag - ml);
		sll += (p.z_lag - ml) * (p.z_lag - ml);
	}
	out.summary.regression_slope = szl / szz;
	out.summary.regression_intercept = ml - out.summary.regression_slope * mz;
	if (sll > 0.0) {
		out.summary.pearson_r = std::clamp(szl / std::sqrt(szz * sll), -1.0, 1.0);
		out.summary.p_value = pearson_p_value(out.summary.pearson_r, n);
	}

	if (!options.errors.empty()) {
		std::vector<double> selected;
		for (std::size_t i = 0; i < n; ++i) {
			if (options.error_mask.empty() || options.error_mask[i]) {
				selected.push_back(options.errors[i]);
			}
		}
		if (!selected.empty()) {
			const double mean = mean_of(selected);
			double var = 0.0;
			for (const double e : selected) {
				var += (e - mean) * (e - mean);
			}
			var /= static_cast<double>(selected.size());
			const double sd = std::sqrt(var);
			for (std::size_t i = 0; i < n; ++i) {
				if (options.error_mask.empty() || options.error_mask[i]) {
					out.points[i].z_error = sd > 0.0 ? (options.errors[i] - mean) / sd : 0.0;
				}
			}
		}
	}

	if (options.permutations > 0) {
		Rng rng(options.permutation_seed);
		std::vector<double> shuffled(values.begin(), values.end());
		const double observed = out.summary.global_i;
		int extreme = 0;
		for (int k = 0; k < options.permutations; ++k) {
			for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
				std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
			}
			const double ip = moran_global(shuffled, row);
			if (observed >= 0.0 ? ip >= observed : ip <= observed) {
				++extreme;
			}
		}
		out.summary.permutation_p = (1.0 + extreme) / (1.0 + options.permutations);
	}
	return out;
}

void write_scatter_csv(std::ostream &out, std::span<const LisaPoint> points) {
	out << kScatterHeader << '\n';
	for (const auto &p : points) {
		out << p.region << ',' << format_double(p.z_value) << ',' << format_double(p.z_lag) << ','
		    << format_double(p.lisa) << ',' << format_optional(p.z_error) << '\n';
	}
}

std::vector<LisaPoint> read_scatter_csv(std::istream &in) {
	std::string line;
	if (!std::getline(in, line) || line != kScatterHeader) {
		throw IoError("scatter: malformed header");
	}
	std::vector<LisaPoint> out;
	std::size_t line_no = 1;
	while (std::getline(in, line)) {
		++line_no;
		if (line.empty()) {
			continue;
		}
		const auto f = split_fields(line);
		const auto bad = [&] { return IoError("scatter line " + std::to_string(line_no) + ": malformed row"); };
		if (f.size() != 5) {
			throw bad();
		}
		const auto region = parse_double(f[0]);
		const auto z = parse_double(f[1]);
		const auto lag = parse_double(f[2]);
		const auto l = parse_double(f[3]);
		if (!region || *region < 0 || !z || !lag || !l) {
			throw bad();
		}
		LisaPoint p{static_cast<std::size_t>(*region), *z, *lag, *l, std::nullopt};
		if (!f[4].empty()) {
			p.z_error = parse_double(f[4]);
			if (!p.z_error) {
				throw bad();
			}
		}
		out.push_back(p);
	}
	return out;
}

namespace {

nlohmann::json optional_json(const std::optional<double> &v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> optional_from(const nlohmann::json &j, const char *key) {
	if (!j.contains(key) || j.at(key).is_null()) {
		return std::nullopt;
	}
	return j.at(key).get<double>();
}

} // namespace

nlohmann::json summary_to_json(const MoranSummary &s) {
	return {{"global_i", s.global_i},
	        {"global_i_binary", optional_json(s.global_i_binary)},
	        {"regression_slope", s.regression_slope},
	        {"regression_intercept", s.regression_intercept},
	        {"pearson_r", s.pearson_r},
	        {"p_value", s.p_value},
	        {"permutation_p", optional_json(s.permutation_p)},
	        {"n", s.n}};
}

MoranSummary summary_from_json(const nlohmann::json &j) {
	MoranSummary s;
	s.global_i = j.at("global_i").get<double>();
	s.global_i_binary = optional_from(j, "global_i_binary");
	s.regression_slope = j.at("regression_slope").get<double>();
	s.regression_intercept = j.at("regression_intercept").get<double>();
	s.pearson_r = j.at("pearson_r").get<double>();
	s.p_value = j.at("p_value").get<double>();
	s.permutation_p = optional_from(j, "permutation_p");
	s.n = j.at("n").get<std::size_t>();
	return s;
}

} // namespace maup
