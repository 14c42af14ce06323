#pragma once

#include "maup/metrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace maup {

enum class WeightMode { binary, row_standardized };

/// First-order queen contiguity (3x3 block, no self-loops) on a w x h grid.
class SpatialWeights {
public:
	SpatialWeights(int w, int h, WeightMode mode);

	int w() const noexcept { return w_; }
	int h() const noexcept { return h_; }
	std::size_t size() const noexcept { return neighbors_.size(); }
	WeightMode mode() const noexcept { return mode_; }

	const std::vector<std::size_t> &neighbors(std::size_t cell) const { return neighbors_.at(cell); }
	/// Weight of every neighbor of `cell` (1 or 1/degree).
	double weight(std::size_t cell) const noexcept;
	/// S0 = sum of all weights.
	double total_weight() const noexcept;
	/// sum_j w_ij v_j
	double lag(std::size_t cell, std::span<const double> values) const noexcept;

private:
	int w_;
	int h_;
	WeightMode mode_;
	std::vector<std::vector<std::size_t>> neighbors_;
};

SpatialWeights build_weights(int w, int h, WeightMode mode);

/// Global Moran's I with z = value - mean. Throws UndefinedStatistic
/// ("zero variance", "no neighbors", "fewer than 2 cells").
double moran_global(std::span<const double> values, const SpatialWeights &weights);

/// Mean 0, population variance 1. Throws UndefinedStatistic on zero variance.
std::vector<double> standardize(std::span<const double> values);

struct LisaPoint {
	std::size_t region = 0;
	double z_value = 0.0;
	double z_lag = 0.0;
	double lisa = 0.0;
	/// Standardized mean abs error; nullopt for regions excluded from error coloring.
	std::optional<double> z_error;
};

struct MoranSummary {
	double global_i = 0.0; // row-standardized
	std::optional<double> global_i_binary;
	double regression_slope = 0.0;
	double regression_intercept = 0.0;
	double pearson_r = 0.0;
	double p_value = 1.0;
	std::optional<double> permutation_p;
	std::size_t n = 0;
};

struct LisaResult {
	std::vector<LisaPoint> points;
	MoranSummary summary;
};

struct LisaOptions {
	/// Per-region mean abs errors used for z_error; empty = none.
	std::span<const double> errors;
	/// Regions whose error enters standardization; empty = all.
	std::span<const bool> error_mask;
	/// > 0 enables a seeded permutation test on global I.
	int permutations = 0;
	std::uint64_t permutation_seed = 12345;
};

/// LISA decomposition over row-standardized queen weights plus the Moran
/// scatter regression (OLS of z_lag on z_value) and its t-test p-value.
LisaResult lisa(std::span<const double> values, int w, int h, const LisaOptions &options = {});

/// Two-sided p-value of a Pearson correlation r over n points (t-test, n-2 dof).
double pearson_p_value(double r, std::size_t n);

inline constexpr const char *kScatterHeader = "region_id,z_value,z_lag,lisa,z_error";

void write_scatter_csv(std::ostream &out, std::span<const LisaPoint> points);
/// Inverse of write_scatter_csv; throws IoError on malformed input.
std::vector<LisaPoint> read_scatter_csv(std::istream &in);

nlohmann::json summary_to_json(const MoranSummary &summary);
MoranSummary summary_from_json(const nlohmann::json &j);

} // namespace maup
