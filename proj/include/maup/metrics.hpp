#pragma once

#include "maup/aggregation.hpp"

#include <optional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace maup {

/// Per-region accuracy over the test window. Undefined metrics are nullopt and
/// named in `undefined_reason` (';'-separated codes: zero_mean, all_zero,
/// constant_series).
struct RegionDiagnostics {
	std::size_t region = 0;
	double mean_volume = 0.0;
	double mean_abs_error = 0.0;
	std::optional<double> prmse;
	std::optional<double> u;
	std::optional<double> corr;
	std::size_t n_slots = 0;
	std::string undefined_reason;

	bool fully_defined() const noexcept { return prmse && u && corr; }
};

/// Scale-independent metrics of one observed/predicted series pair.
RegionDiagnostics series_metrics(std::span<const double> observed, std::span<const double> predicted);

/// Throws InvalidArgument unless dimensions and slot ranges match.
std::vector<RegionDiagnostics> region_metrics(const FlowTensor &observed, const FlowTensor &predicted);

double global_rmse(const FlowTensor &observed, const FlowTensor &predicted);

inline constexpr int kValueBins = 8;
inline constexpr int kErrorLevels = 4;

/// Value-suppressing palette cell: value bins merge pairwise per error level,
/// so level l has 8 >> l bins.
struct VsupCell {
	int error_level = 0;
	int value_bin = 0;

	static constexpr int bins_at_level(int level) noexcept { return kValueBins >> level; }
	friend bool operator==(const VsupCell &, const VsupCell &) = default;
};

/// Equal-width bin edges anchored at 0: values over [0, max_value], errors
/// over [0, max_error]. Inputs above the maximum clamp to the top bin.
struct VsupScale {
	double max_value = 0.0;
	double max_error = 0.0;

	int base_value_bin(double value) const noexcept;
	int error_level(double error) const noexcept;
	VsupCell classify(double value, double error) const noexcept;
};

VsupScale vsup_scale(std::span<const RegionDiagnostics> diags);

struct VsupAssignment {
	VsupScale scale;
	std::vector<VsupCell> cells; // aligned with the input diagnostics
};

/// Bins mean volume against mean absolute error. Throws on an empty list.
VsupAssignment vsup_assign(std::span<const RegionDiagnostics> diags);

/// Scale over per-slot values and per-slot absolute errors of a whole tensor pair.
VsupScale temporal_scale(const FlowTensor &observed, const FlowTensor &predicted);

/// days x slots_per_day matrix of per-slot (x, |y - x|) cells under `scale`.
std::vector<std::vector<VsupCell>> temporal_cells(const FlowTensor &observed, const FlowTensor &predicted,
                                                  std::size_t region, const VsupScale &scale, int test_days,
                                                  int slots_per_day = kSlotsPerDay);

inline constexpr const char *kDiagnosticsHeader =
    "region_id,mean_volume,mean_abs_error,prmse,u,corr,n_slots,undefined_reason";

void write_diagnostics_csv(std::ostream &out, std::span<const RegionDiagnostics> diags);
/// Inverse of write_diagnostics_csv; throws IoError on malformed input.
std::vector<RegionDiagnostics> read_diagnostics_csv(std::istream &in);

} // namespace maup
