#pragma once

#include "maup/flow_ingest.hpp"
#include "maup/geo_partition.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace maup {

enum class TensorKind { observed, predicted };
/// Storage width. Reads always widen to 64-bit.
enum class Precision { f64, f32 };

std::string to_string(TensorKind kind);
TensorKind tensor_kind_from_string(const std::string &s);

/// Dense non-negative flow values over w*h grid cells and an inclusive slot
/// range, laid out slot-major then row-major cells.
class FlowTensor {
public:
	FlowTensor() = default;
	FlowTensor(int w, int h, std::int64_t t_first, std::int64_t t_last, TensorKind kind,
	           Precision precision = Precision::f64);

	int w() const noexcept { return w_; }
	int h() const noexcept { return h_; }
	std::int64_t t_first() const noexcept { return t_first_; }
	std::int64_t t_last() const noexcept { return t_last_; }
	std::size_t slot_count() const noexcept { return static_cast<std::size_t>(t_last_ - t_first_ + 1); }
	std::size_t cell_count() const noexcept { return static_cast<std::size_t>(w_) * static_cast<std::size_t>(h_); }
	std::size_t size() const noexcept { return slot_count() * cell_count(); }
	TensorKind kind() const noexcept { return kind_; }
	void set_kind(TensorKind kind) noexcept { kind_ = kind; }
	Precision precision() const noexcept { return precision_; }

	/// `slot` is relative to t_first.
	double at(std::size_t slot, std::size_t cell) const noexcept {
		const std::size_t i = slot * cell_count() + cell;
		return precision_ == Precision::f64 ? f64_[i] : static_cast<double>(f32_[i]);
	}
	/// Throws InvalidArgument for negative or non-finite values.
	void set(std::size_t slot, std::size_t cell, double v);
	void add(std::size_t slot, std::size_t cell, double v) { set(slot, cell, at(slot, cell) + v); }

	/// Values of one cell across all slots.
	std::vector<double> series(std::size_t cell) const;
	/// All values widened to 64-bit, in storage order.
	std::vector<double> to_f64() const;
	double total() const noexcept;
	double slot_total(std::size_t slot) const noexcept;

	/// Copy of the slot sub-range [first, first + count) relative to t_first.
	FlowTensor slice(std::size_t first, std::size_t count) const;

	friend bool operator==(const FlowTensor &, const FlowTensor &) = default;

private:
	int w_ = 0;
	int h_ = 0;
	std::int64_t t_first_ = 0;
	std::int64_t t_last_ = -1;
	TensorKind kind_ = TensorKind::observed;
	Precision precision_ = Precision::f64;
	std::vector<double> f64_;
	std::vector<float> f32_;
};

struct TensorHeader {
	int w = 0;
	int h = 0;
	std::int64_t t_first = 0;
	std::int64_t t_last = 0;
	TensorKind kind = TensorKind::observed;
};

/// Header line (compact JSON, fixed key order, '\n') then raw f64le values.
void write_tensor(const std::filesystem::path &path, const FlowTensor &tensor);
/// Unvalidated values; negative entries are passed through.
std::pair<TensorHeader, std::vector<double>> read_tensor_raw(const std::filesystem::path &path);
/// Rejects negative or non-finite values.
FlowTensor read_tensor(const std::filesystem::path &path);

/// Per-zone, per-slot integer counts x_{r,t}.
struct ZoneFlow {
	std::size_t zone_count = 0;
	std::size_t slot_count = 0;
	std::vector<std::uint32_t> counts; // zone-major

	ZoneFlow() = default;
	ZoneFlow(std::size_t zones, std::size_t slots) : zone_count(zones), slot_count(slots), counts(zones * slots, 0) {}

	std::uint32_t at(std::size_t zone, std::size_t slot) const { return counts.at(zone * slot_count + slot); }
	std::uint32_t &at(std::size_t zone, std::size_t slot) { return counts.at(zone * slot_count + slot); }
};

struct GridAggregation {
	FlowTensor tensor;
	/// Records whose get-on position resolved to no cell.
	std::size_t discarded = 0;
	/// Records whose get-on time fell outside the slot range.
	std::size_t out_of_range = 0;
};

struct ZoneAggregation {
	ZoneFlow flow;
	std::size_t discarded = 0;
	std::size_t out_of_range = 0;
};

GridAggregation aggregate(std::span<const MovementRecord> records, const GridScheme &grid, const TimeSpan &span,
                          Precision precision = Precision::f64);
ZoneAggregation aggregate(std::span<const MovementRecord> records, const ZoneScheme &zones, const TimeSpan &span);

/// x_{g,t} = sum_r x_{r,t} * S(r & g) / S(r).
FlowTensor rasterize(const ZoneFlow &flow, const FractionMap &fractions, const GridScheme &grid,
                     Precision precision = Precision::f64);

/// Contiguous prefix/suffix split on the slot axis.
std::pair<FlowTensor, FlowTensor> split(const FlowTensor &tensor, int train_days, int test_days,
                                        int slots_per_day = kSlotsPerDay);

} // namespace maup
