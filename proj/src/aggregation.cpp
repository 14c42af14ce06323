#include "maup/aggregation.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace maup {

std::string to_string(TensorKind kind) { return kind == TensorKind::observed ? "observed" : "predicted"; }

TensorKind tensor_kind_from_string(const std::string &s) {
	if (s == "observed") {
		return TensorKind::observed;
	}
	if (s == "predicted") {
		return TensorKind::predicted;
	}
	throw InvalidArgument("unknown tensor kind '" + s + "'");
}

FlowTensor::FlowTensor(int w, int h, std::int64_t t_first, std::int64_t t_last, TensorKind kind, Precision precision)
    : w_(w), h_(h), t_first_(t_first), t_last_(t_last), kind_(kind), precision_(precision) {
	if (w < 1 || h < 1) {
		throw InvalidArgument("tensor: grid dimensions must be positive");
	}
	if (t_first < 0 || t_last < t_first) {
		throw InvalidArgument("tensor: invalid slot range");
	}
	if (precision_ == Precision::f64) {
		f64_.assign(size(), 0.0);
	} else {
		f32_.assign(size(), 0.0f);
	}
}

void FlowTensor::set(std::size_t slot, std::size_t cell, double v) {
	if (!std::isfinite(v) || v < 0.0) {
		throw InvalidArgument("tensor: values must be finite and non-negative");
	}
	const std::size_t i = slot * cell_count() + cell;
	if (precision_ == Precision::f64) {
		f64_.at(i) = v;
	} else {
		f32_.at(i) = static_cast<float>(v);
	}
}

std::vector<double> FlowTensor::series(std::size_t cell) const {
	std::vector<double> out(slot_count());
	for (std::size_t t = 0; t < out.size(); ++t) {
		out[t] = at(t, cell);
	}
	return out;
}

std::vector<double> FlowTensor::to_f64() const {
	if (precision_ == Precision::f64) {
		return f64_;
	}
	return {f32_.begin(), f32_.end()};
}

double FlowTensor::total() const noexcept {
	double sum = 0.0;
	for (std::size_t t = 0; t < slot_count(); ++t) {
		sum += slot_total(t);
	}
	return sum;
}

double FlowTensor::slot_total(std::size_t slot) const noexcept {
	double sum = 0.0;
	for (std::size_t g = 0; g < cell_count(); ++g) {
		sum += at(slot, g);
	}
	return sum;
}

FlowTensor FlowTensor::slice(std::size_t first, std::size_t count) const {
	if (count == 0 || first + count > slot_count()) {
		throw InvalidArgument("tensor: slice out of range");
	}
	const auto t0 = t_first_ + static_cast<std::int64_t>(first);
	FlowTensor out(w_, h_, t0, t0 + static_cast<std::int64_t>(count) - 1, kind_, precision_);
	const std::size_t begin = first * cell_count();
	const std::size_t end = (first + count) * cell_count();
	if (precision_ == Precision::f64) {
		std::copy(f64_.begin() + static_cast<std::ptrdiff_t>(begin), f64_.begin() + static_cast<std::ptrdiff_t>(end),
		          out.f64_.begin());
	} else {
		std::copy(f32_.begin() + static_cast<std::ptrdiff_t>(begin), f32_.begin() + static_cast<std::ptrdiff_t>(end),
		          out.f32_.begin());
	}
	return out;
}

// --- file format ------------------------------------------------------------------

namespace {

std::uint64_t to_little_endian(std::uint64_t v) noexcept {
	if constexpr (std::endian::native == std::endian::big) {
		v = ((v & 0x00000000000000FFull) << 56) | ((v & 0x000000000000FF00ull) << 40) |
		    ((v & 0x0000000000FF0000ull) << 24) | ((v & 0x00000000FF000000ull) << 8) |
		    ((v & 0x000000FF00000000ull) >> 8) | ((v & 0x0000FF0000000000ull) >> 24) |
		    ((v & 0x00FF000000000000ull) >> 40) | ((v & 0xFF00000000000000ull) >> 56);
	}
	return v;
}

} // namespace

void write_tensor(const std::filesystem::path &path, const FlowTensor &tensor) {
	nlohmann::ordered_json header;
	header["w"] = tensor.w();
	header["h"] = tensor.h();
	header["t_first"] = tensor.t_first();
	header["t_last"] = tensor.t_last();
	header["kind"] = to_string(tensor.kind());
	header["dtype"] = "f64le";

	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw IoError("cannot write tensor file " + path.string());
	}
	out << header.dump() << '\n';
	const auto values = tensor.to_f64();
	std::vector<char> bytes(values.size() * 8);
	for (std::size_t i = 0; i < values.size(); ++i) {
		const auto bits = to_little_endian(std::bit_cast<std::uint64_t>(values[i]));
		std::memcpy(bytes.data() + i * 8, &bits, 8);
	}
	out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
	if (!out) {
		throw IoError("failed writing tensor file " + path.string());
	}
}

std::pair<TensorHeader, std::vector<double>> read_tensor_raw(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw IoError("cannot open tensor file " + path.string());
	}
	std::string line;
	if (!std::getline(in, line)) {
		throw IoError("tensor file " + path.string() + ": missing header line");
	}
	TensorHeader header;
	try {
		const auto j = nlohmann::json::parse(line);
		header.w = j.at("w").get<int>();
		header.h = j.at("h").get<int>();
		header.t_first = j.at("t_first").get<std::int64_t>();
		header.t_last = j.at("t_last").get<std::int64_t>();
		header.kind = tensor_kind_from_string(j.at("kind").get<std::string>());
		if (j.at("dtype").get<std::string>() != "f64le") {
			throw IoError("tensor file " + path.string() + ": unsupported dtype");
		}
	} catch (const nlohmann::json::exception &e) {
		throw IoError("tensor file " + path.string() + ": malformed header: " + e.what());
	} catch (const InvalidArgument &e) {
		throw IoError("tensor file " + path.string() + ": " + e.what());
	}
	if (header.w < 1 || header.h < 1 || header.t_first < 0 || header.t_last < header.t_first) {
		throw IoError("tensor file " + path.string() + ": invalid dimensions in header");
	}
	const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
	const auto count = static_cast<std::size_t>(header.t_last - header.t_first + 1) *
	                   static_cast<std::size_t>(header.w) * static_cast<std::size_t>(header.h);
	if (bytes.size() != count * 8) {
		throw IoError("tensor file " + path.string() + ": payload size does not match header");
	}
	std::vector<double> values(count);
	for (std::size_t i = 0; i < count; ++i) {
		std::uint64_t bits = 0;
		std::memcpy(&bits, bytes.data() + i * 8, 8);
		values[i] = std::bit_cast<double>(to_little_endian(bits));
	}
	return {header, std::move(values)};
}

FlowTensor read_tensor(const std::filesystem::path &path) {
	auto [header, values] = read_tensor_raw(path);
	FlowTensor t(header.w, header.h, header.t_first, header.t_last, header.kind);
	const std::size_t cells = t.cell_count();
	for (std::size_t i = 0; i < values.size(); ++i) {
		if (!std::isfinite(values[i]) || values[i] < 0.0) {
			throw IoError("tensor file " + path.string() + ": negative or non-finite value");
		}
		t.set(i / cells, i % cells, values[i]);
	}
	return t;
}

// --- aggregation --------------------------------------------------------------------

GridAggregation aggregate(std::span<const MovementRecord> records, const GridScheme &grid, const TimeSpan &span,
                          Precision precision) {
	const auto slots = span.slot_count();
	if (slots < 1) {
		throw InvalidArgument("aggregate: empty time span");
	}
	GridAggregation out{FlowTensor(grid.w(), grid.h(), 0, slots - 1, TensorKind::observed, precision), 0, 0};
	// Counts are accumulated as integers, then promoted.
	std::vector<std::uint32_t> counts(out.tensor.size(), 0);
	for (const auto &rec : records) {
		if (rec.on_time < span.start) {
			++out.out_of_range;
			continue;
		}
		const auto slot = bin_time(rec, span.start, span.slot_seconds).ordinal;
		if (slot >= slots) {
			++out.out_of_range;
			continue;
		}
		const auto cell = grid.assign(rec.on_pos);
		if (!cell) {
			++out.discarded;
			continue;
		}
		++counts[static_cast<std::size_t>(slot) * grid.cell_count() + cell->index];
	}
	for (std::size_t i = 0; i < counts.size(); ++i) {
		if (counts[i] != 0) {
			out.tensor.set(i / grid.cell_count(), i % grid.cell_count(), counts[i]);
		}
	}
	return out;
}

ZoneAggregation aggregate(std::span<const MovementRecord> records, const ZoneScheme &zones, const TimeSpan &span) {
	const auto slots = span.slot_count();
	if (slots < 1) {
		throw InvalidArgument("aggregate: empty time span");
	}
	ZoneAggregation out{ZoneFlow(zones.size(), static_cast<std::size_t>(slots)), 0, 0};
	for (const auto &rec : records) {
		if (rec.on_time < span.start) {
			++out.out_of_range;
			continue;
		}
		const auto slot = bin_time(rec, span.start, span.slot_seconds).ordinal;
		if (slot >= slots) {
			++out.out_of_range;
			continue;
		}
		const auto zone = zones.assign(rec.on_pos);
		if (!zone) {
			++out.discarded;
			continue;
		}
		++out.flow.at(zone->index, static_cast<std::size_t>(slot));
	}
	return out;
}

FlowTensor rasterize(const ZoneFlow &flow, const FractionMap &fractions, const GridScheme &grid, Precision precision) {
	const BBox &a = fractions.grid_bbox;
	const BBox &b = grid.bbox();
	if (fractions.grid_w != grid.w() || fractions.grid_h != grid.h() || a.lon_min != b.lon_min ||
	    a.lon_max != b.lon_max || a.lat_min != b.lat_min || a.lat_max != b.lat_max) {
		throw InvalidArgument("rasterize: fraction map was built for a different grid (dimension mismatch)");
	}
	if (fractions.per_zone.size() != flow.zone_count) {
		throw InvalidArgument("rasterize: fraction map zone count does not match the zone flow");
	}
	if (flow.slot_count < 1) {
		throw InvalidArgument("rasterize: zone flow has no slots");
	}
	const std::size_t cells = grid.cell_count();
	std::vector<double> acc(flow.slot_count * cells, 0.0);
	for (std::size_t z = 0; z < flow.zone_count; ++z) {
		const auto &cf = fractions.per_zone[z];
		if (cf.empty()) {
			continue;
		}
		for (std::size_t t = 0; t < flow.slot_count; ++t) {
			const double v = flow.at(z, t);
			if (v == 0.0) {
				continue;
			}
			double *row = acc.data() + t * cells;
			for (const auto &[cell, fraction] : cf) {
				row[cell] += v * fraction;
			}
		}
	}
	FlowTensor out(grid.w(), grid.h(), 0, static_cast<std::int64_t>(flow.slot_count) - 1, TensorKind::observed,
	               precision);
	for (std::size_t i = 0; i < acc.size(); ++i) {
		if (acc[i] != 0.0) {
			out.set(i / cells, i % cells, acc[i]);
		}
	}
	return out;
}

std::pair<FlowTensor, FlowTensor> split(const FlowTensor &tensor, int train_days, int test_days, int slots_per_day) {
	if (train_days < 1 || test_days < 1) {
		throw InvalidArgument("split: train and test windows need at least one day each");
	}
	if (slots_per_day < 1) {
		throw InvalidArgument("split: slots_per_day must be positive");
	}
	const auto train_slots = static_cast<std::size_t>(train_days) * static_cast<std::size_t>(slots_per_day);
	const auto test_slots = static_cast<std::size_t>(test_days) * static_cast<std::size_t>(slots_per_day);
	if (train_slots + test_slots != tensor.slot_count()) {
		throw InvalidArgument("split: day budget " + std::to_string(train_days) + "+" + std::to_string(test_days) +
		                      " does not match the tensor span of " +
		                      std::to_string(tensor.slot_count() / static_cast<std::size_t>(slots_per_day)) + " days");
	}
	return {tensor.slice(0, train_slots), tensor.slice(train_slots, test_slots)};
}

} // namespace maup
