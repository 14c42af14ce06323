#pragma once

#include "maup/geo_partition.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace maup {

/// Seconds since the Unix epoch, UTC.
using EpochSeconds = std::int64_t;

inline constexpr int kSlotsPerDay = 48;
inline constexpr int kDefaultSlotSeconds = 1800;
/// Wall-clock offset applied to timestamps that carry none (+08:00).
inline constexpr int kLocalOffsetSeconds = 8 * 3600;

/// Parses "YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM|+HHMM]" (a space may replace
/// the 'T'). Timestamps without an offset are read as +08:00 wall clock.
std::optional<EpochSeconds> parse_timestamp(std::string_view text);
/// ISO-8601 rendering at +08:00, e.g. "2014-05-05T08:30:00+08:00".
std::string format_timestamp(EpochSeconds t);
/// Epoch of local (+08:00) midnight starting the given "YYYY-MM-DD" date.
std::optional<EpochSeconds> parse_local_date(std::string_view date);
std::string format_local_date(EpochSeconds midnight);

/// Half-open local-day range [start, start + days * 86400).
struct TimeSpan {
	EpochSeconds start = 0;
	int days = 0;
	int slot_seconds = kDefaultSlotSeconds;

	EpochSeconds end() const noexcept { return start + static_cast<EpochSeconds>(days) * 86400; }
	int slots_per_day() const noexcept { return 86400 / slot_seconds; }
	int slot_count() const noexcept { return days * slots_per_day(); }
	bool contains(EpochSeconds t) const noexcept { return t >= start && t < end(); }
};

/// Span from inclusive local dates "YYYY-MM-DD".
TimeSpan make_span(std::string_view start_date, std::string_view end_date, int slot_seconds = kDefaultSlotSeconds);

struct MovementRecord {
	std::string taxi_id;
	EpochSeconds on_time = 0;
	EpochSeconds off_time = 0;
	Point on_pos;
	Point off_pos;
	double price = 0.0;
	double mileage = 0.0;

	friend bool operator==(const MovementRecord &, const MovementRecord &) = default;
};

struct SlotIndex {
	std::int64_t ordinal = 0;
};

/// Drop counts per cleaning rule: unparsable, missing_times, inverted_times,
/// out_of_bbox, out_of_span.
struct CleaningReport {
	std::size_t rows_read = 0;
	std::size_t retained = 0;
	std::map<std::string, std::size_t> dropped;

	nlohmann::json to_json() const;
};

inline constexpr std::string_view kMovementHeader =
    "taxi_id,on_time,on_lon,on_lat,off_time,off_lon,off_lat,price,mileage";

/// Applies the semantic rules (inverted times, bbox, span) and sorts by on_time.
/// Idempotent.
std::vector<MovementRecord> clean(std::vector<MovementRecord> records, const BBox &bbox, const TimeSpan &span,
                                  CleaningReport &report);

struct IngestResult {
	std::vector<MovementRecord> records;
	CleaningReport report;
};

/// Reads a movement CSV (exact header required) and cleans it.
IngestResult parse_and_clean(const std::filesystem::path &path, const BBox &bbox, const TimeSpan &span);

void write_movements_csv(const std::filesystem::path &path, const std::vector<MovementRecord> &records);

/// Slot ordinal from the get-on time; throws InvalidArgument before span_start.
SlotIndex bin_time(const MovementRecord &rec, EpochSeconds span_start, int slot_seconds = kDefaultSlotSeconds);

struct Hotspot {
	double lon = 0.0;
	double lat = 0.0;
	double sigma_deg = 0.01;
	double base_rate = 0.0;
};

struct SynthSpec {
	std::uint64_t seed = 42;
	int days = 14;
	std::string start_date = "2014-05-05";
	std::vector<Hotspot> hotspots;
	std::vector<double> daily_profile;  // 48 entries
	std::vector<double> weekly_profile; // 7 entries, day 0 = first span day

	static SynthSpec from_json(const nlohmann::json &j);
	nlohmann::json to_json() const;
	void validate() const;
};

/// Eight Shenzhen district hotspots with a post-midnight trough and a 09:00 peak.
SynthSpec default_synth_spec();

/// Draw order, per day d, slot s and hotspot h (in that nesting):
///   count ~ poisson(base_h * daily[s] * weekly[d mod 7])
/// then per record:
///   lon = clamp(h.lon + sigma * normal()), lat = clamp(h.lat + sigma * normal())
///   on_time  = span_start + (d * 48 + s) * 1800 + below(1800)
///   duration = 300 + below(3000) seconds
///   off_lon  = clamp(lon + 0.02 * normal()), off_lat = clamp(lat + 0.02 * normal())
///   taxi_id  = "T" + zero-padded 5-digit below(5000)
///   mileage  = duration / 3600 * 25 km, price = 10 + 2.6 * mileage
/// Clamping is to the bbox. The output is stable-sorted by on_time.
std::vector<MovementRecord> synth_generate(const SynthSpec &spec, const BBox &bbox);

TimeSpan synth_span(const SynthSpec &spec);

} // namespace maup
