#include "maup/flow_ingest.hpp"

#include "maup/format.hpp"
#include "maup/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace maup {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (H. Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) noexcept {
	y -= m <= 2;
	const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
	const auto yoe = static_cast<unsigned>(y - era * 400);
	const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
	const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
	return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
	std::int64_t y;
	unsigned m;
	unsigned d;
};

Civil civil_from_days(std::int64_t z) noexcept {
	z += 719468;
	const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
	const auto doe = static_cast<unsigned>(z - era * 146097);
	const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
	const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
	const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
	const unsigned mp = (5 * doy + 2) / 153;
	const unsigned d = doy - (153 * mp + 2) / 5 + 1;
	const unsigned m = mp < 10 ? mp + 3 : mp - 9;
	return {y + (m <= 2), m, d};
}

bool read_digits(std::string_view s, std::size_t pos, std::size_t count, int &out) noexcept {
	if (pos + count > s.size()) {
		return false;
	}
	int v = 0;
	for (std::size_t i = 0; i < count; ++i) {
		const char c = s[pos + i];
		if (c < '0' || c > '9') {
			return false;
		}
		v = v * 10 + (c - '0');
	}
	out = v;
	return true;
}

unsigned days_in_month(std::int64_t y, unsigned m) noexcept {
	static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
	const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
	return m == 2 && leap ? 29 : kDays[m - 1];
}

std::optional<std::int64_t> parse_date_days(std::string_view s) noexcept {
	int y = 0;
	int m = 0;
	int d = 0;
	if (s.size() < 10 || !read_digits(s, 0, 4, y) || s[4] != '-' || !read_digits(s, 5, 2, m) || s[7] != '-' ||
	    !read_digits(s, 8, 2, d)) {
		return std::nullopt;
	}
	if (m < 1 || m > 12 || d < 1 || static_cast<unsigned>(d) > days_in_month(y, static_cast<unsigned>(m))) {
		return std::nullopt;
	}
	return days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

std::string trim(std::string_view s) {
	while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
		s.remove_prefix(1);
	}
	while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
		s.remove_suffix(1);
	}
	return std::string(s);
}

// Comma split with double-quoted fields ("" escapes a quote).
std::vector<std::string> split_csv(std::string_view line) {
	std::vector<std::string> fields;
	std::string cur;
	bool quoted = false;
	for (std::size_t i = 0; i < line.size(); ++i) {
		const char c = line[i];
		if (quoted) {
			if (c == '"') {
				if (i + 1 < line.size() && line[i + 1] == '"') {
					cur.push_back('"');
					++i;
				} else {
					quoted = false;
				}
			} else {
				cur.push_back(c);
			}
		} else if (c == '"') {
			quoted = true;
		} else if (c == ',') {
			fields.push_back(trim(cur));
			cur.clear();
		} else {
			cur.push_back(c);
		}
	}
	fields.push_back(trim(cur));
	return fields;
}

std::string csv_escape(const std::string &s) {
	if (s.find_first_of(",\"\n") == std::string::npos) {
		return s;
	}
	std::string out = "\"";
	for (const char c : s) {
		if (c == '"') {
			out += "\"\"";
		} else {
			out.push_back(c);
		}
	}
	out.push_back('"');
	return out;
}

double clamp_to(double v, double lo, double hi) noexcept { return std::min(std::max(v, lo), hi); }

} // namespace

std::optional<EpochSeconds> parse_timestamp(std::string_view text) {
	const std::string s = trim(text);
	const auto days = parse_date_days(s);
	if (!days || s.size() < 19 || (s[10] != 'T' && s[10] != ' ')) {
		return std::nullopt;
	}
	int hh = 0;
	int mm = 0;
	int ss = 0;
	if (!read_digits(s, 11, 2, hh) || s[13] != ':' || !read_digits(s, 14, 2, mm) || s[16] != ':' ||
	    !read_digits(s, 17, 2, ss) || hh > 23 || mm > 59 || ss > 60) {
		return std::nullopt;
	}
	std::size_t pos = 19;
	// Fractional seconds are truncated to second resolution.
	if (pos < s.size() && s[pos] == '.') {
		++pos;
		const std::size_t begin = pos;
		while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
			++pos;
		}
		if (pos == begin) {
			return std::nullopt;
		}
	}
	int offset = kLocalOffsetSeconds;
	if (pos < s.size()) {
		const char sign = s[pos];
		if (sign == 'Z' && pos + 1 == s.size()) {
			offset = 0;
		} else if (sign == '+' || sign == '-') {
			int oh = 0;
			int om = 0;
			const std::string_view rest = std::string_view(s).substr(pos + 1);
			if (rest.size() == 5 && read_digits(rest, 0, 2, oh) && rest[2] == ':' && read_digits(rest, 3, 2, om)) {
			} else if (rest.size() == 4 && read_digits(rest, 0, 2, oh) && read_digits(rest, 2, 2, om)) {
			} else if (rest.size() == 2 && read_digits(rest, 0, 2, oh)) {
			} else {
				return std::nullopt;
			}
			if (oh > 23 || om > 59) {
				return std::nullopt;
			}
			offset = (sign == '+' ? 1 : -1) * (oh * 3600 + om * 60);
		} else {
			return std::nullopt;
		}
	}
	return *days * 86400 + hh * 3600 + mm * 60 + ss - offset;
}

std::string format_timestamp(EpochSeconds t) {
	const EpochSeconds local = t + kLocalOffsetSeconds;
	const std::int64_t days = local >= 0 ? local / 86400 : (local - 86399) / 86400;
	const std::int64_t secs = local - days * 86400;
	const Civil c = civil_from_days(days);
	char buf[48];
	std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lld+08:00", static_cast<long long>(c.y), c.m, c.d,
	              static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
	              static_cast<long long>(secs % 60));
	return buf;
}

std::optional<EpochSeconds> parse_local_date(std::string_view date) {
	const std::string s = trim(date);
	if (s.size() != 10) {
		return std::nullopt;
	}
	const auto days = parse_date_days(s);
	if (!days) {
		return std::nullopt;
	}
	return *days * 86400 - kLocalOffsetSeconds;
}

std::string format_local_date(EpochSeconds midnight) {
	const EpochSeconds local = midnight + kLocalOffsetSeconds;
	const std::int64_t days = local >= 0 ? local / 86400 : (local - 86399) / 86400;
	const Civil c = civil_from_days(days);
	char buf[16];
	std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u", static_cast<long long>(c.y), c.m, c.d);
	return buf;
}

TimeSpan make_span(std::string_view start_date, std::string_view end_date, int slot_seconds) {
	const auto start = parse_local_date(start_date);
	const auto end = parse_local_date(end_date);
	if (!start || !end) {
		throw InvalidArgument("span: dates must be YYYY-MM-DD");
	}
	if (*end < *start) {
		throw InvalidArgument("span: end date precedes start date");
	}
	if (slot_seconds <= 0 || 86400 % slot_seconds != 0) {
		throw InvalidArgument("span: slot length must divide a day");
	}
	return TimeSpan{*start, static_cast<int>((*end - *start) / 86400) + 1, slot_seconds};
}

nlohmann::json CleaningReport::to_json() const {
	nlohmann::json drops = nlohmann::json::object();
	for (const auto &[rule, count] : dropped) {
		drops[rule] = count;
	}
	return {{"rows_read", rows_read}, {"retained", retained}, {"dropped", drops}};
}

std::vector<MovementRecord> clean(std::vector<MovementRecord> records, const BBox &bbox, const TimeSpan &span,
                                  CleaningReport &report) {
	std::vector<MovementRecord> kept;
	kept.reserve(records.size());
	for (auto &rec : records) {
		const char *reason = nullptr;
		if (!(rec.on_time < rec.off_time)) {
			reason = "inverted_times";
		} else if (!std::isfinite(rec.on_pos.lon) || !std::isfinite(rec.on_pos.lat) || !bbox.contains(rec.on_pos)) {
			reason = "out_of_bbox";
		} else if (!span.contains(rec.on_time)) {
			reason = "out_of_span";
		}
		if (reason != nullptr) {
			++report.dropped[reason];
			continue;
		}
		kept.push_back(std::move(rec));
	}
	std::stable_sort(kept.begin(), kept.end(),
	                 [](const MovementRecord &a, const MovementRecord &b) { return a.on_time < b.on_time; });
	report.retained = kept.size();
	return kept;
}

IngestResult parse_and_clean(const std::filesystem::path &path, const BBox &bbox, const TimeSpan &span) {
	std::ifstream in(path);
	if (!in) {
		throw IoError("cannot open movement file " + path.string());
	}
	std::string line;
	if (!std::getline(in, line)) {
		throw IoError("movement file " + path.string() + " is empty");
	}
	if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
		line.erase(0, 3);
	}
	if (trim(line) != kMovementHeader) {
		throw IoError("movement file " + path.string() + ": malformed header, expected '" +
		              std::string(kMovementHeader) + "'");
	}

	IngestResult result;
	std::vector<MovementRecord> parsed;
	while (std::getline(in, line)) {
		if (trim(line).empty()) {
			continue;
		}
		++result.report.rows_read;
		const auto f = split_csv(line);
		if (f.size() != 9) {
			++result.report.dropped["unparsable"];
			continue;
		}
		if (f[1].empty() || f[4].empty()) {
			++result.report.dropped["missing_times"];
			continue;
		}
		const auto on_time = parse_timestamp(f[1]);
		const auto off_time = parse_timestamp(f[4]);
		const auto on_lon = parse_double(f[2]);
		const auto on_lat = parse_double(f[3]);
		const auto off_lon = parse_double(f[5]);
		const auto off_lat = parse_double(f[6]);
		const auto price = parse_double(f[7]);
		const auto mileage = parse_double(f[8]);
		if (f[0].empty() || !on_time || !off_time || !on_lon || !on_lat || !off_lon || !off_lat || !price ||
		    !mileage) {
			++result.report.dropped["unparsable"];
			continue;
		}
		parsed.push_back(MovementRecord{f[0], *on_time, *off_time, {*on_lon, *on_lat}, {*off_lon, *off_lat}, *price,
		                                *mileage});
	}
	result.records = clean(std::move(parsed), bbox, span, result.report);
	return result;
}

void write_movements_csv(const std::filesystem::path &path, const std::vector<MovementRecord> &records) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw IoError("cannot write movement file " + path.string());
	}
	out << kMovementHeader << '\n';
	for (const auto &r : records) {
		out << csv_escape(r.taxi_id) << ',' << format_timestamp(r.on_time) << ',' << format_double(r.on_pos.lon)
		    << ',' << format_double(r.on_pos.lat) << ',' << format_timestamp(r.off_time) << ','
		    << format_double(r.off_pos.lon) << ',' << format_double(r.off_pos.lat) << ',' << format_double(r.price)
		    << ',' << format_double(r.mileage) << '\n';
	}
	if (!out) {
		throw IoError("failed writing movement file " + path.string());
	}
}

SlotIndex bin_time(const MovementRecord &rec, EpochSeconds span_start, int slot_seconds) {
	if (slot_seconds <= 0) {
		throw InvalidArgument("bin_time: slot length must be positive");
	}
	if (rec.on_time < span_start) {
		throw InvalidArgument("bin_time: get-on time precedes span start");
	}
	return SlotIndex{(rec.on_time - span_start) / slot_seconds};
}

// --- synthetic data -------------------------------------------------------------

SynthSpec SynthSpec::from_json(const nlohmann::json &j) {
	SynthSpec s;
	s.seed = j.at("seed").get<std::uint64_t>();
	s.days = j.at("days").get<int>();
	s.start_date = j.value("start_date", s.start_date);
	for (const auto &h : j.at("hotspots")) {
		s.hotspots.push_back({h.at("lon").get<double>(), h.at("lat").get<double>(), h.at("sigma_deg").get<double>(),
		                      h.at("base_rate").get<double>()});
	}
	s.daily_profile = j.at("daily_profile").get<std::vector<double>>();
	s.weekly_profile = j.at("weekly_profile").get<std::vector<double>>();
	s.validate();
	return s;
}

nlohmann::json SynthSpec::to_json() const {
	auto hs = nlohmann::json::array();
	for (const auto &h : hotspots) {
		hs.push_back({{"lon", h.lon}, {"lat", h.lat}, {"sigma_deg", h.sigma_deg}, {"base_rate", h.base_rate}});
	}
	return {{"seed", seed},
	        {"days", days},
	        {"start_date", start_date},
	        {"hotspots", hs},
	        {"daily_profile", daily_profile},
	        {"weekly_profile", weekly_profile}};
}

void SynthSpec::validate() const {
	if (hotspots.empty()) {
		throw InvalidArgument("synthetic spec: empty hotspot list");
	}
	if (days < 8) {
		throw InvalidArgument("synthetic spec: need at least 8 days (one week of history plus a test day)");
	}
	if (daily_profile.size() != static_cast<std::size_t>(kSlotsPerDay) || weekly_profile.size() != 7) {
		throw InvalidArgument("synthetic spec: daily_profile needs 48 entries and weekly_profile 7");
	}
	auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
	if (std::any_of(daily_profile.begin(), daily_profile.end(), bad) ||
	    std::any_of(weekly_profile.begin(), weekly_profile.end(), bad)) {
		throw InvalidArgument("synthetic spec: profiles must be finite and non-negative");
	}
	for (const auto &h : hotspots) {
		if (bad(h.base_rate) || bad(h.sigma_deg) || !std::isfinite(h.lon) || !std::isfinite(h.lat)) {
			throw InvalidArgument("synthetic spec: hotspot fields must be finite, rates and sigmas non-negative");
		}
	}
	if (!parse_local_date(start_date)) {
		throw InvalidArgument("synthetic spec: start_date must be YYYY-MM-DD");
	}
}

SynthSpec default_synth_spec() {
	SynthSpec s;
	s.hotspots = {
	    {114.057, 22.543, 0.030, 60.0}, // Futian
	    {114.118, 22.548, 0.025, 45.0}, // Luohu
	    {113.935, 22.522, 0.040, 30.0}, // Nanshan
	    {113.880, 22.575, 0.050, 18.0}, // Bao'an
	    {114.030, 22.650, 0.060, 15.0}, // Longhua
	    {114.240, 22.700, 0.070, 12.0}, // Longgang
	    {113.815, 22.640, 0.020, 8.0},  // airport
	    {114.250, 22.560, 0.080, 6.0},  // Yantian
	};
	s.daily_profile.resize(kSlotsPerDay);
	for (int slot = 0; slot < kSlotsPerDay; ++slot) {
		const double t = slot;
		const double morning = std::exp(-0.5 * std::pow((t - 18.0) / 2.5, 2.0));
		const double evening = 0.75 * std::exp(-0.5 * std::pow((t - 37.0) / 3.5, 2.0));
		const double daytime = 0.45 / (1.0 + std::exp(-(t - 14.0))) / (1.0 + std::exp(t - 44.0));
		// Late-night activity wraps past midnight, leaving the trough near 04:30.
		const double wrapped = slot < 12 ? t + 48.0 : t;
		const double night = 0.3 * std::exp(-0.5 * std::pow((wrapped - 45.0) / 4.0, 2.0));
		s.daily_profile[static_cast<std::size_t>(slot)] =
		    0.06 + 0.94 * std::max({morning, evening, daytime, night});
	}
	s.weekly_profile = {1.0, 1.0, 1.0, 1.0, 1.05, 0.85, 0.8};
	return s;
}

TimeSpan synth_span(const SynthSpec &spec) {
	const auto start = parse_local_date(spec.start_date);
	if (!start) {
		throw InvalidArgument("synthetic spec: start_date must be YYYY-MM-DD");
	}
	return TimeSpan{*start, spec.days, kDefaultSlotSeconds};
}

std::vector<MovementRecord> synth_generate(const SynthSpec &spec, const BBox &bbox) {
	spec.validate();
	bbox.validate();
	const TimeSpan span = synth_span(spec);
	Rng rng(spec.seed);
	std::vector<MovementRecord> out;
	char id[16];
	for (int day = 0; day < spec.days; ++day) {
		const double weekly = spec.weekly_profile[static_cast<std::size_t>(day % 7)];
		for (int slot = 0; slot < kSlotsPerDay; ++slot) {
			const double daily = spec.daily_profile[static_cast<std::size_t>(slot)];
			const EpochSeconds slot_start =
			    span.start + static_cast<EpochSeconds>(day * kSlotsPerDay + slot) * kDefaultSlotSeconds;
			for (const auto &h : spec.hotspots) {
				const std::uint64_t count = rng.poisson(h.base_rate * daily * weekly);
				for (std::uint64_t k = 0; k < count; ++k) {
					MovementRecord r;
					r.on_pos.lon = clamp_to(h.lon + h.sigma_deg * rng.normal(), bbox.lon_min, bbox.lon_max);
					r.on_pos.lat = clamp_to(h.lat + h.sigma_deg * rng.normal(), bbox.lat_min, bbox.lat_max);
					r.on_time = slot_start + static_cast<EpochSeconds>(rng.below(kDefaultSlotSeconds));
					const auto duration = 300 + static_cast<EpochSeconds>(rng.below(3000));
					r.off_time = r.on_time + duration;
					r.off_pos.lon = clamp_to(r.on_pos.lon + 0.02 * rng.normal(), bbox.lon_min, bbox.lon_max);
					r.off_pos.lat = clamp_to(r.on_pos.lat + 0.02 * rng.normal(), bbox.lat_min, bbox.lat_max);
					std::snprintf(id, sizeof(id), "T%05llu", static_cast<unsigned long long>(rng.below(5000)));
					r.taxi_id = id;
					r.mileage = static_cast<double>(duration) / 3600.0 * 25.0;
					r.price = 10.0 + 2.6 * r.mileage;
					out.push_back(std::move(r));
				}
			}
		}
	}
	std::stable_sort(out.begin(), out.end(),
	                 [](const MovementRecord &a, const MovementRecord &b) { return a.on_time < b.on_time; });
	return out;
}

} // namespace maup
