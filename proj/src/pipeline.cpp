#include "maup/pipeline.hpp"

#include "maup/log.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <memory>
#include <set>
#include <sstream>

namespace maup {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kConfigKeys = {
    "bbox",      "start_date", "end_date",  "slot_minutes", "shapes",      "scales",    "train_days",
    "test_days", "predictor",  "synthetic", "movements",    "taz",         "out",       "seed",
    "precision", "layout",     "permutations", "permutation_seed"};

BBox parse_bbox(const nlohmann::json &j) {
	if (j.is_array()) {
		if (j.size() != 4) {
			throw ConfigError("bbox: expected [lon_min, lon_max, lat_min, lat_max]");
		}
		return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
	}
	return {j.at("lon_min").get<double>(), j.at("lon_max").get<double>(), j.at("lat_min").get<double>(),
	        j.at("lat_max").get<double>()};
}

nlohmann::json bbox_json(const BBox &b) {
	return {{"lon_min", b.lon_min}, {"lon_max", b.lon_max}, {"lat_min", b.lat_min}, {"lat_max", b.lat_max}};
}

std::string fnv1a_hex(std::string_view text) {
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (const char c : text) {
		h ^= static_cast<unsigned char>(c);
		h *= 0x100000001b3ULL;
	}
	char buf[17];
	std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
	return buf;
}

std::string replace_all(std::string s, const std::string &from, const std::string &to) {
	for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
		s.replace(pos, from.size(), to);
	}
	return s;
}

template <class F>
auto run_stage(const char *name, F &&body) -> decltype(body()) {
	try {
		return body();
	} catch (const StageError &) {
		throw;
	} catch (const std::exception &e) {
		throw StageError(name, e.what());
	}
}

void require_unsealed(const fs::path &dir) {
	const fs::path manifest = dir / store_files::kManifest;
	if (fs::exists(manifest) && read_json_file(manifest).value("sealed", false)) {
		throw InvalidArgument("run directory " + dir.string() + " is sealed");
	}
}

void require_file(const fs::path &path, const std::string &what) {
	if (!fs::exists(path)) {
		throw InvalidArgument(what + " (" + path.string() + " not found)");
	}
}

/// Runs `body` once per combination, concurrently; the first failure (in combo order) is rethrown.
void for_each_combo(const RunConfig &config, const std::function<void(const ComboKey &)> &body) {
	std::vector<std::future<void>> jobs;
	for (const auto &key : config.combos()) {
		jobs.push_back(std::async(std::launch::async, body, key));
	}
	std::exception_ptr first;
	for (auto &job : jobs) {
		try {
			job.get();
		} catch (...) {
			if (!first) {
				first = std::current_exception();
			}
		}
	}
	if (first) {
		std::rethrow_exception(first);
	}
}

std::vector<RegionDiagnostics> read_diagnostics_file(const fs::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw IoError("cannot open " + path.string());
	}
	return read_diagnostics_csv(in);
}

double pearson(std::span<const double> a, std::span<const double> b) {
	const double n = static_cast<double>(a.size());
	double ma = 0.0;
	double mb = 0.0;
	for (std::size_t i = 0; i < a.size(); ++i) {
		ma += a[i];
		mb += b[i];
	}
	ma /= n;
	mb /= n;
	double sab = 0.0;
	double saa = 0.0;
	double sbb = 0.0;
	for (std::size_t i = 0; i < a.size(); ++i) {
		sab += (a[i] - ma) * (b[i] - mb);
		saa += (a[i] - ma) * (a[i] - ma);
		sbb += (b[i] - mb) * (b[i] - mb);
	}
	return saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

} // namespace

// --- config -------------------------------------------------------------------------

RunConfig RunConfig::from_json(const nlohmann::json &j) {
	if (!j.is_object()) {
		throw ConfigError("config must be a JSON object");
	}
	for (const auto &[key, value] : j.items()) {
		if (!kConfigKeys.contains(key)) {
			throw ConfigError("unknown config key '" + key + "'");
		}
	}
	RunConfig c;
	try {
		if (j.contains("bbox")) {
			c.bbox = parse_bbox(j.at("bbox"));
		}
		c.start_date = j.value("start_date", c.start_date);
		c.end_date = j.value("end_date", c.end_date);
		c.slot_minutes = j.value("slot_minutes", c.slot_minutes);
		if (j.contains("shapes")) {
			c.shapes.clear();
			for (const auto &s : j.at("shapes")) {
				c.shapes.push_back(shape_from_string(s.get<std::string>()));
			}
		}
		if (j.contains("scales")) {
			c.scales.clear();
			for (const auto &s : j.at("scales")) {
				c.scales.push_back(GridSize::parse(s.get<std::string>()));
			}
		}
		c.train_days = j.value("train_days", c.train_days);
		c.test_days = j.value("test_days", c.test_days);
		c.predictor.lag = 7 * c.slots_per_day();
		if (j.contains("predictor")) {
			const auto &p = j.at("predictor");
			c.predictor.kind = predictor_kind_from_string(p.value("kind", to_string(c.predictor.kind)));
			c.predictor.path = p.value("path", std::string());
			c.predictor.lag = p.value("lag", c.predictor.lag);
			c.predictor.noise = p.value("noise", c.predictor.noise);
			c.predictor.noise_seed = p.value("noise_seed", c.predictor.noise_seed);
		}
		if (j.contains("movements") && !j.at("movements").is_null()) {
			c.movements = j.at("movements").get<std::string>();
		}
		if (j.contains("synthetic") && !j.at("synthetic").is_null()) {
			const auto &s = j.at("synthetic");
			if (s.is_boolean()) {
				if (s.get<bool>()) {
					c.synthetic = default_synth_spec();
				}
			} else {
				// Partial specs fill in from the default.
				nlohmann::json merged = default_synth_spec().to_json();
				merged.merge_patch(s);
				c.synthetic = SynthSpec::from_json(merged);
			}
		} else if (c.movements.empty()) {
			c.synthetic = default_synth_spec();
		}
		if (j.contains("seed") && c.synthetic) {
			c.synthetic->seed = j.at("seed").get<std::uint64_t>();
		}
		if (j.contains("taz") && !j.at("taz").is_null()) {
			c.taz = j.at("taz").get<std::string>();
		}
		if (j.contains("out")) {
			c.out = j.at("out").get<std::string>();
		}
		if (j.contains("precision")) {
			const auto p = j.at("precision").get<std::string>();
			if (p != "f64" && p != "f32") {
				throw ConfigError("precision must be f64 or f32");
			}
			c.precision = p == "f64" ? Precision::f64 : Precision::f32;
		}
		if (j.contains("layout")) {
			const auto &l = j.at("layout");
			c.layout.W = l.value("W", c.layout.W);
			c.layout.H = l.value("H", c.layout.H);
			c.layout.d_min = l.value("d_min", c.layout.d_min);
		}
		c.permutations = j.value("permutations", c.permutations);
		c.permutation_seed = j.value("permutation_seed", c.permutation_seed);
	} catch (const ConfigError &) {
		throw;
	} catch (const std::exception &e) {
		throw ConfigError(std::string("config: ") + e.what());
	}
	return c;
}

nlohmann::json RunConfig::to_json() const {
	nlohmann::json shapes_j = nlohmann::json::array();
	for (const auto s : shapes) {
		shapes_j.push_back(to_string(s));
	}
	nlohmann::json scales_j = nlohmann::json::array();
	for (const auto &s : scales) {
		scales_j.push_back(s.label());
	}
	nlohmann::json j{{"bbox", bbox_json(bbox)},
	                 {"slot_minutes", slot_minutes},
	                 {"shapes", shapes_j},
	                 {"scales", scales_j},
	                 {"train_days", train_days},
	                 {"test_days", test_days},
	                 {"predictor",
	                  {{"kind", to_string(predictor.kind)},
	                   {"path", predictor.path.generic_string()},
	                   {"lag", predictor.lag},
	                   {"noise", predictor.noise},
	                   {"noise_seed", predictor.noise_seed}}},
	                 {"synthetic", synthetic ? synthetic->to_json() : nlohmann::json(nullptr)},
	                 {"movements", movements.empty() ? nlohmann::json(nullptr) : nlohmann::json(movements.generic_string())},
	                 {"taz", taz.empty() ? nlohmann::json(nullptr) : nlohmann::json(taz.generic_string())},
	                 {"precision", precision == Precision::f64 ? "f64" : "f32"},
	                 {"layout", {{"W", layout.W}, {"H", layout.H}, {"d_min", layout.d_min}}},
	                 {"permutations", permutations},
	                 {"permutation_seed", permutation_seed}};
	if (!start_date.empty()) {
		j["start_date"] = start_date;
	}
	if (!end_date.empty()) {
		j["end_date"] = end_date;
	}
	return j;
}

void RunConfig::validate() const {
	try {
		bbox.validate();
	} catch (const Error &e) {
		throw ConfigError(std::string("bbox: ") + e.what());
	}
	if (slot_minutes < 1 || slot_minutes > 1440 || 1440 % slot_minutes != 0) {
		throw ConfigError("slot_minutes must divide a day");
	}
	if (shapes.empty()) {
		throw ConfigError("no shapes requested");
	}
	if (std::set<Shape>(shapes.begin(), shapes.end()).size() != shapes.size()) {
		throw ConfigError("duplicate shape");
	}
	if (scales.empty()) {
		throw ConfigError("no scales requested");
	}
	for (const auto &s : scales) {
		if (standard_level(s) < 0) {
			throw ConfigError("scale " + s.label() + " is not one of 50x25, 100x50, 200x100");
		}
	}
	if (std::set<GridSize>(scales.begin(), scales.end()).size() != scales.size()) {
		throw ConfigError("duplicate scale");
	}
	if (synthetic && !movements.empty()) {
		throw ConfigError("set either synthetic or movements, not both");
	}
	if (!synthetic && movements.empty()) {
		throw ConfigError("no input: set synthetic or movements");
	}
	if (synthetic) {
		try {
			synthetic->validate();
		} catch (const Error &e) {
			throw ConfigError(std::string("synthetic: ") + e.what());
		}
	} else if (start_date.empty() || end_date.empty()) {
		throw ConfigError("start_date and end_date are required with a movement file");
	}
	const TimeSpan s = span();
	if (train_days < 1 || test_days < 1) {
		throw ConfigError("train_days and test_days must be positive");
	}
	if (train_days + test_days != s.days) {
		throw ConfigError("train_days + test_days = " + std::to_string(train_days + test_days) + " but the span has " +
		                  std::to_string(s.days) + " days");
	}
	if (predictor.lag < 1) {
		throw ConfigError("predictor lag must be positive");
	}
	if (!(predictor.noise >= 0.0) || !std::isfinite(predictor.noise)) {
		throw ConfigError("predictor noise must be non-negative");
	}
	if (predictor.kind == PredictorKind::file && predictor.path.empty()) {
		throw ConfigError("predictor kind 'file' needs a path");
	}
	if (!(layout.W > 0.0) || !(layout.H > 0.0) || !(layout.d_min > 0.0)) {
		throw ConfigError("layout W, H and d_min must be positive");
	}
	if (permutations < 0) {
		throw ConfigError("permutations must be non-negative");
	}
}

TimeSpan RunConfig::span() const {
	try {
		if (synthetic) {
			TimeSpan s = synth_span(*synthetic);
			s.slot_seconds = slot_minutes * 60;
			if (!start_date.empty() && start_date != synthetic->start_date) {
				throw ConfigError("start_date disagrees with the synthetic start date");
			}
			if (!end_date.empty() && parse_local_date(end_date) != std::optional(s.end() - 86400)) {
				throw ConfigError("end_date disagrees with the synthetic day count");
			}
			return s;
		}
		return make_span(start_date, end_date, slot_minutes * 60);
	} catch (const ConfigError &) {
		throw;
	} catch (const Error &e) {
		throw ConfigError(std::string("span: ") + e.what());
	}
}

std::vector<ComboKey> RunConfig::combos() const {
	std::vector<ComboKey> out;
	for (const auto shape : shapes) {
		for (const auto &scale : scales) {
			out.push_back({shape, scale});
		}
	}
	std::sort(out.begin(), out.end(), [](const ComboKey &a, const ComboKey &b) {
		if (a.shape != b.shape) {
			return a.shape < b.shape;
		}
		return standard_level(a.scale) < standard_level(b.scale);
	});
	return out;
}

std::string RunConfig::run_id() const { return "run-" + fnv1a_hex(to_json().dump()); }

RunConfig default_config() {
	RunConfig c;
	c.synthetic = default_synth_spec();
	return c;
}

RunConfig quick_config() {
	RunConfig c = default_config();
	c.scales = {kStandardScales[0], kStandardScales[1]};
	c.out = "maup-quick";
	return c;
}

RunConfig load_config(const fs::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw ConfigError("cannot open config " + path.string());
	}
	nlohmann::json j;
	try {
		j = nlohmann::json::parse(in);
	} catch (const nlohmann::json::exception &e) {
		throw ConfigError(path.string() + ": " + e.what());
	}
	return RunConfig::from_json(j);
}

// --- stages -------------------------------------------------------------------------

void stage_ingest(const RunConfig &config, const fs::path &dir) {
	run_stage("ingest", [&] {
		fs::create_directories(dir);
		require_unsealed(dir);
		const TimeSpan span = config.span();
		IngestResult result;
		if (config.synthetic) {
			auto generated = synth_generate(*config.synthetic, config.bbox);
			result.report.rows_read = generated.size();
			result.records = clean(std::move(generated), config.bbox, span, result.report);
		} else {
			require_file(config.movements, "missing movement file");
			result = parse_and_clean(config.movements, config.bbox, span);
		}
		const bool wants_taz = std::find(config.shapes.begin(), config.shapes.end(), Shape::taz) != config.shapes.end();
		if (wants_taz) {
			if (config.taz.empty()) {
				throw InvalidArgument("shape taz requested but no taz file configured");
			}
			require_file(config.taz, "missing taz file");
			write_zones_geojson(dir / store_files::kZones, read_zones_geojson(config.taz));
		}
		write_movements_csv(dir / store_files::kMovements, result.records);
		write_json_file(dir / store_files::kCleaningReport, result.report.to_json());
		log::info("ingest: " + std::to_string(result.report.retained) + " of " +
		          std::to_string(result.report.rows_read) + " records retained");
	});
}

void stage_aggregate(const RunConfig &config, const fs::path &dir) {
	run_stage("aggregate", [&] {
		require_unsealed(dir);
		require_file(dir / store_files::kMovements, "missing movements, run ingest first");
		const TimeSpan span = config.span();
		const auto records = parse_and_clean(dir / store_files::kMovements, config.bbox, span).records;
		std::unique_ptr<ZoneScheme> zones;
		std::optional<ZoneAggregation> zone_flow;
		if (std::find(config.shapes.begin(), config.shapes.end(), Shape::taz) != config.shapes.end()) {
			require_file(dir / store_files::kZones, "missing zones, run ingest first");
			zones = std::make_unique<ZoneScheme>(read_zones_geojson(dir / store_files::kZones));
			zone_flow = aggregate(records, *zones, span);
		}
		for_each_combo(config, [&](const ComboKey &key) {
			const fs::path cdir = dir / key.dir_name();
			fs::create_directories(cdir);
			const GridScheme grid = build_grid(config.bbox, key.scale.w, key.scale.h);
			nlohmann::json info;
			FlowTensor tensor;
			if (key.shape == Shape::grid) {
				auto agg = aggregate(records, grid, span, config.precision);
				info = {{"discarded", agg.discarded}, {"out_of_range", agg.out_of_range}};
				tensor = std::move(agg.tensor);
			} else {
				const FractionMap fractions = intersection_fractions(*zones, grid);
				double worst_outside = 0.0;
				for (const double s : fractions.outside_share) {
					worst_outside = std::max(worst_outside, s);
				}
				tensor = rasterize(zone_flow->flow, fractions, grid, config.precision);
				info = {{"discarded", zone_flow->discarded},
				        {"out_of_range", zone_flow->out_of_range},
				        {"zone_count", zones->size()},
				        {"max_outside_share", worst_outside}};
			}
			info["total_volume"] = tensor.total();
			write_tensor(cdir / store_files::kObserved, tensor);
			write_json_file(cdir / store_files::kAggregation, info);
		});
	});
}

void stage_predict(const RunConfig &config, const fs::path &dir) {
	run_stage("predict", [&] {
		require_unsealed(dir);
		for_each_combo(config, [&](const ComboKey &key) {
			const fs::path cdir = dir / key.dir_name();
			require_file(cdir / store_files::kObserved, "missing aggregation for " + key.dir_name());
			const FlowTensor observed = read_tensor(cdir / store_files::kObserved);
			auto [train, test] = split(observed, config.train_days, config.test_days, config.slots_per_day());
			PredictionSource source = config.predictor;
			if (source.kind == PredictorKind::file) {
				source.path = replace_all(replace_all(source.path.string(), "{shape}", to_string(key.shape)), "{scale}",
				                          key.scale.label());
			}
			const FlowTensor predicted = predict(source, train, test);
			write_tensor(cdir / store_files::kObservedTest, test);
			write_tensor(cdir / store_files::kPredicted, predicted);
		});
	});
}

void stage_evaluate(const RunConfig &config, const fs::path &dir) {
	run_stage("evaluate", [&] {
		require_unsealed(dir);
		for_each_combo(config, [&](const ComboKey &key) {
			const fs::path cdir = dir / key.dir_name();
			if (!fs::exists(cdir / store_files::kPredicted)) {
				throw InvalidArgument("missing predictions for " + key.dir_name() + ", run predict first");
			}
			const FlowTensor observed = read_tensor(cdir / store_files::kObservedTest);
			const FlowTensor predicted = read_tensor(cdir / store_files::kPredicted);
			const auto diags = region_metrics(observed, predicted);
			const auto vsup = vsup_assign(diags);
			const auto temporal = temporal_scale(observed, predicted);
			std::ostringstream csv;
			write_diagnostics_csv(csv, diags);
			write_text_file(cdir / store_files::kDiagnostics, csv.str());
			write_json_file(cdir / store_files::kVsup, vsup_to_json(vsup, temporal));

			std::vector<double> mae;
			std::vector<double> volume;
			std::size_t undefined = 0;
			for (const auto &d : diags) {
				mae.push_back(d.mean_abs_error);
				volume.push_back(d.mean_volume);
				undefined += d.fully_defined() ? 0 : 1;
			}
			write_json_file(cdir / store_files::kEvaluation, {{"global_rmse", global_rmse(observed, predicted)},
			                                                  {"undefined_regions", undefined},
			                                                  {"mae_volume_pearson", pearson(mae, volume)}});
		});
	});
}

void stage_assoc(const RunConfig &config, const fs::path &dir) {
	run_stage("assoc", [&] {
		require_unsealed(dir);
		for_each_combo(config, [&](const ComboKey &key) {
			const fs::path cdir = dir / key.dir_name();
			require_file(cdir / store_files::kDiagnostics, "missing diagnostics for " + key.dir_name() +
			                                                   ", run evaluate first");
			const auto diags = read_diagnostics_file(cdir / store_files::kDiagnostics);
			const std::size_t n = diags.size();
			std::vector<double> volume(n);
			std::vector<double> errors(n);
			const auto mask = std::make_unique<bool[]>(n);
			for (std::size_t i = 0; i < n; ++i) {
				volume[i] = diags[i].mean_volume;
				errors[i] = diags[i].mean_abs_error;
				mask[i] = diags[i].fully_defined();
			}
			LisaOptions options;
			options.errors = errors;
			options.error_mask = std::span<const bool>(mask.get(), n);
			options.permutations = config.permutations;
			options.permutation_seed = config.permutation_seed;
			const auto result = lisa(volume, key.scale.w, key.scale.h, options);
			std::ostringstream csv;
			write_scatter_csv(csv, result.points);
			write_text_file(cdir / store_files::kScatter, csv.str());
			write_json_file(cdir / store_files::kMoran, summary_to_json(result.summary));
		});
	});
}

void stage_layout(const RunConfig &config, const fs::path &dir) {
	run_stage("layout", [&] {
		require_unsealed(dir);
		fs::create_directories(dir / store_files::kLayoutDir);
		for (const auto shape : config.shapes) {
			std::array<std::optional<ScaleDiagnostics>, 3> levels;
			for (const auto &scale : config.scales) {
				const ComboKey key{shape, scale};
				const fs::path path = dir / key.dir_name() / store_files::kDiagnostics;
				require_file(path, "missing diagnostics for " + key.dir_name() + ", run evaluate first");
				levels[static_cast<std::size_t>(standard_level(scale))] = ScaleDiagnostics{scale, read_diagnostics_file(path)};
			}
			const auto arrangement = arrange_hierarchy(levels, config.layout, config.scales.size() == 3);
			write_json_file(dir / store_files::kLayoutDir / (to_string(shape) + ".json"), arrangement_to_json(arrangement));
		}
	});
}

RunManifest stage_seal(const RunConfig &config, const fs::path &dir) {
	return run_stage("seal", [&] {
		require_unsealed(dir);
		require_file(dir / store_files::kCleaningReport, "missing cleaning report, run ingest first");
		const TimeSpan span = config.span();
		RunManifest manifest;
		manifest.run_id = config.run_id();
		manifest.sealed = true;
		manifest.train_days = config.train_days;
		manifest.test_days = config.test_days;
		manifest.slots_per_day = config.slots_per_day();
		manifest.config = config.to_json();
		for (const auto shape : config.shapes) {
			require_file(dir / store_files::kLayoutDir / (to_string(shape) + ".json"), "missing layout, run layout first");
		}
		for (const auto &key : config.combos()) {
			const fs::path cdir = dir / key.dir_name();
			for (const char *name : {store_files::kObservedTest, store_files::kPredicted, store_files::kDiagnostics,
			                         store_files::kVsup, store_files::kScatter, store_files::kMoran}) {
				require_file(cdir / name, "incomplete products for " + key.dir_name());
			}
			const auto evaluation = read_json_file(cdir / store_files::kEvaluation);
			const std::int64_t test_first = static_cast<std::int64_t>(config.train_days) * config.slots_per_day();
			const std::int64_t test_last = test_first + static_cast<std::int64_t>(config.test_days) * config.slots_per_day() - 1;
			const nlohmann::json meta{
			    {"shape", to_string(key.shape)},
			    {"scale", key.scale.label()},
			    {"grid", {{"w", key.scale.w}, {"h", key.scale.h}, {"bbox", bbox_json(config.bbox)}}},
			    {"span",
			     {{"start_date", format_local_date(span.start)}, {"days", span.days}, {"slot_minutes", config.slot_minutes}}},
			    {"test",
			     {{"t_first", test_first},
			      {"t_last", test_last},
			      {"days", config.test_days},
			      {"start_date", format_local_date(span.start + static_cast<EpochSeconds>(config.train_days) * 86400)}}},
			    {"aggregation", read_json_file(cdir / store_files::kAggregation)},
			    {"evaluation", evaluation},
			    {"predictor", manifest.config.at("predictor")}};
			write_json_file(cdir / store_files::kMeta, meta);
			manifest.combos.push_back(key);
			manifest.rmse[key.dir_name()] = evaluation.at("global_rmse").get<double>();
		}
		write_json_file(dir / store_files::kManifest, manifest.to_json());
		return manifest;
	});
}

RunManifest run_pipeline(const RunConfig &config) {
	config.validate();
	const fs::path out = fs::absolute(config.out).lexically_normal();
	if (out.filename().empty()) {
		throw ConfigError("output directory has no name");
	}
	if (fs::exists(out)) {
		if (!fs::is_directory(out) || (!fs::is_empty(out) && !fs::exists(out / store_files::kManifest))) {
			throw ConfigError("refusing to replace " + out.string() + ": not a run directory");
		}
	}
	fs::create_directories(out.parent_path());
	const fs::path tmp = out.parent_path() / (out.filename().string() + ".tmp-" + config.run_id());
	fs::remove_all(tmp);
	RunManifest manifest;
	try {
		stage_ingest(config, tmp);
		stage_aggregate(config, tmp);
		stage_predict(config, tmp);
		stage_evaluate(config, tmp);
		stage_assoc(config, tmp);
		stage_layout(config, tmp);
		manifest = stage_seal(config, tmp);
	} catch (...) {
		std::error_code ignored;
		fs::remove_all(tmp, ignored);
		throw;
	}
	fs::remove_all(out);
	fs::rename(tmp, out);
	return manifest;
}

void print_rmse_table(std::ostream &out, const RunManifest &manifest) {
	std::vector<GridSize> scales;
	std::vector<Shape> shapes;
	for (const auto &c : manifest.combos) {
		if (std::find(scales.begin(), scales.end(), c.scale) == scales.end()) {
			scales.push_back(c.scale);
		}
		if (std::find(shapes.begin(), shapes.end(), c.shape) == shapes.end()) {
			shapes.push_back(c.shape);
		}
	}
	std::sort(scales.begin(), scales.end(),
	          [](const GridSize &a, const GridSize &b) { return standard_level(a) < standard_level(b); });
	char buf[64];
	out << "global RMSE";
	for (const auto &s : scales) {
		std::snprintf(buf, sizeof(buf), "%12s", s.label().c_str());
		out << buf;
	}
	out << '\n';
	for (const auto shape : shapes) {
		std::snprintf(buf, sizeof(buf), "%-11s", to_string(shape).c_str());
		out << buf;
		for (const auto &s : scales) {
			const auto it = manifest.rmse.find(ComboKey{shape, s}.dir_name());
			if (it == manifest.rmse.end()) {
				std::snprintf(buf, sizeof(buf), "%12s", "-");
			} else {
				std::snprintf(buf, sizeof(buf), "%12.4f", it->second);
			}
			out << buf;
		}
		out << '\n';
	}
}

} // namespace maup
