// maup: command-line driver for the MAUP diagnostics pipeline.
//
// Exit codes: 0 success, 2 configuration error, 3 stage failure.

#include "maup/log.hpp"
#include "maup/pipeline.hpp"
#include "maup/service.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

namespace fs = std::filesystem;
using namespace maup;

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

/// Flags shared by every stage command; unset values leave the config untouched.
struct ConfigFlags {
	std::string config_path;
	std::string out;
	bool quick = false;
	std::optional<std::uint64_t> seed;
	std::optional<int> days;
	std::vector<std::string> shapes;
	std::vector<std::string> scales;
	std::string movements;
	std::string taz;
	std::string start_date;
	std::string end_date;
	std::optional<int> train_days;
	std::optional<int> test_days;
	std::string predictor;
	std::string predictions;
	std::optional<double> noise;
	std::optional<int> permutations;

	void attach(CLI::App &app) {
		app.add_option("-c,--config", config_path, "run configuration (JSON)");
		app.add_option("-o,--out", out, "run directory (overrides MAUP_OUT and the config)");
		app.add_flag("--quick", quick, "14 synthetic days at 50x25 and 100x50");
		app.add_option("--seed", seed, "synthetic generator seed");
		app.add_option("--days", days, "synthetic day count");
		app.add_option("--shapes", shapes, "grid and/or taz")->delimiter(',');
		app.add_option("--scales", scales, "subset of 50x25,100x50,200x100")->delimiter(',');
		app.add_option("--movements", movements, "movement CSV instead of synthetic data");
		app.add_option("--taz", taz, "TAZ GeoJSON (zone_id per feature)");
		app.add_option("--start-date", start_date, "first local day, YYYY-MM-DD");
		app.add_option("--end-date", end_date, "last local day (inclusive)");
		app.add_option("--train-days", train_days);
		app.add_option("--test-days", test_days);
		app.add_option("--predictor", predictor, "seasonal_naive, slotwise_mean or file");
		app.add_option("--predictions", predictions, "predicted tensor path; {shape} and {scale} expand");
		app.add_option("--noise", noise, "relative Gaussian noise added to baseline predictions");
		app.add_option("--permutations", permutations, "Moran permutation test draws");
	}

	RunConfig build() const {
		RunConfig c = config_path.empty() ? default_config() : load_config(config_path);
		if (quick) {
			const RunConfig q = quick_config();
			if (config_path.empty()) {
				c = q;
			}
			c.scales = q.scales;
			if (c.synthetic) {
				c.synthetic->days = 14;
			}
		}
		if (const char *env = std::getenv("MAUP_OUT"); env != nullptr && *env != '\0') {
			c.out = env;
		}
		if (!out.empty()) {
			c.out = out;
		}
		if (!movements.empty()) {
			c.movements = movements;
			c.synthetic.reset();
		}
		if (seed) {
			if (!c.synthetic) {
				throw ConfigError("--seed only applies to synthetic input");
			}
			c.synthetic->seed = *seed;
		}
		if (days) {
			if (!c.synthetic) {
				throw ConfigError("--days only applies to synthetic input");
			}
			c.synthetic->days = *days;
		}
		if (days && !train_days) {
			c.train_days = c.synthetic->days - (test_days ? *test_days : c.test_days);
		}
		try {
			if (!shapes.empty()) {
				c.shapes.clear();
				for (const auto &s : shapes) {
					c.shapes.push_back(shape_from_string(s));
				}
			}
			if (!scales.empty()) {
				c.scales.clear();
				for (const auto &s : scales) {
					c.scales.push_back(GridSize::parse(s));
				}
			}
			if (!predictor.empty()) {
				c.predictor.kind = predictor_kind_from_string(predictor);
			}
		} catch (const InvalidArgument &e) {
			throw ConfigError(e.what());
		}
		if (!taz.empty()) {
			c.taz = taz;
		}
		if (!start_date.empty()) {
			c.start_date = start_date;
		}
		if (!end_date.empty()) {
			c.end_date = end_date;
		}
		if (train_days) {
			c.train_days = *train_days;
		}
		if (test_days) {
			c.test_days = *test_days;
		}
		if (!predictions.empty()) {
			c.predictor.kind = PredictorKind::file;
			c.predictor.path = predictions;
		}
		if (noise) {
			c.predictor.noise = *noise;
		}
		if (permutations) {
			c.permutations = *permutations;
		}
		c.validate();
		return c;
	}
};

int report_failure(const std::exception &e, int code) {
	std::cerr << "maup: " << e.what() << '\n';
	return code;
}

void copy_to(const fs::path &file, const std::string &output) {
	std::ifstream in(file, std::ios::binary);
	if (!in) {
		throw IoError("cannot open " + file.string() + " (has the producing stage run?)");
	}
	if (output.empty() || output == "-") {
		std::cout << in.rdbuf();
		return;
	}
	std::ofstream out(output, std::ios::binary | std::ios::trunc);
	out << in.rdbuf();
	if (!out) {
		throw IoError("cannot write " + output);
	}
}

void emit(const std::string &text, const std::string &output) {
	if (output.empty() || output == "-") {
		std::cout << text;
		return;
	}
	write_text_file(output, text);
}

} // namespace

int main(int argc, char **argv) {
	CLI::App app{"MAUP diagnostics: aggregate taxi flows at several shapes and scales, score predictions, serve results"};
	app.require_subcommand(1);
	bool quiet = false;
	app.add_flag("-q,--quiet", quiet, "suppress progress messages");

	ConfigFlags flags;
	const auto stage_command = [&](const char *name, const char *help) {
		CLI::App *cmd = app.add_subcommand(name, help);
		flags.attach(*cmd);
		return cmd;
	};

	auto *run = stage_command("run", "run every stage and seal the store");
	auto *ingest = stage_command("ingest", "read or generate movements, clean them");
	auto *aggregate_cmd = stage_command("aggregate", "count flows per (shape, scale)");
	auto *predict_cmd = stage_command("predict", "split train/test and predict the test window");
	auto *evaluate = stage_command("evaluate", "per-region accuracy diagnostics and VSUP bins");
	auto *assoc = stage_command("assoc", "Moran scatter and LISA");
	auto *layout = stage_command("layout", "three-scale dot-plot layouts");
	auto *seal = stage_command("seal", "write the sealed manifest");

	auto *synth = app.add_subcommand("synth", "write a synthetic movement CSV (and optionally TAZ zones)");
	std::uint64_t synth_seed = 42;
	int synth_days = 14;
	std::string synth_spec;
	std::string synth_output;
	std::string taz_out;
	std::string taz_grid = "24x12";
	std::uint64_t taz_seed = 7;
	synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
	synth->add_option("--days", synth_days, "day count")->capture_default_str();
	synth->add_option("--spec", synth_spec, "synthetic spec JSON (partial specs fill in from the default)");
	synth->add_option("-o,--output", synth_output, "movement CSV path")->required();
	synth->add_option("--taz-out", taz_out, "also write jittered TAZ zones as GeoJSON");
	synth->add_option("--taz-grid", taz_grid, "zone lattice, NXxNY")->capture_default_str();
	synth->add_option("--taz-seed", taz_seed, "zone jitter seed")->capture_default_str();

	auto *serve = app.add_subcommand("serve", "serve a sealed store over HTTP/JSON");
	std::string store_dir;
	ServeOptions serve_options;
	serve->add_option("--store", store_dir, "run directory or directory of runs (default: MAUP_OUT or maup-run)");
	serve->add_option("--host", serve_options.host)->capture_default_str();
	serve->add_option("--port", serve_options.port, "0 picks a free port")->capture_default_str();
	serve->add_option("--static", serve_options.static_dir, "static UI assets served at /");
	serve->add_option("--threads", serve_options.threads)->capture_default_str();

	auto *export_cmd = app.add_subcommand("export", "write one product of a run directory");
	std::string what;
	std::string export_shape = "grid";
	std::string export_scale = "50x25";
	std::string export_metric = "prmse";
	std::string export_output;
	std::string export_dir;
	export_cmd->add_option("--what", what, "scatter, diagnostics, layout or map")
	    ->required()
	    ->check(CLI::IsMember({"scatter", "diagnostics", "layout", "map"}));
	export_cmd->add_option("--shape", export_shape)->capture_default_str();
	export_cmd->add_option("--scale", export_scale)->capture_default_str();
	export_cmd->add_option("--metric", export_metric, "layout coloring: prmse, u or corr")->capture_default_str();
	export_cmd->add_option("--store", export_dir, "run directory (default: MAUP_OUT or maup-run)");
	export_cmd->add_option("-o,--output", export_output, "output file (default stdout)");

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		const int code = app.exit(e);
		return code == 0 ? 0 : kExitConfig;
	}
	log::set_quiet(quiet);

	const auto default_store = [] {
		const char *env = std::getenv("MAUP_OUT");
		return std::string(env != nullptr && *env != '\0' ? env : "maup-run");
	};

	try {
		if (synth->parsed()) {
			SynthSpec spec = default_synth_spec();
			if (!synth_spec.empty()) {
				nlohmann::json merged = spec.to_json();
				merged.merge_patch(read_json_file(synth_spec));
				spec = SynthSpec::from_json(merged);
			}
			if (synth->count("--seed") > 0 || synth_spec.empty()) {
				spec.seed = synth_seed;
			}
			if (synth->count("--days") > 0 || synth_spec.empty()) {
				spec.days = synth_days;
			}
			try {
				spec.validate();
			} catch (const InvalidArgument &e) {
				throw ConfigError(e.what());
			}
			const auto records = synth_generate(spec, kShenzhenBBox);
			write_movements_csv(synth_output, records);
			log::info("synth: wrote " + std::to_string(records.size()) + " records to " + synth_output);
			if (!taz_out.empty()) {
				GridSize lattice;
				try {
					lattice = GridSize::parse(taz_grid);
				} catch (const InvalidArgument &e) {
					throw ConfigError(e.what());
				}
				write_zones_geojson(taz_out, make_jittered_zones(kShenzhenBBox, lattice.w, lattice.h, taz_seed));
				log::info("synth: wrote " + std::to_string(lattice.w * lattice.h) + " zones to " + taz_out);
			}
			return 0;
		}
		if (serve->parsed()) {
			const AnalyticsService service = AnalyticsService::open(store_dir.empty() ? default_store() : store_dir);
			HttpServer server(service, serve_options);
			const int port = server.bind();
			std::cout << "serving http://" << serve_options.host << ':' << port << '\n' << std::flush;
			server.run();
			return 0;
		}
		if (export_cmd->parsed()) {
			const fs::path dir = export_dir.empty() ? default_store() : export_dir;
			ComboKey key;
			ColorMetric metric;
			try {
				key = {shape_from_string(export_shape), GridSize::parse(export_scale)};
				metric = color_metric_from_string(export_metric);
			} catch (const InvalidArgument &e) {
				throw ConfigError(e.what());
			}
			if (what == "scatter") {
				copy_to(dir / key.dir_name() / store_files::kScatter, export_output);
			} else if (what == "diagnostics") {
				copy_to(dir / key.dir_name() / store_files::kDiagnostics, export_output);
			} else if (what == "layout") {
				const auto arrangement = arrangement_from_json(
				    read_json_file(dir / store_files::kLayoutDir / (to_string(key.shape) + ".json")));
				emit(layout_to_json(arrangement, metric).dump(1) + "\n", export_output);
			} else {
				const AnalyticsService service = AnalyticsService::open(dir);
				emit(service.map({{"shape", export_shape}, {"scale", export_scale}}).dump(1) + "\n", export_output);
			}
			return 0;
		}

		const RunConfig config = flags.build();
		if (run->parsed()) {
			const RunManifest manifest = run_pipeline(config);
			std::cout << "run " << manifest.run_id << " sealed at " << config.out.string() << '\n';
			print_rmse_table(std::cout, manifest);
			return 0;
		}
		const fs::path dir = config.out;
		if (ingest->parsed()) {
			stage_ingest(config, dir);
		} else if (aggregate_cmd->parsed()) {
			stage_aggregate(config, dir);
		} else if (predict_cmd->parsed()) {
			stage_predict(config, dir);
		} else if (evaluate->parsed()) {
			stage_evaluate(config, dir);
		} else if (assoc->parsed()) {
			stage_assoc(config, dir);
		} else if (layout->parsed()) {
			stage_layout(config, dir);
		} else if (seal->parsed()) {
			const RunManifest manifest = stage_seal(config, dir);
			std::cout << "run " << manifest.run_id << " sealed at " << dir.string() << '\n';
			print_rmse_table(std::cout, manifest);
		}
		return 0;
	} catch (const ConfigError &e) {
		return report_failure(e, kExitConfig);
	} catch (const std::exception &e) {
		return report_failure(e, kExitStage);
	}
}
