#pragma once

#include "maup/predictor.hpp"
#include "maup/run_store.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace maup {

/// Invalid configuration; the CLI maps it to exit code 2.
class ConfigError : public InvalidArgument {
public:
	using InvalidArgument::InvalidArgument;
};

/// A pipeline stage failed; the CLI maps it to exit code 3.
class StageError : public Error {
public:
	StageError(std::string stage, const std::string &cause)
	    : Error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)) {}

	const std::string &stage() const noexcept { return stage_; }

private:
	std::string stage_;
};

struct RunConfig {
	BBox bbox = kShenzhenBBox;
	/// Inclusive local dates; required with a movement file, derived from the synthetic spec otherwise.
	std::string start_date;
	std::string end_date;
	int slot_minutes = 30;
	std::vector<Shape> shapes{Shape::grid};
	std::vector<GridSize> scales{kStandardScales[0], kStandardScales[1], kStandardScales[2]};
	int train_days = 7;
	int test_days = 7;
	PredictionSource predictor{PredictorKind::seasonal_naive, {}, kWeeklyLag, 0.2, 7};
	/// Exactly one of `synthetic` and `movements` is set.
	std::optional<SynthSpec> synthetic;
	std::filesystem::path movements;
	std::filesystem::path taz;
	std::filesystem::path out = "maup-run";
	Precision precision = Precision::f64;
	HierarchyOptions layout;
	int permutations = 0;
	std::uint64_t permutation_seed = 12345;

	/// Missing keys keep their defaults; throws ConfigError.
	static RunConfig from_json(const nlohmann::json &j);
	/// The output directory is left out so it never reaches stored artifacts.
	nlohmann::json to_json() const;
	/// Throws ConfigError.
	void validate() const;

	TimeSpan span() const;
	int slots_per_day() const noexcept { return 1440 / slot_minutes; }
	std::vector<ComboKey> combos() const;
	/// Stable digest of to_json().
	std::string run_id() const;
};

/// 14 synthetic days, all three scales, grid shape.
RunConfig default_config();
/// 14 synthetic days, 50x25 + 100x50, grid shape.
RunConfig quick_config();
RunConfig load_config(const std::filesystem::path &path);

/// Stages read their inputs from and write their outputs to a work directory.
/// Each throws StageError naming itself; re-running one rewrites identical files.
void stage_ingest(const RunConfig &config, const std::filesystem::path &dir);
void stage_aggregate(const RunConfig &config, const std::filesystem::path &dir);
void stage_predict(const RunConfig &config, const std::filesystem::path &dir);
void stage_evaluate(const RunConfig &config, const std::filesystem::path &dir);
void stage_assoc(const RunConfig &config, const std::filesystem::path &dir);
void stage_layout(const RunConfig &config, const std::filesystem::path &dir);
/// Writes the sealed manifest; every later stage refuses the directory.
RunManifest stage_seal(const RunConfig &config, const std::filesystem::path &dir);

/// Runs every stage in a sibling temp directory, then renames it onto
/// config.out. Partial outputs are removed on failure.
RunManifest run_pipeline(const RunConfig &config);

/// Global-RMSE table, shapes by scales.
void print_rmse_table(std::ostream &out, const RunManifest &manifest);

} // namespace maup
