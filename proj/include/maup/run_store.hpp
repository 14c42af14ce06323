#pragma once

#include "maup/aggregation.hpp"
#include "maup/dotplot_layout.hpp"
#include "maup/metrics.hpp"
#include "maup/spatial_assoc.hpp"

#include <json.hpp>

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace maup {

/// Partition family a diagnostic set was aggregated through. Both end up on
/// grid cells: TAZ counts are rasterized onto each grid scale.
enum class Shape { grid, taz };

std::string to_string(Shape shape);
Shape shape_from_string(const std::string &s);

struct ComboKey {
	Shape shape = Shape::grid;
	GridSize scale;

	/// "grid_50x25"
	std::string dir_name() const { return to_string(shape) + "_" + scale.label(); }
	friend auto operator<=>(const ComboKey &, const ComboKey &) = default;
};

/// File names inside a run directory.
namespace store_files {
inline constexpr const char *kManifest = "run.json";
inline constexpr const char *kMovements = "movements.csv";
inline constexpr const char *kCleaningReport = "cleaning_report.json";
inline constexpr const char *kZones = "zones.geojson";
inline constexpr const char *kObserved = "observed.tensor";
inline constexpr const char *kAggregation = "aggregation.json";
inline constexpr const char *kObservedTest = "observed_test.tensor";
inline constexpr const char *kPredicted = "predicted.tensor";
inline constexpr const char *kDiagnostics = "diagnostics.csv";
inline constexpr const char *kVsup = "vsup.json";
inline constexpr const char *kEvaluation = "evaluation.json";
inline constexpr const char *kScatter = "scatter.csv";
inline constexpr const char *kMoran = "moran.json";
inline constexpr const char *kMeta = "meta.json";
inline constexpr const char *kLayoutDir = "layouts";
} // namespace store_files

/// Pretty-printed with sorted keys and a trailing newline, so equal values give equal bytes.
void write_json_file(const std::filesystem::path &path, const nlohmann::json &j);
nlohmann::json read_json_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, const std::string &text);

nlohmann::json vsup_to_json(const VsupAssignment &vsup, const VsupScale &temporal);
/// Returns the assignment and the temporal scale.
std::pair<VsupAssignment, VsupScale> vsup_from_json(const nlohmann::json &j);

struct RunManifest {
	std::string run_id;
	bool sealed = false;
	std::vector<ComboKey> combos;
	std::map<std::string, double> rmse; // by ComboKey::dir_name
	int train_days = 0;
	int test_days = 0;
	int slots_per_day = kSlotsPerDay;
	nlohmann::json config;

	nlohmann::json to_json() const;
	static RunManifest from_json(const nlohmann::json &j);
};

/// One sealed (shape, scale) product set, fully loaded.
struct ComboData {
	ComboKey key;
	GridScheme grid;
	FlowTensor observed_test;
	FlowTensor predicted;
	std::vector<RegionDiagnostics> diags;
	VsupAssignment vsup;
	VsupScale temporal;
	std::vector<LisaPoint> scatter;
	MoranSummary moran;
	nlohmann::json meta;
};

/// Read-only view of a sealed run directory. Immutable after open, so safe
/// for concurrent readers.
class RunStore {
public:
	/// Throws IoError if the directory is missing, unsealed or incomplete.
	static RunStore open(const std::filesystem::path &dir);

	const RunManifest &manifest() const noexcept { return manifest_; }
	const std::string &run_id() const noexcept { return manifest_.run_id; }
	const std::vector<ComboData> &combos() const noexcept { return combos_; }
	const ComboData *find(const ComboKey &key) const noexcept;
	const HierarchyArrangement *layout(Shape shape) const noexcept;
	const nlohmann::json &cleaning_report() const noexcept { return cleaning_report_; }

private:
	RunManifest manifest_;
	std::vector<ComboData> combos_;
	std::map<Shape, HierarchyArrangement> layouts_;
	nlohmann::json cleaning_report_;
};

/// A run directory, or a directory whose subdirectories are runs; ordered by run_id.
std::vector<RunStore> open_stores(const std::filesystem::path &root);

} // namespace maup
