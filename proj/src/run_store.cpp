#include "maup/run_store.hpp"

#include <algorithm>
#include <fstream>

namespace maup {

namespace fs = std::filesystem;

std::string to_string(Shape shape) { return shape == Shape::grid ? "grid" : "taz"; }

Shape shape_from_string(const std::string &s) {
	if (s == "grid") {
		return Shape::grid;
	}
	if (s == "taz") {
		return Shape::taz;
	}
	throw InvalidArgument("unknown shape '" + s + "' (expected grid or taz)");
}

void write_json_file(const fs::path &path, const nlohmann::json &j) { write_text_file(path, j.dump(1) + "\n"); }

nlohmann::json read_json_file(const fs::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw IoError("cannot open " + path.string());
	}
	try {
		return nlohmann::json::parse(in);
	} catch (const nlohmann::json::exception &e) {
		throw IoError(path.string() + ": " + e.what());
	}
}

void write_text_file(const fs::path &path, const std::string &text) {
	std::ofstream out(path, std::ios::binary | std::ios::trunc);
	if (!out) {
		throw IoError("cannot write " + path.string());
	}
	out << text;
	if (!out) {
		throw IoError("write failed: " + path.string());
	}
}

nlohmann::json vsup_to_json(const VsupAssignment &vsup, const VsupScale &temporal) {
	nlohmann::json cells = nlohmann::json::array();
	for (const auto &c : vsup.cells) {
		cells.push_back({c.error_level, c.value_bin});
	}
	return {{"value_bins", kValueBins},
	        {"error_levels", kErrorLevels},
	        {"max_value", vsup.scale.max_value},
	        {"max_error", vsup.scale.max_error},
	        {"temporal", {{"max_value", temporal.max_value}, {"max_error", temporal.max_error}}},
	        {"cells", std::move(cells)}};
}

std::pair<VsupAssignment, VsupScale> vsup_from_json(const nlohmann::json &j) {
	VsupAssignment a;
	a.scale.max_value = j.at("max_value").get<double>();
	a.scale.max_error = j.at("max_error").get<double>();
	for (const auto &c : j.at("cells")) {
		a.cells.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
	}
	VsupScale t;
	t.max_value = j.at("temporal").at("max_value").get<double>();
	t.max_error = j.at("temporal").at("max_error").get<double>();
	return {std::move(a), t};
}

nlohmann::json RunManifest::to_json() const {
	nlohmann::json combo_list = nlohmann::json::array();
	for (const auto &c : combos) {
		combo_list.push_back({{"shape", to_string(c.shape)}, {"scale", c.scale.label()}});
	}
	return {{"run_id", run_id},         {"sealed", sealed},         {"combinations", std::move(combo_list)},
	        {"global_rmse", rmse},      {"train_days", train_days}, {"test_days", test_days},
	        {"slots_per_day", slots_per_day}, {"config", config}};
}

RunManifest RunManifest::from_json(const nlohmann::json &j) {
	RunManifest m;
	m.run_id = j.at("run_id").get<std::string>();
	m.sealed = j.at("sealed").get<bool>();
	for (const auto &c : j.at("combinations")) {
		m.combos.push_back({shape_from_string(c.at("shape").get<std::string>()),
		                    GridSize::parse(c.at("scale").get<std::string>())});
	}
	m.rmse = j.at("global_rmse").get<std::map<std::string, double>>();
	m.train_days = j.at("train_days").get<int>();
	m.test_days = j.at("test_days").get<int>();
	m.slots_per_day = j.at("slots_per_day").get<int>();
	m.config = j.at("config");
	return m;
}

namespace {

template <class Reader>
auto read_csv_file(const fs::path &path, Reader reader) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw IoError("cannot open " + path.string());
	}
	try {
		return reader(in);
	} catch (const IoError &e) {
		throw IoError(path.string() + ": " + e.what());
	}
}

BBox bbox_from_json(const nlohmann::json &j) {
	return {j.at("lon_min").get<double>(), j.at("lon_max").get<double>(), j.at("lat_min").get<double>(),
	        j.at("lat_max").get<double>()};
}

ComboData load_combo(const fs::path &dir, const ComboKey &key) {
	const nlohmann::json meta = read_json_file(dir / store_files::kMeta);
	const auto &grid = meta.at("grid");
	ComboData c{key,
	            GridScheme(bbox_from_json(grid.at("bbox")), grid.at("w").get<int>(), grid.at("h").get<int>()),
	            read_tensor(dir / store_files::kObservedTest),
	            read_tensor(dir / store_files::kPredicted),
	            read_csv_file(dir / store_files::kDiagnostics, read_diagnostics_csv),
	            {},
	            {},
	            read_csv_file(dir / store_files::kScatter, read_scatter_csv),
	            summary_from_json(read_json_file(dir / store_files::kMoran)),
	            meta};
	auto [vsup, temporal] = vsup_from_json(read_json_file(dir / store_files::kVsup));
	c.vsup = std::move(vsup);
	c.temporal = temporal;
	const std::size_t cells = c.grid.cell_count();
	if (c.observed_test.cell_count() != cells || c.predicted.cell_count() != cells || c.diags.size() != cells ||
	    c.vsup.cells.size() != cells || c.scatter.size() != cells) {
		throw IoError(dir.string() + ": products disagree on the cell count");
	}
	return c;
}

} // namespace

RunStore RunStore::open(const fs::path &dir) {
	if (!fs::is_directory(dir)) {
		throw IoError("no run directory at " + dir.string());
	}
	RunStore store;
	try {
		store.manifest_ = RunManifest::from_json(read_json_file(dir / store_files::kManifest));
	} catch (const nlohmann::json::exception &e) {
		throw IoError(dir.string() + ": malformed manifest: " + e.what());
	}
	if (!store.manifest_.sealed) {
		throw IoError("run " + store.manifest_.run_id + " is not sealed");
	}
	if (store.manifest_.combos.empty()) {
		throw IoError("run " + store.manifest_.run_id + " has no combinations");
	}
	try {
		store.cleaning_report_ = read_json_file(dir / store_files::kCleaningReport);
		for (const auto &key : store.manifest_.combos) {
			store.combos_.push_back(load_combo(dir / key.dir_name(), key));
			const Shape shape = key.shape;
			if (!store.layouts_.contains(shape)) {
				const fs::path layout = dir / store_files::kLayoutDir / (to_string(shape) + ".json");
				store.layouts_.emplace(shape, arrangement_from_json(read_json_file(layout)));
			}
		}
	} catch (const nlohmann::json::exception &e) {
		throw IoError(dir.string() + ": malformed store file: " + e.what());
	}
	return store;
}

const ComboData *RunStore::find(const ComboKey &key) const noexcept {
	const auto it = std::find_if(combos_.begin(), combos_.end(), [&](const ComboData &c) { return c.key == key; });
	return it == combos_.end() ? nullptr : &*it;
}

const HierarchyArrangement *RunStore::layout(Shape shape) const noexcept {
	const auto it = layouts_.find(shape);
	return it == layouts_.end() ? nullptr : &it->second;
}

std::vector<RunStore> open_stores(const fs::path &root) {
	std::vector<RunStore> stores;
	if (fs::exists(root / store_files::kManifest)) {
		stores.push_back(RunStore::open(root));
		return stores;
	}
	if (!fs::is_directory(root)) {
		throw IoError("no store at " + root.string());
	}
	std::vector<fs::path> dirs;
	for (const auto &entry : fs::directory_iterator(root)) {
		if (entry.is_directory() && fs::exists(entry.path() / store_files::kManifest)) {
			dirs.push_back(entry.path());
		}
	}
	std::sort(dirs.begin(), dirs.end());
	for (const auto &d : dirs) {
		stores.push_back(RunStore::open(d));
	}
	if (stores.empty()) {
		throw IoError("no sealed runs under " + root.string());
	}
	std::sort(stores.begin(), stores.end(),
	          [](const RunStore &a, const RunStore &b) { return a.run_id() < b.run_id(); });
	return stores;
}

} // namespace maup
