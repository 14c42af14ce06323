#pragma once

// Shared test helpers: scratch directories, file comparison and small
// independent oracles used by both the unit tests and the acceptance binary.

#include "maup/dotplot_layout.hpp"
#include "maup/geo_partition.hpp"
#include "maup/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace maup::testing {

/// Unique scratch directory removed on destruction.
class TempDir {
public:
	explicit TempDir(const std::string &tag = "maup-test") {
		std::random_device rd;
		const auto base = std::filesystem::temp_directory_path();
		for (;;) {
			path_ = base / (tag + "-" + std::to_string(rd()));
			if (std::filesystem::create_directory(path_)) {
				break;
			}
		}
	}
	~TempDir() {
		std::error_code ec;
		std::filesystem::remove_all(path_, ec);
	}
	TempDir(const TempDir &) = delete;
	TempDir &operator=(const TempDir &) = delete;

	const std::filesystem::path &path() const noexcept { return path_; }
	std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
	std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path &path, const std::string &text) {
	std::ofstream out(path, std::ios::binary);
	out << text;
}

/// Empty when the trees are byte-identical, otherwise the first differing relative path.
inline std::string first_tree_difference(const std::filesystem::path &a, const std::filesystem::path &b) {
	std::vector<std::filesystem::path> left;
	std::vector<std::filesystem::path> right;
	for (const auto &e : std::filesystem::recursive_directory_iterator(a)) {
		left.push_back(std::filesystem::relative(e.path(), a));
	}
	for (const auto &e : std::filesystem::recursive_directory_iterator(b)) {
		right.push_back(std::filesystem::relative(e.path(), b));
	}
	std::sort(left.begin(), left.end());
	std::sort(right.begin(), right.end());
	if (left != right) {
		return "<file lists differ>";
	}
	for (const auto &rel : left) {
		if (std::filesystem::is_regular_file(a / rel) && read_file(a / rel) != read_file(b / rel)) {
			return rel.string();
		}
	}
	return {};
}

inline bool close_rel(double a, double b, double tol) {
	const double scale = std::max({std::abs(a), std::abs(b), 1.0});
	return std::abs(a - b) <= tol * scale;
}

/// Axis-aligned rectangle as a zone polygon.
inline Zone rect_zone(std::int64_t id, double x0, double y0, double x1, double y1) {
	return Zone{id, {Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, {}}}};
}

/// Random in-bbox zone set: convex-ish star polygons around random centers,
/// kept inside the bbox. Zones may overlap; fractions are per zone.
inline std::vector<Zone> random_zones(Rng &rng, const BBox &box, int count) {
	std::vector<Zone> zones;
	for (int z = 0; z < count; ++z) {
		const double r = (0.05 + 0.2 * rng.uniform()) * std::min(box.width(), box.height());
		const double cx = box.lon_min + r + (box.width() - 2 * r) * rng.uniform();
		const double cy = box.lat_min + r + (box.height() - 2 * r) * rng.uniform();
		const int vertices = 3 + static_cast<int>(rng.below(8));
		Ring ring;
		for (int v = 0; v < vertices; ++v) {
			const double angle = 2.0 * std::numbers::pi * (v + 0.8 * rng.uniform()) / vertices;
			const double rad = r * (0.4 + 0.6 * rng.uniform());
			ring.push_back({cx + rad * std::cos(angle), cy + rad * std::sin(angle)});
		}
		zones.push_back(Zone{z + 1, {Polygon{ring, {}}}});
	}
	return zones;
}

/// Exhaustive minimum of layout_objective over every n and every contiguous
/// composition of k into n positive parts.
inline double brute_force_layout_optimum(std::span<const double> diameters, double W, double H,
                                         std::vector<std::size_t> *best_counts = nullptr) {
	const std::size_t k = diameters.size();
	double best = std::numeric_limits<double>::infinity();
	// Each subset of the k-1 gaps between dots is one composition.
	const std::uint64_t masks = std::uint64_t{1} << (k - 1);
	std::vector<std::size_t> counts;
	for (std::uint64_t mask = 0; mask < masks; ++mask) {
		counts.clear();
		std::size_t run = 1;
		for (std::size_t gap = 0; gap + 1 < k; ++gap) {
			if (mask & (std::uint64_t{1} << gap)) {
				counts.push_back(run);
				run = 1;
			} else {
				++run;
			}
		}
		counts.push_back(run);
		// Direct evaluation, independent of the library objective.
		std::vector<double> heights;
		std::vector<double> widths;
		std::size_t pos = 0;
		for (std::size_t c : counts) {
			double hsum = 0.0;
			double wmax = 0.0;
			for (std::size_t j = 0; j < c; ++j, ++pos) {
				hsum += diameters[pos];
				wmax = std::max(wmax, diameters[pos]);
			}
			heights.push_back(hsum);
			widths.push_back(wmax);
		}
		double mean_h = 0.0;
		for (double h : heights) {
			mean_h += h;
		}
		mean_h /= static_cast<double>(heights.size());
		double f = 0.0;
		double wsum = 0.0;
		for (std::size_t i = 0; i < heights.size(); ++i) {
			f += std::abs(heights[i] - mean_h);
			wsum += widths[i];
		}
		f += std::abs(wsum / mean_h - W / H);
		if (f < best) {
			best = f;
			if (best_counts) {
				*best_counts = counts;
			}
		}
	}
	return best;
}

inline std::vector<DotSpec> dots_from_diameters(std::span<const double> diameters) {
	std::vector<DotSpec> dots;
	for (std::size_t i = 0; i < diameters.size(); ++i) {
		DotSpec d;
		d.region = i;
		d.diameter = diameters[i];
		d.sort_key = static_cast<double>(i);
		dots.push_back(d);
	}
	return dots;
}

/// Global Moran's I from the dense weight matrix, written out term by term.
inline double dense_moran(std::span<const double> values, int w, int h, bool row_standardize) {
	const std::size_t n = values.size();
	std::vector<double> wm(n * n, 0.0);
	for (int r = 0; r < h; ++r) {
		for (int c = 0; c < w; ++c) {
			const std::size_t i = static_cast<std::size_t>(r * w + c);
			for (int dr = -1; dr <= 1; ++dr) {
				for (int dc = -1; dc <= 1; ++dc) {
					const int rr = r + dr;
					const int cc = c + dc;
					if ((dr || dc) && rr >= 0 && rr < h && cc >= 0 && cc < w) {
						wm[i * n + static_cast<std::size_t>(rr * w + cc)] = 1.0;
					}
				}
			}
		}
	}
	if (row_standardize) {
		for (std::size_t i = 0; i < n; ++i) {
			double row = 0.0;
			for (std::size_t j = 0; j < n; ++j) {
				row += wm[i * n + j];
			}
			if (row > 0) {
				for (std::size_t j = 0; j < n; ++j) {
					wm[i * n + j] /= row;
				}
			}
		}
	}
	double mean = 0.0;
	for (double v : values) {
		mean += v;
	}
	mean /= static_cast<double>(n);
	double s0 = 0.0;
	double cross = 0.0;
	double ss = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		ss += (values[i] - mean) * (values[i] - mean);
		for (std::size_t j = 0; j < n; ++j) {
			s0 += wm[i * n + j];
			cross += wm[i * n + j] * (values[i] - mean) * (values[j] - mean);
		}
	}
	return static_cast<double>(n) / s0 * cross / ss;
}

struct OracleMetrics {
	long double prmse = 0;
	long double u = 0;
	long double corr = 0;
	long double mae = 0;
	long double mean = 0;
};

/// Two-pass direct summation in extended precision, straight from the definitions.
inline OracleMetrics oracle_metrics(std::span<const double> x, std::span<const double> y) {
	const auto n = static_cast<long double>(x.size());
	long double mx = 0;
	long double my = 0;
	for (std::size_t i = 0; i < x.size(); ++i) {
		mx += x[i];
		my += y[i];
	}
	mx /= n;
	my /= n;
	long double se = 0;
	long double ae = 0;
	long double xx = 0;
	long double yy = 0;
	long double cxy = 0;
	long double cxx = 0;
	long double cyy = 0;
	for (std::size_t i = 0; i < x.size(); ++i) {
		const long double xi = x[i];
		const long double yi = y[i];
		se += (yi - xi) * (yi - xi);
		ae += yi > xi ? yi - xi : xi - yi;
		xx += xi * xi;
		yy += yi * yi;
		cxy += (xi - mx) * (yi - my);
		cxx += (xi - mx) * (xi - mx);
		cyy += (yi - my) * (yi - my);
	}
	const long double rmse = std::sqrt(se / n);
	OracleMetrics m;
	m.mean = mx;
	m.mae = ae / n;
	m.prmse = rmse / mx;
	m.u = rmse / (std::sqrt(yy / n) + std::sqrt(xx / n));
	m.corr = cxy / std::sqrt(cxx * cyy);
	return m;
}

} // namespace maup::testing
