#pragma once

#include "maup/aggregation.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace maup {

/// One week of 30-minute slots.
inline constexpr int kWeeklyLag = 7 * kSlotsPerDay;

enum class PredictorKind { file, seasonal_naive, slotwise_mean };

std::string to_string(PredictorKind kind);
PredictorKind predictor_kind_from_string(const std::string &s);

struct PredictionSource {
	PredictorKind kind = PredictorKind::seasonal_naive;
	std::filesystem::path path;     // file
	int lag = kWeeklyLag;           // seasonal_naive, slotwise_mean period
	double noise = 0.0;             // relative Gaussian noise injected after a baseline, 0 = off
	std::uint64_t noise_seed = 7;
};

struct TensorDims {
	int w = 0;
	int h = 0;
	std::int64_t t_first = 0;
	std::int64_t t_last = 0;
};

/// Loads a predicted tensor; throws on wrong kind, dimension mismatch or a
/// negative value ("negative prediction").
FlowTensor load_predictions(const std::filesystem::path &path, const TensorDims &expected);

/// y_{g,t} = x_{g,t-lag}, where history is train followed by the observed test
/// slots. `test_observed` must directly follow `train`.
FlowTensor seasonal_naive(const FlowTensor &train, const FlowTensor &test_observed, int lag = kWeeklyLag);

/// y_{g,t} = mean of the training values sharing t's slot-of-period.
FlowTensor slotwise_mean(const FlowTensor &train, const TensorDims &test, int period = kWeeklyLag);

/// y <- max(0, y * (1 + noise * N(0,1))), seeded.
FlowTensor inject_noise(const FlowTensor &pred, double noise, std::uint64_t seed);

/// Dispatches on the source kind.
FlowTensor predict(const PredictionSource &source, const FlowTensor &train, const FlowTensor &test_observed);

} // namespace maup
