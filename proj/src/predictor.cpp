#include "maup/predictor.hpp"

#include "maup/random.hpp"

#include <algorithm>
#include <cmath>

namespace maup {

std::string to_string(PredictorKind kind) {
	switch (kind) {
	case PredictorKind::file:
		return "file";
	case PredictorKind::seasonal_naive:
		return "seasonal_naive";
	case PredictorKind::slotwise_mean:
		return "slotwise_mean";
	}
	return "unknown";
}

PredictorKind predictor_kind_from_string(const std::string &s) {
	if (s == "file") {
		return PredictorKind::file;
	}
	if (s == "seasonal_naive") {
		return PredictorKind::seasonal_naive;
	}
	if (s == "slotwise_mean") {
		return PredictorKind::slotwise_mean;
	}
	throw InvalidArgument("unknown predictor kind '" + s + "'");
}

FlowTensor load_predictions(const std::filesystem::path &path, const TensorDims &expected) {
	auto [header, values] = read_tensor_raw(path);
	if (header.kind != TensorKind::predicted) {
		throw InvalidArgument("prediction file " + path.string() + ": wrong kind, expected \"predicted\"");
	}
	if (header.w != expected.w || header.h != expected.h || header.t_first != expected.t_first ||
	    header.t_last != expected.t_last) {
		throw InvalidArgument("prediction file " + path.string() + ": dimension mismatch (got " +
		                      std::to_string(header.w) + "x" + std::to_string(header.h) + " slots " +
		                      std::to_string(header.t_first) + ".." + std::to_string(header.t_last) + ", expected " +
		                      std::to_string(expected.w) + "x" + std::to_string(expected.h) + " slots " +
		                      std::to_string(expected.t_first) + ".." + std::to_string(expected.t_last) + ")");
	}
	FlowTensor out(header.w, header.h, header.t_first, header.t_last, TensorKind::predicted);
	const std::size_t cells = out.cell_count();
	for (std::size_t i = 0; i < values.size(); ++i) {
		if (std::isnan(values[i]) || values[i] < 0.0) {
			throw InvalidArgument("prediction file " + path.string() + ": negative prediction at value " +
			                      std::to_string(i));
		}
		out.set(i / cells, i % cells, values[i]);
	}
	return out;
}

FlowTensor seasonal_naive(const FlowTensor &train, const FlowTensor &test_observed, int lag) {
	if (lag < 1) {
		throw InvalidArgument("seasonal_naive: lag must be positive");
	}
	if (train.w() != test_observed.w() || train.h() != test_observed.h()) {
		throw InvalidArgument("seasonal_naive: train and test grids differ");
	}
	if (test_observed.t_first() != train.t_last() + 1) {
		throw InvalidArgument("seasonal_naive: test window must directly follow the training window");
	}
	if (train.slot_count() < static_cast<std::size_t>(lag)) {
		throw InvalidArgument("seasonal_naive: insufficient history (need " + std::to_string(lag) +
		                      " training slots, have " + std::to_string(train.slot_count()) + ")");
	}
	FlowTensor out(test_observed.w(), test_observed.h(), test_observed.t_first(), test_observed.t_last(),
	               TensorKind::predicted);
	const std::size_t n_train = train.slot_count();
	const auto ulag = static_cast<std::size_t>(lag);
	for (std::size_t t = 0; t < out.slot_count(); ++t) {
		// Absolute history position of t is n_train + t.
		const std::size_t src = n_train + t - ulag;
		for (std::size_t g = 0; g < out.cell_count(); ++g) {
			const double v = src < n_train ? train.at(src, g) : test_observed.at(src - n_train, g);
			out.set(t, g, v);
		}
	}
	return out;
}

FlowTensor slotwise_mean(const FlowTensor &train, const TensorDims &test, int period) {
	if (period < 1) {
		throw InvalidArgument("slotwise_mean: period must be positive");
	}
	if (train.slot_count() < static_cast<std::size_t>(period)) {
		throw InvalidArgument("slotwise_mean: insufficient history (need one full period of training slots)");
	}
	if (test.w != train.w() || test.h != train.h() || test.t_last < test.t_first) {
		throw InvalidArgument("slotwise_mean: test dimensions do not match training grid");
	}
	const auto uperiod = static_cast<std::size_t>(period);
	const std::size_t cells = train.cell_count();
	std::vector<double> sums(uperiod * cells, 0.0);
	std::vector<std::size_t> counts(uperiod, 0);
	for (std::size_t t = 0; t < train.slot_count(); ++t) {
		const std::size_t phase = t % uperiod;
		++counts[phase];
		for (std::size_t g = 0; g < cells; ++g) {
			sums[phase * cells + g] += train.at(t, g);
		}
	}
	FlowTensor out(test.w, test.h, test.t_first, test.t_last, TensorKind::predicted);
	for (std::size_t t = 0; t < out.slot_count(); ++t) {
		// Phase is measured from the first training slot.
		const auto offset = static_cast<std::size_t>(test.t_first - train.t_first()) + t;
		const std::size_t phase = offset % uperiod;
		for (std::size_t g = 0; g < cells; ++g) {
			out.set(t, g, sums[phase * cells + g] / static_cast<double>(counts[phase]));
		}
	}
	return out;
}

FlowTensor inject_noise(const FlowTensor &pred, double noise, std::uint64_t seed) {
	if (!(noise >= 0.0) || !std::isfinite(noise)) {
		throw InvalidArgument("inject_noise: noise level must be finite and non-negative");
	}
	FlowTensor out = pred;
	Rng rng(seed);
	for (std::size_t t = 0; t < out.slot_count(); ++t) {
		for (std::size_t g = 0; g < out.cell_count(); ++g) {
			const double factor = 1.0 + noise * rng.normal();
			out.set(t, g, std::max(0.0, pred.at(t, g) * factor));
		}
	}
	return out;
}

FlowTensor predict(const PredictionSource &source, const FlowTensor &train, const FlowTensor &test_observed) {
	const TensorDims dims{test_observed.w(), test_observed.h(), test_observed.t_first(), test_observed.t_last()};
	FlowTensor out;
	switch (source.kind) {
	case PredictorKind::file:
		return load_predictions(source.path, dims);
	case PredictorKind::seasonal_naive:
		out = seasonal_naive(train, test_observed, source.lag);
		break;
	case PredictorKind::slotwise_mean:
		out = slotwise_mean(train, dims, source.lag);
		break;
	}
	if (source.noise > 0.0) {
		out = inject_noise(out, source.noise, source.noise_seed);
	}
	return out;
}

} // namespace maup
