#include <doctest.h>

#include "maup/predictor.hpp"
#include "support.hpp"

#include <string>

using namespace maup;
using maup::testing::TempDir;

namespace {

FlowTensor filled(int w, int h, std::int64_t first, std::int64_t last, double (*f)(std::size_t, std::size_t)) {
	FlowTensor t(w, h, first, last, TensorKind::observed);
	for (std::size_t s = 0; s < t.slot_count(); ++s) {
		for (std::size_t c = 0; c < t.cell_count(); ++c) {
			t.set(s, c, f(static_cast<std::size_t>(first) + s, c));
		}
	}
	return t;
}

std::string error_of(auto &&fn) {
	try {
		fn();
	} catch (const std::exception &e) {
		return e.what();
	}
	return {};
}

} // namespace

TEST_CASE("seasonal naive copies the value one week earlier") {
	auto ramp = [](std::size_t t, std::size_t c) { return static_cast<double>(t * 10 + c); };
	const FlowTensor train = filled(2, 1, 0, 335, ramp);
	const FlowTensor test = filled(2, 1, 336, 671, ramp);
	const FlowTensor pred = seasonal_naive(train, test);
	CHECK(pred.kind() == TensorKind::predicted);
	CHECK(pred.t_first() == 336);
	CHECK(pred.slot_count() == 336);
	for (std::size_t s = 0; s < 336; ++s) {
		CHECK(pred.at(s, 1) == train.at(s, 1));
	}

	// With a longer test window the lag reaches into observed test slots.
	const FlowTensor long_test = filled(2, 1, 336, 1007, ramp);
	const FlowTensor long_pred = seasonal_naive(train, long_test);
	CHECK(long_pred.at(400, 0) == long_test.at(400 - 336, 0));
}

TEST_CASE("seasonal naive is exact on week-periodic data and constant data") {
	auto weekly = [](std::size_t t, std::size_t c) { return static_cast<double>((t % 336) * (c + 1) % 17); };
	const FlowTensor train = filled(3, 2, 0, 671, weekly);
	const FlowTensor test = filled(3, 2, 672, 1007, weekly);
	const FlowTensor pred = seasonal_naive(train, test);
	for (std::size_t s = 0; s < pred.slot_count(); ++s) {
		for (std::size_t c = 0; c < pred.cell_count(); ++c) {
			CHECK(pred.at(s, c) == test.at(s, c));
		}
	}
	auto constant = [](std::size_t, std::size_t) { return 4.5; };
	const FlowTensor cpred = seasonal_naive(filled(1, 1, 0, 335, constant), filled(1, 1, 336, 383, constant));
	for (std::size_t s = 0; s < cpred.slot_count(); ++s) {
		CHECK(cpred.at(s, 0) == 4.5);
	}
}

TEST_CASE("seasonal naive preconditions") {
	auto zero = [](std::size_t, std::size_t) { return 0.0; };
	CHECK(error_of([&] { seasonal_naive(filled(1, 1, 0, 99, zero), filled(1, 1, 100, 150, zero)); })
	          .find("insufficient history") != std::string::npos);
	CHECK_THROWS_AS(seasonal_naive(filled(1, 1, 0, 335, zero), filled(1, 1, 400, 450, zero)), InvalidArgument);
	CHECK_THROWS_AS(seasonal_naive(filled(1, 1, 0, 335, zero), filled(2, 1, 336, 400, zero)), InvalidArgument);
}

TEST_CASE("slotwise mean averages training weeks") {
	auto two_weeks = [](std::size_t t, std::size_t) { return t < 336 ? 2.0 : 4.0; };
	const FlowTensor train = filled(1, 1, 0, 671, two_weeks);
	const FlowTensor pred = slotwise_mean(train, TensorDims{1, 1, 672, 1007});
	for (std::size_t s = 0; s < 336; ++s) {
		CHECK(pred.at(s, 0) == 3.0);
	}

	auto ramp = [](std::size_t t, std::size_t c) { return static_cast<double>(t + c); };
	const FlowTensor one_week = filled(2, 1, 0, 335, ramp);
	const FlowTensor test = filled(2, 1, 336, 671, ramp);
	CHECK(slotwise_mean(one_week, TensorDims{2, 1, 336, 671}).to_f64() == seasonal_naive(one_week, test).to_f64());

	auto zero = [](std::size_t, std::size_t) { return 0.0; };
	CHECK(slotwise_mean(filled(2, 2, 0, 335, zero), TensorDims{2, 2, 336, 400}).total() == 0.0);
	CHECK_THROWS_AS(slotwise_mean(filled(2, 2, 0, 100, zero), TensorDims{2, 2, 101, 200}), InvalidArgument);
}

TEST_CASE("noise injection is seeded and keeps predictions non-negative") {
	auto ramp = [](std::size_t t, std::size_t c) { return static_cast<double>((t + c) % 9); };
	const FlowTensor base = filled(4, 4, 0, 47, ramp);
	const FlowTensor a = inject_noise(base, 2.0, 7);
	const FlowTensor b = inject_noise(base, 2.0, 7);
	CHECK(a == b);
	CHECK(a.to_f64() != base.to_f64());
	for (double v : a.to_f64()) {
		CHECK(v >= 0.0);
	}
	CHECK(inject_noise(base, 0.0, 7).to_f64() == base.to_f64());
	CHECK_THROWS_AS(inject_noise(base, -0.1, 7), InvalidArgument);
}

TEST_CASE("loading external predictions") {
	TempDir tmp;
	FlowTensor good(50, 25, 336, 671, TensorKind::predicted);
	good.set(3, 5, 1.5);
	write_tensor(tmp / "good.tensor", good);
	const TensorDims expected{50, 25, 336, 671};
	CHECK(load_predictions(tmp / "good.tensor", expected) == good);

	FlowTensor wide(100, 25, 336, 671, TensorKind::predicted);
	write_tensor(tmp / "wide.tensor", wide);
	CHECK(error_of([&] { load_predictions(tmp / "wide.tensor", expected); }).find("dimension mismatch") !=
	      std::string::npos);

	FlowTensor observed(50, 25, 336, 671, TensorKind::observed);
	write_tensor(tmp / "obs.tensor", observed);
	CHECK(error_of([&] { load_predictions(tmp / "obs.tensor", expected); }).find("wrong kind") != std::string::npos);

	const std::string header = R"({"w":1,"h":1,"t_first":0,"t_last":0,"kind":"predicted","dtype":"f64le"})";
	const double minus_one = -1.0;
	maup::testing::write_file(tmp / "neg.tensor",
	                          header + "\n" + std::string(reinterpret_cast<const char *>(&minus_one), 8));
	CHECK(error_of([&] { load_predictions(tmp / "neg.tensor", TensorDims{1, 1, 0, 0}); })
	          .find("negative prediction") != std::string::npos);
}

TEST_CASE("predict dispatches on the source kind") {
	auto ramp = [](std::size_t t, std::size_t c) { return static_cast<double>((t * 3 + c) % 11); };
	const FlowTensor train = filled(2, 2, 0, 335, ramp);
	const FlowTensor test = filled(2, 2, 336, 671, ramp);
	PredictionSource src;
	CHECK(predict(src, train, test) == seasonal_naive(train, test));
	src.kind = PredictorKind::slotwise_mean;
	CHECK(predict(src, train, test).to_f64() == slotwise_mean(train, TensorDims{2, 2, 336, 671}).to_f64());
	src.kind = PredictorKind::seasonal_naive;
	src.noise = 0.3;
	CHECK(predict(src, train, test) == inject_noise(seasonal_naive(train, test), 0.3, src.noise_seed));
	CHECK(predictor_kind_from_string("slotwise_mean") == PredictorKind::slotwise_mean);
	CHECK(to_string(PredictorKind::file) == "file");
	CHECK_THROWS_AS(predictor_kind_from_string("st_resnet"), InvalidArgument);
}
