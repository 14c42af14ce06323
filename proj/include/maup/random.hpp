#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace maup {

/// Seeded generator with fully specified transforms, so streams are identical
/// across standard library implementations (std distributions are not).
///
///   uniform():  (engine() >> 11) * 2^-53, in [0, 1)
///   normal():   Box-Muller on two uniforms u1, u2:
///               sqrt(-2 ln(1 - u1)) * cos(2 pi u2)
///   poisson(l): l <= 0 returns 0 without drawing; otherwise l is consumed in
///               chunks of at most 30, each sampled by Knuth's product method
///               (count draws until the running product of uniforms falls to
///               or below exp(-chunk)); the chunk counts are summed.
class Rng {
public:
	explicit Rng(std::uint64_t seed) : engine_(seed) {}

	double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

	double normal() noexcept {
		const double u1 = uniform();
		const double u2 = uniform();
		return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
	}

	std::uint64_t poisson(double lambda) noexcept {
		std::uint64_t total = 0;
		while (lambda > 0.0) {
			const double chunk = lambda > kPoissonChunk ? kPoissonChunk : lambda;
			lambda -= chunk;
			const double limit = std::exp(-chunk);
			double product = uniform();
			while (product > limit) {
				++total;
				product *= uniform();
			}
		}
		return total;
	}

	/// Uniform integer in [0, n) by multiply-shift on a uniform draw; n > 0.
	std::uint64_t below(std::uint64_t n) noexcept {
		auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
		return k < n ? k : n - 1;
	}

	std::mt19937_64 &engine() noexcept { return engine_; }

private:
	static constexpr double kPoissonChunk = 30.0;
	std::mt19937_64 engine_;
};

} // namespace maup
