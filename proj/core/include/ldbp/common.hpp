#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ldbp {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kPlanck = 6.626e-34; // J*s

/// Invalid user input or configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN/Inf, divergence or solver failure (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace units {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
/// Power attenuation coefficient in 1/km from dB/km.
inline double db_per_km_to_neper(double alpha_db) { return alpha_db * std::log(10.0) / 10.0; }
inline double ps2_to_s2(double v) { return v * 1e-24; }

} // namespace units

/// Mixes a root seed with a named substream and an index (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0);

using Rng = std::mt19937_64;

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
cplx complex_gaussian(Rng& rng, double variance);

void require_finite(std::span<const cplx> x, std::string_view where);

double energy(std::span<const cplx> x);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work items must be independent.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

} // namespace ldbp
