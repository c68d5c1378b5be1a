#pragma once

#include "ldbp/common.hpp"
#include "ldbp/model.hpp"

#include <doctest.h>

#include <cmath>

namespace ldbp::testing {

inline CVec random_cvec(Rng& rng, std::size_t n, double variance = 1.0)
{
    CVec v(n);
    for (auto& x : v) x = complex_gaussian(rng, variance);
    return v;
}

inline double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Naive O(n^2) DFT, sum_j x_j exp(-2 pi i jk / n).
inline CVec naive_dft(std::span<const cplx> x)
{
    const std::size_t n = x.size();
    CVec y(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc{};
        for (std::size_t j = 0; j < n; ++j) {
            acc += x[j] * std::polar(1.0, -2.0 * kPi * static_cast<double>((j * k) % n) / static_cast<double>(n));
        }
        y[k] = acc;
    }
    return y;
}

inline CVec naive_idft(std::span<const cplx> y)
{
    const std::size_t n = y.size();
    CVec x(n);
    for (std::size_t j = 0; j < n; ++j) {
        cplx acc{};
        for (std::size_t k = 0; k < n; ++k) {
            acc += y[k] * std::polar(1.0, 2.0 * kPi * static_cast<double>((j * k) % n) / static_cast<double>(n));
        }
        x[j] = acc / static_cast<double>(n);
    }
    return x;
}

inline double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b)
{
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double rel_l2(std::span<const cplx> a, std::span<const cplx> ref)
{
    REQUIRE(a.size() == ref.size());
    double e = 0.0;
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        e += std::norm(a[i] - ref[i]);
        r += std::norm(ref[i]);
    }
    return std::sqrt(e / r);
}

inline model::LinearStep random_step(Rng& rng, int k, double spread = 0.3)
{
    CVec h = random_cvec(rng, static_cast<std::size_t>(k + 1), spread * spread);
    h[0] += 1.0;
    return model::LinearStep::from_half_taps(std::move(h));
}

/// Small random model: filters near identity, standard or ESSM steps with the given phase coefficient scale.
inline model::LdbpModel random_model(Rng& rng, int layers, bool essm, model::Layout layout = model::Layout::Asymmetric)
{
    model::LdbpModel m;
    m.layout = layout;
    m.sample_rate_hz = 1.0;
    for (int i = 0; i < layers; ++i) {
        model::Layer l;
        l.linear = random_step(rng, uniform_int(rng, 0, 3));
        const bool last_identity = layout == model::Layout::SymmetricPlusHalf && i + 1 == layers;
        const double leff = last_identity ? 0.0 : uniform(rng, 0.2, 1.0);
        const double delta = last_identity ? 0.0 : 1.0;
        if (essm && !last_identity) {
            RVec eta(static_cast<std::size_t>(uniform_int(rng, 0, 3) + 1));
            for (auto& e : eta) e = uniform(rng, -0.5, 0.5);
            eta[0] += 1.0;
            l.nonlinear = model::NonlinearStep::essm(delta, 1.0, leff, std::move(eta));
        } else {
            l.nonlinear = model::NonlinearStep::standard(delta, 1.0, leff);
        }
        l.cd_length_km = 1.0;
        m.layers.push_back(std::move(l));
    }
    return m;
}

} // namespace ldbp::testing
