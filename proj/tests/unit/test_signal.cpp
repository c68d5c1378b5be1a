#include "ldbp/signal.hpp"

#include "support.hpp"

using namespace ldbp;
using namespace ldbp::signal;

TEST_SUITE("signal") {

TEST_CASE("generate_symbols is deterministic by seed")
{
    const auto a = generate_symbols(4, Modulation::GaussianIid, 7);
    const auto b = generate_symbols(4, Modulation::GaussianIid, 7);
    CHECK(a.symbols == b.symbols);
    const auto c = generate_symbols(4, Modulation::GaussianIid, 8);
    CHECK(a.symbols != c.symbols);
}

TEST_CASE("QAM16 alphabet has unit mean power")
{
    const double l[4] = {-3.0, -1.0, 1.0, 3.0};
    double p = 0.0;
    for (double i : l) {
        for (double q : l) p += (i * i + q * q) / 10.0;
    }
    CHECK(p / 16.0 == doctest::Approx(1.0).epsilon(1e-15));
    const auto f = generate_symbols(4096, Modulation::Qam16, 3);
    for (const auto& s : f.symbols) {
        const double re = s.real() * std::sqrt(10.0);
        const double im = s.imag() * std::sqrt(10.0);
        CHECK(std::abs(std::abs(re) - 1.0) * std::abs(std::abs(re) - 3.0) < 1e-9);
        CHECK(std::abs(std::abs(im) - 1.0) * std::abs(std::abs(im) - 3.0) < 1e-9);
    }
}

TEST_CASE("Gaussian symbols have unit mean power")
{
    const auto f = generate_symbols(1000000, Modulation::GaussianIid, 11);
    double p = 0.0;
    for (const auto& s : f.symbols) p += std::norm(s);
    CHECK(std::abs(p / 1e6 - 1.0) < 0.01);
}

TEST_CASE("symbol count must be positive")
{
    CHECK_THROWS_AS(generate_symbols(0, Modulation::GaussianIid, 1), ConfigError);
}

TEST_CASE("rrc taps are symmetric and unit energy")
{
    for (double beta : {0.0, 0.1, 0.25, 0.5, 1.0}) {
        SignalSpec spec;
        spec.rolloff = beta;
        spec.rrc_span_symbols = 32;
        for (int os : {2, 4, 6}) {
            const RVec t = rrc_taps(spec, os);
            REQUIRE(t.size() == static_cast<std::size_t>(32 * os + 1));
            double e = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i) {
                CHECK(t[i] == doctest::Approx(t[t.size() - 1 - i]).epsilon(1e-14));
                CHECK(std::isfinite(t[i]));
                e += t[i] * t[i];
            }
            CHECK(std::abs(e - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("rrc singular points match the neighbouring closed form")
{
    // At roll-off 0.25 and 4x oversampling, t = 1/(4 beta) = 1 symbol falls exactly on a tap.
    SignalSpec spec;
    spec.rolloff = 0.25;
    spec.rrc_span_symbols = 8;
    const RVec t = rrc_taps(spec, 4);
    const std::size_t c = t.size() / 2;
    // Smoothness: second difference around the special tap is as small as elsewhere.
    const double d2 = t[c + 3] - 2.0 * t[c + 4] + t[c + 5];
    const double d2ref = t[c + 2] - 2.0 * t[c + 3] + t[c + 4];
    CHECK(std::abs(d2) < 5.0 * std::abs(d2ref) + 1e-3);
}

TEST_CASE("rrc self-convolution is Nyquist")
{
    SignalSpec spec;
    spec.rolloff = 0.1;
    for (int span : {32, 128}) {
        spec.rrc_span_symbols = span;
        const int os = 2;
        const RVec t = rrc_taps(spec, os);
        const std::size_t n = t.size();
        RVec conv(2 * n - 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) conv[i + j] += t[i] * t[j];
        }
        const std::size_t c = n - 1;
        CHECK(conv[c] == doctest::Approx(1.0).epsilon(1e-3));
        double worst = 0.0;
        for (std::size_t k = os; k <= c; k += os) worst = std::max({worst, std::abs(conv[c + k]), std::abs(conv[c - k])});
        if (span >= 128) {
            CHECK(worst < 1e-3);
        } else {
            CHECK(worst < 5e-3);
        }
    }
}

TEST_CASE("modulate of zero frame is zero")
{
    SymbolFrame f;
    f.symbols.assign(16, cplx{});
    const auto x = modulate(f, SignalSpec{}, 2);
    for (const auto& v : x.samples) CHECK(v == cplx{});
}

TEST_CASE("modulate at 0 dBm has 1 mW mean power")
{
    const auto f = generate_symbols(1024, Modulation::GaussianIid, 5, 0.0);
    SignalSpec spec;
    const auto x = modulate(f, spec, 4);
    CHECK(x.size() == 4096);
    CHECK(x.sample_rate_hz == doctest::Approx(4 * spec.baud_rate_hz));
    double p = 0.0;
    double ps = 0.0;
    for (const auto& v : x.samples) p += std::norm(v);
    for (const auto& s : f.symbols) ps += std::norm(s);
    // Unit-energy taps: mean sample power = P * (symbol power).
    CHECK(std::abs(p / x.size() / (ps / 1024.0) - 1e-3) < 1e-5);
    CHECK(std::abs(p / x.size() - 1e-3) < 0.1e-3);
}

TEST_CASE("modulate impulse reproduces the scaled taps")
{
    SignalSpec spec;
    spec.rrc_span_symbols = 8;
    SymbolFrame f;
    f.symbols.assign(64, cplx{});
    f.symbols[0] = 1.0;
    f.power_dbm = 30.0; // P = 1 W
    const int os = 2;
    const auto x = modulate(f, spec, os);
    const RVec t = rrc_taps(spec, os);
    const double scale = std::sqrt(static_cast<double>(os));
    const std::size_t n = x.size();
    const std::size_t c = t.size() / 2;
    for (std::size_t m = 0; m < t.size(); ++m) {
        const std::size_t idx = (m + n - c) % n;
        CHECK(std::abs(x.samples[idx] - scale * t[m]) < 1e-12);
    }
}

TEST_CASE("modulate is linear and shift-equivariant")
{
    Rng rng(3);
    SignalSpec spec;
    spec.rrc_span_symbols = 16;
    SymbolFrame a;
    SymbolFrame b;
    a.symbols = testing::random_cvec(rng, 64);
    b.symbols = testing::random_cvec(rng, 64);
    a.power_dbm = b.power_dbm = 30.0 - 10.0 * std::log10(2.0); // sqrt(P * os) = 1 at os = 2
    const cplx ca(0.3, -1.2);
    const cplx cb(-0.7, 0.4);
    SymbolFrame ab = a;
    for (std::size_t i = 0; i < 64; ++i) ab.symbols[i] = ca * a.symbols[i] + cb * b.symbols[i];
    const auto xa = modulate(a, spec, 2);
    const auto xb = modulate(b, spec, 2);
    const auto xab = modulate(ab, spec, 2);
    for (std::size_t i = 0; i < xab.size(); ++i) CHECK(std::abs(xab.samples[i] - (ca * xa.samples[i] + cb * xb.samples[i])) < 1e-12);

    const std::size_t k = 5;
    SymbolFrame sh = a;
    std::rotate(sh.symbols.rbegin(), sh.symbols.rbegin() + k, sh.symbols.rend());
    const auto xs = modulate(sh, spec, 2);
    const std::size_t n = xa.size();
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(xs.samples[(i + 2 * k) % n] - xa.samples[i]) < 1e-12);
}

TEST_CASE("circular_filter adjoint satisfies the inner-product identity")
{
    Rng rng(9);
    for (std::size_t taps : {5U, 31U, 301U}) {
        RVec t(taps);
        for (auto& v : t) v = testing::uniform(rng, -1, 1);
        const CVec x = testing::random_cvec(rng, 128);
        const CVec y = testing::random_cvec(rng, 128);
        const CVec hx = circular_filter(x, t);
        const CVec hty = circular_filter_adjoint(y, t);
        cplx l{};
        cplx r{};
        for (std::size_t i = 0; i < 128; ++i) {
            l += std::conj(y[i]) * hx[i];
            r += std::conj(hty[i]) * x[i];
        }
        CHECK(std::abs(l - r) < 1e-10 * std::abs(l));
    }
}

TEST_CASE("wdm single channel is identity")
{
    Rng rng(1);
    ComplexSignal c{testing::random_cvec(rng, 64), 64e9};
    const auto out = wdm_multiplex(std::span<const ComplexSignal>(&c, 1), 37.5e9, 10e9);
    CHECK(out.samples == c.samples);
}

TEST_CASE("wdm with disjoint spectra preserves energy")
{
    SignalSpec spec;
    spec.baud_rate_hz = 10e9;
    spec.rolloff = 0.1;
    spec.rrc_span_symbols = 32;
    std::vector<ComplexSignal> ch;
    double e = 0.0;
    for (int c = 0; c < 5; ++c) {
        auto f = generate_symbols(256, Modulation::GaussianIid, 100 + c, 0.0);
        ch.push_back(modulate(f, spec, 8));
        e += energy(ch.back().samples);
    }
    const auto out = wdm_multiplex(ch, 15e9, spec.occupied_bandwidth_hz());
    // Truncated pulses leak slightly past the occupied band.
    CHECK(std::abs(energy(out.samples) / e - 1.0) < 1e-5);
}

TEST_CASE("wdm at zero spacing is the plain sum")
{
    Rng rng(2);
    std::vector<ComplexSignal> ch;
    for (int c = 0; c < 3; ++c) ch.push_back({testing::random_cvec(rng, 32), 1.0});
    const auto out = wdm_multiplex(ch, 0.0, 0.1);
    for (std::size_t i = 0; i < 32; ++i) {
        CHECK(std::abs(out.samples[i] - (ch[0].samples[i] + ch[1].samples[i] + ch[2].samples[i])) < 1e-15);
    }
}

TEST_CASE("wdm 5 x 32 GBd at 37.5 GHz on a 10x grid is accepted")
{
    SignalSpec spec;
    spec.baud_rate_hz = 32e9;
    spec.rrc_span_symbols = 16;
    std::vector<ComplexSignal> ch;
    for (int c = 0; c < 5; ++c) ch.push_back(modulate(generate_symbols(64, Modulation::GaussianIid, c), spec, 10));
    CHECK_NOTHROW(wdm_multiplex(ch, 37.5e9, spec.occupied_bandwidth_hz()));
}

TEST_CASE("wdm overflow names the channel")
{
    std::vector<ComplexSignal> ch(5, ComplexSignal{CVec(16), 100e9});
    try {
        wdm_multiplex(ch, 40e9, 20e9);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("channel 0") != std::string::npos);
    }
    std::vector<ComplexSignal> even(4, ComplexSignal{CVec(16), 100e9});
    CHECK_THROWS_AS(wdm_multiplex(even, 1e9, 1e9), ConfigError);
}

TEST_CASE("signal spec validation")
{
    SignalSpec s;
    CHECK_NOTHROW(s.validate());
    s.analog_oversampling = 2;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = SignalSpec{};
    s.baud_rate_hz = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

}
