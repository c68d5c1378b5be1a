#include "ldbp/init.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace ldbp::init {

namespace {

using MatR = Eigen::MatrixXd;
using MatC = Eigen::MatrixXcd;

double basis(int m, double w) { return m == 0 ? 1.0 : 2.0 * std::cos(m * w); }

struct GridSplit {
    RVec inband;
    RVec outband;
};

GridSplit split_grid(const RVec& omegas, double band_fraction)
{
    GridSplit g;
    for (double w : omegas) {
        if (std::abs(w) / (2.0 * kPi) <= band_fraction + 1e-12) {
            g.inband.push_back(w);
        } else {
            g.outband.push_back(w);
        }
    }
    return g;
}

// Real and imaginary parts decouple because the half-tap basis is real.
CVec solve_penalized(const RVec& inband, const CVec& target, const RVec& outband, double penalty, int k)
{
    const auto cols = static_cast<Eigen::Index>(k + 1);
    const bool with_oob = penalty > 0.0 && !outband.empty();
    const auto rows = static_cast<Eigen::Index>(inband.size() + (with_oob ? outband.size() : 0));
    MatR a(rows, cols);
    MatR rhs = MatR::Zero(rows, 2);
    for (std::size_t i = 0; i < inband.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (int m = 0; m <= k; ++m) a(r, m) = basis(m, inband[i]);
        rhs(r, 0) = target[i].real();
        rhs(r, 1) = target[i].imag();
    }
    if (with_oob) {
        const double w = std::sqrt(penalty);
        for (std::size_t i = 0; i < outband.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(inband.size() + i);
            for (int m = 0; m <= k; ++m) a(r, m) = w * basis(m, outband[i]);
        }
    }
    const MatR sol = a.completeOrthogonalDecomposition().solve(rhs);
    CVec h(static_cast<std::size_t>(k + 1));
    for (int m = 0; m <= k; ++m) h[static_cast<std::size_t>(m)] = cplx(sol(m, 0), sol(m, 1));
    return h;
}

cplx response(const CVec& h, double w)
{
    cplx acc{};
    for (std::size_t m = 0; m < h.size(); ++m) acc += basis(static_cast<int>(m), w) * h[m];
    return acc;
}

} // namespace

RVec design_grid(int num_freq_points)
{
    if (num_freq_points < 2 || num_freq_points % 2 != 0) throw ConfigError("grid size must be even and >= 2");
    RVec w;
    w.reserve(static_cast<std::size_t>(num_freq_points + 1));
    for (int i = -num_freq_points / 2; i <= num_freq_points / 2; ++i) w.push_back(2.0 * kPi * i / num_freq_points);
    return w;
}

int default_grid_size(int half_length) { return std::max(256, 8 * (2 * half_length + 1)); }

CVec ideal_inverse_cd(double delta_km, double beta2_ps2_per_km, double sample_rate_hz, std::span<const double> omegas)
{
    const double xi = -units::ps2_to_s2(beta2_ps2_per_km) * delta_km * sample_rate_hz * sample_rate_hz / 2.0;
    CVec d(omegas.size());
    for (std::size_t i = 0; i < omegas.size(); ++i) d[i] = std::polar(1.0, xi * omegas[i] * omegas[i]);
    return d;
}

void LsFitConfig::validate(int half_length) const
{
    if (half_length < 0) throw ConfigError("half length must be >= 0");
    if (num_freq_points != 0 && num_freq_points < 4 * (2 * half_length + 1)) {
        throw ConfigError("LS grid must have at least 4x the filter length");
    }
    if (!(signal_band_fraction > 0.0 && signal_band_fraction <= 0.5)) {
        throw ConfigError("signal band fraction must lie in (0, 0.5]");
    }
    if (!(max_oob_gain > 0.0)) throw ConfigError("out-of-band cap must be positive");
    if (!(initial_penalty > 0.0) || max_rounds < 0) throw ConfigError("invalid penalty schedule");
}

LsFitConfig LsFitConfig::for_signal(const signal::SignalSpec& spec, int oversampling)
{
    LsFitConfig c;
    c.signal_band_fraction = std::min(0.5, (1.0 + spec.rolloff) / 2.0 / oversampling);
    return c;
}

LsFitResult ls_fit_filter(const std::function<cplx(double)>& target, int half_length, const LsFitConfig& config)
{
    config.validate(half_length);
    const int n = config.num_freq_points > 0 ? config.num_freq_points : default_grid_size(half_length);
    const GridSplit g = split_grid(design_grid(n), config.signal_band_fraction);
    CVec d(g.inband.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = target(g.inband[i]);

    auto oob_peak = [&](const CVec& h) {
        double peak = 0.0;
        for (double w : g.outband) peak = std::max(peak, std::abs(response(h, w)));
        return peak;
    };

    LsFitResult res;
    CVec h = solve_penalized(g.inband, d, g.outband, 0.0, half_length);
    double peak = oob_peak(h);
    const bool capped = std::isfinite(config.max_oob_gain);
    double penalty = config.initial_penalty;
    while (capped && peak > config.max_oob_gain && res.rounds < config.max_rounds) {
        h = solve_penalized(g.inband, d, g.outband, penalty, half_length);
        peak = oob_peak(h);
        penalty *= 10.0;
        ++res.rounds;
    }
    res.cap_satisfied = !capped || peak <= config.max_oob_gain;
    res.max_oob_gain = peak;
    for (std::size_t i = 0; i < d.size(); ++i) {
        res.max_inband_error = std::max(res.max_inband_error, std::abs(response(h, g.inband[i]) - d[i]));
    }
    res.step = LinearStep::from_half_taps(std::move(h));
    return res;
}

LsFitResult ls_fit_inverse_cd(double delta_km, double beta2_ps2_per_km, double sample_rate_hz, int half_length,
                              const LsFitConfig& config)
{
    const double xi = -units::ps2_to_s2(beta2_ps2_per_km) * delta_km * sample_rate_hz * sample_rate_hz / 2.0;
    return ls_fit_filter([xi](double w) { return std::polar(1.0, xi * w * w); }, half_length, config);
}

namespace {

struct Window {
    std::size_t first;
    std::size_t count;
    double weight;
};

std::vector<Window> windows(std::size_t layers, const RVec& weights)
{
    std::vector<Window> out;
    for (std::size_t len = 1; len <= std::min(layers, weights.size()); ++len) {
        const double lam = weights[len - 1];
        if (lam < 0.0) throw ConfigError("multi-objective weights must be >= 0");
        if (lam == 0.0) continue;
        for (std::size_t f = 0; f + len <= layers; ++f) out.push_back({f, len, lam});
    }
    if (out.empty()) throw ConfigError("multi-objective design needs at least one positive weight");
    return out;
}

struct Design {
    RVec inband;
    std::vector<CVec> responses; // per layer, on the in-band grid
    std::vector<double> xi;      // per layer
};

Design make_design(const LdbpModel& m, const MultiObjectiveConfig& cfg)
{
    int kmax = 0;
    for (const auto& l : m.layers) kmax = std::max(kmax, l.linear.half_length());
    cfg.ls.validate(kmax);
    const int n = cfg.ls.num_freq_points > 0 ? cfg.ls.num_freq_points : default_grid_size(kmax);
    Design d;
    d.inband = split_grid(design_grid(n), cfg.ls.signal_band_fraction).inband;
    const double fs2 = m.sample_rate_hz * m.sample_rate_hz;
    for (const auto& l : m.layers) {
        d.responses.push_back(model::symmetric_response(l.linear, d.inband));
        d.xi.push_back(-units::ps2_to_s2(cfg.beta2_ps2_per_km) * l.cd_length_km * fs2 / 2.0);
    }
    return d;
}

double objective(const Design& d, const std::vector<Window>& ws)
{
    double total = 0.0;
    for (const auto& w : ws) {
        double xi = 0.0;
        for (std::size_t i = w.first; i < w.first + w.count; ++i) xi += d.xi[i];
        double e = 0.0;
        for (std::size_t p = 0; p < d.inband.size(); ++p) {
            cplx prod = 1.0;
            for (std::size_t i = w.first; i < w.first + w.count; ++i) prod *= d.responses[i][p];
            e += std::norm(prod - std::polar(1.0, xi * d.inband[p] * d.inband[p]));
        }
        total += w.weight * e;
    }
    return total;
}

} // namespace

double multiobjective_value(const LdbpModel& model, const MultiObjectiveConfig& config)
{
    const auto ws = windows(model.layers.size(), config.weights);
    return objective(make_design(model, config), ws);
}

MultiObjectiveResult multiobjective_ls(const LdbpModel& model, const MultiObjectiveConfig& config)
{
    model.validate();
    if (config.max_sweeps < 0) throw ConfigError("max_sweeps must be >= 0");
    const auto ws = windows(model.layers.size(), config.weights);
    Design d = make_design(model, config);
    MultiObjectiveResult res;
    res.model = model;
    res.objective_history.push_back(objective(d, ws));
    const auto np = static_cast<Eigen::Index>(d.inband.size());

    for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
        for (std::size_t p = 0; p < model.layers.size(); ++p) {
            auto& step = res.model.layers[p].linear;
            const int k = step.active_half_length();
            std::vector<Window> mine;
            for (const auto& w : ws) {
                if (p >= w.first && p < w.first + w.count) mine.push_back(w);
            }
            if (mine.empty()) continue;
            const auto cols = static_cast<Eigen::Index>(k + 1);
            MatC a(static_cast<Eigen::Index>(mine.size()) * np, cols);
            Eigen::VectorXcd rhs(a.rows());
            for (std::size_t wi = 0; wi < mine.size(); ++wi) {
                const auto& w = mine[wi];
                double xi = 0.0;
                for (std::size_t i = w.first; i < w.first + w.count; ++i) xi += d.xi[i];
                const double sw = std::sqrt(w.weight);
                for (Eigen::Index q = 0; q < np; ++q) {
                    const auto qi = static_cast<std::size_t>(q);
                    cplx others = 1.0;
                    for (std::size_t i = w.first; i < w.first + w.count; ++i) {
                        if (i != p) others *= d.responses[i][qi];
                    }
                    const Eigen::Index r = static_cast<Eigen::Index>(wi) * np + q;
                    for (int m = 0; m <= k; ++m) a(r, m) = sw * others * basis(m, d.inband[qi]);
                    rhs(r) = sw * std::polar(1.0, xi * d.inband[qi] * d.inband[qi]);
                }
            }
            auto cod = a.completeOrthogonalDecomposition();
            Eigen::VectorXcd sol;
            if (cod.rank() < cols) {
                MatC ar(a.rows() + cols, cols);
                ar << a, std::sqrt(config.ridge) * MatC::Identity(cols, cols);
                Eigen::VectorXcd br(ar.rows());
                br << rhs, Eigen::VectorXcd::Zero(cols);
                sol = ar.colPivHouseholderQr().solve(br);
                res.ridge_used = true;
            } else {
                sol = cod.solve(rhs);
            }
            for (int m = 0; m <= k; ++m) step.half_taps[static_cast<std::size_t>(m)] = sol(m);
            step.enforce_mask();
            d.responses[p] = model::symmetric_response(step, d.inband);
        }
        res.objective_history.push_back(objective(d, ws));
        ++res.sweeps;
        const double prev = res.objective_history[res.objective_history.size() - 2];
        if (prev - res.objective_history.back() < config.tol) break;
    }
    return res;
}

std::vector<CVec> factor_filter(std::span<const cplx> taps)
{
    const std::size_t t = taps.size();
    if (t < 3 || t % 2 == 0) throw ConfigError("factor_filter needs an odd length >= 3");
    for (std::size_t i = 0; i < t / 2; ++i) {
        if (std::abs(taps[i] - taps[t - 1 - i]) > 1e-12 * (std::abs(taps[i]) + std::abs(taps[t - 1 - i]) + 1e-300)) {
            throw ConfigError("factor_filter needs a symmetric filter");
        }
    }
    std::size_t lead = 0;
    while (lead < t / 2 && taps[lead] == cplx{}) ++lead;
    if (taps[lead] == cplx{}) throw ConfigError("factor_filter: all-zero filter");
    const std::span<const cplx> core = taps.subspan(lead, t - 2 * lead);
    const std::size_t deg = core.size() - 1; // even

    std::vector<CVec> factors;
    if (deg > 0) {
        // Palindromic polynomial: roots come in (q, 1/q) pairs, each giving w^2 + b w + 1.
        const auto d = static_cast<Eigen::Index>(deg);
        MatC comp = MatC::Zero(d, d);
        for (Eigen::Index i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
        for (Eigen::Index i = 0; i < d; ++i) comp(i, d - 1) = -core[static_cast<std::size_t>(i)] / core[deg];
        Eigen::ComplexEigenSolver<MatC> es(comp, false);
        if (es.info() != Eigen::Success) throw NumericalError("factor_filter: root finding failed");
        std::vector<cplx> roots(es.eigenvalues().data(), es.eigenvalues().data() + d);
        std::vector<bool> used(roots.size(), false);
        const std::size_t nf = deg / 2;
        const cplx gain = std::pow(core[deg], 1.0 / static_cast<double>(nf));
        for (std::size_t i = 0; i < roots.size(); ++i) {
            if (used[i]) continue;
            used[i] = true;
            std::size_t best = roots.size();
            double bestd = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < roots.size(); ++j) {
                if (used[j]) continue;
                const double dist = std::abs(roots[j] * roots[i] - 1.0);
                if (dist < bestd) {
                    bestd = dist;
                    best = j;
                }
            }
            if (best == roots.size()) throw NumericalError("factor_filter: unpaired root");
            used[best] = true;
            const cplx q = roots[i];
            const cplx r = roots[best];
            const cplx b = -((q + 1.0 / q) + (r + 1.0 / r)) / 2.0;
            factors.push_back({gain, gain * b, gain});
        }
    }
    for (std::size_t i = 0; i < lead; ++i) factors.push_back({0.0, 1.0, 0.0});
    if (deg == 0) {
        // Lone center tap surrounded by zeros: put its gain on the first unit factor.
        for (auto& v : factors.front()) v *= core[0];
    }

    CVec prod{1.0};
    for (const auto& f : factors) {
        CVec next(prod.size() + 2, cplx{});
        for (std::size_t i = 0; i < prod.size(); ++i) {
            for (std::size_t j = 0; j < 3; ++j) next[i + j] += prod[i] * f[j];
        }
        prod = std::move(next);
    }
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
        err += std::norm(prod[i] - taps[i]);
        ref += std::norm(taps[i]);
    }
    if (std::sqrt(err / ref) > 1e-6) throw NumericalError("factor_filter: factored cascade does not reproduce the filter");
    return factors;
}

double cd_memory_taps(double beta2_ps2_per_km, double bandwidth_hz, double length_km, double sample_rate_hz)
{
    return std::abs(2.0 * kPi * units::ps2_to_s2(beta2_ps2_per_km) * bandwidth_hz * length_km * sample_rate_hz);
}

} // namespace ldbp::init
