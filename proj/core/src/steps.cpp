#include "ldbp/steps.hpp"

#include <cmath>

namespace ldbp::init {

RVec log_step_sizes(double span_km, int steps_per_span, double alpha_db_per_km, double adjust)
{
    if (steps_per_span < 1) throw ConfigError("steps per span must be >= 1");
    if (!(span_km > 0.0)) throw ConfigError("span length must be positive");
    const double a = adjust * units::db_per_km_to_neper(alpha_db_per_km);
    if (a == 0.0) return uniform_step_sizes(span_km, steps_per_span);
    const double total = -std::expm1(-a * span_km);
    const int m = steps_per_span;
    RVec forward(static_cast<std::size_t>(m));
    double prev = 0.0;
    for (int k = 1; k <= m; ++k) {
        const double z = (k == m) ? span_km : -std::log1p(-total * k / m) / a;
        forward[static_cast<std::size_t>(k - 1)] = z - prev;
        prev = z;
    }
    return RVec(forward.rbegin(), forward.rend());
}

RVec uniform_step_sizes(double span_km, int steps_per_span)
{
    if (steps_per_span < 1) throw ConfigError("steps per span must be >= 1");
    return RVec(static_cast<std::size_t>(steps_per_span), span_km / steps_per_span);
}

RVec merge_half_steps(std::span<const double> deltas)
{
    if (deltas.empty()) throw ConfigError("merge_half_steps needs at least one step");
    RVec merged;
    merged.reserve(deltas.size() + 1);
    merged.push_back(deltas.front() / 2.0);
    for (std::size_t i = 1; i < deltas.size(); ++i) merged.push_back((deltas[i - 1] + deltas[i]) / 2.0);
    merged.push_back(deltas.back() / 2.0);
    return merged;
}

std::vector<Segment> backprop_segments(double span_km, int num_spans, std::span<const double> span_steps_backprop)
{
    std::vector<Segment> segs;
    segs.reserve(static_cast<std::size_t>(num_spans) * span_steps_backprop.size());
    for (int s = num_spans - 1; s >= 0; --s) {
        double end = (s + 1) * span_km;
        for (double d : span_steps_backprop) {
            segs.push_back({end - d, d});
            end -= d;
        }
    }
    return segs;
}

double effective_length_km(double span_km, double alpha_db_per_km, const Segment& seg)
{
    const double a = units::db_per_km_to_neper(alpha_db_per_km);
    if (a == 0.0) return seg.length_km;
    // Split the segment at span boundaries; within a span the integral is closed-form.
    double z = seg.start_km;
    const double end = seg.start_km + seg.length_km;
    double total = 0.0;
    while (z < end - 1e-12) {
        const double span_index = std::floor(z / span_km + 1e-12);
        const double span_end = (span_index + 1.0) * span_km;
        const double upto = std::min(end, span_end);
        const double local = std::max(0.0, z - span_index * span_km);
        total += std::exp(-a * local) * (-std::expm1(-a * (upto - z))) / a;
        z = upto;
    }
    return total;
}

} // namespace ldbp::init
