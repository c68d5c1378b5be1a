#pragma once

// Split-step partitions of a fiber span and half-step merging.

#include "ldbp/common.hpp"

namespace ldbp::init {

/// Logarithmic step lengths for one span: every step carries an equal share of the
/// adjusted effective length 1 - exp(-adjust*alpha*z). Backprop order (largest first).
/// adjust*alpha == 0 yields uniform steps.
RVec log_step_sizes(double span_km, int steps_per_span, double alpha_db_per_km, double adjust = 0.4);

RVec uniform_step_sizes(double span_km, int steps_per_span);

/// (d_1/2, (d_1+d_2)/2, ..., d_M/2) for the symmetric split-step layout.
RVec merge_half_steps(std::span<const double> deltas);

struct StepPlan {
    RVec deltas_km; // per SSM step, whole link, backprop order
    RVec merged_km; // after half-step merging (symmetric layout only; else empty)
};

/// A step of the link in forward coordinates (distance from the transmitter).
struct Segment {
    double start_km{0.0};
    double length_km{0.0};
};

/// Segments of the whole link visited in backprop order (receiver end first).
std::vector<Segment> backprop_segments(double span_km, int num_spans, std::span<const double> span_steps_backprop);

/// Integral of exp(-alpha (z mod span)) over [start, start + length] in km; the loss-aware
/// Kerr length of a segment for a signal normalized to launch power.
double effective_length_km(double span_km, double alpha_db_per_km, const Segment& seg);

} // namespace ldbp::init
