#include "ldbp/train.hpp"

namespace ldbp::train {

void Scenario::validate() const
{
    link.validate();
    spec.validate();
    rx.validate(spec.analog_rate_hz());
    if (rx.digital_oversampling != spec.digital_oversampling) {
        throw ConfigError("rx digital_oversampling must match the signal spec");
    }
    if (spec.analog_oversampling % spec.digital_oversampling != 0) {
        throw ConfigError("analog_oversampling must be a multiple of digital_oversampling");
    }
    if (num_symbols < 1) throw ConfigError("num_symbols must be >= 1");
    if (forward_steps_per_span < 1) throw ConfigError("forward_steps_per_span must be >= 1");
    if (wdm_channels < 1 || wdm_channels % 2 == 0) throw ConfigError("wdm_channels must be odd and >= 1");
}

Example simulate_frame(const Scenario& sc, double power_dbm, std::uint64_t seed)
{
    std::vector<signal::ComplexSignal> tx;
    CVec center_symbols;
    for (int c = 0; c < sc.wdm_channels; ++c) {
        const auto frame = signal::generate_symbols(sc.num_symbols, sc.modulation,
                                                    derive_seed(seed, "symbols", static_cast<std::uint64_t>(c)), power_dbm);
        if (c == sc.wdm_channels / 2) center_symbols = frame.symbols;
        tx.push_back(signal::modulate(frame, sc.spec, sc.spec.analog_oversampling));
    }
    const signal::ComplexSignal x =
        sc.wdm_channels == 1 ? tx.front() : signal::wdm_multiplex(tx, sc.wdm_spacing_hz, sc.spec.occupied_bandwidth_hz());
    const auto y = channel::propagate_link(x, sc.link, sc.forward_steps_per_span, derive_seed(seed, "noise"), sc.noiseless,
                                           sc.forward_sizing);
    Example ex;
    ex.received = rx::lowpass_downsample(y, sc.rx, sc.spec.baud_rate_hz).samples;
    ex.symbols = std::move(center_symbols);
    ex.power_dbm = power_dbm;
    return ex;
}

} // namespace ldbp::train
