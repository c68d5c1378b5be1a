#include "ldbp/init.hpp"
#include "ldbp/train.hpp"

#include "support.hpp"

#include <algorithm>

using namespace ldbp;
using namespace ldbp::train;

namespace {

signal::SignalSpec small_spec()
{
    signal::SignalSpec spec;
    spec.baud_rate_hz = 1.0;
    spec.digital_oversampling = 2;
    spec.analog_oversampling = 4;
    spec.rrc_span_symbols = 16;
    return spec;
}

// Example whose received samples are generic complex values at about unit power.
Example random_example(Rng& rng, std::size_t nsym, double power_dbm = 30.0)
{
    Example ex;
    ex.received = testing::random_cvec(rng, 2 * nsym, 1.0);
    ex.symbols = testing::random_cvec(rng, nsym, 1.0);
    ex.power_dbm = power_dbm;
    return ex;
}

struct FdCheck {
    double worst_rel{0.0};
    std::size_t coords{0};
};

// Central differences with step 1e-6; the tolerance floor covers the rounding noise
// eps * |L| / h of the difference quotient itself.
FdCheck finite_difference(const model::LdbpModel& m, const ParamLayout& layout, const Example& ex,
                          const signal::SignalSpec& spec, double h = 1e-6)
{
    const LossGrad lg = example_loss_grad(m, layout, ex, spec);
    const RVec p0 = pack(m, layout);
    const auto trainable = trainable_mask(m, layout);
    FdCheck out;
    const double noise = 100.0 * 2.2e-16 * std::abs(lg.loss) / h;
    for (std::size_t i = 0; i < p0.size(); ++i) {
        if (!trainable[i]) {
            CHECK(lg.grad[i] == 0.0);
            continue;
        }
        RVec p = p0;
        model::LdbpModel mp = m;
        p[i] = p0[i] + h;
        unpack(p, layout, mp);
        const double lp = example_loss(mp, ex, spec);
        p[i] = p0[i] - h;
        unpack(p, layout, mp);
        const double lm = example_loss(mp, ex, spec);
        const double fd = (lp - lm) / (2 * h);
        const double scale = std::max(std::abs(fd), std::abs(lg.grad[i]));
        const double err = std::abs(fd - lg.grad[i]);
        const double rel = err / std::max(scale, 1e-300);
        if (err > noise) out.worst_rel = std::max(out.worst_rel, rel);
        CHECK_MESSAGE((rel <= 1e-5 || err <= noise), "coordinate " << i << " analytic " << lg.grad[i] << " fd " << fd);
        ++out.coords;
    }
    return out;
}

} // namespace

TEST_SUITE("train") {

TEST_CASE("gradient matches central finite differences")
{
    Rng rng(2024);
    const auto spec = small_spec();
    for (int trial = 0; trial < 8; ++trial) {
        const int layers = testing::uniform_int(rng, 2, 4);
        const bool essm = trial % 2 == 1;
        auto m = testing::random_model(rng, layers, essm);
        if (trial == 3) {
            m.layers[0].linear.mask.back() = 0;
            m.layers[0].linear.enforce_mask();
        }
        if (trial == 5) {
            for (auto& l : m.layers) l.nonlinear.eta_half_taps.resize(2, 0.2);
            unpack(pack(m, make_layout(m, true)), make_layout(m, true), m);
        }
        const ParamLayout layout = make_layout(m, trial == 5);
        const Example ex = random_example(rng, 32);
        const FdCheck r = finite_difference(m, layout, ex, spec);
        MESSAGE("trial " << trial << ": " << r.coords << " coordinates, worst relative error " << r.worst_rel);
        CHECK(r.worst_rel <= 1e-5);
    }
}

TEST_CASE("gradient vanishes at an exact inverse")
{
    signal::SignalSpec spec;
    spec.rrc_span_symbols = 64;
    channel::FiberLink link;
    link.num_spans = 1;
    const auto f = signal::generate_symbols(128, signal::Modulation::GaussianIid, 1, 0.0);
    const auto x = signal::modulate(f, spec, spec.digital_oversampling);
    // Received = transmitted; an identity model is then the exact inverse for the symbols
    // recovered by the matched filter, so the loss is at its floor.
    model::LdbpModel m;
    m.sample_rate_hz = spec.digital_rate_hz();
    m.layers.push_back({model::LinearStep::identity(2), model::NonlinearStep::standard(0.0, 1.3, 0.0), 0.0});
    Example ex{x.samples, rx::MatchedFilter(spec, 0.0).apply(x.samples), 0.0};
    const auto layout = make_layout(m);
    const LossGrad lg = example_loss_grad(m, layout, ex, spec);
    CHECK(lg.loss < 1e-20);
    double norm = 0.0;
    for (double g : lg.grad) norm += g * g;
    CHECK(std::sqrt(norm) < 1e-8);
}

TEST_CASE("gamma = 0 single layer gradient equals the linear least-squares gradient")
{
    Rng rng(7);
    const auto spec = small_spec();
    for (int trial = 0; trial < 5; ++trial) {
        const int k = testing::uniform_int(rng, 0, 4);
        model::LdbpModel m;
        m.sample_rate_hz = 1.0;
        m.layers.push_back({testing::random_step(rng, k), model::NonlinearStep::standard(1.0, 0.0, 1.0), 1.0});
        const Example ex = random_example(rng, 24);
        const auto layout = make_layout(m);
        const LossGrad lg = example_loss_grad(m, layout, ex, spec);
        // s_tilde = Phi h with column m of Phi = MF(basis filter m applied to r).
        const rx::MatchedFilter mf(spec, ex.power_dbm);
        const std::size_t nsym = ex.symbols.size();
        std::vector<CVec> phi;
        for (int j = 0; j <= k; ++j) {
            CVec e(static_cast<std::size_t>(k + 1), cplx{});
            e[static_cast<std::size_t>(j)] = 1.0;
            phi.push_back(mf.apply(model::circular_conv_symmetric(ex.received, model::LinearStep::from_half_taps(e))));
        }
        const auto& h = m.layers[0].linear.half_taps;
        CVec st(nsym, cplx{});
        for (int j = 0; j <= k; ++j) {
            for (std::size_t i = 0; i < nsym; ++i) st[i] += phi[static_cast<std::size_t>(j)][i] * h[static_cast<std::size_t>(j)];
        }
        cplx c{};
        for (std::size_t i = 0; i < nsym; ++i) c += std::conj(ex.symbols[i]) * st[i];
        const cplx rot = std::polar(1.0, std::arg(c));
        // 2 dL/dh* = (2/N) Phi^H (Phi h - e^{j phi} s)
        for (int j = 0; j <= k; ++j) {
            cplx g{};
            for (std::size_t i = 0; i < nsym; ++i) g += std::conj(phi[static_cast<std::size_t>(j)][i]) * (st[i] - rot * ex.symbols[i]);
            g *= 2.0 / static_cast<double>(nsym);
            const auto jj = static_cast<std::size_t>(j);
            CHECK(std::abs(lg.grad[2 * jj] - g.real()) <= 1e-9 * std::abs(g));
            CHECK(std::abs(lg.grad[2 * jj + 1] - g.imag()) <= 1e-9 * std::abs(g));
        }
    }
}

TEST_CASE("non-finite activations report the layer")
{
    Rng rng(3);
    auto m = testing::random_model(rng, 3, false);
    m.layers[1].linear.half_taps[0] = std::numeric_limits<double>::infinity();
    const auto layout = make_layout(m);
    try {
        (void)example_loss_grad(m, layout, random_example(rng, 16), small_spec());
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
    }
}

TEST_CASE("batch gradient is the mean and independent of threads")
{
    Rng rng(4);
    const auto m = testing::random_model(rng, 3, true);
    const auto layout = make_layout(m);
    std::vector<Example> batch;
    for (int i = 0; i < 7; ++i) batch.push_back(random_example(rng, 16));
    const auto a = batch_loss_grad(m, layout, batch, small_spec(), 1);
    const auto b = batch_loss_grad(m, layout, batch, small_spec(), 3);
    CHECK(a.loss == b.loss);
    CHECK(a.grad == b.grad);
    RVec mean(layout.size, 0.0);
    double loss = 0.0;
    for (const auto& ex : batch) {
        const auto g = example_loss_grad(m, layout, ex, small_spec());
        loss += g.loss / 7.0;
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += g.grad[i] / 7.0;
    }
    CHECK(a.loss == doctest::Approx(loss).epsilon(1e-13));
    for (std::size_t i = 0; i < mean.size(); ++i) CHECK(a.grad[i] == doctest::Approx(mean[i]).epsilon(1e-12).scale(1e-12));
    CHECK(batch_loss(m, batch, small_spec(), 2) == doctest::Approx(a.loss).epsilon(1e-14));
}

TEST_CASE("pack and unpack round trip, shared eta ties parameters")
{
    Rng rng(5);
    auto m = testing::random_model(rng, 3, true);
    for (auto& l : m.layers) l.nonlinear.eta_half_taps.resize(3, 0.1);
    const auto layout = make_layout(m);
    model::LdbpModel copy = m;
    unpack(pack(m, layout), layout, copy);
    for (std::size_t i = 0; i < 3; ++i) CHECK(copy.layers[i].linear.half_taps == m.layers[i].linear.half_taps);

    const auto shared = make_layout(m, true);
    CHECK(shared.size == layout.size - 2 * 3);
    model::LdbpModel tied = m;
    unpack(pack(m, shared), shared, tied);
    for (std::size_t i = 1; i < 3; ++i) CHECK(tied.layers[i].nonlinear.eta_half_taps == tied.layers[0].nonlinear.eta_half_taps);
}

TEST_CASE("Adam first step moves by the learning rate")
{
    for (double g : {1e-3, 0.5, 7.0}) {
        AdamState s(1);
        RVec p{1.0};
        const RVec gr{g};
        AdamConfig cfg;
        adam_step(s, p, gr, cfg);
        const double d = 1.0 - p[0];
        CHECK(d > 0.0);
        CHECK(d >= 0.999 * cfg.learning_rate);
        CHECK(d <= cfg.learning_rate);
    }
}

TEST_CASE("Adam with zero gradient leaves parameters unchanged")
{
    AdamState s(3);
    RVec p{1.0, -2.0, 0.5};
    const RVec g(3, 0.0);
    for (int i = 0; i < 100; ++i) adam_step(s, p, g, AdamConfig{});
    CHECK(p == RVec{1.0, -2.0, 0.5});
}

TEST_CASE("Adam is deterministic")
{
    auto run = [] {
        Rng rng(8);
        AdamState s(4);
        RVec p(4, 0.0);
        for (int i = 0; i < 50; ++i) {
            RVec g(4);
            for (auto& v : g) v = testing::uniform(rng, -1, 1);
            adam_step(s, p, g, AdamConfig{});
        }
        return p;
    };
    CHECK(run() == run());
}

TEST_CASE("pruning removes the outermost pair")
{
    Rng rng(9);
    model::LdbpModel m;
    m.sample_rate_hz = 1.0;
    m.layers.push_back({testing::random_step(rng, 4), model::NonlinearStep{}, 0.0});
    PruneSchedule s;
    s.target_half_lengths = {3};
    s.events = {{0, 0}};
    s.validate(m);
    const auto layout = make_layout(m);
    AdamState st(layout.size);
    std::fill(st.first_moment.begin(), st.first_moment.end(), 1.0);
    CHECK(prune_apply(m, s, 0, &st, &layout) == 1);
    CHECK(m.layers[0].linear.active_length() == 7);
    CHECK(m.layers[0].linear.half_taps[4] == cplx{});
    CHECK(m.layers[0].linear.mask[4] == 0);
    CHECK(st.first_moment[8] == 0.0);
    CHECK(st.first_moment[9] == 0.0);
    CHECK(st.first_moment[7] == 1.0);
    const CVec f = m.layers[0].linear.full_taps();
    CHECK(f.front() == cplx{});
    CHECK(f.back() == cplx{});
}

TEST_CASE("default schedule: 11 -> 7 taps on 5 layers")
{
    model::LdbpModel m;
    for (int i = 0; i < 5; ++i) m.layers.push_back({model::LinearStep::identity(5), model::NonlinearStep{}, 0.0});
    const auto s = make_prune_schedule(m, {3}, 100);
    CHECK(s.events.size() == 10);
    s.validate(m);
    for (const auto& e : s.events) CHECK(e.iteration < 40);
    // Largest-first round robin: each layer loses one pair before any loses two.
    for (std::size_t i = 0; i < 5; ++i) CHECK(s.events[i].layer == i);
    for (std::size_t i = 5; i < 10; ++i) CHECK(s.events[i].layer == i - 5);

    PruneSchedule none;
    none.target_half_lengths.assign(5, 5);
    model::LdbpModel copy = m;
    for (int t = 0; t < 10; ++t) CHECK(prune_apply(copy, none, t) == 0);
    CHECK(copy.total_taps() == m.total_taps());
}

TEST_CASE("prune schedule validation")
{
    model::LdbpModel m;
    m.layers.push_back({model::LinearStep::identity(3), model::NonlinearStep{}, 0.0});
    PruneSchedule s;
    s.target_half_lengths = {1};
    s.events = {{3, 0}, {3, 0}};
    CHECK_THROWS_AS(s.validate(m), ConfigError);
    s.events = {{3, 0}};
    CHECK_THROWS_AS(s.validate(m), ConfigError);
    CHECK_THROWS_AS(make_prune_schedule(m, {0}, 5), ConfigError);
}

TEST_CASE("masked parameters receive no gradient and never change")
{
    Rng rng(10);
    const auto spec = small_spec();
    auto m = testing::random_model(rng, 2, false);
    for (auto& l : m.layers) l.linear = testing::random_step(rng, 3);
    m.layers[0].linear.mask[3] = 0;
    m.layers[0].linear.enforce_mask();
    const auto layout = make_layout(m);
    AdamState st(layout.size);
    RVec p = pack(m, layout);
    for (int it = 0; it < 5; ++it) {
        const auto lg = example_loss_grad(m, layout, random_example(rng, 16), spec);
        CHECK(lg.grad[6] == 0.0);
        CHECK(lg.grad[7] == 0.0);
        adam_step(st, p, lg.grad, AdamConfig{});
        unpack(p, layout, m);
        CHECK(m.layers[0].linear.half_taps[3] == cplx{});
        CHECK(p[6] == 0.0);
    }
}

Scenario toy_scenario()
{
    Scenario sc;
    sc.link.num_spans = 2;
    sc.link.gamma_per_w_km = 0.0;
    sc.spec.analog_oversampling = 4;
    sc.spec.rrc_span_symbols = 32;
    sc.rx = rx::RxConfig::defaults(sc.spec);
    sc.num_symbols = 64;
    sc.forward_steps_per_span = 2;
    sc.noiseless = true;
    return sc;
}

TEST_CASE("zero iterations leave the model unchanged")
{
    const Scenario sc = toy_scenario();
    init::ModelSpec ms;
    ms.half_lengths = {3};
    const auto m = init::init_model(sc.link, sc.spec.digital_rate_hz(), ms);
    TrainConfig cfg;
    cfg.iterations = 0;
    const auto r = train::train(start_state(m), sc, cfg, PruneSchedule{});
    CHECK(r.history.empty());
    for (std::size_t i = 0; i < m.layers.size(); ++i) CHECK(r.state.model.layers[i].linear.half_taps == m.layers[i].linear.half_taps);
}

TEST_CASE("training a linear toy link reduces the loss")
{
    const Scenario sc = toy_scenario();
    init::ModelSpec ms;
    ms.half_lengths = {2};
    ms.scheme = init::InitScheme::LeastSquares;
    const auto m = init::init_model(sc.link, sc.spec.digital_rate_hz(), ms);
    TrainConfig cfg;
    cfg.iterations = 200;
    cfg.batch_size = 4;
    cfg.power_set_dbm = {0.0};
    cfg.adam.learning_rate = 3e-3;
    const auto r = train::train(start_state(m), sc, cfg, PruneSchedule{});
    REQUIRE(r.history.size() == 200);
    auto median = [](std::vector<double> v) {
        std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
        return v[v.size() / 2];
    };
    std::vector<double> first;
    std::vector<double> last;
    for (int i = 0; i < 50; ++i) first.push_back(r.history[static_cast<std::size_t>(i)].loss);
    for (int i = 150; i < 200; ++i) last.push_back(r.history[static_cast<std::size_t>(i)].loss);
    MESSAGE("median loss first 50: " << median(first) << ", last 50: " << median(last));
    CHECK(median(last) < median(first));
}

TEST_CASE("training is reproducible, thread-independent and resumable")
{
    Scenario sc = toy_scenario();
    sc.link.gamma_per_w_km = 1.3;
    sc.noiseless = false;
    init::ModelSpec ms;
    ms.half_lengths = {3};
    const auto m = init::init_model(sc.link, sc.spec.digital_rate_hz(), ms);
    TrainConfig cfg;
    cfg.iterations = 12;
    cfg.batch_size = 3;
    cfg.power_set_dbm = {0.0, 2.0, 4.0};
    cfg.eval_interval = 5;
    cfg.eval_frames = 2;
    const auto sched = make_prune_schedule(m, {2}, cfg.iterations);
    const auto a = train::train(start_state(m), sc, cfg, sched);
    TrainConfig cfg3 = cfg;
    cfg3.threads = 3;
    const auto b = train::train(start_state(m), sc, cfg3, sched);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].loss == b.history[i].loss);
        CHECK(a.history[i].power_mix_hash == b.history[i].power_mix_hash);
        CHECK(a.history[i].snr_db == b.history[i].snr_db);
    }
    CHECK(a.history[4].snr_db.has_value());
    CHECK_FALSE(a.history[3].snr_db.has_value());
    CHECK(a.state.model.total_taps() < m.total_taps());

    TrainState mid;
    TrainConfig half = cfg;
    half.iterations = 6;
    mid = train::train(start_state(m), sc, half, sched).state;
    const auto resumed = train::train(mid, sc, cfg, sched);
    for (std::size_t i = 0; i < a.state.model.layers.size(); ++i) {
        CHECK(resumed.state.model.layers[i].linear.half_taps == a.state.model.layers[i].linear.half_taps);
    }
    CHECK(resumed.history.back().loss == a.history.back().loss);
}

TEST_CASE("frame pool training is deterministic")
{
    const Scenario sc = toy_scenario();
    init::ModelSpec ms;
    ms.half_lengths = {2};
    const auto m = init::init_model(sc.link, sc.spec.digital_rate_hz(), ms);
    TrainConfig cfg;
    cfg.iterations = 5;
    cfg.batch_size = 4;
    cfg.pool_frames_per_power = 6;
    const auto a = train::train(start_state(m), sc, cfg, PruneSchedule{});
    const auto b = train::train(start_state(m), sc, cfg, PruneSchedule{});
    for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].loss == b.history[i].loss);
}

TEST_CASE("evaluation harness")
{
    Scenario sc = toy_scenario();
    const RVec powers{0.0};
    model::LdbpModel identity;
    identity.sample_rate_hz = sc.spec.digital_rate_hz();
    identity.layers.push_back({model::LinearStep::identity(0), model::NonlinearStep{}, 0.0});
    // Identity model on a noiseless zero-length link gives a capped SNR.
    Scenario empty = sc;
    empty.link.num_spans = 0;
    empty.spec.rrc_span_symbols = 128;
    const auto t = evaluate(identity, empty, powers, 2, 1, 1);
    CHECK(t[0].snr_db >= 60.0);

    const auto a = evaluate(identity, sc, powers, 3, 5, 1);
    const auto b = evaluate(identity, sc, powers, 3, 5, 2);
    CHECK(a[0].snr_db == b[0].snr_db);

    // Linear equalization loses at high power on a nonlinear link.
    Scenario nl = sc;
    nl.link.gamma_per_w_km = 1.3;
    nl.noiseless = false;
    const RVec sweep{-4.0, 8.0};
    const auto res = evaluate_equalizers({cdc_equalizer(nl.link, nl.spec.digital_rate_hz())}, nl, sweep, 4, 3, 1);
    CHECK(res[0][1].snr_db < res[0][0].snr_db);
}

TEST_CASE("loss and SNR agree per frame")
{
    Scenario sc = toy_scenario();
    sc.link.gamma_per_w_km = 1.3;
    sc.noiseless = false;
    init::ModelSpec ms;
    ms.half_lengths = {3};
    const auto m = init::init_model(sc.link, sc.spec.digital_rate_hz(), ms);
    const Example ex = simulate_frame(sc, 2.0, 77);
    const double loss = example_loss(m, ex, sc.spec);
    const auto snr = snr_on(m, std::span<const Example>(&ex, 1), sc.spec, 1);
    CHECK(std::pow(10.0, snr.snr_db / 10.0) == doctest::Approx(1.0 / loss).epsilon(1e-12));
}

TEST_CASE("power mix hash")
{
    const std::vector<std::size_t> a{0, 1, 2};
    const std::vector<std::size_t> b{0, 2, 1};
    CHECK(power_mix_hash(a) != power_mix_hash(b));
    CHECK(power_mix_hash(a) == power_mix_hash(a));
}

}
