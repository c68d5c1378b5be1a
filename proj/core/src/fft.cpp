#include "ldbp/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace ldbp::fft {

namespace {

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// The FFTW planner is not thread-safe; execution of an existing plan is.
// FFTW_ESTIMATE keeps the chosen algorithm (and hence rounding) fixed run to run.
fftw_plan plan_for(std::size_t n, int sign)
{
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, int>, Plan> cache;
    std::lock_guard lock(mutex);
    auto key = std::make_pair(n, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second.get();
    std::vector<cplx> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw NumericalError("FFTW planning failed");
    cache.emplace(key, Plan(p));
    return p;
}

void execute(std::span<cplx> x, int sign)
{
    if (x.empty()) return;
    auto* buf = reinterpret_cast<fftw_complex*>(x.data());
    fftw_execute_dft(plan_for(x.size(), sign), buf, buf);
}

} // namespace

void forward_inplace(std::span<cplx> x) { execute(x, FFTW_FORWARD); }

void inverse_inplace(std::span<cplx> x)
{
    execute(x, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(x.size());
    for (auto& v : x) v *= scale;
}

CVec forward(std::span<const cplx> x)
{
    CVec out(x.begin(), x.end());
    forward_inplace(out);
    return out;
}

CVec inverse(std::span<const cplx> x)
{
    CVec out(x.begin(), x.end());
    inverse_inplace(out);
    return out;
}

} // namespace ldbp::fft
