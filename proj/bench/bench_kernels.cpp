// Serial vs parallel throughput for the two hot kernels: hit counting over
// fresh orbits and stratified tail sampling. The parallel path must agree
// with the serial one bit for bit (block-ordered reduction), so the numbers
// printed here double as a determinism spot check.

#include "expile/empirics.hpp"
#include "expile/examples.hpp"
#include "expile/parallel.hpp"

#include <chrono>
#include <cstdio>

using namespace expile;

namespace {

double seconds(std::chrono::steady_clock::time_point a,
               std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

void bench_ei(const MaximalSetSpec& spec, long long starts) {
    EIConfig cfg;
    cfg.n = 10000;
    cfg.starts = starts;
    cfg.q_n = 3;
    cfg.seed = 7;

    cfg.threads = 1;
    auto t0 = std::chrono::steady_clock::now();
    EIEstimate serial = estimate_extremal_index(spec, cfg);
    auto t1 = std::chrono::steady_clock::now();

    cfg.threads = 0;
    auto t2 = std::chrono::steady_clock::now();
    EIEstimate par = estimate_extremal_index(spec, cfg);
    auto t3 = std::chrono::steady_clock::now();

    double ts = seconds(t0, t1), tp = seconds(t2, t3);
    std::printf("hit-count    %9lld starts  serial %7.3fs  parallel %7.3fs  speedup %5.2fx  %s\n",
                starts, ts, tp, ts / tp,
                serial.hits == par.hits && serial.clean == par.clean ? "match" : "MISMATCH");
}

void bench_tail(const MaximalSetSpec& spec, long long samples) {
    TailConfig cfg;
    cfg.n = 1000;
    cfg.samples = samples;
    cfg.seed = 7;

    cfg.threads = 1;
    auto t0 = std::chrono::steady_clock::now();
    auto serial = tail_check(spec, cfg);
    auto t1 = std::chrono::steady_clock::now();

    cfg.threads = 0;
    auto t2 = std::chrono::steady_clock::now();
    auto par = tail_check(spec, cfg);
    auto t3 = std::chrono::steady_clock::now();

    bool match = serial.size() == par.size();
    for (size_t i = 0; match && i < serial.size(); ++i)
        match = serial[i].n_p_hat == par[i].n_p_hat;

    double ts = seconds(t0, t1), tp = seconds(t2, t3);
    std::printf("tail-sample  %9lld samples serial %7.3fs  parallel %7.3fs  speedup %5.2fx  %s\n",
                samples, ts, tp, ts / tp, match ? "match" : "MISMATCH");
}

} // namespace

int main() {
    std::printf("threads available: %d\n", hardware_threads());
    MaximalSetSpec one = example_spec("ex-3-4");
    MaximalSetSpec two = example_spec("ex-3-10");

    bench_ei(one, 2000000);
    bench_ei(two, 2000000);
    bench_tail(one, 20000000);
    bench_tail(two, 20000000);
    return 0;
}
