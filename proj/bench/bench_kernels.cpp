// Wall-clock comparison of each OpenMP kernel against its serial reference.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "tfqds/channel.hpp"
#include "tfqds/harness.hpp"
#include "tfqds/security.hpp"

using namespace tfqds;

namespace {

double best_of(int reps, const std::function<void()>& f) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

void row(const char* name, double serial, double parallel) {
    std::printf("%-28s %10.4f %10.4f %8.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 3;
    std::printf("threads: %d, best of %d\n", omp_get_max_threads(), reps);
    std::printf("%-28s %10s %10s %9s\n", "kernel", "serial s", "parallel s", "speedup");

    const ValidatedConfig cfg = validate(table1_config(desk_source(100'000'000ULL), 50.0));
    volatile double sink = 0;

    row("expected_cells", best_of(reps, [&] { sink = sink + expected_cells_serial(cfg).d1[0]; }),
        best_of(reps, [&] { sink = sink + expected_cells(cfg).d1[0]; }));
    row("sample_cells", best_of(reps, [&] { sink = sink + sample_cells_serial(cfg, 1).d1[0]; }),
        best_of(reps, [&] { sink = sink + sample_cells(cfg, 1).d1[0]; }));

    const std::size_t windows = 1 << 22;
    const SourceBatch a = emit_pulses(cfg.source(), 1, 0, windows);
    const SourceBatch b = emit_pulses(cfg.source(), 2, 0, windows);
    const DavidOptics optics = david_optics(cfg);
    row("david_measure (4M windows)",
        best_of(reps, [&] { sink = sink + static_cast<double>(david_measure_serial(a.pulses, b.pulses, optics, 3, 0)[0]); }),
        best_of(reps, [&] { sink = sink + static_cast<double>(david_measure(a.pulses, b.pulses, optics, 3, 0)[0]); }));

    const DeviceParams device;
    const SecurityBudget budget;
    row("optimize_parameters 302 km",
        best_of(1, [&] { sink = sink + optimize_parameters_serial(device, 302.0, Scheme::multi_bit, 1e6, budget).best.rate; }),
        best_of(1, [&] { sink = sink + optimize_parameters(device, 302.0, Scheme::multi_bit, 1e6, budget).best.rate; }));
    return 0;
}
