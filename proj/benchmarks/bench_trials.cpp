// Wall-clock comparison of the serial reference engine against the OpenMP
// engine on the trial workloads that dominate the verification suites. Both
// engines must produce identical reports; this binary reports the speedup.

#include "finmark/verify.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>
#include <string>

namespace
{
    double now_seconds()
    {
#ifdef _OPENMP
        return omp_get_wtime();
#else
        return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
#endif
    }

    template <typename Fn>
    void bench(const char *name, Fn &&fn)
    {
        const double t0 = now_seconds();
        const finmark::TestEntry serial = fn(finmark::ExecPolicy::serial);
        const double t1 = now_seconds();
        const finmark::TestEntry parallel = fn(finmark::ExecPolicy::parallel);
        const double t2 = now_seconds();
        const bool same = serial.pass == parallel.pass && serial.details == parallel.details;
        std::printf("%-28s serial %8.2fs  parallel %8.2fs  speedup %4.2fx  %s\n", name, t1 - t0,
                    t2 - t1, (t1 - t0) / (t2 - t1 > 0 ? t2 - t1 : 1e-9),
                    same ? "reports identical" : "REPORTS DIFFER");
    }
}

int main()
{
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled\n");
#endif
    finmark::TrialPlan plan;
    plan.trials = 24;
    plan.window_cells = 4000;

    bench("round trip", [&](finmark::ExecPolicy p)
          { return finmark::check_round_trip(plan, 64, p); });
    bench("special offsets (4k)", [&](finmark::ExecPolicy p)
          { return finmark::stat_special_offsets(plan, 4000, p); });
    bench("sampler counts (4k)", [&](finmark::ExecPolicy p)
          { return finmark::stat_sampler_counts(plan, 4000, p); });
    finmark::TrialPlan marks = plan;
    marks.mark_precision = 4096;
    bench("psi marks (1.5k specials)", [&](finmark::ExecPolicy p)
          { return finmark::stat_psi_distribution(marks, 1500, p); });
    return 0;
}
