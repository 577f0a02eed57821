// Benchmark: OpenMP-parallel contraction-certificate sweep vs the serial
// reference, on the same grid.  The two must produce identical rows; timings
// and speedup are printed.  Usage: bench_grids [grid_n] [repeats]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "blflow/group_rep.hpp"
#include "blflow/params.hpp"
#include "blflow/sections.hpp"

using namespace blflow;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

bool rows_equal(const CertRow& a, const CertRow& b) {
    return a.omega == b.omega && a.excluded == b.excluded && a.e_omega == b.e_omega &&
           a.stable_factor == b.stable_factor && a.unstable_factor == b.unstable_factor &&
           a.return_time == b.return_time && a.word == b.word && a.pass == b.pass;
}

}  // namespace

int main(int argc, char** argv) {
    const int n = argc > 1 ? std::atoi(argv[1]) : 128;
    const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
    const FlowParams P;
    const SectionConfig scfg;
    const ExponentTuple e = default_exponents();
    const std::vector<double> grid = contraction_grid(n, 1e-3);

#ifdef _OPENMP
    std::printf("openmp: %d threads\n", omp_get_max_threads());
#else
    std::printf("openmp: disabled at build time\n");
#endif
    std::printf("grid: %d points on (0,2), %d repeats\n\n", n, repeats);

    double best_par = 1e30, best_ser = 1e30;
    ContractionCertificate par, ser;
    for (int r = 0; r < repeats; ++r) {
        double t0 = now_s();
        par = certify_contraction(grid, 4, e, P, scfg, /*parallel=*/true);
        double t1 = now_s();
        ser = certify_contraction(grid, 4, e, P, scfg, /*parallel=*/false);
        double t2 = now_s();
        best_par = std::min(best_par, t1 - t0);
        best_ser = std::min(best_ser, t2 - t1);
    }

    if (par.rows.size() != ser.rows.size()) {
        std::fprintf(stderr, "FAIL: row counts differ (%zu vs %zu)\n", par.rows.size(),
                     ser.rows.size());
        return 1;
    }
    for (std::size_t k = 0; k < par.rows.size(); ++k) {
        if (!rows_equal(par.rows[k], ser.rows[k])) {
            std::fprintf(stderr, "FAIL: row %zu differs between parallel and serial sweeps\n", k);
            return 1;
        }
    }
    if (!rows_equal(par.limit_row, ser.limit_row) || par.all_pass != ser.all_pass) {
        std::fprintf(stderr, "FAIL: summary differs between parallel and serial sweeps\n");
        return 1;
    }

    std::printf("parallel sweep: %8.3f ms  (best of %d)\n", best_par * 1e3, repeats);
    std::printf("serial sweep:   %8.3f ms  (best of %d)\n", best_ser * 1e3, repeats);
    std::printf("speedup:        %8.2fx\n", best_ser / best_par);
    std::printf("rows: %zu, all identical; certificate %s\n", par.rows.size(),
                par.all_pass ? "PASS" : "FAIL");
    return 0;
}
