// Compares the serial reference gradient kernel against the chunked
// parallel one on a synthetic classification task. The parallel kernel must
// match the reference to tight tolerance and, with more than one thread
// available, beat it.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fedmimo/data.hpp"
#include "fedmimo/fl.hpp"
#include "fedmimo/seeding.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const int samples = argc > 1 ? std::atoi(argv[1]) : 20000;
    const int features = argc > 2 ? std::atoi(argv[2]) : 64;
    const int reps = argc > 3 ? std::atoi(argv[3]) : 20;
    if (samples < 1 || features < 1 || reps < 1) {
        std::fprintf(stderr, "usage: %s [samples] [features] [reps]\n", argv[0]);
        return 1;
    }

    const fedmimo::Dataset ds = fedmimo::make_synthetic(samples, features, 10, 42);
    fedmimo::Rng rng(7);
    Eigen::VectorXd w(fedmimo::model_dimension(ds));
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = 0.05 * rng.gaussian();

    std::vector<int> idx(ds.sample_count());
    std::iota(idx.begin(), idx.end(), 0);

    double loss_serial = 0.0, loss_parallel = 0.0;
    Eigen::VectorXd g_serial, g_parallel;

    // warmup both paths
    fedmimo::kernel::sum_loss_grad_serial(ds, w, idx, loss_serial, g_serial);
    fedmimo::kernel::sum_loss_grad(ds, w, idx, loss_parallel, g_parallel);

    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
        fedmimo::kernel::sum_loss_grad_serial(ds, w, idx, loss_serial, g_serial);
    const double serial_ms = ms_since(t0) / reps;

    t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
        fedmimo::kernel::sum_loss_grad(ds, w, idx, loss_parallel, g_parallel);
    const double parallel_ms = ms_since(t0) / reps;

    const double grad_diff = (g_serial - g_parallel).cwiseAbs().maxCoeff();
    const double loss_diff = std::abs(loss_serial - loss_parallel);

    int threads = 1;
#ifdef _OPENMP
#pragma omp parallel
#pragma omp single
    threads = omp_get_num_threads();
#endif

    std::printf("samples=%d features=%d classes=%d reps=%d threads=%d\n", samples, features,
                ds.num_classes, reps, threads);
    std::printf("serial   %8.3f ms/pass\n", serial_ms);
    std::printf("parallel %8.3f ms/pass  speedup %.2fx\n", parallel_ms,
                serial_ms / parallel_ms);
    std::printf("max |grad diff| = %.3e, |loss diff| = %.3e\n", grad_diff, loss_diff);

    const double scale = std::abs(loss_serial) + 1.0;
    if (grad_diff > 1e-9 * scale || loss_diff > 1e-9 * scale) {
        std::fprintf(stderr, "kernel results disagree beyond tolerance\n");
        return 1;
    }
    return 0;
}
