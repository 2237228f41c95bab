// Benchmark comparing the OpenMP kernels against the serial references:
// unitary application on a 12-qubit register and the split-sampling Monte
// Carlo. Prints one line per case with both timings and the speedup.

#include <chrono>
#include <cstdio>
#include <vector>

#include <omp.h>

#include "qkd/bounds.hpp"
#include "qkd/qstate.hpp"

using namespace qkd;

namespace {

double now() { return omp_get_wtime(); }

Eigen::MatrixXcd haar_like(std::size_t dim, RngStream& rng) {
    Eigen::MatrixXcd g(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            g(i, j) = cplx{rng.uniform() - 0.5, rng.uniform() - 0.5};
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    return qr.householderQ();
}

void bench_apply(std::size_t nq, std::size_t k, int reps) {
    RngStream rng = derive_stream(1, Role::Sampler);
    const Eigen::MatrixXcd u = haar_like(std::size_t{1} << k, rng);
    std::vector<std::size_t> targets(k);
    for (std::size_t i = 0; i < k; ++i)
        targets[i] = i;

    StateVector st(nq);
    double t0 = now();
    for (int r = 0; r < reps; ++r)
        apply_unitary_inplace(st, u, targets);
    const double omp_s = now() - t0;

    StateVector ref(nq);
    t0 = now();
    for (int r = 0; r < reps; ++r)
        serial::apply_unitary_inplace(ref, u, targets);
    const double ser_s = now() - t0;

    double worst = 0.0;
    for (std::size_t i = 0; i < st.dim(); ++i)
        worst = std::max(worst, std::abs(st.amp(i) - ref.amp(i)));

    std::printf("apply_unitary  %2zu qubits, %zu-qubit gate, %4d reps: omp %8.3f ms  serial %8.3f ms  speedup %5.2fx  max|diff| %.2e\n",
                nq, k, reps, omp_s * 1e3, ser_s * 1e3, ser_s / omp_s, worst);
}

std::size_t sampling_tail_serial(std::size_t n, std::size_t c_weight, double eps,
                                 std::size_t trials, std::uint64_t seed) {
    const double threshold = 0.5 * c_weight + 0.5 * static_cast<double>(n) * eps;
    std::size_t exceed = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        RngStream rng = derive_stream(seed, Role::Sampler, t);
        std::size_t remaining = n, left = 2 * n, info_errors = 0;
        for (std::size_t pos = 0; pos < c_weight && remaining > 0; ++pos) {
            if (rng.below(left) < remaining) {
                ++info_errors;
                --remaining;
            }
            --left;
        }
        exceed += static_cast<double>(info_errors) > threshold;
    }
    return exceed;
}

void bench_sampling(std::size_t n, std::size_t c, double eps, std::size_t trials) {
    double t0 = now();
    const SamplingTail r = sampling_tail_mc(n, c, eps, trials, 7);
    const double omp_s = now() - t0;

    t0 = now();
    const std::size_t serial_count = sampling_tail_serial(n, c, eps, trials, 7);
    const double ser_s = now() - t0;

    std::printf("sampling_tail  n=%zu |c|=%zu eps=%.2f %zu trials: omp %8.3f ms  serial %8.3f ms  speedup %5.2fx  counts %zu/%zu\n",
                n, c, eps, trials, omp_s * 1e3, ser_s * 1e3, ser_s / omp_s, r.exceed_count,
                serial_count);
}

} // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    bench_apply(12, 2, 200);
    bench_apply(12, 4, 100);
    bench_apply(10, 6, 100);
    bench_sampling(100, 40, 0.1, 200000);
    bench_sampling(200, 120, 0.15, 200000);
    return 0;
}
