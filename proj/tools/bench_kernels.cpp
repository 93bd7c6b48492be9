// Compares the OpenMP kernels against their serial references and reports
// throughput. Usage: bench_kernels [batch] [in_dim] [out_dim] [reps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ltv/kernels.hpp"
#include "ltv/matrix.hpp"
#include "ltv/rng.hpp"

using namespace ltv;

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    const auto start = Clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const std::chrono::duration<double, std::milli> d = Clock::now() - start;
    return d.count() / reps;
}

void fill_random(Matrix& m, Rng& rng) {
    for (double& v : m.data) v = rng.normal();
}

}  // namespace

int main(int argc, char** argv) {
    const int b = argc > 1 ? std::atoi(argv[1]) : 4096;
    const int in_dim = argc > 2 ? std::atoi(argv[2]) : 128;
    const int out_dim = argc > 3 ? std::atoi(argv[3]) : 128;
    const int reps = argc > 4 ? std::atoi(argv[4]) : 20;

#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: disabled at build time\n");
#endif
    std::printf("batch=%d in=%d out=%d reps=%d\n\n", b, in_dim, out_dim, reps);

    Rng rng(7);
    Matrix x(b, in_dim), y(b, out_dim), dy(b, out_dim), dx(b, in_dim);
    std::vector<double> w(static_cast<std::size_t>(in_dim) * out_dim);
    std::vector<double> bias(static_cast<std::size_t>(out_dim));
    std::vector<double> dw(w.size()), db(bias.size());
    fill_random(x, rng);
    fill_random(dy, rng);
    for (double& v : w) v = rng.normal();
    for (double& v : bias) v = rng.normal();

    struct Case {
        const char* name;
        std::function<void()> parallel;
        std::function<void()> serial;
    };
    const Case cases[] = {
        {"linear_forward", [&] { kern::linear_forward(x, w, bias, y); },
         [&] { kern::linear_forward_ref(x, w, bias, y); }},
        {"linear_grad_input", [&] { kern::linear_grad_input(dy, w, dx); },
         [&] { kern::linear_grad_input_ref(dy, w, dx); }},
        {"linear_grad_params", [&] { kern::linear_grad_params(x, dy, dw, db); },
         [&] { kern::linear_grad_params_ref(x, dy, dw, db); }},
        {"relu_forward", [&] { kern::relu_forward(x, dx); },
         [&] { kern::relu_forward_ref(x, dx); }},
        {"softmax_rows", [&] { kern::softmax_rows(dy, y); },
         [&] { kern::softmax_rows_ref(dy, y); }},
    };

    std::printf("%-20s %12s %12s %9s\n", "kernel", "serial ms", "openmp ms", "speedup");
    for (const auto& c : cases) {
        const double serial_ms = time_ms(c.serial, reps);
        const double parallel_ms = time_ms(c.parallel, reps);
        std::printf("%-20s %12.3f %12.3f %8.2fx\n", c.name, serial_ms, parallel_ms,
                    serial_ms / parallel_ms);
    }
    return 0;
}
