// Thin RAII wrapper over FFTW for complex 1-D transforms.
#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace afc::fft {

using cplx = std::complex<double>;

enum class Direction { forward, backward };

namespace detail {

// The FFTW planner is not re-entrant.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
using Buffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline Buffer allocate(std::size_t n) {
    return Buffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

}  // namespace detail

/// Unnormalised DFT. forward: X_k = Σ x_n e^{-2πikn/N}; backward uses e^{+...}.
///
/// Work buffers are always fftw_malloc'd so the chosen codelets, and hence the
/// rounding, never depend on the caller's allocation alignment.
inline std::vector<cplx> transform(std::span<const cplx> input, Direction dir) {
    const std::size_t n = input.size();
    if (n == 0) return {};
    auto in = detail::allocate(n);
    auto out = detail::allocate(n);
    fftw_plan plan;
    {
        std::lock_guard lock(detail::planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(n), in.get(), out.get(),
                                dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                FFTW_ESTIMATE);
    }
    std::copy(input.begin(), input.end(), reinterpret_cast<cplx*>(in.get()));
    fftw_execute(plan);
    std::vector<cplx> result(reinterpret_cast<cplx*>(out.get()),
                             reinterpret_cast<cplx*>(out.get()) + n);
    {
        std::lock_guard lock(detail::planner_mutex());
        fftw_destroy_plan(plan);
    }
    return result;
}

inline std::vector<cplx> forward(std::span<const cplx> x) { return transform(x, Direction::forward); }
inline std::vector<cplx> backward(std::span<const cplx> x) { return transform(x, Direction::backward); }

}  // namespace afc::fft
