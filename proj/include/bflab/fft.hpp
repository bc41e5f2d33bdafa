#pragma once

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace bflab {

using cplx = std::complex<double>;

namespace detail {

// FFTW plans are cached per (shape, direction); planning is not thread safe,
// execution with the new-array interface is.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(const std::vector<int>& dims, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(dims, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::size_t total = 1;
        for (int d : dims) total *= static_cast<std::size_t>(d);
        auto* buf = fftw_alloc_complex(total);
        fftw_plan plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), buf, buf, sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buf);
        plans_.emplace(key, plan);
        return plan;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<std::pair<std::vector<int>, int>, fftw_plan> plans_;
};

}  // namespace detail

/// In-place unnormalized multidimensional DFT over a row-major array.
/// `sign = -1` is the forward transform sum_j a_j exp(-2 pi i jk/n).
inline void fft_inplace(std::span<cplx> data, const std::vector<int>& dims, int sign) {
    fftw_plan plan = detail::PlanCache::instance().get(dims, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD);
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, ptr, ptr);
}

inline void fft_forward(std::span<cplx> data, const std::vector<int>& dims) { fft_inplace(data, dims, -1); }

/// Inverse transform including the 1/N normalization.
inline void fft_inverse(std::span<cplx> data, const std::vector<int>& dims) {
    fft_inplace(data, dims, +1);
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= scale;
}

/// FFT-standard integer frequency of index j on an n-point axis: 0..n/2-1, -n/2..-1.
inline int fft_frequency(int j, int n) { return j < n / 2 ? j : j - n; }

}  // namespace bflab
