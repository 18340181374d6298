#pragma once

// Thin RAII layer over FFTW's real 2-D transforms. Planning is serialized
// (FFTW's planner is not thread-safe); execution through the new-array API is.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>

#include "errors.hpp"
#include "image.hpp"

namespace lsfuse::fft {

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

template <typename T>
struct FftwDeleter {
    void operator()(T* p) const noexcept { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter<T>>;

template <typename T>
FftwBuffer<T> fftw_alloc(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (!p) fail(ErrorKind::internal, "fftw_malloc failed");
    return FftwBuffer<T>(p);
}

// Periodic (circular) filtering of real M x N planes by real-valued transfer
// functions sampled on the r2c half spectrum (M rows x N/2+1 cols).
class RealFft2d {
public:
    RealFft2d(int rows, int cols)
        : rows_(rows), cols_(cols), half_cols_(cols / 2 + 1),
          real_(fftw_alloc<double>(static_cast<std::size_t>(rows) * cols)),
          spec_(fftw_alloc<fftw_complex>(static_cast<std::size_t>(rows) * half_cols_)) {
        std::lock_guard lock(planner_mutex());
        forward_ = fftw_plan_dft_r2c_2d(rows, cols, real_.get(), spec_.get(), FFTW_ESTIMATE);
        inverse_ = fftw_plan_dft_c2r_2d(rows, cols, spec_.get(), real_.get(), FFTW_ESTIMATE);
        if (!forward_ || !inverse_) fail(ErrorKind::internal, "FFTW planning failed");
    }
    RealFft2d(const RealFft2d&) = delete;
    RealFft2d& operator=(const RealFft2d&) = delete;
    ~RealFft2d() {
        std::lock_guard lock(planner_mutex());
        if (forward_) fftw_destroy_plan(forward_);
        if (inverse_) fftw_destroy_plan(inverse_);
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    int half_cols() const noexcept { return half_cols_; }
    std::size_t spectrum_size() const noexcept { return static_cast<std::size_t>(rows_) * half_cols_; }

    // Spectrum of `img` (unnormalized).
    std::vector<std::complex<double>> forward(const Plane& img) {
        std::copy(img.pixels().begin(), img.pixels().end(), real_.get());
        fftw_execute_dft_r2c(forward_, real_.get(), spec_.get());
        std::vector<std::complex<double>> out(spectrum_size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = {spec_[k][0], spec_[k][1]};
        return out;
    }

    // Inverse transform of spectrum * weights, scaled so forward/inverse is identity.
    Plane inverse_weighted(const std::vector<std::complex<double>>& spectrum, std::span<const double> weights) {
        const double scale = 1.0 / (static_cast<double>(rows_) * cols_);
        for (std::size_t k = 0; k < spectrum.size(); ++k) {
            const double w = weights[k] * scale;
            spec_[k][0] = spectrum[k].real() * w;
            spec_[k][1] = spectrum[k].imag() * w;
        }
        fftw_execute_dft_c2r(inverse_, spec_.get(), real_.get());
        Plane out(rows_, cols_);
        std::copy(real_.get(), real_.get() + out.size(), out.data());
        return out;
    }

private:
    int rows_, cols_, half_cols_;
    FftwBuffer<double> real_;
    FftwBuffer<fftw_complex> spec_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

}  // namespace lsfuse::fft
