#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace lsfuse {

// Dense row-major 2-D grid.
template <typename T>
class Image {
public:
    using value_type = T;

    Image() = default;
    Image(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {}
    Image(int rows, int cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != checked_size(rows, cols))
            fail(ErrorKind::validation, "image data size does not match " + std::to_string(rows) + "x" +
                                            std::to_string(cols));
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int r, int c) noexcept { return data_[index(r, c)]; }
    const T& operator()(int r, int c) const noexcept { return data_[index(r, c)]; }

    std::span<T> row(int r) noexcept { return {data_.data() + index(r, 0), static_cast<std::size_t>(cols_)}; }
    std::span<const T> row(int r) const noexcept {
        return {data_.data() + index(r, 0), static_cast<std::size_t>(cols_)};
    }

    std::span<T> pixels() noexcept { return data_; }
    std::span<const T> pixels() const noexcept { return data_; }
    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }

    bool same_shape(const auto& other) const noexcept { return rows_ == other.rows() && cols_ == other.cols(); }

    friend bool operator==(const Image&, const Image&) = default;

private:
    static std::size_t checked_size(int rows, int cols) {
        if (rows < 0 || cols < 0) fail(ErrorKind::validation, "negative image dimensions");
        return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    }
    std::size_t index(int r, int c) const noexcept {
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

// A normalized 2-D grayscale slice, intensities in [0,1].
using Slice = Image<float>;
// Real-valued working plane (transform bands, focus maps, weights).
using Plane = Image<double>;
// Boolean grid stored as bytes; nonzero = foreground.
using Mask = Image<std::uint8_t>;

inline constexpr int min_slice_extent = 4;

inline void require_same_shape(const auto& a, const auto& b, const std::string& what) {
    if (!a.same_shape(b))
        fail(ErrorKind::validation, what + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                        std::to_string(b.cols()) + ")");
}

// Checks the Slice invariants: extent >= 4 per axis, finite values in [0,1].
inline void validate_slice(const Slice& s, const std::string& what = "slice") {
    if (s.rows() < min_slice_extent || s.cols() < min_slice_extent)
        fail(ErrorKind::validation, what + " must be at least 4x4, got " + std::to_string(s.rows()) + "x" +
                                        std::to_string(s.cols()));
    for (float v : s.pixels())
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
            fail(ErrorKind::validation, what + " has values outside [0,1]");
}

// Min-max normalization onto [0,1]. A slice already inside [0,1] is returned
// unchanged; a constant slice outside the range maps to zeros.
template <typename T>
Slice normalize(const Image<T>& img) {
    Slice out(img.rows(), img.cols());
    if (img.empty()) return out;
    auto [lo_it, hi_it] = std::minmax_element(img.pixels().begin(), img.pixels().end());
    const double lo = static_cast<double>(*lo_it);
    const double hi = static_cast<double>(*hi_it);
    auto dst = out.pixels();
    auto src = img.pixels();
    if (lo >= 0.0 && hi <= 1.0) {
        for (std::size_t k = 0; k < src.size(); ++k) dst[k] = static_cast<float>(src[k]);
        return out;
    }
    const double span = hi - lo;
    for (std::size_t k = 0; k < src.size(); ++k)
        dst[k] = span > 0.0 ? static_cast<float>((static_cast<double>(src[k]) - lo) / span) : 0.0f;
    return out;
}

template <typename T>
Image<T> transpose(const Image<T>& img) {
    Image<T> out(img.cols(), img.rows());
    for (int r = 0; r < img.rows(); ++r)
        for (int c = 0; c < img.cols(); ++c) out(c, r) = img(r, c);
    return out;
}

template <typename T>
Image<T> flip_rows(const Image<T>& img) {
    Image<T> out(img.rows(), img.cols());
    for (int r = 0; r < img.rows(); ++r) {
        auto src = img.row(r);
        std::copy(src.begin(), src.end(), out.row(img.rows() - 1 - r).begin());
    }
    return out;
}

template <typename T>
Image<T> pixelwise_max(const Image<T>& a, const Image<T>& b) {
    require_same_shape(a, b, "pixelwise_max");
    Image<T> out(a.rows(), a.cols());
    for (std::size_t k = 0; k < a.size(); ++k) out.pixels()[k] = std::max(a.pixels()[k], b.pixels()[k]);
    return out;
}

template <typename To, typename From>
Image<To> convert(const Image<From>& img) {
    Image<To> out(img.rows(), img.cols());
    for (std::size_t k = 0; k < img.size(); ++k) out.pixels()[k] = static_cast<To>(img.pixels()[k]);
    return out;
}

// Which image axis the light sheet travels along, and where view a's light enters.
enum class IlluminationAxis { rows, cols };
enum class EntrySide { top, bottom };  // for cols: top = left, bottom = right

struct AxisMeta {
    IlluminationAxis axis = IlluminationAxis::rows;
    EntrySide a_side = EntrySide::top;  // view b enters from the opposite side

    friend bool operator==(const AxisMeta&, const AxisMeta&) = default;
};

class Volume {
public:
    Volume() = default;
    explicit Volume(std::vector<Slice> slices, AxisMeta meta = {}) : slices_(std::move(slices)), meta_(meta) {
        for (std::size_t z = 1; z < slices_.size(); ++z)
            if (!slices_[z].same_shape(slices_[0]))
                fail(ErrorKind::validation, "slice " + std::to_string(z) + " has dimensions " +
                                                std::to_string(slices_[z].rows()) + "x" +
                                                std::to_string(slices_[z].cols()) + ", expected " +
                                                std::to_string(slices_[0].rows()) + "x" +
                                                std::to_string(slices_[0].cols()));
    }

    int depth() const noexcept { return static_cast<int>(slices_.size()); }
    int rows() const noexcept { return slices_.empty() ? 0 : slices_[0].rows(); }
    int cols() const noexcept { return slices_.empty() ? 0 : slices_[0].cols(); }
    const Slice& slice(int z) const { return slices_.at(static_cast<std::size_t>(z)); }
    std::span<const Slice> slices() const noexcept { return slices_; }
    const AxisMeta& meta() const noexcept { return meta_; }

    friend bool operator==(const Volume&, const Volume&) = default;

private:
    std::vector<Slice> slices_;
    AxisMeta meta_;
};

// Two registered views of the same sample.
struct ViewPair {
    Volume view_a;
    Volume view_b;
    bool registration_assumed = true;
};

inline void validate_pair(const ViewPair& pair) {
    require(pair.registration_assumed, "view registration is required but not asserted");
    if (pair.view_a.depth() != pair.view_b.depth() || pair.view_a.rows() != pair.view_b.rows() ||
        pair.view_a.cols() != pair.view_b.cols())
        fail(ErrorKind::validation, "view a and view b have different dimensions");
    require(pair.view_a.depth() > 0, "empty view volumes");
}

// Brings a slice into the canonical frame: rows are the illumination axis and
// view a's light enters at row 0.
template <typename T>
Image<T> to_canonical(const Image<T>& img, const AxisMeta& meta) {
    Image<T> out = meta.axis == IlluminationAxis::cols ? transpose(img) : img;
    if (meta.a_side == EntrySide::bottom) out = flip_rows(out);
    return out;
}

template <typename T>
Image<T> from_canonical(const Image<T>& img, const AxisMeta& meta) {
    Image<T> out = meta.a_side == EntrySide::bottom ? flip_rows(img) : img;
    if (meta.axis == IlluminationAxis::cols) out = transpose(out);
    return out;
}

}  // namespace lsfuse
