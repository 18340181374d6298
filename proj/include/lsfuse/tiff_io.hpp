#pragma once

// Multi-page grayscale TIFF stack I/O on top of libtiff.

#include <tiffio.h>

#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "image.hpp"

namespace lsfuse {

enum class BitDepth { u8, u16, f32 };

inline BitDepth parse_bit_depth(const std::string& s) {
    if (s == "8") return BitDepth::u8;
    if (s == "16") return BitDepth::u16;
    if (s == "32f" || s == "32") return BitDepth::f32;
    fail(ErrorKind::validation, "invalid bit depth '" + s + "' (expected 8, 16 or 32f)");
}

inline std::string to_string(BitDepth d) {
    switch (d) {
        case BitDepth::u8: return "8";
        case BitDepth::u16: return "16";
        case BitDepth::f32: return "32f";
    }
    return "?";
}

enum class Compression { none, deflate };

namespace detail {

inline thread_local std::string tiff_last_error;

inline void tiff_error_handler(const char* module, const char* fmt, va_list ap) {
    char buf[512];
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    tiff_last_error = (module ? std::string(module) + ": " : std::string()) + buf;
}

inline void install_tiff_handlers() {
    static const bool once = [] {
        TIFFSetErrorHandler(tiff_error_handler);
        TIFFSetWarningHandler(nullptr);
        return true;
    }();
    (void)once;
}

struct TiffCloser {
    void operator()(TIFF* t) const noexcept {
        if (t) TIFFClose(t);
    }
};
using TiffHandle = std::unique_ptr<TIFF, TiffCloser>;

inline std::string page_prefix(const std::string& path, int page) {
    return path + " page " + std::to_string(page) + ": ";
}

}  // namespace detail

// Reads a single- or multi-page grayscale TIFF. Integer pages are divided by the
// type maximum (or by 2^bit_depth_hint - 1 when a hint is given, e.g. 12-bit data
// in a 16-bit container). Float volumes are kept as-is when already inside
// [0,1], otherwise min-max normalized over the whole volume.
inline Volume load_stack(const std::string& path, std::optional<int> bit_depth_hint = std::nullopt) {
    detail::install_tiff_handlers();
    detail::tiff_last_error.clear();
    detail::TiffHandle tif(TIFFOpen(path.c_str(), "r"));
    if (!tif) fail(ErrorKind::io, "cannot open TIFF '" + path + "': " + detail::tiff_last_error);

    std::vector<Plane> raw;
    bool is_float = false;
    int page = 0;
    do {
        const std::string where = detail::page_prefix(path, page);
        std::uint32_t width = 0, height = 0;
        std::uint16_t bits = 0, spp = 1, photometric = PHOTOMETRIC_MINISBLACK, format = SAMPLEFORMAT_UINT;
        TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &width);
        TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &height);
        TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bits);
        TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
        TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &format);
        if (!TIFFGetField(tif.get(), TIFFTAG_PHOTOMETRIC, &photometric)) photometric = PHOTOMETRIC_MINISBLACK;

        if (photometric == PHOTOMETRIC_PALETTE) fail(ErrorKind::io, where + "palette TIFF is not supported");
        if (spp != 1 || photometric == PHOTOMETRIC_RGB) fail(ErrorKind::io, where + "RGB/multi-sample TIFF is not supported");
        if (TIFFIsTiled(tif.get())) fail(ErrorKind::io, where + "tiled TIFF is not supported");

        const bool page_float = format == SAMPLEFORMAT_IEEEFP;
        if (page_float && bits != 32) fail(ErrorKind::io, where + "only 32-bit float samples are supported");
        if (!page_float && (format != SAMPLEFORMAT_UINT || (bits != 8 && bits != 16)))
            fail(ErrorKind::io, where + "unsupported sample type (" + std::to_string(bits) + "-bit)");
        if (page > 0 && page_float != is_float) fail(ErrorKind::io, where + "mixed sample formats in one stack");
        is_float = page_float;
        if (!raw.empty() && (static_cast<int>(width) != raw.front().cols() ||
                             static_cast<int>(height) != raw.front().rows()))
            fail(ErrorKind::io, where + "dimensions " + std::to_string(height) + "x" + std::to_string(width) +
                                    " differ from page 0 (" + std::to_string(raw.front().rows()) + "x" +
                                    std::to_string(raw.front().cols()) + ")");

        Plane plane(static_cast<int>(height), static_cast<int>(width));
        std::vector<unsigned char> line(static_cast<std::size_t>(TIFFScanlineSize(tif.get())));
        double scale = 1.0;
        if (!page_float) {
            const int eff_bits = bit_depth_hint.value_or(bits);
            if (eff_bits < 1 || eff_bits > bits)
                fail(ErrorKind::validation, where + "bit depth hint " + std::to_string(eff_bits) + " exceeds " +
                                                std::to_string(bits) + "-bit container");
            scale = 1.0 / (std::ldexp(1.0, eff_bits) - 1.0);
        }
        for (std::uint32_t r = 0; r < height; ++r) {
            if (TIFFReadScanline(tif.get(), line.data(), r) < 0)
                fail(ErrorKind::io, where + "read error at row " + std::to_string(r) + ": " + detail::tiff_last_error);
            auto dst = plane.row(static_cast<int>(r));
            for (std::uint32_t c = 0; c < width; ++c) {
                double v = 0.0;
                if (page_float) {
                    float f;
                    std::memcpy(&f, line.data() + 4 * c, 4);
                    v = f;
                } else if (bits == 8) {
                    v = line[c] * scale;
                } else {
                    std::uint16_t u;
                    std::memcpy(&u, line.data() + 2 * c, 2);
                    v = u * scale;
                }
                dst[c] = v;
            }
        }
        if (!page_float && bit_depth_hint)
            for (double& v : plane.pixels()) v = std::min(v, 1.0);
        raw.push_back(std::move(plane));
        ++page;
    } while (TIFFReadDirectory(tif.get()));

    std::vector<Slice> slices;
    slices.reserve(raw.size());
    if (is_float) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& p : raw)
            for (double v : p.pixels()) {
                if (!std::isfinite(v)) fail(ErrorKind::io, path + ": non-finite float sample");
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        const bool in_range = lo >= 0.0 && hi <= 1.0;
        for (auto& p : raw) {
            if (!in_range)
                for (double& v : p.pixels()) v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
            slices.push_back(convert<float>(p));
        }
    } else {
        for (auto& p : raw) slices.push_back(convert<float>(p));
    }
    return Volume(std::move(slices));
}

// Quantizes with round-half-away-from-zero for integer depths.
inline void save_stack(const Volume& volume, const std::string& path, BitDepth depth,
                       Compression compression = Compression::none) {
    detail::install_tiff_handlers();
    require(volume.depth() > 0, "cannot save an empty volume");
    for (int z = 0; z < volume.depth(); ++z) validate_slice(volume.slice(z), "slice " + std::to_string(z));

    detail::tiff_last_error.clear();
    detail::TiffHandle tif(TIFFOpen(path.c_str(), "w"));
    if (!tif) fail(ErrorKind::io, "cannot create TIFF '" + path + "': " + detail::tiff_last_error);

    const int rows = volume.rows(), cols = volume.cols();
    const std::uint16_t bits = depth == BitDepth::u8 ? 8 : depth == BitDepth::u16 ? 16 : 32;
    const std::uint16_t format = depth == BitDepth::f32 ? SAMPLEFORMAT_IEEEFP : SAMPLEFORMAT_UINT;
    std::vector<unsigned char> line(static_cast<std::size_t>(cols) * (bits / 8));

    for (int z = 0; z < volume.depth(); ++z) {
        TIFF* t = tif.get();
        TIFFSetField(t, TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(cols));
        TIFFSetField(t, TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(rows));
        TIFFSetField(t, TIFFTAG_BITSPERSAMPLE, bits);
        TIFFSetField(t, TIFFTAG_SAMPLESPERPIXEL, static_cast<std::uint16_t>(1));
        TIFFSetField(t, TIFFTAG_SAMPLEFORMAT, format);
        TIFFSetField(t, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
        TIFFSetField(t, TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
        TIFFSetField(t, TIFFTAG_ROWSPERSTRIP, static_cast<std::uint32_t>(rows));
        TIFFSetField(t, TIFFTAG_COMPRESSION,
                     compression == Compression::deflate ? COMPRESSION_ADOBE_DEFLATE : COMPRESSION_NONE);
        if (volume.depth() > 1) {
            TIFFSetField(t, TIFFTAG_SUBFILETYPE, FILETYPE_PAGE);
            TIFFSetField(t, TIFFTAG_PAGENUMBER, static_cast<std::uint16_t>(z),
                         static_cast<std::uint16_t>(volume.depth()));
        }
        const Slice& s = volume.slice(z);
        for (int r = 0; r < rows; ++r) {
            auto src = s.row(r);
            for (int c = 0; c < cols; ++c) {
                const float v = src[c];
                if (depth == BitDepth::f32) {
                    std::memcpy(line.data() + 4 * c, &v, 4);
                } else if (depth == BitDepth::u8) {
                    line[c] = static_cast<unsigned char>(std::lround(static_cast<double>(v) * 255.0));
                } else {
                    const auto u = static_cast<std::uint16_t>(std::lround(static_cast<double>(v) * 65535.0));
                    std::memcpy(line.data() + 2 * c, &u, 2);
                }
            }
            if (TIFFWriteScanline(t, line.data(), static_cast<std::uint32_t>(r), 0) < 0)
                fail(ErrorKind::io, detail::page_prefix(path, z) + "write failed: " + detail::tiff_last_error);
        }
        if (!TIFFWriteDirectory(t))
            fail(ErrorKind::io, detail::page_prefix(path, z) + "write failed: " + detail::tiff_last_error);
    }
    TIFF* raw_handle = tif.release();
    TIFFClose(raw_handle);
}

}  // namespace lsfuse
