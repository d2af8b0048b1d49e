// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "facedeblur/contract.hpp"

namespace facedeblur {

/// Real-valued raster, row-major with channels interleaved (HWC).
/// Intensities nominally live in [0,1].
class Image {
public:
    Image() = default;

    Image(std::size_t height, std::size_t width, std::size_t channels = 1, double fill = 0.0)
        : height_(height), width_(width), channels_(channels),
          data_(height * width * channels, fill) {
        require(height > 0 && width > 0, "image dimensions must be positive, got ", height, "x",
                width);
        require(channels == 1 || channels == 3, "image channels must be 1 or 3, got ", channels);
    }

    Image(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data)
        : Image(height, width, channels) {
        require(data.size() == height * width * channels, "image data length ", data.size(),
                " does not match ", height, "x", width, "x", channels);
        data_ = std::move(data);
    }

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(std::size_t y, std::size_t x, std::size_t c = 0) {
        return data_[(y * width_ + x) * channels_ + c];
    }
    double at(std::size_t y, std::size_t x, std::size_t c = 0) const {
        return data_[(y * width_ + x) * channels_ + c];
    }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::vector<double>& raw() { return data_; }

    bool same_shape(const Image& other) const {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    /// Copies one channel into a single-channel image.
    Image channel(std::size_t c) const {
        require(c < channels_, "channel ", c, " out of range for ", channels_, "-channel image");
        Image out(height_, width_, 1);
        for (std::size_t i = 0; i < height_ * width_; ++i) out.data_[i] = data_[i * channels_ + c];
        return out;
    }

    void set_channel(std::size_t c, const Image& plane) {
        require(c < channels_ && plane.channels_ == 1 && plane.height_ == height_ &&
                    plane.width_ == width_,
                "set_channel: plane ", plane.height_, "x", plane.width_, "x", plane.channels_,
                " incompatible with ", height_, "x", width_, "x", channels_);
        for (std::size_t i = 0; i < height_ * width_; ++i) data_[i * channels_ + c] = plane.data_[i];
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> data_;
};

inline Image clamp_unit(Image img) {
    for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
    return img;
}

/// ITU-R BT.601 luma for 3-channel images; single-channel images pass through.
inline Image to_luma(const Image& img) {
    if (img.channels() == 1) return img;
    Image out(img.height(), img.width(), 1);
    for (std::size_t y = 0; y < img.height(); ++y)
        for (std::size_t x = 0; x < img.width(); ++x)
            out.at(y, x) = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
    return out;
}

inline Image to_rgb(const Image& img) {
    if (img.channels() == 3) return img;
    Image out(img.height(), img.width(), 3);
    for (std::size_t i = 0; i < img.height() * img.width(); ++i)
        for (std::size_t c = 0; c < 3; ++c) out.raw()[i * 3 + c] = img.data()[i];
    return out;
}

/// Crops the half-open rectangle [y0, y0+h) x [x0, x0+w).
inline Image crop(const Image& img, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) {
    require(y0 + h <= img.height() && x0 + w <= img.width() && h > 0 && w > 0, "crop ", h, "x", w,
            " at (", y0, ",", x0, ") exceeds image ", img.height(), "x", img.width());
    Image out(h, w, img.channels());
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < img.channels(); ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    return out;
}

}  // namespace facedeblur
