// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "facedeblur/contract.hpp"
#include "facedeblur/image.hpp"

namespace facedeblur {

/// Dense NCHW tensor of doubles.
class Tensor4 {
public:
    Tensor4() = default;
    Tensor4(std::size_t batch, std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0)
        : n_(batch), c_(channels), h_(height), w_(width), data_(batch * channels * height * width, fill) {
        require(batch > 0 && channels > 0 && height > 0 && width > 0, "tensor dimensions must be positive, got ",
                batch, "x", channels, "x", height, "x", width);
    }

    std::size_t batch() const { return n_; }
    std::size_t channels() const { return c_; }
    std::size_t height() const { return h_; }
    std::size_t width() const { return w_; }
    std::size_t plane_size() const { return h_ * w_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
        return data_[((n * c_ + c) * h_ + y) * w_ + x];
    }
    double at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
        return data_[((n * c_ + c) * h_ + y) * w_ + x];
    }

    double* plane(std::size_t n, std::size_t c) { return data_.data() + (n * c_ + c) * h_ * w_; }
    const double* plane(std::size_t n, std::size_t c) const { return data_.data() + (n * c_ + c) * h_ * w_; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const Tensor4& o) const { return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }

    friend bool operator==(const Tensor4&, const Tensor4&) = default;

private:
    std::size_t n_ = 0, c_ = 0, h_ = 0, w_ = 0;
    std::vector<double> data_;
};

/// Stacks equally sized images into a batch; grey images are replicated to `channels`.
inline Tensor4 images_to_tensor(std::span<const Image> images, std::size_t channels = 3) {
    require(!images.empty(), "images_to_tensor: empty batch");
    const std::size_t h = images[0].height();
    const std::size_t w = images[0].width();
    Tensor4 t(images.size(), channels, h, w);
    for (std::size_t n = 0; n < images.size(); ++n) {
        const Image& img = images[n];
        require(img.height() == h && img.width() == w, "images_to_tensor: image ", n, " is ", img.height(),
                "x", img.width(), ", expected ", h, "x", w);
        require(img.channels() == channels || img.channels() == 1, "images_to_tensor: image ", n, " has ",
                img.channels(), " channels, expected ", channels);
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t src = img.channels() == 1 ? 0 : c;
            double* dst = t.plane(n, c);
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) dst[y * w + x] = img.at(y, x, src);
        }
    }
    return t;
}

inline Image tensor_to_image(const Tensor4& t, std::size_t n) {
    require(n < t.batch(), "tensor_to_image: index ", n, " out of batch ", t.batch());
    require(t.channels() == 1 || t.channels() == 3, "tensor_to_image: ", t.channels(), " channels");
    Image img(t.height(), t.width(), t.channels());
    for (std::size_t c = 0; c < t.channels(); ++c) {
        const double* src = t.plane(n, c);
        for (std::size_t y = 0; y < t.height(); ++y)
            for (std::size_t x = 0; x < t.width(); ++x) img.at(y, x, c) = src[y * t.width() + x];
    }
    return img;
}

}  // namespace facedeblur
