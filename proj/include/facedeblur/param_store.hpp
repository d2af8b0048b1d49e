// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "facedeblur/contract.hpp"

namespace facedeblur {

struct ParamTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;  ///< Same shape as value; stays zero for non-trainable state.
    bool trainable = true;

    std::size_t numel() const { return value.size(); }

    friend bool operator==(const ParamTensor&, const ParamTensor&) = default;
};

inline std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

/// Ordered, uniquely named tensors with matching gradient buffers. Normalization
/// running statistics live here as non-trainable entries so a checkpoint is one store.
class ParamStore {
public:
    ParamTensor& add(std::string name, std::vector<std::size_t> shape, bool trainable = true) {
        require(!index_.contains(name), "duplicate parameter name '", name, "'");
        const std::size_t n = shape_numel(shape);
        index_.emplace(name, entries_.size());
        entries_.push_back(ParamTensor{std::move(name), std::move(shape), std::vector<double>(n, 0.0),
                                       std::vector<double>(n, 0.0), trainable});
        return entries_.back();
    }

    bool contains(const std::string& name) const { return index_.contains(name); }

    ParamTensor& get(const std::string& name) {
        auto it = index_.find(name);
        require(it != index_.end(), "missing parameter '", name, "'");
        return entries_[it->second];
    }
    const ParamTensor& get(const std::string& name) const {
        auto it = index_.find(name);
        require(it != index_.end(), "missing parameter '", name, "'");
        return entries_[it->second];
    }

    std::vector<ParamTensor>& entries() { return entries_; }
    const std::vector<ParamTensor>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    void zero_grad() {
        for (auto& e : entries_) std::fill(e.grad.begin(), e.grad.end(), 0.0);
    }

    std::size_t trainable_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_)
            if (e.trainable) n += e.numel();
        return n;
    }

    bool operator==(const ParamStore& other) const { return entries_ == other.entries_; }

private:
    std::vector<ParamTensor> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace facedeblur
