// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace facedeblur {

/// Raised whenever a caller breaks an operation's precondition.
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

namespace detail {

template <typename... Parts>
std::string concat(Parts&&... parts) {
    std::ostringstream oss;
    (oss << ... << std::forward<Parts>(parts));
    return oss.str();
}

}  // namespace detail

template <typename... Parts>
inline void require(bool condition, Parts&&... message) {
    if (!condition) {
        throw ContractViolation(detail::concat(std::forward<Parts>(message)...));
    }
}

}  // namespace facedeblur
