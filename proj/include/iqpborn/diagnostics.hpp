// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <iostream>
#include <string>
#include <string_view>
#include <utility>

namespace iqpborn {

using WarningHandler = std::function<void(std::string_view)>;

inline WarningHandler& warning_handler() {
    static WarningHandler handler = [](std::string_view msg) {
        std::cerr << "iqpborn: warning: " << msg << '\n';
    };
    return handler;
}

/// Replaces the process-wide warning sink; returns the previous one.
inline WarningHandler set_warning_handler(WarningHandler h) {
    return std::exchange(warning_handler(), std::move(h));
}

inline void warn(const std::string& msg) {
    if (warning_handler()) warning_handler()(msg);
}

}  // namespace iqpborn
