// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace iqpborn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace iqpborn
