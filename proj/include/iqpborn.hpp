// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

// Umbrella header for the core library. run_dir.hpp is separate because it
// needs libcrypto.
#pragma once

#include "iqpborn/bitops.hpp"
#include "iqpborn/ciqp.hpp"
#include "iqpborn/diagnostics.hpp"
#include "iqpborn/encoding.hpp"
#include "iqpborn/gate_graph.hpp"
#include "iqpborn/kernels.hpp"
#include "iqpborn/metrics.hpp"
#include "iqpborn/parallel.hpp"
#include "iqpborn/pearson.hpp"
#include "iqpborn/rng.hpp"
#include "iqpborn/synthetic.hpp"
#include "iqpborn/train.hpp"
#include "iqpborn/vdn.hpp"
#include "iqpborn/version.hpp"
