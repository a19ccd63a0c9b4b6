// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tppi/bench.hpp"
#include "tppi/engine.hpp"
#include "tppi/flops.hpp"
#include "tppi/hsi.hpp"
#include "tppi/kernels.hpp"
#include "tppi/model.hpp"
#include "tppi/network.hpp"
#include "tppi/network_io.hpp"
#include "tppi/presets.hpp"
#include "tppi/reports.hpp"
#include "tppi/tensor.hpp"
#include "tppi/trainer.hpp"
#include "tppi/transform.hpp"
