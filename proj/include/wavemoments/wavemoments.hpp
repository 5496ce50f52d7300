// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_WAVEMOMENTS_HPP
#define WAVEMOMENTS_WAVEMOMENTS_HPP

#include "wavemoments/error.hpp"
#include "wavemoments/random.hpp"
#include "wavemoments/parallel.hpp"
#include "wavemoments/wavelet.hpp"
#include "wavemoments/psi.hpp"
#include "wavemoments/wv.hpp"
#include "wavemoments/model.hpp"
#include "wavemoments/model_wv.hpp"
#include "wavemoments/simulate.hpp"
#include "wavemoments/covariance.hpp"
#include "wavemoments/optimize.hpp"
#include "wavemoments/gmwm.hpp"
#include "wavemoments/lab.hpp"

#endif  // WAVEMOMENTS_WAVEMOMENTS_HPP
