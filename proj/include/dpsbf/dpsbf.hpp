// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dpsbf/channel.hpp"
#include "dpsbf/digital.hpp"
#include "dpsbf/error.hpp"
#include "dpsbf/evaluation.hpp"
#include "dpsbf/fully_connected.hpp"
#include "dpsbf/lasso.hpp"
#include "dpsbf/linalg.hpp"
#include "dpsbf/model.hpp"
#include "dpsbf/partially_connected.hpp"
#include "dpsbf/pipeline.hpp"
#include "dpsbf/residual_bd.hpp"
#include "dpsbf/rng.hpp"
#include "dpsbf/scenario.hpp"
