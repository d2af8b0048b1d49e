// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "facedeblur/mining/components.hpp"
#include "facedeblur/mining/fitting.hpp"
#include "facedeblur/mining/geometry.hpp"
#include "facedeblur/mining/pipeline.hpp"
#include "facedeblur/mining/preprocess.hpp"
#include "facedeblur/mining/reference.hpp"
#include "facedeblur/mining/synthetic_face.hpp"
