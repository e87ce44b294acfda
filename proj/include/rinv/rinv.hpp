// Umbrella header.
#pragma once

#include "rinv/camera.hpp"
#include "rinv/config.hpp"
#include "rinv/core.hpp"
#include "rinv/detection.hpp"
#include "rinv/eval.hpp"
#include "rinv/flow.hpp"
#include "rinv/foe.hpp"
#include "rinv/invariant.hpp"
#include "rinv/io.hpp"
#include "rinv/pipeline.hpp"
#include "rinv/scene.hpp"
