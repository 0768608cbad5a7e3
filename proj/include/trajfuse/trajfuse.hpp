#pragma once

/// Umbrella header: calibration, fusion, simulation, evaluation and file codecs.

#include "trajfuse/calibration.hpp"
#include "trajfuse/errors.hpp"
#include "trajfuse/evaluation.hpp"
#include "trajfuse/fusion.hpp"
#include "trajfuse/geometry.hpp"
#include "trajfuse/io.hpp"
#include "trajfuse/scenarios.hpp"
#include "trajfuse/simulator.hpp"
#include "trajfuse/stats.hpp"
