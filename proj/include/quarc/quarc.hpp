#pragma once

#include "quarc/builtin_thresholds.hpp"
#include "quarc/calibration.hpp"
#include "quarc/clustering.hpp"
#include "quarc/community.hpp"
#include "quarc/config.hpp"
#include "quarc/engine.hpp"
#include "quarc/error.hpp"
#include "quarc/experiment.hpp"
#include "quarc/io.hpp"
#include "quarc/jobs.hpp"
#include "quarc/kemeny.hpp"
#include "quarc/metrics.hpp"
#include "quarc/percolation.hpp"
#include "quarc/reconfigure.hpp"
#include "quarc/rng.hpp"
#include "quarc/routing.hpp"
#include "quarc/schedule.hpp"
#include "quarc/stats.hpp"
#include "quarc/thresholds.hpp"
#include "quarc/topology.hpp"
