#pragma once

// Umbrella header for the scenver library.

#include "scenver/distributions.hpp"
#include "scenver/domain.hpp"
#include "scenver/io.hpp"
#include "scenver/metrics.hpp"
#include "scenver/qp.hpp"
#include "scenver/risk.hpp"
#include "scenver/rng.hpp"
#include "scenver/sim.hpp"
#include "scenver/sim_types.hpp"
#include "scenver/verification.hpp"
