#pragma once

// Umbrella header.

#include "schedrand/analysis.hpp"
#include "schedrand/generate.hpp"
#include "schedrand/io.hpp"
#include "schedrand/metrics.hpp"
#include "schedrand/oracle.hpp"
#include "schedrand/policy.hpp"
#include "schedrand/rng.hpp"
#include "schedrand/sched_state.hpp"
#include "schedrand/simulate.hpp"
#include "schedrand/task.hpp"
