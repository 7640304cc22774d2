#pragma once

#include "hacache/analytic_env.hpp"
#include "hacache/bench.hpp"
#include "hacache/controller.hpp"
#include "hacache/error.hpp"
#include "hacache/model.hpp"
#include "hacache/nhc.hpp"
#include "hacache/planner.hpp"
#include "hacache/scenario.hpp"
#include "hacache/sim/shard_cache.hpp"
#include "hacache/sim/simulator.hpp"
#include "hacache/sim/stripe.hpp"
#include "hacache/sim/workload.hpp"
#include "hacache/telemetry.hpp"
#include "hacache/trace.hpp"
