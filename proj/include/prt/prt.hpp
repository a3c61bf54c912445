#pragma once

#include "prt/city.hpp"
#include "prt/config.hpp"
#include "prt/demand.hpp"
#include "prt/engine.hpp"
#include "prt/error.hpp"
#include "prt/management.hpp"
#include "prt/metrics.hpp"
#include "prt/network.hpp"
#include "prt/rng.hpp"
#include "prt/scenario_file.hpp"
#include "prt/sweep.hpp"
#include "prt/time.hpp"
