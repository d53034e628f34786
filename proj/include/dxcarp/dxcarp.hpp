#pragma once

#include "dxcarp/error.hpp"
#include "dxcarp/rng.hpp"
#include "dxcarp/network.hpp"
#include "dxcarp/config.hpp"
#include "dxcarp/solution.hpp"
#include "dxcarp/construct.hpp"
#include "dxcarp/operators.hpp"
#include "dxcarp/alns.hpp"
#include "dxcarp/dynamic.hpp"
#include "dxcarp/io.hpp"
#include "dxcarp/verify.hpp"
#include "dxcarp/experiments.hpp"
