#pragma once

#include "bpr/bench.hpp"
#include "bpr/blockpr.hpp"
#include "bpr/config.hpp"
#include "bpr/core.hpp"
#include "bpr/errors.hpp"
#include "bpr/forward.hpp"
#include "bpr/io.hpp"
#include "bpr/linalg.hpp"
#include "bpr/rng.hpp"
#include "bpr/solvers.hpp"
