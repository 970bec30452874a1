#pragma once

// Umbrella header: invariant measures and quasi-stationary distributions of
// subcritical branching processes killed at zero.

#include "branching.hpp"
#include "construct.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "montecarlo.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "selfsimilar.hpp"
#include "series.hpp"
#include "verify.hpp"
#include "yaglom.hpp"
