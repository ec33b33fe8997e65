#pragma once

#include "groupot/bench.hpp"
#include "groupot/core.hpp"
#include "groupot/data_io.hpp"
#include "groupot/dual.hpp"
#include "groupot/errors.hpp"
#include "groupot/lbfgs.hpp"
#include "groupot/regularizer.hpp"
#include "groupot/screening.hpp"
#include "groupot/solver.hpp"
