#pragma once

#include "susyopt/errors.hpp"
#include "susyopt/grid.hpp"
#include "susyopt/susy.hpp"
#include "susyopt/evolution.hpp"
#include "susyopt/optics.hpp"
#include "susyopt/experiments/config.hpp"
#include "susyopt/experiments/result.hpp"
#include "susyopt/experiments/runners.hpp"
