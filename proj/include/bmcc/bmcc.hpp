#pragma once

#include "bmcc/errors.hpp"
#include "bmcc/rng.hpp"
#include "bmcc/matrix.hpp"
#include "bmcc/dwr.hpp"
#include "bmcc/bayes_factor.hpp"
#include "bmcc/diagnostics.hpp"
#include "bmcc/chart.hpp"
#include "bmcc/simulate.hpp"
#include "bmcc/workflow.hpp"
#include "bmcc/io.hpp"
#include "bmcc/svg.hpp"
