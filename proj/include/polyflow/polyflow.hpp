#pragma once

// Umbrella header.

#include "polyflow/builtin_maps.hpp"
#include "polyflow/energy.hpp"
#include "polyflow/error.hpp"
#include "polyflow/experiment.hpp"
#include "polyflow/fields.hpp"
#include "polyflow/flow.hpp"
#include "polyflow/grid.hpp"
#include "polyflow/metric.hpp"
#include "polyflow/parallel.hpp"
#include "polyflow/pullback.hpp"
#include "polyflow/space_form.hpp"
#include "polyflow/verify.hpp"
