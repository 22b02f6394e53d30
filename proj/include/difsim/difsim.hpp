#pragma once

#include "difsim/ap.hpp"
#include "difsim/baselines.hpp"
#include "difsim/bounds.hpp"
#include "difsim/datasets.hpp"
#include "difsim/energy.hpp"
#include "difsim/experiment.hpp"
#include "difsim/filter.hpp"
#include "difsim/matrix.hpp"
#include "difsim/model.hpp"
#include "difsim/rng.hpp"
#include "difsim/simulator.hpp"
