#pragma once

#include "fastci/core.hpp"
#include "fastci/feasibility.hpp"
#include "fastci/exactdist.hpp"
#include "fastci/tester.hpp"
#include "fastci/baseline_rh.hpp"
#include "fastci/balanced_fast.hpp"
#include "fastci/rng.hpp"
#include "fastci/montecarlo.hpp"
#include "fastci/unbalanced_search.hpp"
#include "fastci/missing_data.hpp"
#include "fastci/validation.hpp"
