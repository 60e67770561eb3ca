#pragma once

#include "analysis.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "estimate.hpp"
#include "experiments.hpp"
#include "intensity.hpp"
#include "io.hpp"
#include "likelihood.hpp"
#include "lobdata.hpp"
#include "model.hpp"
#include "optimize.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "simulate.hpp"
