#pragma once

// Umbrella header for the whole library.

#include "mmrisk/crosscheck.hpp"
#include "mmrisk/errors.hpp"
#include "mmrisk/factorization.hpp"
#include "mmrisk/model.hpp"
#include "mmrisk/model_io.hpp"
#include "mmrisk/montecarlo.hpp"
#include "mmrisk/overshoot.hpp"
#include "mmrisk/rational.hpp"
#include "mmrisk/spectral.hpp"
#include "mmrisk/transforms.hpp"
#include "mmrisk/version.hpp"
