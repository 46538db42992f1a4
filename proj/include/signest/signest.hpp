#pragma once

// Umbrella header: estimation from sign measurements through a
// Gaussian-perturbed sensing matrix, with CRLB analysis, unimodality
// probabilities, and the Monte Carlo experiment harness.

#include "signest/config.hpp"
#include "signest/crlb.hpp"
#include "signest/csv.hpp"
#include "signest/errors.hpp"
#include "signest/estimator.hpp"
#include "signest/experiments.hpp"
#include "signest/likelihood.hpp"
#include "signest/matrix.hpp"
#include "signest/model.hpp"
#include "signest/normal.hpp"
#include "signest/probability.hpp"
#include "signest/rng.hpp"
#include "signest/version.hpp"
