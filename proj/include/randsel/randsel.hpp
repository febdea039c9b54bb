#pragma once

// Randomized sensor selection for discrete-time LTI systems: observability
// Gramians, importance-sampled approximate Gramians with spectral and
// Loewner-order guarantees, a greedy baseline, reduced least-squares /
// Kalman estimators, and a reproducible Monte Carlo experiment harness.

#include "randsel/errors.hpp"
#include "randsel/estimator.hpp"
#include "randsel/experiments.hpp"
#include "randsel/greedy.hpp"
#include "randsel/io.hpp"
#include "randsel/lti.hpp"
#include "randsel/rng.hpp"
#include "randsel/sampler.hpp"
#include "randsel/spectral.hpp"
