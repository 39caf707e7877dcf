#pragma once

// Umbrella header: random walks on the motion group K x| R^d with
// dynamically modulated step laws, exact Fourier oracles and Monte Carlo
// verifiers for their limit behavior.

#include "motionwalk/dynamics.hpp"
#include "motionwalk/experiment.hpp"
#include "motionwalk/group.hpp"
#include "motionwalk/matrix.hpp"
#include "motionwalk/rng.hpp"
#include "motionwalk/step_laws.hpp"
#include "motionwalk/verify.hpp"
#include "motionwalk/walk.hpp"
