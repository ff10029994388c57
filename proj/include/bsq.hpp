#pragma once

#include "bsq/errors.hpp"
#include "bsq/phase_space.hpp"
#include "bsq/models.hpp"
#include "bsq/level_set.hpp"
#include "bsq/dynamics.hpp"
#include "bsq/validation.hpp"
#include "bsq/period_lattice.hpp"
#include "bsq/maslov.hpp"
#include "bsq/cycle_invariants.hpp"
#include "bsq/liouville.hpp"
#include "bsq/lattice.hpp"
#include "bsq/quantum/operators.hpp"
#include "bsq/quantum/joint_spectrum.hpp"
#include "bsq/quantum/oracle.hpp"
#include "bsq/verify.hpp"
#include "bsq/config.hpp"
#include "bsq/experiment.hpp"
#include "bsq/emit.hpp"
