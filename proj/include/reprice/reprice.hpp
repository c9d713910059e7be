#pragma once

#include "common.hpp"
#include "reward.hpp"
#include "equilibrium.hpp"
#include "lp_solver.hpp"
#include "dual.hpp"
#include "lpsd.hpp"
#include "policies.hpp"
#include "certificates.hpp"
#include "simulator.hpp"
#include "multiclass.hpp"
#include "experiments.hpp"
#include "config.hpp"
