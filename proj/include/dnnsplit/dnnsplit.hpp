#pragma once

#include "dnnsplit/costs.hpp"
#include "dnnsplit/errors.hpp"
#include "dnnsplit/experiment.hpp"
#include "dnnsplit/format.hpp"
#include "dnnsplit/formulations.hpp"
#include "dnnsplit/io.hpp"
#include "dnnsplit/linprog.hpp"
#include "dnnsplit/plan.hpp"
#include "dnnsplit/policies.hpp"
#include "dnnsplit/rng.hpp"
#include "dnnsplit/sim.hpp"
#include "dnnsplit/topology.hpp"
#include "dnnsplit/tu_check.hpp"
#include "dnnsplit/units.hpp"
#include "dnnsplit/verify.hpp"
#include "dnnsplit/workload.hpp"
