#pragma once

// Convenience umbrella: pulls in the whole library in dependency order.

#include "pvsplit/errors.hpp"
#include "pvsplit/torus.hpp"
#include "pvsplit/stats.hpp"
#include "pvsplit/parallel.hpp"
#include "pvsplit/green.hpp"
#include "pvsplit/kernel_table.hpp"
#include "pvsplit/schedule.hpp"
#include "pvsplit/trajectory.hpp"
#include "pvsplit/flows.hpp"
#include "pvsplit/observables.hpp"
#include "pvsplit/ensembles.hpp"
#include "pvsplit/io.hpp"
#include "pvsplit/experiments.hpp"
