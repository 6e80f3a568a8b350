#pragma once

#include "vstiff/error.hpp"
#include "vstiff/rational_tf.hpp"
#include "vstiff/state_space.hpp"
#include "vstiff/interconnect.hpp"
#include "vstiff/frequency.hpp"
#include "vstiff/plant.hpp"
#include "vstiff/constraints.hpp"
#include "vstiff/synthesis.hpp"
#include "vstiff/simulation.hpp"
#include "vstiff/metrics.hpp"
#include "vstiff/io.hpp"
#include "vstiff/cli.hpp"
