#pragma once

#include "thermoscope/error.hpp"
#include "thermoscope/rational.hpp"
#include "thermoscope/parallel.hpp"
#include "thermoscope/symbolic.hpp"
#include "thermoscope/markov.hpp"
#include "thermoscope/linalg.hpp"
#include "thermoscope/potential.hpp"
#include "thermoscope/thermo.hpp"
#include "thermoscope/rate.hpp"
#include "thermoscope/deviation.hpp"
#include "thermoscope/cocycle.hpp"
#include "thermoscope/io.hpp"
