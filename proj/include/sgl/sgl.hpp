#pragma once

#include "sgl/belief.hpp"
#include "sgl/config.hpp"
#include "sgl/diagnostics.hpp"
#include "sgl/edges.hpp"
#include "sgl/experiment.hpp"
#include "sgl/graph.hpp"
#include "sgl/inverse.hpp"
#include "sgl/io.hpp"
#include "sgl/likelihood.hpp"
#include "sgl/random.hpp"
#include "sgl/simulation.hpp"
#include "sgl/types.hpp"
