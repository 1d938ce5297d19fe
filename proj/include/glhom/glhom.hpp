#pragma once

#include "glhom/ball_construction.hpp"
#include "glhom/cell_problem.hpp"
#include "glhom/coefficients.hpp"
#include "glhom/experiments.hpp"
#include "glhom/fields.hpp"
#include "glhom/flat_distance.hpp"
#include "glhom/geometry.hpp"
#include "glhom/gl_solver.hpp"
#include "glhom/singularity_cost.hpp"
#include "glhom/vortex_analysis.hpp"
