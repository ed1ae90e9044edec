#pragma once

#include "vjump/coefficients.hpp"
#include "vjump/density.hpp"
#include "vjump/equivalence.hpp"
#include "vjump/error.hpp"
#include "vjump/initial_condition.hpp"
#include "vjump/io.hpp"
#include "vjump/merged_dwell.hpp"
#include "vjump/model.hpp"
#include "vjump/parallel.hpp"
#include "vjump/rng.hpp"
#include "vjump/trajectory.hpp"
