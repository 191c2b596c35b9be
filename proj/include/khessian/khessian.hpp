#pragma once

#include "khessian/error.hpp"
#include "khessian/expr.hpp"
#include "khessian/quad.hpp"
#include "khessian/grid.hpp"
#include "khessian/problem.hpp"
#include "khessian/radial.hpp"
#include "khessian/picard.hpp"
#include "khessian/conditions.hpp"
#include "khessian/classify.hpp"
