#pragma once

// Everything in one include.

#include "apps.hpp"
#include "combiners.hpp"
#include "core.hpp"
#include "fused_lasso.hpp"
#include "io.hpp"
#include "projected_newton.hpp"
#include "taut_string.hpp"
#include "tensor.hpp"
#include "thread_pool.hpp"
#include "tridiagonal.hpp"
#include "tv1d.hpp"
#include "tv_l2.hpp"
#include "tv_lp.hpp"
#include "tvnd.hpp"
