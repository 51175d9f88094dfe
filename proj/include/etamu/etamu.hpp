#pragma once

#include "etamu/errors.hpp"
#include "etamu/etamu_stats.hpp"
#include "etamu/fading_params.hpp"
#include "etamu/laplace_inversion.hpp"
#include "etamu/link_performance.hpp"
#include "etamu/mc_oracle.hpp"
#include "etamu/modulation.hpp"
#include "etamu/quadrature.hpp"
#include "etamu/specfun.hpp"
