#pragma once

#include "calibration.hpp"
#include "cds_pricer.hpp"
#include "cir.hpp"
#include "derivative_polynomial.hpp"
#include "expansion.hpp"
#include "kernels.hpp"
#include "market_data.hpp"
#include "monte_carlo.hpp"
#include "nelder_mead.hpp"
#include "numerics.hpp"
#include "report.hpp"
