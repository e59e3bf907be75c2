#pragma once

#include "normsolve/banded.hpp"
#include "normsolve/bubbles.hpp"
#include "normsolve/diagnostics.hpp"
#include "normsolve/energy.hpp"
#include "normsolve/error.hpp"
#include "normsolve/grid.hpp"
#include "normsolve/io.hpp"
#include "normsolve/minimizer.hpp"
#include "normsolve/mountainpass.hpp"
#include "normsolve/record.hpp"
#include "normsolve/thresholds.hpp"
#include "normsolve/tridiagonal.hpp"
