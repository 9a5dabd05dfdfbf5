#pragma once

#include "tsode/bench.hpp"
#include "tsode/codelist.hpp"
#include "tsode/dae.hpp"
#include "tsode/errors.hpp"
#include "tsode/funcs.hpp"
#include "tsode/integrate.hpp"
#include "tsode/kernel.hpp"
#include "tsode/problems.hpp"
#include "tsode/series.hpp"
#include "tsode/sigma.hpp"
#include "tsode/trace.hpp"
#include "tsode/transform.hpp"
