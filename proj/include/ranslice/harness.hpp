#pragma once

#include "ranslice/harness/compare.hpp"
#include "ranslice/harness/config.hpp"
#include "ranslice/harness/runner.hpp"
#include "ranslice/harness/stats.hpp"
