#pragma once

#include "ranslice/agents.hpp"
#include "ranslice/env.hpp"
#include "ranslice/harness.hpp"
#include "ranslice/ransim.hpp"
#include "ranslice/rng.hpp"
#include "ranslice/traffic.hpp"
#include "ranslice/transfer.hpp"
