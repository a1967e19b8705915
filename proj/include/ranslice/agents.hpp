#pragma once

#include "ranslice/agents/common.hpp"
#include "ranslice/agents/ppo.hpp"
#include "ranslice/agents/qlearning.hpp"
#include "ranslice/agents/reinforce.hpp"
#include "ranslice/agents/snapshot.hpp"
