#pragma once

#include "vdnnsim/config.hpp"
#include "vdnnsim/cost_model.hpp"
#include "vdnnsim/decision.hpp"
#include "vdnnsim/footprint.hpp"
#include "vdnnsim/fuzz.hpp"
#include "vdnnsim/memory_pool.hpp"
#include "vdnnsim/net_graph.hpp"
#include "vdnnsim/policy.hpp"
#include "vdnnsim/prefetch.hpp"
#include "vdnnsim/presets.hpp"
#include "vdnnsim/replay.hpp"
#include "vdnnsim/report.hpp"
#include "vdnnsim/simulator.hpp"
