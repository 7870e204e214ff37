#pragma once

#include "josh/agent.hpp"
#include "josh/bootstrap.hpp"
#include "josh/canonical.hpp"
#include "josh/chat_client.hpp"
#include "josh/commands.hpp"
#include "josh/config.hpp"
#include "josh/database.hpp"
#include "josh/extraction.hpp"
#include "josh/goals.hpp"
#include "josh/hash.hpp"
#include "josh/ingest.hpp"
#include "josh/invocation.hpp"
#include "josh/io.hpp"
#include "josh/lowess.hpp"
#include "josh/matching.hpp"
#include "josh/metrics.hpp"
#include "josh/parallel.hpp"
#include "josh/prompts.hpp"
#include "josh/registry.hpp"
#include "josh/rollout.hpp"
#include "josh/scenario.hpp"
#include "josh/scripted.hpp"
#include "josh/serving.hpp"
#include "josh/stability.hpp"
#include "josh/tree.hpp"
#include "josh/tree_io.hpp"
#include "josh/user_sim.hpp"
#include "josh/wire.hpp"
