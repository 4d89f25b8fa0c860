#pragma once

#include "errors.hpp"
#include "rng.hpp"
#include "hash.hpp"
#include "graph.hpp"
#include "generators.hpp"
#include "protocol.hpp"
#include "events.hpp"
#include "engine.hpp"
#include "version.hpp"
#include "trace_io.hpp"
#include "analysis/report.hpp"
#include "analysis/check_trace.hpp"
#include "analysis/replay.hpp"
#include "analysis/topology_checks.hpp"
#include "analysis/oracle.hpp"
#include "analysis/pie.hpp"
