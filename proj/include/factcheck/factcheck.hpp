#pragma once

// Umbrella header for the fact-checking experiment harness.

#include "factcheck/claims.hpp"
#include "factcheck/config.hpp"
#include "factcheck/date.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/evidence.hpp"
#include "factcheck/gateway.hpp"
#include "factcheck/labels.hpp"
#include "factcheck/metrics.hpp"
#include "factcheck/orchestrator.hpp"
#include "factcheck/prompt.hpp"
#include "factcheck/report.hpp"
#include "factcheck/runstore.hpp"
#include "factcheck/scorer.hpp"
#include "factcheck/specfun.hpp"
#include "factcheck/stats.hpp"
#include "factcheck/util.hpp"
