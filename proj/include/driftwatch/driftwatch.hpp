#pragma once

// Umbrella header for the driftwatch library.

#include "driftwatch/config.hpp"
#include "driftwatch/control_filter.hpp"
#include "driftwatch/corpus_io.hpp"
#include "driftwatch/document.hpp"
#include "driftwatch/error.hpp"
#include "driftwatch/evaluation.hpp"
#include "driftwatch/pipeline.hpp"
#include "driftwatch/random.hpp"
#include "driftwatch/rules.hpp"
#include "driftwatch/supervisor.hpp"
#include "driftwatch/term_selection.hpp"
#include "driftwatch/timestamp.hpp"
