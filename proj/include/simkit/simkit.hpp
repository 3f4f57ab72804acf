#pragma once

// Umbrella header: the full simulation-study toolkit minus the CLI
// (include simkit/cli.hpp separately in study main programs).

#include "simkit/batches.hpp"
#include "simkit/component.hpp"
#include "simkit/errors.hpp"
#include "simkit/format.hpp"
#include "simkit/param_value.hpp"
#include "simkit/parallel.hpp"
#include "simkit/pipeline.hpp"
#include "simkit/plot.hpp"
#include "simkit/predicate.hpp"
#include "simkit/records.hpp"
#include "simkit/refs.hpp"
#include "simkit/report.hpp"
#include "simkit/rng.hpp"
#include "simkit/scaffold.hpp"
#include "simkit/simulation.hpp"
#include "simkit/store.hpp"
#include "simkit/table.hpp"
#include "simkit/version.hpp"
