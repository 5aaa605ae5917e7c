#pragma once

// Federated training simulator for sequence classification: monthly rounds
// of per-country local training, weight-level aggregation into a global
// model, and merged re-initialization of the local models. Raw data never
// crosses the client boundary; only weight sets do.

#include "epic/alphabet.hpp"
#include "epic/config.hpp"
#include "epic/datagen.hpp"
#include "epic/encode.hpp"
#include "epic/errors.hpp"
#include "epic/fed.hpp"
#include "epic/matrix.hpp"
#include "epic/metrics.hpp"
#include "epic/nn.hpp"
#include "epic/orchestrator.hpp"
#include "epic/partition.hpp"
#include "epic/records.hpp"
#include "epic/rng.hpp"
#include "epic/runner.hpp"
#include "epic/weights.hpp"
