#pragma once

// Umbrella header for the whole library.

#include "fcp/adt.hpp"
#include "fcp/autoencoder.hpp"
#include "fcp/csv.hpp"
#include "fcp/errors.hpp"
#include "fcp/eval.hpp"
#include "fcp/ingest.hpp"
#include "fcp/kde.hpp"
#include "fcp/ovr.hpp"
#include "fcp/persist.hpp"
#include "fcp/pipeline.hpp"
#include "fcp/rf.hpp"
#include "fcp/rng.hpp"
#include "fcp/svm.hpp"
