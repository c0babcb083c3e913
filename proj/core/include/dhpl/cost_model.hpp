#pragma once

#include "dhpl/config.hpp"

namespace dhpl {

/// Closed-form timeline of one split iteration on the rank that records
/// the trace, assuming its process-column peers run in step.
struct PredictedIteration {
  index_t j = 0;
  bool split = false;    // false once the left section is exhausted
  bool modeled = false;  // split, or the fallback consuming the last RS2
  double update2 = 0.0;  // engine time of the right-section update
  double hidden = 0.0;   // transfers + FACT + LBCAST + RS1 on the host path
  double t_engine = 0.0;
  double t_iter = 0.0;
  bool exposed = false;
};

/// Model of iteration j (meaningful while `modeled` is true).
PredictedIteration predict_iteration(const RunConfig& cfg, index_t j);

/// First iteration predicted to leave the hidden regime. If every split
/// iteration hides, the first iteration whose left section is exhausted.
/// Uses `cfg.cost` as the cost model.
index_t predict_crossover(const RunConfig& cfg);

/// Smallest right-section fraction, in steps of NB local columns, for which
/// iteration 0 has UPDATE2 >= the hidden-phase sum; 1.0 if none has.
double tune_split(const RunConfig& cfg);

/// Model-mode scenario with 500 iterations whose split update initially
/// hides the host phases with a 2x margin.
RunConfig reference_model_config();
/// Same shape with coefficients balanced so that half the local columns are
/// just enough to hide the host phases.
RunConfig balanced_model_config();

}  // namespace dhpl
