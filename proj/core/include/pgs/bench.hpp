#pragma once

#include <string>

#include "pgs/batch.hpp"
#include "pgs/selector.hpp"

namespace pgs {

// Median per-image stage timings plus the cost rollup mirroring the
// MR / ED / OTN component split.
struct BenchReport {
    int repeats = 0;
    int n_patches = 0;
    double decode_us = 0.0;
    StageTimes stages;            // per-image medians
    double mr_us = 0.0;           // random seed + similarity + selection
    double ed_us = 0.0;           // edge detection
    double otn_us = 0.0;          // sinkhorn
    double random_mask_us = 0.0;  // FLIP-style baseline, full "pipeline"
    double pgs_vs_random_ratio = 0.0;
    // Masking time as a fraction of one toy training step at the same
    // patch count (0 when the toy probe is skipped).
    double toy_step_fraction = 0.0;
    double toy_step_ms = 0.0;
    double masking_ms_per_image = 0.0;
};

// Times every pipeline stage over `repeat` runs (after warm-up) and probes
// a few toy training steps for the masking-fraction figure. Purely
// observational: it never changes what the pipeline computes.
BenchReport run_bench(const RunConfig& cfg, int repeat, bool with_toy_probe = true);

std::string bench_to_json(const BenchReport& report);

}  // namespace pgs
