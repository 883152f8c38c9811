#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgs/contrastive.hpp"
#include "pgs/selector.hpp"

namespace pgs {

enum class OutputFormat { kJson, kOverlay, kBoth };

// Effective configuration of a batch run. CLI flags and config-file keys
// both land here; the echo of this struct rides along in every record.
struct RunConfig {
    std::vector<std::string> inputs;  // literal paths or glob patterns
    std::string output = "-";         // JSONL destination, "-" = stdout
    std::string overlay_dir = ".";
    OutputFormat format = OutputFormat::kJson;
    int threads = 1;
    int patch_size = 16;
    int epoch = 0;
    int feature_dim = 64;
    double overlay_dim = 0.35;
    std::uint64_t seed = 0;
    MaskingConfig mask;
    SinkhornConfig sinkhorn;
    BlendSchedule sched;
};

struct BatchRecord {
    std::string image_id;  // input path
    bool ok = false;
    std::string error;
    std::string json_line;  // one MaskPlan JSON object
    MaskPlan plan;
};

struct BatchResult {
    std::vector<BatchRecord> records;  // ordered by image_id
    int failures = 0;
};

// Expands glob patterns / literal paths into a sorted, de-duplicated list.
std::vector<std::string> expand_inputs(const std::vector<std::string>& patterns);

// Per-image seed: global seed + FNV-1a hash of the path. Stable across runs
// and unaffected by which other files are in the batch.
std::uint64_t path_seed(std::uint64_t global_seed, const std::string& path);

// Runs the masking pipeline over every input with a worker pool. Workers
// share nothing; records are gathered and sorted by path, so the output
// bytes do not depend on the thread count.
BatchResult run_mask_batch(const RunConfig& cfg);

// JSONL text of a batch (successful records only), trailing newline per line.
std::string batch_to_jsonl(const BatchResult& result);

std::string plan_to_json(const MaskPlan& plan, const std::string& image_id, int patch_size,
                         const RunConfig& cfg);

// Renders and writes overlays for every successful record. Returns the
// written paths.
std::vector<std::string> write_overlays(const BatchResult& result, const RunConfig& cfg);

}  // namespace pgs
