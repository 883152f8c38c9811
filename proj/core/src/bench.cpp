#include "pgs/bench.hpp"

#include <algorithm>
#include <chrono>
#include <random>

#include <json.hpp>

#include "pgs/contrastive.hpp"

namespace pgs {

namespace {

using Clock = std::chrono::steady_clock;

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return (v[(m - 1) / 2] + v[m / 2]) / 2.0;
}

// Noise plus a bright block: gives the edge detector something to find.
Image synthetic_bench_image(int size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Image img;
    img.width = size;
    img.height = size;
    img.data.resize(std::size_t(size) * size * 3);
    for (auto& b : img.data) b = std::uint8_t(rng() % 256);
    const int lo = size / 4, hi = 3 * size / 4;
    for (int y = lo; y < hi; ++y) {
        for (int x = lo; x < hi; ++x) {
            std::uint8_t* p = img.pixel(x, y);
            p[0] = 230;
            p[1] = 90;
            p[2] = 40;
        }
    }
    return img;
}

}  // namespace

BenchReport run_bench(const RunConfig& cfg, int repeat, bool with_toy_probe) {
    if (repeat < 1) throw ConfigError("bench: repeat must be >= 1");
    cfg.mask.validate();

    const std::vector<std::string> paths = expand_inputs(cfg.inputs);
    const Image img = paths.empty() ? synthetic_bench_image(224, cfg.seed ^ 0xbe9cull)
                                    : load_ppm_file(paths.front());
    const std::vector<std::uint8_t> encoded = encode_ppm(img);

    BenchReport report;
    report.repeats = repeat;

    // Decode stage, timed on the in-memory bytes.
    std::vector<double> decode_times;
    for (int i = 0; i < repeat + 1; ++i) {
        const auto t0 = Clock::now();
        const Image decoded = load_ppm(encoded);
        const auto t1 = Clock::now();
        if (i > 0) decode_times.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
        (void)decoded;
    }
    report.decode_us = median_of(decode_times);

    const PatchGrid grid = patchify(img, cfg.patch_size);
    report.n_patches = grid.n_patches();
    const EmbeddingMatrix feats = random_projection_features(grid, cfg.feature_dim, cfg.seed);
    MaskingConfig mc = cfg.mask;
    mc.seed = cfg.seed;

    // Warm-up, then the measured repeats.
    for (int i = 0; i < 3; ++i) {
        (void)generate_mask(grid, feats, cfg.epoch, mc, cfg.sinkhorn, cfg.sched);
    }
    std::vector<double> edge_t, sim_t, sink_t, sel_t, total_t;
    for (int i = 0; i < repeat; ++i) {
        StageTimes st;
        (void)generate_mask(grid, feats, cfg.epoch, mc, cfg.sinkhorn, cfg.sched, &st);
        edge_t.push_back(st.edge_us);
        sim_t.push_back(st.similarity_us);
        sink_t.push_back(st.sinkhorn_us);
        sel_t.push_back(st.selection_us);
        total_t.push_back(st.total_us);
    }
    report.stages.edge_us = median_of(edge_t);
    report.stages.similarity_us = median_of(sim_t);
    report.stages.sinkhorn_us = median_of(sink_t);
    report.stages.selection_us = median_of(sel_t);
    report.stages.total_us = median_of(total_t);
    report.ed_us = report.stages.edge_us;
    report.otn_us = report.stages.sinkhorn_us;
    report.mr_us = report.stages.similarity_us + report.stages.selection_us;

    // FLIP-style baseline: masking is a single uniform draw.
    std::vector<double> rand_t;
    for (int i = 0; i < repeat; ++i) {
        std::mt19937_64 rng(cfg.seed + std::uint64_t(i));
        const auto t0 = Clock::now();
        (void)random_mask(grid.n_patches(), cfg.mask.upper_ratio, rng);
        const auto t1 = Clock::now();
        rand_t.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    report.random_mask_us = median_of(rand_t);
    if (report.random_mask_us > 0.0) {
        report.pgs_vs_random_ratio = report.stages.total_us / report.random_mask_us;
    }
    report.masking_ms_per_image = report.stages.total_us / 1000.0;

    if (with_toy_probe) {
        // A few toy training steps at the same patch count, to report the
        // masking share of a full step.
        ToyTrainConfig toy;
        toy.steps = 4;
        toy.batch = 8;
        toy.steps_per_epoch = 1000;  // skip intermediate recall passes
        toy.heldout_pairs = 4;
        toy.image_size = grid.patch_size * 14;  // 196 patches, like the measured grid
        toy.patch_size = grid.patch_size;
        toy.embed_dim = 256;
        toy.seed = cfg.seed;
        toy.masking = MaskingMode::kPgs;
        toy.mask = cfg.mask;
        toy.sinkhorn = cfg.sinkhorn;
        toy.sched = cfg.sched;
        const ToyTrainReport toy_report = train_toy(toy);
        const double total = toy_report.masking_seconds + toy_report.fwdbwd_seconds;
        if (total > 0.0) report.toy_step_fraction = toy_report.masking_seconds / total;
        report.toy_step_ms = total / double(toy.steps) * 1000.0;
    }
    return report;
}

std::string bench_to_json(const BenchReport& report) {
    nlohmann::json j;
    j["repeats"] = report.repeats;
    j["n_patches"] = report.n_patches;
    j["per_image_us"] = {
        {"decode", report.decode_us},       {"edge", report.stages.edge_us},
        {"similarity", report.stages.similarity_us}, {"sinkhorn", report.stages.sinkhorn_us},
        {"selection", report.stages.selection_us},   {"total", report.stages.total_us},
    };
    j["components_us"] = {
        {"mr", report.mr_us},
        {"ed", report.ed_us},
        {"otn", report.otn_us},
    };
    j["random_baseline_us"] = {
        {"selection", report.random_mask_us},
        {"similarity", 0.0},
        {"sinkhorn", 0.0},
        {"edge", 0.0},
    };
    j["pgs_vs_random_ratio"] = report.pgs_vs_random_ratio;
    j["masking_ms_per_image"] = report.masking_ms_per_image;
    if (report.toy_step_ms > 0.0) {
        j["toy_step_ms"] = report.toy_step_ms;
        j["masking_fraction_of_toy_step"] = report.toy_step_fraction;
    }
    return j.dump(2);
}

}  // namespace pgs
