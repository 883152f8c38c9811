#include "pgs/batch.hpp"

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace pgs {

std::vector<std::string> expand_inputs(const std::vector<std::string>& patterns) {
    std::vector<std::string> paths;
    for (const std::string& pattern : patterns) {
        if (pattern.find_first_of("*?[") == std::string::npos) {
            paths.push_back(pattern);
            continue;
        }
        glob_t g{};
        const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
        if (rc == 0) {
            for (std::size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
        }
        ::globfree(&g);
    }
    std::sort(paths.begin(), paths.end());
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
    return paths;
}

std::uint64_t path_seed(std::uint64_t global_seed, const std::string& path) {
    // FNV-1a: stable across runs and platforms, unlike std::hash.
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : path) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return global_seed + h;
}

namespace {

nlohmann::json config_echo(const RunConfig& cfg) {
    return {
        {"patch_size", cfg.patch_size},
        {"epoch", cfg.epoch},
        {"feature_dim", cfg.feature_dim},
        {"seed", cfg.seed},
        {"initial_ratio", cfg.mask.initial_ratio},
        {"lower_ratio", cfg.mask.lower_ratio},
        {"upper_ratio", cfg.mask.upper_ratio},
        {"edge_quantile", cfg.mask.edge_quantile},
        {"neighborhood", cfg.mask.neighborhood == Neighborhood::kAdjacent8 ? "adjacent" : "global"},
        {"edge_detector", cfg.mask.detector == EdgeDetector::kSobel ? "sobel" : "canny"},
        {"canny_low", cfg.mask.canny_low},
        {"canny_high", cfg.mask.canny_high},
        {"use_edge", cfg.mask.use_edge},
        {"use_otn", cfg.mask.use_otn},
        {"sinkhorn_iters", cfg.sinkhorn.max_iters},
        {"sinkhorn_tol", cfg.sinkhorn.tol},
        {"alpha_min", cfg.sched.alpha_min},
        {"alpha_max", cfg.sched.alpha_max},
        {"alpha_ramp_epochs", cfg.sched.ramp_epochs},
    };
}

}  // namespace

std::string plan_to_json(const MaskPlan& plan, const std::string& image_id, int patch_size,
                         const RunConfig& cfg) {
    nlohmann::json j;
    j["image_id"] = image_id;
    j["grid_h"] = plan.grid_h;
    j["grid_w"] = plan.grid_w;
    j["patch_size"] = patch_size;
    j["masked"] = plan.masked;
    j["ratio"] = plan.ratio;
    j["retained_by_edge"] = plan.retained_by_edge;
    j["candidates"] = plan.candidates;
    // Non-finite sentinels (+inf candidate, -inf retained) serialize as null.
    j["scores"] = plan.scores;
    j["bound_release_fired"] = plan.bound_release_fired;
    j["released_by_bound"] = plan.released_by_bound;
    j["config_echo"] = config_echo(cfg);
    return j.dump();
}

BatchResult run_mask_batch(const RunConfig& cfg) {
    cfg.mask.validate();
    const std::vector<std::string> paths = expand_inputs(cfg.inputs);

    BatchResult result;
    result.records.resize(paths.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < paths.size(); i = next.fetch_add(1)) {
            BatchRecord& rec = result.records[i];
            rec.image_id = paths[i];
            try {
                const Image img = load_ppm_file(paths[i]);
                const PatchGrid grid = patchify(img, cfg.patch_size);
                const EmbeddingMatrix feats =
                    random_projection_features(grid, cfg.feature_dim, cfg.seed);
                MaskingConfig mc = cfg.mask;
                mc.seed = path_seed(cfg.seed, paths[i]);
                rec.plan = generate_mask(grid, feats, cfg.epoch, mc, cfg.sinkhorn, cfg.sched);
                rec.json_line = plan_to_json(rec.plan, rec.image_id, cfg.patch_size, cfg);
                rec.ok = true;
            } catch (const std::exception& e) {
                rec.ok = false;
                rec.error = e.what();
            }
        }
    };

    const int n_threads = std::max(1, cfg.threads);
    if (n_threads == 1 || paths.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (const BatchRecord& rec : result.records) {
        if (!rec.ok) ++result.failures;
    }
    return result;
}

std::string batch_to_jsonl(const BatchResult& result) {
    std::string out;
    for (const BatchRecord& rec : result.records) {
        if (rec.ok) {
            out += rec.json_line;
            out += '\n';
        }
    }
    return out;
}

std::vector<std::string> write_overlays(const BatchResult& result, const RunConfig& cfg) {
    namespace fs = std::filesystem;
    std::vector<std::string> written;
    if (!cfg.overlay_dir.empty()) fs::create_directories(cfg.overlay_dir);
    for (const BatchRecord& rec : result.records) {
        if (!rec.ok) continue;
        const Image img = load_ppm_file(rec.image_id);
        // Overlay the cropped region the plan refers to.
        const Image cropped = reassemble(patchify(img, cfg.patch_size));
        const Image overlay = render_mask_overlay(cropped, rec.plan, cfg.overlay_dim);
        const fs::path out =
            fs::path(cfg.overlay_dir) / (fs::path(rec.image_id).stem().string() + "_overlay.ppm");
        save_ppm_file(out.string(), overlay);
        written.push_back(out.string());
    }
    return written;
}

}  // namespace pgs
