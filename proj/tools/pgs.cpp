// pgs: edge-aware, transport-normalized patch masking over PPM images,
// plus benchmark and toy-training harnesses.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pgs/batch.hpp"
#include "pgs/bench.hpp"
#include "pgs/contrastive.hpp"
#include "pgs/otn.hpp"

namespace {

struct CliOptions {
    pgs::RunConfig run;
    std::string format = "json";
    std::string detector = "sobel";
    std::string neighborhood = "adjacent";
    double alpha_override = -1.0;  // <0: use the schedule
    bool no_edge = false;
    bool no_otn = false;
};

void add_pipeline_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--initial-ratio", opt.run.mask.initial_ratio, "Initial candidate ratio");
    cmd->add_option("--lower-ratio", opt.run.mask.lower_ratio, "Lower masking-ratio bound");
    cmd->add_option("--upper-ratio", opt.run.mask.upper_ratio, "Upper masking-ratio bound");
    cmd->add_option("--edge-quantile", opt.run.mask.edge_quantile,
                    "Quantile of nonzero patch edge scores above which patches are retained");
    cmd->add_option("--edge-detector", opt.detector, "sobel|canny")
        ->check(CLI::IsMember({"sobel", "canny"}));
    cmd->add_option("--canny-low", opt.run.mask.canny_low, "Canny low threshold");
    cmd->add_option("--canny-high", opt.run.mask.canny_high, "Canny high threshold");
    cmd->add_option("--neighborhood", opt.neighborhood, "adjacent|global")
        ->check(CLI::IsMember({"adjacent", "global"}));
    cmd->add_flag("--no-ed", opt.no_edge, "Disable edge retention");
    cmd->add_flag("--no-otn", opt.no_otn, "Disable optimal transport normalization");
    cmd->add_option("--alpha", opt.alpha_override, "Fixed blending weight (overrides schedule)");
    cmd->add_option("--alpha-min", opt.run.sched.alpha_min, "Schedule start value");
    cmd->add_option("--alpha-max", opt.run.sched.alpha_max, "Schedule end value");
    cmd->add_option("--alpha-ramp-epochs", opt.run.sched.ramp_epochs, "Epochs to reach alpha-max");
    cmd->add_option("--sinkhorn-iters", opt.run.sinkhorn.max_iters, "Max normalization cycles");
    cmd->add_option("--sinkhorn-tol", opt.run.sinkhorn.tol, "Row/column sum tolerance");
    cmd->add_option("--patch-size", opt.run.patch_size, "Patch size in pixels");
    cmd->add_option("--epoch", opt.run.epoch, "Epoch index fed to the alpha schedule");
    cmd->add_option("--feature-dim", opt.run.feature_dim, "Random projection width");
    cmd->add_option("--threads", opt.run.threads, "Worker threads");
}

void finalize(CliOptions& opt) {
    opt.run.mask.detector =
        opt.detector == "canny" ? pgs::EdgeDetector::kCanny : pgs::EdgeDetector::kSobel;
    opt.run.mask.neighborhood = opt.neighborhood == "global" ? pgs::Neighborhood::kGlobal
                                                             : pgs::Neighborhood::kAdjacent8;
    opt.run.mask.use_edge = !opt.no_edge;
    opt.run.mask.use_otn = !opt.no_otn;
    if (opt.alpha_override >= 0.0) {
        opt.run.sched.alpha_min = opt.alpha_override;
        opt.run.sched.alpha_max = opt.alpha_override;
    }
    if (opt.format == "json") {
        opt.run.format = pgs::OutputFormat::kJson;
    } else if (opt.format == "overlay") {
        opt.run.format = pgs::OutputFormat::kOverlay;
    } else {
        opt.run.format = pgs::OutputFormat::kBoth;
    }
}

void apply_env_seed(CLI::Option* seed_opt, std::uint64_t& seed) {
    // PGS_SEED is the fallback when neither the flag nor the config file
    // set a seed.
    if (seed_opt->count() == 0) {
        if (const char* env = std::getenv("PGS_SEED")) {
            seed = std::strtoull(env, nullptr, 10);
        }
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw pgs::ConfigError("cannot open " + path + " for writing");
    out << text;
}

int cmd_mask(const CliOptions& opt, bool overlay_only) {
    const auto paths = pgs::expand_inputs(opt.run.inputs);
    if (paths.empty()) {
        std::cerr << "warning: no inputs matched\n";
        return 0;
    }
    const pgs::BatchResult result = pgs::run_mask_batch(opt.run);

    if (!overlay_only && opt.run.format != pgs::OutputFormat::kOverlay) {
        write_text(opt.run.output, pgs::batch_to_jsonl(result));
    }
    if (overlay_only || opt.run.format != pgs::OutputFormat::kJson) {
        pgs::write_overlays(result, opt.run);
    }
    if (result.failures > 0) {
        std::cerr << result.failures << " input(s) failed:\n";
        for (const auto& rec : result.records) {
            if (!rec.ok) std::cerr << "  " << rec.image_id << ": " << rec.error << "\n";
        }
        return 1;
    }
    return 0;
}

pgs::Matrix parse_matrix_csv(const std::string& text) {
    pgs::Matrix m;
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        int col = 0;
        while (std::getline(ls, cell, ',')) {
            ++col;
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw pgs::DecodeError("csv: bad number at line " + std::to_string(lineno) +
                                       ", column " + std::to_string(col));
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw pgs::DecodeError("csv: line " + std::to_string(lineno) + " has " +
                                   std::to_string(row.size()) + " cells, expected " +
                                   std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw pgs::DecodeError("csv: empty matrix");
    if (rows.size() != rows.front().size()) {
        throw pgs::DecodeError("csv: matrix is " + std::to_string(rows.size()) + "x" +
                               std::to_string(rows.front().size()) + ", want square");
    }
    m = pgs::Matrix(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

pgs::Matrix parse_matrix_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw pgs::DecodeError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    // JSON array-of-arrays, else CSV.
    const std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw pgs::DecodeError(std::string("json: ") + e.what());
        }
        const std::size_t n = j.size();
        pgs::Matrix m(n, n);
        for (std::size_t r = 0; r < n; ++r) {
            if (!j[r].is_array() || j[r].size() != n) {
                throw pgs::DecodeError("json: row " + std::to_string(r) + " has " +
                                       std::to_string(j[r].size()) + " entries, want " +
                                       std::to_string(n) + " (square matrix)");
            }
            for (std::size_t c = 0; c < n; ++c) m(r, c) = j[r][c].get<double>();
        }
        return m;
    }
    return parse_matrix_csv(text);
}

int cmd_sinkhorn_debug(const std::string& input, const std::string& output,
                       const pgs::SinkhornConfig& cfg) {
    const pgs::Matrix m = parse_matrix_file(input);
    const pgs::SinkhornResult res = pgs::sinkhorn(m, cfg);

    nlohmann::json j;
    std::vector<std::vector<double>> out_rows(res.m.rows);
    for (std::size_t r = 0; r < res.m.rows; ++r) {
        out_rows[r].assign(res.m.row_ptr(r), res.m.row_ptr(r) + res.m.cols);
    }
    j["matrix"] = out_rows;
    j["iterations"] = res.iterations;
    j["deviation"] = res.deviation;
    j["deviation_trace"] = res.trace;
    write_text(output, j.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Patch masking with edge retention and transport-normalized similarity"};
    app.require_subcommand(1);

    CliOptions opt;
    std::string toy_masking = "pgs";
    pgs::ToyTrainConfig toy;
    std::string toy_prefix = "toy_train";
    int bench_repeat = 20;
    bool bench_no_probe = false;
    std::string sk_input, sk_output = "-";

    auto add_common = [&](CLI::App* cmd) {
        cmd->set_config("--config", "", "Flat key=value config file");
        auto* seed = cmd->add_option("--seed", opt.run.seed, "Global RNG seed");
        cmd->parse_complete_callback([seed, &opt] { apply_env_seed(seed, opt.run.seed); });
        return cmd;
    };

    CLI::App* mask = add_common(app.add_subcommand("mask", "Mask a batch of PPM images"));
    mask->add_option("inputs", opt.run.inputs, "PPM files or globs");
    mask->add_option("--output", opt.run.output, "JSONL destination, - for stdout");
    mask->add_option("--format", opt.format, "json|overlay|both")
        ->check(CLI::IsMember({"json", "overlay", "both"}));
    mask->add_option("--overlay-dir", opt.run.overlay_dir, "Directory for overlay images");
    mask->add_option("--dim", opt.run.overlay_dim, "Overlay darkening factor in [0,1]");
    add_pipeline_options(mask, opt);

    CLI::App* vis = add_common(app.add_subcommand("visualize", "Render mask overlays"));
    vis->add_option("inputs", opt.run.inputs, "PPM files or globs");
    vis->add_option("--overlay-dir", opt.run.overlay_dir, "Directory for overlay images");
    vis->add_option("--dim", opt.run.overlay_dim, "Overlay darkening factor in [0,1]");
    add_pipeline_options(vis, opt);

    CLI::App* bench = add_common(app.add_subcommand("bench", "Per-stage pipeline timings"));
    bench->add_option("inputs", opt.run.inputs, "Optional PPM input (synthetic if absent)");
    bench->add_option("--repeat", bench_repeat, "Measured repetitions after warm-up");
    bench->add_flag("--no-toy-probe", bench_no_probe, "Skip the toy-train step probe");
    bench->add_option("--output", opt.run.output, "Report destination, - for stdout");
    add_pipeline_options(bench, opt);

    CLI::App* train = add_common(app.add_subcommand("toy-train", "Train the toy dual encoder"));
    train->add_option("--masking", toy_masking, "none|random|pgs")
        ->check(CLI::IsMember({"none", "random", "pgs"}));
    train->add_option("--steps", toy.steps, "Training steps");
    train->add_option("--batch", toy.batch, "Batch size");
    train->add_option("--lr", toy.lr, "SGD step size");
    train->add_option("--steps-per-epoch", toy.steps_per_epoch, "Steps between recall passes");
    train->add_option("--embed-dim", toy.embed_dim, "Embedding width");
    train->add_option("--image-size", toy.image_size, "Synthetic image size");
    train->add_option("--temperature", toy.contrastive.temperature, "InfoNCE temperature");
    train->add_flag("--learnable-temperature", toy.contrastive.learnable_temperature,
                    "Learn log-tau by SGD");
    train->add_option("--output-prefix", toy_prefix, "Writes <prefix>.csv and <prefix>.json");
    add_pipeline_options(train, opt);
    train->add_option("--toy-patch-size", toy.patch_size, "Patch size for the toy images");

    CLI::App* skd = add_common(
        app.add_subcommand("sinkhorn-debug", "Normalize a matrix and dump the deviation trace"));
    skd->add_option("input", sk_input, "CSV or JSON matrix file")->required();
    skd->add_option("--output", sk_output, "JSON destination, - for stdout");
    skd->add_option("--sinkhorn-iters", opt.run.sinkhorn.max_iters, "Max normalization cycles");
    skd->add_option("--sinkhorn-tol", opt.run.sinkhorn.tol, "Row/column sum tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        finalize(opt);
        if (mask->parsed()) return cmd_mask(opt, false);
        if (vis->parsed()) return cmd_mask(opt, true);
        if (bench->parsed()) {
            const pgs::BenchReport report = pgs::run_bench(opt.run, bench_repeat, !bench_no_probe);
            write_text(opt.run.output, pgs::bench_to_json(report) + "\n");
            return 0;
        }
        if (train->parsed()) {
            toy.seed = opt.run.seed;
            toy.mask = opt.run.mask;
            toy.sinkhorn = opt.run.sinkhorn;
            toy.sched = opt.run.sched;
            toy.masking = toy_masking == "none"     ? pgs::MaskingMode::kNone
                          : toy_masking == "random" ? pgs::MaskingMode::kRandom
                                                    : pgs::MaskingMode::kPgs;
            const pgs::ToyTrainReport report = pgs::train_toy(toy);
            write_text(toy_prefix + ".csv", pgs::report_to_csv(report));
            write_text(toy_prefix + ".json", pgs::report_to_json(report, toy) + "\n");
            std::cout << "final_loss=" << report.loss_curve.back()
                      << " recall@1=" << report.final_recall
                      << " masking_s=" << report.masking_seconds
                      << " fwdbwd_s=" << report.fwdbwd_seconds << "\n";
            return 0;
        }
        if (skd->parsed()) return cmd_sinkhorn_debug(sk_input, sk_output, opt.run.sinkhorn);
    } catch (const pgs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
