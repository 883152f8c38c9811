#include "pgs/contrastive.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace pgs {

namespace {

// Compensated (Neumaier) summation: the mean of per-row losses must not
// depend on row order, so pair permutations reproduce the loss bit for bit.
double stable_sum(const std::vector<double>& xs) {
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over the pair
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

LogitLossResult info_nce_logits(const Matrix& logits) {
    if (!logits.square() || logits.rows == 0) {
        throw ShapeError("info_nce: logits must be a nonempty square matrix");
    }
    const std::size_t b = logits.rows;

    LogitLossResult res;
    res.d_logits = Matrix(b, b, 0.0);

    // Row-wise (image side) softmax cross-entropy against the diagonal.
    std::vector<double> row_losses(b), col_losses(b);
    Matrix p(b, b), q(b, b);
    for (std::size_t i = 0; i < b; ++i) {
        const double* row = logits.row_ptr(i);
        double m = row[0];
        for (std::size_t j = 1; j < b; ++j) m = std::max(m, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < b; ++j) {
            p(i, j) = std::exp(row[j] - m);
            z += p(i, j);
        }
        for (std::size_t j = 0; j < b; ++j) p(i, j) /= z;
        row_losses[i] = std::log(z) - (row[i] - m);
    }
    // Column-wise (text side).
    for (std::size_t j = 0; j < b; ++j) {
        double m = logits(0, j);
        for (std::size_t i = 1; i < b; ++i) m = std::max(m, logits(i, j));
        double z = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
            q(i, j) = std::exp(logits(i, j) - m);
            z += q(i, j);
        }
        for (std::size_t i = 0; i < b; ++i) q(i, j) /= z;
        col_losses[j] = std::log(z) - (logits(j, j) - m);
    }

    res.loss = (stable_sum(row_losses) + stable_sum(col_losses)) / (2.0 * double(b));

    const double scale = 1.0 / (2.0 * double(b));
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            const double delta = i == j ? 1.0 : 0.0;
            res.d_logits(i, j) = scale * ((p(i, j) - delta) + (q(i, j) - delta));
        }
    }
    return res;
}

InfoNceResult info_nce(const EmbeddingBatch& batch, const ContrastiveConfig& cfg) {
    if (cfg.temperature <= 0.0) throw ConfigError("info_nce: temperature must be positive");
    if (batch.image_emb.rows == 0) throw ConfigError("info_nce: empty batch");
    require_same_shape(batch.image_emb, batch.text_emb, "info_nce");

    const std::size_t b = batch.image_emb.rows;
    const std::size_t d = batch.image_emb.cols;
    const double inv_tau = 1.0 / cfg.temperature;

    Matrix logits(b, b);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            logits(i, j) = dot(batch.image_emb.row_ptr(i), batch.text_emb.row_ptr(j), d) * inv_tau;
        }
    }

    const LogitLossResult core = info_nce_logits(logits);

    InfoNceResult res;
    res.loss = core.loss;
    res.d_image = Matrix(b, d, 0.0);
    res.d_text = Matrix(b, d, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            res.d_log_tau -= core.d_logits(i, j) * logits(i, j);
            const double g = core.d_logits(i, j) * inv_tau;
            const double* txt = batch.text_emb.row_ptr(j);
            const double* img = batch.image_emb.row_ptr(i);
            double* di = res.d_image.row_ptr(i);
            double* dj = res.d_text.row_ptr(j);
            for (std::size_t c = 0; c < d; ++c) {
                di[c] += g * txt[c];
                dj[c] += g * img[c];
            }
        }
    }
    return res;
}

ToyEncoders ToyEncoders::init(int patch_dim, int embed_dim, int vocab, std::uint64_t seed) {
    ToyEncoders enc;
    enc.patch_dim = patch_dim;
    enc.embed_dim = embed_dim;
    enc.vocab = vocab;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.05);
    auto fill = [&](Matrix& m, std::size_t r, std::size_t c) {
        m = Matrix(r, c);
        for (double& v : m.data) v = gauss(rng);
    };
    fill(enc.patch_embed, std::size_t(embed_dim), std::size_t(patch_dim));
    fill(enc.image_head, std::size_t(embed_dim), std::size_t(embed_dim));
    fill(enc.token_embed, std::size_t(vocab), std::size_t(embed_dim));
    fill(enc.text_head, std::size_t(embed_dim), std::size_t(embed_dim));
    return enc;
}

namespace {

struct ForwardCache {
    // Per image: mean of unmasked patch pixel vectors, pooled embedding,
    // pre-normalization activations and norms for both branches.
    Matrix mean_pixels;   // B x patch_dim
    Matrix pooled;        // B x embed_dim
    Matrix img_pre;       // B x embed_dim
    std::vector<double> img_norm;
    Matrix token_mean;    // B x embed_dim
    Matrix txt_pre;       // B x embed_dim
    std::vector<double> txt_norm;
};

void matvec(const Matrix& m, const double* x, double* out) {
    for (std::size_t r = 0; r < m.rows; ++r) out[r] = dot(m.row_ptr(r), x, m.cols);
}

// y = x / |x|; returns |x|. Zero vectors are rejected upstream.
double normalize_into(const double* x, double* y, std::size_t n) {
    const double norm = std::sqrt(dot(x, x, n));
    if (norm == 0.0) throw NumericError("forward: zero-norm embedding");
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] / norm;
    return norm;
}

EmbeddingBatch forward_cached(const ToyEncoders& enc, const std::vector<PatchGrid>& images,
                              const std::vector<MaskPlan>& plans,
                              const std::vector<std::vector<int>>& tokens, ForwardCache* cache) {
    const std::size_t b = images.size();
    if (tokens.size() != b || (!plans.empty() && plans.size() != b)) {
        throw ShapeError("forward: batch size mismatch between images, plans and tokens");
    }
    const std::size_t d = std::size_t(enc.embed_dim);
    const std::size_t pd = std::size_t(enc.patch_dim);

    EmbeddingBatch out;
    out.image_emb = Matrix(b, d);
    out.text_emb = Matrix(b, d);
    if (cache) {
        cache->mean_pixels = Matrix(b, pd);
        cache->pooled = Matrix(b, d);
        cache->img_pre = Matrix(b, d);
        cache->img_norm.assign(b, 0.0);
        cache->token_mean = Matrix(b, d);
        cache->txt_pre = Matrix(b, d);
        cache->txt_norm.assign(b, 0.0);
    }

    std::vector<double> mean_px(pd), pooled(d), pre(d), tok_mean(d);
    for (std::size_t i = 0; i < b; ++i) {
        const PatchGrid& grid = images[i];
        if (std::size_t(grid.patch_dim()) != pd) {
            throw ShapeError("forward: patch_dim mismatch");
        }
        std::vector<bool> masked(std::size_t(grid.n_patches()), false);
        if (!plans.empty()) {
            for (int m : plans[i].masked) masked[std::size_t(m)] = true;
        }

        // Patch embedding is linear and pooling is a mean, so pooling the
        // pixel vectors first computes the same embedding as pooling the
        // per-patch embeddings of the kept set.
        std::fill(mean_px.begin(), mean_px.end(), 0.0);
        int kept = 0;
        for (int p = 0; p < grid.n_patches(); ++p) {
            if (masked[std::size_t(p)]) continue;
            ++kept;
            const auto& patch = grid.patches[std::size_t(p)];
            for (std::size_t k = 0; k < pd; ++k) mean_px[k] += patch[k] / 255.0;
        }
        if (kept == 0) throw NumericError("forward: every patch of image is masked");
        for (double& v : mean_px) v /= double(kept);

        matvec(enc.patch_embed, mean_px.data(), pooled.data());
        matvec(enc.image_head, pooled.data(), pre.data());
        const double norm = normalize_into(pre.data(), out.image_emb.row_ptr(i), d);

        if (cache) {
            std::copy(mean_px.begin(), mean_px.end(), cache->mean_pixels.row_ptr(i));
            std::copy(pooled.begin(), pooled.end(), cache->pooled.row_ptr(i));
            std::copy(pre.begin(), pre.end(), cache->img_pre.row_ptr(i));
            cache->img_norm[i] = norm;
        }

        const std::vector<int>& toks = tokens[i];
        if (toks.empty()) throw NumericError("forward: empty token list");
        std::fill(tok_mean.begin(), tok_mean.end(), 0.0);
        for (int t : toks) {
            if (t < 0 || t >= enc.vocab) throw ConfigError("forward: token id out of vocab");
            const double* row = enc.token_embed.row_ptr(std::size_t(t));
            for (std::size_t k = 0; k < d; ++k) tok_mean[k] += row[k];
        }
        for (double& v : tok_mean) v /= double(toks.size());

        matvec(enc.text_head, tok_mean.data(), pre.data());
        const double tnorm = normalize_into(pre.data(), out.text_emb.row_ptr(i), d);

        if (cache) {
            std::copy(tok_mean.begin(), tok_mean.end(), cache->token_mean.row_ptr(i));
            std::copy(pre.begin(), pre.end(), cache->txt_pre.row_ptr(i));
            cache->txt_norm[i] = tnorm;
        }
    }
    return out;
}

}  // namespace

EmbeddingBatch forward(const ToyEncoders& enc, const std::vector<PatchGrid>& images,
                       const std::vector<MaskPlan>& plans,
                       const std::vector<std::vector<int>>& tokens) {
    return forward_cached(enc, images, plans, tokens, nullptr);
}

int synthetic_vocab() { return 20; }  // 4 shapes + 16 colors

namespace {

constexpr int kShapes = 4;
constexpr int kColors = 16;

void hsv_to_rgb(double h, double s, double v, std::uint8_t rgb[3]) {
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, bl = 0;
    switch (int(hp) % 6) {
        case 0: r = c, g = x; break;
        case 1: r = x, g = c; break;
        case 2: g = c, bl = x; break;
        case 3: g = x, bl = c; break;
        case 4: r = x, bl = c; break;
        default: r = c, bl = x; break;
    }
    const double m = v - c;
    rgb[0] = std::uint8_t(std::lround((r + m) * 255.0));
    rgb[1] = std::uint8_t(std::lround((g + m) * 255.0));
    rgb[2] = std::uint8_t(std::lround((bl + m) * 255.0));
}

std::uint64_t rng_range(std::mt19937_64& rng, std::uint64_t range) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % range;
}

SyntheticPair make_pair_from_combo(int shape, int color, std::uint64_t noise_seed,
                                   int image_size) {
    std::mt19937_64 rng(noise_seed);

    SyntheticPair pair;
    pair.image.width = image_size;
    pair.image.height = image_size;
    pair.image.data.resize(std::size_t(image_size) * image_size * 3);

    // Gray noise background.
    for (std::size_t i = 0; i < pair.image.data.size(); i += 3) {
        const std::uint8_t v = std::uint8_t(40 + rng_range(rng, 120));
        pair.image.data[i] = v;
        pair.image.data[i + 1] = v;
        pair.image.data[i + 2] = v;
    }

    std::uint8_t rgb[3];
    hsv_to_rgb(double(color) / kColors, 0.9, 0.95, rgb);

    const int cx = image_size / 2 + int(rng_range(rng, 5)) - 2;
    const int cy = image_size / 2 + int(rng_range(rng, 5)) - 2;
    const int r = image_size * 3 / 10;

    auto inside = [&](int x, int y) -> bool {
        const int dx = x - cx, dy = y - cy;
        switch (shape) {
            case 0:  // square
                return std::abs(dx) <= r && std::abs(dy) <= r;
            case 1:  // disk
                return dx * dx + dy * dy <= r * r;
            case 2:  // upward triangle
                return dy >= -r && dy <= r && std::abs(dx) <= (dy + r) / 2;
            default:  // ring
                return dx * dx + dy * dy <= r * r && dx * dx + dy * dy >= (r / 2) * (r / 2);
        }
    };
    for (int y = 0; y < image_size; ++y) {
        for (int x = 0; x < image_size; ++x) {
            if (x >= 0 && y >= 0 && x < image_size && y < image_size && inside(x, y)) {
                std::uint8_t* p = pair.image.pixel(x, y);
                p[0] = rgb[0];
                p[1] = rgb[1];
                p[2] = rgb[2];
            }
        }
    }

    pair.tokens = {shape, kShapes + color};
    return pair;
}

}  // namespace

SyntheticPair make_synthetic_pair(std::uint64_t seed, int image_size) {
    std::mt19937_64 rng(seed);
    const int shape = int(rng_range(rng, kShapes));
    const int color = int(rng_range(rng, kColors));
    return make_pair_from_combo(shape, color, rng(), image_size);
}

namespace {

struct Gradients {
    Matrix patch_embed, image_head, token_embed, text_head;

    explicit Gradients(const ToyEncoders& enc)
        : patch_embed(enc.patch_embed.rows, enc.patch_embed.cols, 0.0),
          image_head(enc.image_head.rows, enc.image_head.cols, 0.0),
          token_embed(enc.token_embed.rows, enc.token_embed.cols, 0.0),
          text_head(enc.text_head.rows, enc.text_head.cols, 0.0) {}
};

// d/dx of y = x/|x| applied to an upstream gradient g: (g - (g.y) y) / |x|.
void normalize_backward(const double* g, const double* y, double norm, double* out,
                        std::size_t n) {
    const double gy = dot(g, y, n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (g[i] - gy * y[i]) / norm;
}

void add_outer(Matrix& acc, const double* u, const double* v) {
    for (std::size_t r = 0; r < acc.rows; ++r) {
        double* row = acc.row_ptr(r);
        const double ur = u[r];
        for (std::size_t c = 0; c < acc.cols; ++c) row[c] += ur * v[c];
    }
}

void matvec_transposed(const Matrix& m, const double* x, double* out) {
    std::fill(out, out + m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.row_ptr(r);
        for (std::size_t c = 0; c < m.cols; ++c) out[c] += row[c] * x[r];
    }
}

void backward(const ToyEncoders& enc, const ForwardCache& cache, const EmbeddingBatch& emb,
              const std::vector<std::vector<int>>& tokens, const InfoNceResult& grads,
              Gradients* out) {
    const std::size_t b = emb.image_emb.rows;
    const std::size_t d = std::size_t(enc.embed_dim);
    std::vector<double> g_pre(d), g_pooled(d), g_tok(d);
    for (std::size_t i = 0; i < b; ++i) {
        // Image branch.
        normalize_backward(grads.d_image.row_ptr(i), emb.image_emb.row_ptr(i), cache.img_norm[i],
                           g_pre.data(), d);
        add_outer(out->image_head, g_pre.data(), cache.pooled.row_ptr(i));
        matvec_transposed(enc.image_head, g_pre.data(), g_pooled.data());
        add_outer(out->patch_embed, g_pooled.data(), cache.mean_pixels.row_ptr(i));

        // Text branch.
        normalize_backward(grads.d_text.row_ptr(i), emb.text_emb.row_ptr(i), cache.txt_norm[i],
                           g_pre.data(), d);
        add_outer(out->text_head, g_pre.data(), cache.token_mean.row_ptr(i));
        matvec_transposed(enc.text_head, g_pre.data(), g_tok.data());
        const auto& toks = tokens[i];
        const double inv = 1.0 / double(toks.size());
        for (int t : toks) {
            double* row = out->token_embed.row_ptr(std::size_t(t));
            for (std::size_t k = 0; k < d; ++k) row[k] += g_tok[k] * inv;
        }
    }
}

void sgd_step(Matrix& w, const Matrix& g, double lr) {
    for (std::size_t i = 0; i < w.data.size(); ++i) w.data[i] -= lr * g.data[i];
}

double recall_at_1(const ToyEncoders& enc, const std::vector<PatchGrid>& images,
                   const std::vector<std::vector<int>>& tokens) {
    const EmbeddingBatch emb = forward(enc, images, {}, tokens);
    const std::size_t b = emb.image_emb.rows;
    int hits = 0;
    for (std::size_t i = 0; i < b; ++i) {
        std::size_t best = 0;
        double best_sim = -2.0;
        for (std::size_t j = 0; j < b; ++j) {
            const double sim =
                dot(emb.image_emb.row_ptr(i), emb.text_emb.row_ptr(j), emb.image_emb.cols);
            if (sim > best_sim) {
                best_sim = sim;
                best = j;
            }
        }
        if (best == i) ++hits;
    }
    return double(hits) / double(b);
}

}  // namespace

ToyTrainReport train_toy(const ToyTrainConfig& cfg) {
    if (cfg.batch < 1) throw ConfigError("train_toy: batch must be >= 1");
    if (cfg.image_size % cfg.patch_size != 0) {
        throw ConfigError("train_toy: image_size must be a multiple of patch_size");
    }

    const int patch_dim = cfg.patch_size * cfg.patch_size * 3;
    ToyEncoders enc = ToyEncoders::init(patch_dim, cfg.embed_dim, synthetic_vocab(), cfg.seed);
    double log_tau = std::log(cfg.contrastive.temperature);

    // Held-out set: one pair per (shape, color) combo, deterministic order.
    std::vector<PatchGrid> held_images;
    std::vector<std::vector<int>> held_tokens;
    for (int combo = 0; combo < kShapes * kColors; ++combo) {
        const SyntheticPair pair = make_pair_from_combo(combo % kShapes, combo / kShapes,
                                                        mix_seed(cfg.seed, 1'000'000 + combo),
                                                        cfg.image_size);
        held_images.push_back(patchify(pair.image, cfg.patch_size));
        held_tokens.push_back(pair.tokens);
    }
    if (cfg.heldout_pairs < int(held_images.size())) {
        held_images.resize(std::size_t(cfg.heldout_pairs));
        held_tokens.resize(std::size_t(cfg.heldout_pairs));
    }

    ToyTrainReport report;
    using Clock = std::chrono::steady_clock;

    std::vector<int> combo_order(kShapes * kColors);
    std::iota(combo_order.begin(), combo_order.end(), 0);

    for (int step = 0; step < cfg.steps; ++step) {
        // Batch combos drawn without replacement so in-batch caption
        // collisions cannot put a floor under the loss.
        std::mt19937_64 step_rng(mix_seed(cfg.seed, std::uint64_t(step)));
        for (std::size_t i = combo_order.size() - 1; i > 0; --i) {
            const std::size_t j = rng_range(step_rng, i + 1);
            std::swap(combo_order[i], combo_order[j]);
        }
        const int bsz = std::min(cfg.batch, int(combo_order.size()));

        std::vector<PatchGrid> images;
        std::vector<std::vector<int>> tokens;
        images.reserve(std::size_t(bsz));
        for (int i = 0; i < bsz; ++i) {
            const int combo = combo_order[std::size_t(i)];
            const SyntheticPair pair = make_pair_from_combo(
                combo % kShapes, combo / kShapes,
                mix_seed(cfg.seed, std::uint64_t(step) * 4096 + std::uint64_t(i)), cfg.image_size);
            images.push_back(patchify(pair.image, cfg.patch_size));
            tokens.push_back(pair.tokens);
        }

        // Masking.
        const auto mask_t0 = Clock::now();
        std::vector<MaskPlan> plans;
        double ratio_sum = 0.0;
        if (cfg.masking != MaskingMode::kNone) {
            plans.resize(images.size());
            for (int i = 0; i < bsz; ++i) {
                const std::uint64_t img_seed =
                    mix_seed(cfg.seed ^ 0xa5a5a5a5ULL, std::uint64_t(step) * 4096 + std::uint64_t(i));
                PatchGrid& grid = images[std::size_t(i)];
                if (cfg.masking == MaskingMode::kRandom) {
                    std::mt19937_64 rng(img_seed);
                    plans[std::size_t(i)].masked =
                        random_mask(grid.n_patches(), cfg.mask.upper_ratio, rng);
                    plans[std::size_t(i)].grid_h = grid.grid_h;
                    plans[std::size_t(i)].grid_w = grid.grid_w;
                    plans[std::size_t(i)].ratio =
                        double(plans[std::size_t(i)].masked.size()) / double(grid.n_patches());
                } else {
                    // The masking features are the trainer's own patch
                    // embeddings, evaluated with the current weights.
                    EmbeddingMatrix feats(std::size_t(grid.n_patches()), std::size_t(cfg.embed_dim));
                    std::vector<double> px(std::size_t(patch_dim), 0.0);
                    for (int p = 0; p < grid.n_patches(); ++p) {
                        const auto& pp = grid.patches[std::size_t(p)];
                        for (int k = 0; k < patch_dim; ++k) {
                            px[std::size_t(k)] = pp[std::size_t(k)] / 255.0;
                        }
                        matvec(enc.patch_embed, px.data(), feats.row_ptr(std::size_t(p)));
                    }
                    MaskingConfig mc = cfg.mask;
                    mc.seed = img_seed;
                    const int epoch = step / std::max(1, cfg.steps_per_epoch);
                    plans[std::size_t(i)] =
                        generate_mask(grid, feats, epoch, mc, cfg.sinkhorn, cfg.sched);
                }
                ratio_sum += plans[std::size_t(i)].ratio;
            }
        }
        const auto mask_t1 = Clock::now();
        report.masking_seconds += std::chrono::duration<double>(mask_t1 - mask_t0).count();
        report.realized_ratios.push_back(plans.empty() ? 0.0 : ratio_sum / double(bsz));

        // Forward, loss, backward, SGD.
        ForwardCache cache;
        const EmbeddingBatch emb = forward_cached(enc, images, plans, tokens, &cache);
        ContrastiveConfig step_contrastive = cfg.contrastive;
        step_contrastive.temperature = std::exp(log_tau);
        const InfoNceResult nce = info_nce(emb, step_contrastive);
        if (!std::isfinite(nce.loss)) {
            std::ostringstream dump;
            dump << "train_toy: loss diverged at step " << step << " (loss=" << nce.loss << ")";
            dump << "; recent losses:";
            const std::size_t from = report.loss_curve.size() > 8 ? report.loss_curve.size() - 8 : 0;
            for (std::size_t i = from; i < report.loss_curve.size(); ++i) {
                dump << " " << report.loss_curve[i];
            }
            throw NumericError(dump.str());
        }
        report.loss_curve.push_back(nce.loss);

        Gradients grads(enc);
        backward(enc, cache, emb, tokens, nce, &grads);
        sgd_step(enc.patch_embed, grads.patch_embed, cfg.lr);
        sgd_step(enc.image_head, grads.image_head, cfg.lr);
        sgd_step(enc.token_embed, grads.token_embed, cfg.lr);
        sgd_step(enc.text_head, grads.text_head, cfg.lr);
        if (cfg.contrastive.learnable_temperature) log_tau -= cfg.lr * nce.d_log_tau;
        const auto step_t1 = Clock::now();
        report.fwdbwd_seconds += std::chrono::duration<double>(step_t1 - mask_t1).count();

        if ((step + 1) % std::max(1, cfg.steps_per_epoch) == 0 || step + 1 == cfg.steps) {
            report.recall_curve.push_back(recall_at_1(enc, held_images, held_tokens));
        }
    }

    report.final_recall = report.recall_curve.empty() ? 0.0 : report.recall_curve.back();
    return report;
}

std::string report_to_csv(const ToyTrainReport& report) {
    std::ostringstream out;
    out << "step,loss,mask_ratio\n";
    for (std::size_t i = 0; i < report.loss_curve.size(); ++i) {
        out << i << "," << report.loss_curve[i] << ","
            << (i < report.realized_ratios.size() ? report.realized_ratios[i] : 0.0) << "\n";
    }
    out << "\nepoch,recall_at_1\n";
    for (std::size_t i = 0; i < report.recall_curve.size(); ++i) {
        out << i << "," << report.recall_curve[i] << "\n";
    }
    return out.str();
}

std::string report_to_json(const ToyTrainReport& report, const ToyTrainConfig& cfg) {
    nlohmann::json j;
    j["loss_curve"] = report.loss_curve;
    j["recall_at_1"] = report.recall_curve;
    j["final_recall"] = report.final_recall;
    j["realized_ratios"] = report.realized_ratios;
    j["masking_seconds"] = report.masking_seconds;
    j["fwdbwd_seconds"] = report.fwdbwd_seconds;
    const double total = report.masking_seconds + report.fwdbwd_seconds;
    j["masking_fraction"] = total > 0.0 ? report.masking_seconds / total : 0.0;
    j["config"] = {
        {"steps", cfg.steps},
        {"batch", cfg.batch},
        {"lr", cfg.lr},
        {"seed", cfg.seed},
        {"masking", cfg.masking == MaskingMode::kNone     ? "none"
                    : cfg.masking == MaskingMode::kRandom ? "random"
                                                          : "pgs"},
        {"image_size", cfg.image_size},
        {"patch_size", cfg.patch_size},
        {"embed_dim", cfg.embed_dim},
        {"temperature", cfg.contrastive.temperature},
        {"lower_ratio", cfg.mask.lower_ratio},
        {"upper_ratio", cfg.mask.upper_ratio},
    };
    return j.dump(2);
}

double finite_diff_check(const std::function<double(const std::vector<double>&)>& f,
                         const std::vector<double>& point, const std::vector<double>& analytic,
                         double eps) {
    if (point.size() != analytic.size()) {
        throw ShapeError("finite_diff_check: point/gradient size mismatch");
    }
    if (eps <= 0.0) throw ConfigError("finite_diff_check: eps must be positive");
    double worst = 0.0;
    std::vector<double> probe = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        probe[i] = point[i] + eps;
        const double hi = f(probe);
        probe[i] = point[i] - eps;
        const double lo = f(probe);
        probe[i] = point[i];
        const double numeric = (hi - lo) / (2.0 * eps);
        const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
        worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
    return worst;
}

}  // namespace pgs
