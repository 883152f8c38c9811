#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pgs/image.hpp"
#include "pgs/matrix.hpp"
#include "pgs/selector.hpp"

namespace pgs {

struct ContrastiveConfig {
    double temperature = 0.07;
    bool learnable_temperature = false;
};

// B x d image and text embeddings, rows L2-normalized.
struct EmbeddingBatch {
    Matrix image_emb;
    Matrix text_emb;
};

struct InfoNceResult {
    double loss = 0.0;
    Matrix d_image;  // gradient of the loss w.r.t. image_emb entries
    Matrix d_text;
    double d_log_tau = 0.0;  // for the log-parameterized learnable temperature
};

// Symmetric InfoNCE: logits L_ij = <img_i, txt_j> / tau, cross-entropy over
// rows and columns against the diagonal, averaged. Gradients are analytic.
InfoNceResult info_nce(const EmbeddingBatch& batch, const ContrastiveConfig& cfg);

// Logit-level core of info_nce: loss plus gradient w.r.t. the logit matrix.
// Shifting every logit in one row (or column) by a constant leaves both
// outputs unchanged.
struct LogitLossResult {
    double loss = 0.0;
    Matrix d_logits;
};
LogitLossResult info_nce_logits(const Matrix& logits);

// Minimal dual encoder: shared linear patch embedding, mean-pooled image
// head, bag-of-tokens text head. All maps are plain matrices.
struct ToyEncoders {
    int patch_dim = 0;
    int embed_dim = 0;
    int vocab = 0;
    Matrix patch_embed;  // embed_dim x patch_dim
    Matrix image_head;   // embed_dim x embed_dim
    Matrix token_embed;  // vocab x embed_dim
    Matrix text_head;    // embed_dim x embed_dim

    static ToyEncoders init(int patch_dim, int embed_dim, int vocab, std::uint64_t seed);
};

// Encodes a batch. Masked patches are dropped before pooling, not zeroed.
EmbeddingBatch forward(const ToyEncoders& enc, const std::vector<PatchGrid>& images,
                       const std::vector<MaskPlan>& plans,
                       const std::vector<std::vector<int>>& tokens);

enum class MaskingMode { kNone, kRandom, kPgs };

// One synthetic image/caption pair: a colored shape on a noisy background,
// captioned by (shape, color, quadrant) token ids. Deterministic per seed.
struct SyntheticPair {
    Image image;
    std::vector<int> tokens;
};
SyntheticPair make_synthetic_pair(std::uint64_t seed, int image_size = 32);
int synthetic_vocab();

struct ToyTrainConfig {
    int steps = 200;
    int batch = 32;
    int steps_per_epoch = 50;
    double lr = 0.5;
    std::uint64_t seed = 0;
    MaskingMode masking = MaskingMode::kPgs;
    int image_size = 32;
    int patch_size = 8;
    int embed_dim = 64;
    int heldout_pairs = 64;
    ContrastiveConfig contrastive;
    MaskingConfig mask;
    SinkhornConfig sinkhorn;
    BlendSchedule sched;
};

struct ToyTrainReport {
    std::vector<double> loss_curve;       // one entry per step
    std::vector<double> recall_curve;     // recall@1 after each epoch
    double final_recall = 0.0;
    std::vector<double> realized_ratios;  // mean per-step mask ratio
    double masking_seconds = 0.0;
    double fwdbwd_seconds = 0.0;
};

// Plain SGD on the toy encoders over synthetic pairs. Aborts with a
// NumericError carrying a diagnostic dump if the loss goes non-finite.
ToyTrainReport train_toy(const ToyTrainConfig& cfg);

std::string report_to_csv(const ToyTrainReport& report);
std::string report_to_json(const ToyTrainReport& report, const ToyTrainConfig& cfg);

// Central-difference gradient check. Returns the max relative error
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
double finite_diff_check(const std::function<double(const std::vector<double>&)>& f,
                         const std::vector<double>& point, const std::vector<double>& analytic,
                         double eps);

}  // namespace pgs
