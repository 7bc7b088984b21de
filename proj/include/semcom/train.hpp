#pragma once

// End-to-end training loop, evaluation, checkpointing, and the training-SNR
// regimes (fixed dB or uniform draws per batch).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "semcom/channel.hpp"
#include "semcom/config.hpp"
#include "semcom/metrics.hpp"
#include "semcom/model.hpp"
#include "semcom/text.hpp"

namespace semcom::train {

struct SnrRegime {
    enum class Kind { fixed, uniform };
    Kind kind = Kind::fixed;
    double db = 10.0;       // fixed value
    double lo = 0, hi = 10;  // uniform range

    double sample(Rng& rng) const {
        return kind == Kind::fixed ? db : rng.uniform(lo, hi);
    }

    // "fixed:10" or "uniform:0:10"
    static SnrRegime parse(const std::string& spec);
    std::string str() const;
};

double sample_train_snr(const SnrRegime& regime, Rng& rng);

struct TrainConfig {
    int epochs = 10;
    int batch_size = 64;
    double lr_main = 1e-6;
    double lr_act = 1e-4;
    core::OptKind optimizer = core::OptKind::sgd;
    double momentum = 0.9;
    double clip_norm = 1.0;
    SnrRegime regime{SnrRegime::Kind::uniform, 10.0, 0.0, 10.0};
    channel::Kind channel = channel::Kind::awgn;
    std::uint64_t seed = 0;
    double val_fraction = 0.1;
    double eval_snr_db = 10.0;  // used for best-checkpoint retention
    std::size_t eval_sentences = 200;
    int warmup_steps = 0;  // linear learning-rate ramp over the first steps

    static TrainConfig from_config(const cfg::Config& c);
    void to_config(cfg::Config& c) const;
};

struct StepDiagnostics {
    double loss_total = 0;
    double loss_ce = 0;
    double ponder = 0;
    double mean_cycles = 0;
};

// One full optimization step: forward through encoder/channel/decoder, the
// combined loss, backward, clip, per-group update. Throws on non-finite loss.
StepDiagnostics train_step(model::SemanticModel& m, const text::Batch& batch,
                           channel::Kind chan_kind, double snr_db, Rng& chan_rng, Rng& drop_rng,
                           core::OptimizerT<float>& opt,
                           std::vector<core::ParamGroupT<float>>& groups, double clip_norm);

struct TrainResult {
    std::vector<double> step_losses;
    double first_steps_avg = 0;   // average over the first 100 steps
    double final_epoch_avg = 0;   // average loss over the last epoch
    double best_val_bleu1 = -1;
    std::string checkpoint_path;
    int steps = 0;
};

// Trains in place; writes the best-BLEU checkpoint (and ".meta" sidecar) to
// out_ckpt after each improving epoch. `log` may be null.
TrainResult train_model(model::SemanticModel& m, const std::vector<text::TokenizedSentence>& train_set,
                        const std::vector<text::TokenizedSentence>& val_set,
                        const text::Vocabulary& vocab, const TrainConfig& cfg,
                        const std::string& out_ckpt, std::ostream* log);

// Greedy decode of `sentences` at each SNR; BLEU-1..4, word-position error
// ratio, and mean halting cycles per record. Deterministic per seed.
std::vector<metrics::EvalRecord> evaluate_model(const model::SemanticModel& m,
                                                const std::vector<text::TokenizedSentence>& sentences,
                                                const text::Vocabulary& vocab,
                                                const std::vector<double>& snr_list,
                                                channel::Kind chan_kind, std::uint64_t seed,
                                                std::size_t batch_size = 64);

// Checkpoint glue: SCUT tensor file plus a ".meta" config sidecar so that a
// model can be reconstructed from the checkpoint path alone.
void save_model(const model::SemanticModel& m, const std::string& path);
model::SemanticModel load_model(const std::string& path);
// Loads tensors into an existing model; rejects unknown names and shape
// mismatches, naming the offending tensor.
void load_into(model::SemanticModel& m, const std::string& path);

// 90/10-style deterministic split helper.
void split_train_val(const std::vector<text::TokenizedSentence>& all, double val_fraction,
                     std::uint64_t seed, std::vector<text::TokenizedSentence>& train_out,
                     std::vector<text::TokenizedSentence>& val_out);

}  // namespace semcom::train
