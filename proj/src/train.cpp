#include "semcom/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "semcom/checkpoint.hpp"

namespace semcom::train {

SnrRegime SnrRegime::parse(const std::string& spec) {
    SnrRegime r;
    std::istringstream is(spec);
    std::string kind;
    std::getline(is, kind, ':');
    if (kind == "fixed") {
        r.kind = Kind::fixed;
        std::string v;
        if (!std::getline(is, v)) throw std::invalid_argument("fixed regime needs a dB value");
        r.db = std::stod(v);
    } else if (kind == "uniform") {
        r.kind = Kind::uniform;
        std::string lo, hi;
        if (!std::getline(is, lo, ':') || !std::getline(is, hi))
            throw std::invalid_argument("uniform regime needs lo:hi dB bounds");
        r.lo = std::stod(lo);
        r.hi = std::stod(hi);
        if (r.lo > r.hi) throw std::invalid_argument("uniform regime needs lo <= hi");
    } else {
        throw std::invalid_argument("unknown SNR regime: " + spec);
    }
    return r;
}

std::string SnrRegime::str() const {
    std::ostringstream os;
    if (kind == Kind::fixed)
        os << "fixed:" << db;
    else
        os << "uniform:" << lo << ":" << hi;
    return os.str();
}

double sample_train_snr(const SnrRegime& regime, Rng& rng) { return regime.sample(rng); }

TrainConfig TrainConfig::from_config(const cfg::Config& c) {
    TrainConfig t;
    t.epochs = static_cast<int>(c.get_int("train.epochs", t.epochs));
    t.batch_size = static_cast<int>(c.get_int("train.batch_size", t.batch_size));
    t.lr_main = c.get_double("train.lr_main", t.lr_main);
    t.lr_act = c.get_double("train.lr_act", t.lr_act);
    t.optimizer = core::opt_kind_from_string(c.get_str("train.optimizer", "sgd"));
    t.momentum = c.get_double("train.momentum", t.momentum);
    t.clip_norm = c.get_double("train.clip_norm", t.clip_norm);
    t.regime = SnrRegime::parse(c.get_str("train.snr_regime", "uniform:0:10"));
    t.channel = channel::kind_from_string(c.get_str("train.channel", "awgn"));
    t.seed = static_cast<std::uint64_t>(c.get_int("train.seed", 0));
    t.val_fraction = c.get_double("train.val_fraction", t.val_fraction);
    t.eval_snr_db = c.get_double("train.eval_snr_db", t.eval_snr_db);
    t.eval_sentences =
        static_cast<std::size_t>(c.get_int("train.eval_sentences", static_cast<long>(t.eval_sentences)));
    t.warmup_steps = static_cast<int>(c.get_int("train.warmup_steps", t.warmup_steps));
    return t;
}

void TrainConfig::to_config(cfg::Config& c) const {
    c.set("train.epochs", std::to_string(epochs));
    c.set("train.batch_size", std::to_string(batch_size));
    c.set("train.lr_main", std::to_string(lr_main));
    c.set("train.lr_act", std::to_string(lr_act));
    c.set("train.optimizer", optimizer == core::OptKind::sgd
                                 ? "sgd"
                                 : (optimizer == core::OptKind::momentum ? "momentum" : "adam"));
    c.set("train.momentum", std::to_string(momentum));
    c.set("train.clip_norm", std::to_string(clip_norm));
    c.set("train.snr_regime", regime.str());
    c.set("train.channel", channel::kind_name(channel));
    c.set("train.seed", std::to_string(seed));
    c.set("train.val_fraction", std::to_string(val_fraction));
    c.set("train.eval_snr_db", std::to_string(eval_snr_db));
    c.set("train.eval_sentences", std::to_string(eval_sentences));
    c.set("train.warmup_steps", std::to_string(warmup_steps));
}

StepDiagnostics train_step(model::SemanticModel& m, const text::Batch& batch,
                           channel::Kind chan_kind, double snr_db, Rng& chan_rng, Rng& drop_rng,
                           core::OptimizerT<float>& opt,
                           std::vector<core::ParamGroupT<float>>& groups, double clip_norm) {
    core::Tape tape;
    Rng* drop = m.cfg.dropout > 0.0 ? &drop_rng : nullptr;
    auto stats = m.forward_batch(&tape, batch, chan_kind, snr_db, chan_rng, drop);
    if (!std::isfinite(stats.loss_total))
        throw std::runtime_error("non-finite training loss; aborting at the last saved checkpoint");
    tape.backward(stats.loss);
    if (clip_norm > 0) core::clip_global_norm(groups, static_cast<float>(clip_norm));
    opt.step(groups);
    return {stats.loss_total, stats.loss_ce, stats.ponder, stats.mean_cycles()};
}

void split_train_val(const std::vector<text::TokenizedSentence>& all, double val_fraction,
                     std::uint64_t seed, std::vector<text::TokenizedSentence>& train_out,
                     std::vector<text::TokenizedSentence>& val_out) {
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 0x5917));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(all.size())));
    train_out.clear();
    val_out.clear();
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_val ? val_out : train_out).push_back(all[order[i]]);
}

TrainResult train_model(model::SemanticModel& m, const std::vector<text::TokenizedSentence>& train_set,
                        const std::vector<text::TokenizedSentence>& val_set,
                        const text::Vocabulary& vocab, const TrainConfig& cfg,
                        const std::string& out_ckpt, std::ostream* log) {
    if (train_set.empty()) throw std::invalid_argument("training set is empty");
    auto groups = m.param_groups(static_cast<float>(cfg.lr_main), static_cast<float>(cfg.lr_act));
    core::OptimizerT<float> opt(cfg.optimizer, static_cast<float>(cfg.momentum));
    Rng snr_rng(derive_seed(cfg.seed, 1));
    Rng chan_rng(derive_seed(cfg.seed, 2));
    Rng drop_rng(derive_seed(cfg.seed, 3));

    TrainResult res;
    res.checkpoint_path = out_ckpt;
    double last_epoch_sum = 0;
    std::size_t last_epoch_n = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto batches = text::make_batches(train_set, static_cast<std::size_t>(cfg.batch_size),
                                          derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(epoch)));
        last_epoch_sum = 0;
        last_epoch_n = 0;
        double ce_sum = 0, cyc_sum = 0;
        for (const auto& batch : batches) {
            if (cfg.warmup_steps > 0) {
                const double f = std::min(1.0, static_cast<double>(res.steps + 1) /
                                                   static_cast<double>(cfg.warmup_steps));
                groups[0].learning_rate = static_cast<float>(cfg.lr_main * f);
                if (groups.size() > 1) groups[1].learning_rate = static_cast<float>(cfg.lr_act * f);
            }
            const double snr = sample_train_snr(cfg.regime, snr_rng);
            const auto d =
                train_step(m, batch, cfg.channel, snr, chan_rng, drop_rng, opt, groups, cfg.clip_norm);
            res.step_losses.push_back(d.loss_total);
            last_epoch_sum += d.loss_total;
            ce_sum += d.loss_ce;
            cyc_sum += d.mean_cycles;
            ++last_epoch_n;
            ++res.steps;
        }
        double val_bleu = -1;
        if (!val_set.empty()) {
            const std::size_t n_eval = std::min(cfg.eval_sentences, val_set.size());
            std::vector<text::TokenizedSentence> eval_subset(val_set.begin(),
                                                             val_set.begin() + static_cast<std::ptrdiff_t>(n_eval));
            const auto recs = evaluate_model(m, eval_subset, vocab, {cfg.eval_snr_db}, cfg.channel,
                                             derive_seed(cfg.seed, 7000 + static_cast<std::uint64_t>(epoch)));
            val_bleu = recs[0].bleu1;
        }
        if (log) {
            *log << "epoch " << (epoch + 1) << "/" << cfg.epochs
                 << " loss=" << last_epoch_sum / static_cast<double>(last_epoch_n)
                 << " ce=" << ce_sum / static_cast<double>(last_epoch_n)
                 << " cycles=" << cyc_sum / static_cast<double>(last_epoch_n);
            if (val_bleu >= 0) *log << " val_bleu1=" << val_bleu;
            *log << std::endl;
        }
        if (!out_ckpt.empty() && (val_set.empty() || val_bleu >= res.best_val_bleu1)) {
            res.best_val_bleu1 = std::max(res.best_val_bleu1, val_bleu);
            save_model(m, out_ckpt);
        }
    }
    const std::size_t head = std::min<std::size_t>(100, res.step_losses.size());
    res.first_steps_avg =
        head ? std::accumulate(res.step_losses.begin(),
                               res.step_losses.begin() + static_cast<std::ptrdiff_t>(head), 0.0) /
                   static_cast<double>(head)
             : 0.0;
    res.final_epoch_avg = last_epoch_n ? last_epoch_sum / static_cast<double>(last_epoch_n) : 0.0;
    return res;
}

std::vector<metrics::EvalRecord> evaluate_model(const model::SemanticModel& m,
                                                const std::vector<text::TokenizedSentence>& sentences,
                                                const text::Vocabulary& vocab,
                                                const std::vector<double>& snr_list,
                                                channel::Kind chan_kind, std::uint64_t seed,
                                                std::size_t batch_size) {
    if (sentences.empty()) throw std::invalid_argument("evaluate_model on empty dataset");
    std::vector<metrics::EvalRecord> out;
    out.reserve(snr_list.size());
    for (std::size_t si = 0; si < snr_list.size(); ++si) {
        Rng chan_rng(derive_seed(seed, 0xE7A1 + si));
        std::vector<metrics::Sentence> cands, refs;
        double cycles_sum = 0;
        std::size_t cycle_batches = 0;
        for (std::size_t begin = 0; begin < sentences.size(); begin += batch_size) {
            const std::size_t end = std::min(begin + batch_size, sentences.size());
            text::Batch batch;
            batch.batch_size = end - begin;
            for (std::size_t i = begin; i < end; ++i)
                batch.max_len = std::max(batch.max_len, sentences[i].length());
            batch.ids.assign(batch.batch_size * batch.max_len, text::kPad);
            batch.mask.assign(batch.batch_size * batch.max_len, 0);
            for (std::size_t i = begin; i < end; ++i) {
                batch.lengths.push_back(static_cast<int>(sentences[i].length()));
                for (std::size_t j = 0; j < sentences[i].length(); ++j) {
                    batch.ids[(i - begin) * batch.max_len + j] = sentences[i].ids[j];
                    batch.mask[(i - begin) * batch.max_len + j] = 1;
                }
            }
            auto greedy = m.greedy_decode(batch, chan_kind, snr_list[si], chan_rng);
            for (std::size_t i = begin; i < end; ++i) {
                refs.push_back(text::decode_tokens(vocab, sentences[i].ids));
                cands.push_back(text::decode_tokens(vocab, greedy.ids[i - begin]));
            }
            cycles_sum += greedy.mean_cycles;
            ++cycle_batches;
        }
        metrics::EvalRecord rec;
        rec.bleu1 = metrics::bleu(cands, refs, 1);
        rec.bleu2 = metrics::bleu(cands, refs, 2);
        rec.bleu3 = metrics::bleu(cands, refs, 3);
        rec.bleu4 = metrics::bleu(cands, refs, 4);
        rec.ser = metrics::symbol_error_ratio(cands, refs);
        rec.mean_cycles = cycle_batches ? cycles_sum / static_cast<double>(cycle_batches) : 0;
        rec.n_sentences = sentences.size();
        out.push_back(rec);
    }
    return out;
}

void save_model(const model::SemanticModel& m, const std::string& path) {
    std::vector<ckpt::NamedTensor> tensors;
    tensors.reserve(m.named_params().size());
    for (const auto& [name, t] : m.named_params()) {
        ckpt::NamedTensor nt;
        nt.name = name;
        for (auto d : t.shape()) nt.dims.push_back(static_cast<std::uint32_t>(d));
        nt.data.assign(t.value().begin(), t.value().end());
        tensors.push_back(std::move(nt));
    }
    ckpt::save_tensors(path, tensors);
    cfg::Config meta;
    m.cfg.to_config(meta);
    meta.save(path + ".meta");
}

void load_into(model::SemanticModel& m, const std::string& path) {
    const auto tensors = ckpt::load_tensors(path);
    std::size_t loaded = 0;
    for (const auto& t : tensors) {
        m.load_named(t.name, t.dims, t.data);
        ++loaded;
    }
    if (loaded != m.named_params().size()) {
        for (const auto& [name, t] : m.named_params()) {
            bool found = false;
            for (const auto& nt : tensors) found = found || nt.name == name;
            if (!found)
                throw std::runtime_error("checkpoint " + path + " is missing tensor '" + name + "'");
        }
    }
}

model::SemanticModel load_model(const std::string& path) {
    const auto meta = cfg::Config::load(path + ".meta");
    auto config = model::UTConfig::from_config(meta);
    auto m = model::SemanticModel::init(config, 0);
    load_into(m, path);
    return m;
}

}  // namespace semcom::train
