// Acceptance suite: one pass/fail line per criterion. Training-backed
// criteria cache their checkpoints under the work directory so reruns are
// cheap; delete the directory for a from-scratch run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "../gradcheck.hpp"
#include "semcom/classic/fixed_length.hpp"
#include "semcom/classic/pipeline.hpp"
#include "semcom/classic/qam.hpp"
#include "semcom/classic/rs.hpp"
#include "semcom/classic/turbo.hpp"
#include "semcom/metrics.hpp"
#include "semcom/model.hpp"
#include "semcom/sweep.hpp"
#include "semcom/text.hpp"
#include "semcom/train.hpp"

using namespace semcom;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

fs::path g_workdir = "acceptance_work";
int g_only = 0;

struct Outcome {
    int id;
    std::string name;
    bool pass;
    std::string detail;
    double seconds;
};

std::vector<Outcome> g_outcomes;

template <class Fn>
void run_criterion(int id, const std::string& name, Fn&& fn) {
    if (g_only != 0 && g_only != id) return;
    const auto t0 = Clock::now();
    Outcome out{id, name, false, "", 0};
    try {
        out.detail = fn(out.pass);
    } catch (const std::exception& e) {
        out.pass = false;
        out.detail = std::string("exception: ") + e.what();
    }
    out.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("[%s] criterion %2d: %s (%.1fs)%s%s\n", out.pass ? "PASS" : "FAIL", id,
                name.c_str(), out.seconds, out.detail.empty() ? "" : " -- ",
                out.detail.c_str());
    std::fflush(stdout);
    g_outcomes.push_back(std::move(out));
}

std::string fmtd(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

// ---------------------------------------------------------------------------
// Shared toy-training machinery (criteria 6-9)
// ---------------------------------------------------------------------------

// Small configuration used for the regime / cycles / symbols properties.
model::UTConfig small_model_config(int vocab, int k) {
    model::UTConfig c;
    c.vocab_size = vocab;
    c.d_model = 32;
    c.heads = 4;
    c.ffn_inner = 128;
    c.chan_hidden = 64;
    c.symbols_per_word = k;
    c.max_cycles = 5;
    c.act_threshold = 0.9;
    c.dropout = 0.1;
    c.ponder_tau = 0.02;
    c.halt_bias_init = -1.0;
    return c;
}

struct ToyData {
    std::vector<text::TokenizedSentence> train, val;
    text::Vocabulary vocab;
};

ToyData make_toy_data(std::size_t sentences, std::uint64_t seed, std::size_t max_words,
                      std::size_t vocab_cap, std::size_t max_len = 30) {
    // Oversample, filter to the requested length band, keep the first
    // `sentences` survivors.
    const auto lines = text::synth_corpus(sentences * 4, seed, max_words);
    auto filtered = text::filter_corpus(lines, 4, max_len);
    if (filtered.sentences.size() > sentences) filtered.sentences.resize(sentences);
    auto vocab = text::Vocabulary::build(filtered.sentences, vocab_cap);
    ToyData d{.train = {}, .val = {}, .vocab = std::move(vocab)};
    std::vector<text::TokenizedSentence> all;
    for (const auto& s : filtered.sentences) all.push_back(text::encode_sentence(d.vocab, s));
    train::split_train_val(all, 0.1, seed, d.train, d.val);
    return d;
}

// Trains (or reuses) a small model; checkpoints are cached by name.
model::SemanticModel toy_train(const std::string& tag, const ToyData& data,
                               const model::UTConfig& mcfg, const train::SnrRegime& regime,
                               std::uint64_t seed, int epochs) {
    const std::string path = (g_workdir / (tag + ".ckpt")).string();
    if (fs::exists(path) && fs::exists(path + ".meta")) {
        auto m = train::load_model(path);
        return m;
    }
    auto m = model::SemanticModel::init(mcfg, seed);
    train::TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = 64;
    tc.optimizer = core::OptKind::adam;
    tc.lr_main = 2e-3;
    tc.lr_act = 2e-3;
    tc.clip_norm = 1.0;
    tc.regime = regime;
    tc.channel = channel::Kind::awgn;
    tc.seed = seed;
    tc.warmup_steps = 200;
    tc.eval_snr_db = 10.0;
    tc.eval_sentences = 100;
    train::train_model(m, data.train, data.val, data.vocab, tc, path, nullptr);
    // The best-BLEU checkpoint is what later criteria consume.
    auto best = train::load_model(path);
    return best;
}

double bleu1_at(const model::SemanticModel& m, const ToyData& data, double snr_db,
                std::uint64_t seed) {
    const auto recs = train::evaluate_model(m, data.val, data.vocab, {snr_db},
                                            channel::Kind::awgn, seed);
    return recs[0].bleu1;
}

// ---------------------------------------------------------------------------
// Criterion 1: gradient correctness
// ---------------------------------------------------------------------------

std::string criterion1(bool& pass) {
    using core::TapeT;
    using core::TensorT;
    Rng rng(2024);
    auto rnd = [&](std::vector<std::size_t> shape) {
        auto t = TensorT<double>::zeros(std::move(shape));
        for (auto& v : t.value()) v = rng.uniform(-0.9, 0.9);
        t.set_requires_grad(true);
        return t;
    };

    double worst = 0;
    std::string worst_name;
    auto check = [&](const std::string& name,
                     const std::function<TensorT<double>(TapeT<double>&)>& f,
                     std::vector<TensorT<double>> params) {
        const auto rep = gradcheck::check(f, std::move(params), 1e-3);
        if (rep.worst_ratio > worst) {
            worst = rep.worst_ratio;
            worst_name = name + " (" + rep.worst + ")";
        }
    };

    // Primitive coverage.
    {
        auto a = rnd({3, 4}), b = rnd({4, 2});
        check("matmul", [&](TapeT<double>& t) { return core::mean(&t, core::matmul(&t, a, b)); },
              {a, b});
    }
    {
        auto a = rnd({3, 3}), b = rnd({3, 3});
        check("add/sub/mul",
              [&](TapeT<double>& t) {
                  auto s = core::mul(&t, core::add(&t, a, b), core::sub(&t, a, b));
                  return core::sum(&t, s);
              },
              {a, b});
    }
    {
        auto x = rnd({4, 5});
        check("softmax_rows",
              [&](TapeT<double>& t) {
                  auto s = core::softmax_rows(&t, x);
                  return core::sum(&t, core::mul(&t, s, s));
              },
              {x});
    }
    {
        auto x = rnd({4, 6}), g = rnd({6}), b = rnd({6});
        check("layer_norm",
              [&](TapeT<double>& t) {
                  auto n = core::layer_norm(&t, x, g, b);
                  return core::mean(&t, core::mul(&t, n, n));
              },
              {x, g, b});
    }
    {
        auto x = rnd({3, 4}), b = rnd({4}), w = rnd({3, 1});
        check("dense-ish composite",
              [&](TapeT<double>& t) {
                  auto y = core::mul_colvec(&t, core::add_rowwise(&t, x, b), w);
                  auto p = core::mean(&t, core::mul(&t, y, y));
                  return core::sum(&t, core::mul_scalar(&t, y, core::rsqrt(&t, p)));
              },
              {x, b, w});
    }
    {
        auto x = rnd({4, 4});
        for (auto& v : x.value()) v += (v >= 0 ? 0.25 : -0.25);  // keep clear of the relu kink
        check("relu+sigmoid",
              [&](TapeT<double>& t) {
                  return core::mean(&t, core::sigmoid(&t, core::relu(&t, x)));
              },
              {x});
    }
    {
        auto x = rnd({4, 6});
        check("slice/concat/transpose/interleave",
              [&](TapeT<double>& t) {
                  auto top = core::slice_rows(&t, x, 0, 2);
                  auto bot = core::slice_rows(&t, x, 2, 4);
                  auto j = core::concat_rows(&t, {bot, top});
                  auto l = core::slice_cols(&t, j, 0, 3);
                  auto r = core::slice_cols(&t, j, 3, 6);
                  auto [e, o] = core::deinterleave_cols(&t, core::concat_cols(&t, {r, l}));
                  auto back = core::transpose(&t, core::interleave_cols(&t, o, e));
                  return core::mean(&t, core::mul(&t, back, back));
              },
              {x});
    }
    {
        auto table = rnd({6, 5});
        const std::vector<int> ids{0, 3, 3, 5};
        const std::vector<int> targets{1, 0, 2, 4};
        const std::vector<char> keep{1, 1, 0, 1};
        check("embedding+cross_entropy+masked_mean",
              [&](TapeT<double>& t) {
                  auto e = core::embedding_lookup(&t, table, ids);
                  return core::masked_mean(&t, core::cross_entropy_rows(&t, e, targets), keep);
              },
              {table});
    }
    {
        auto logits = rnd({3, 5});
        const std::vector<int> targets{4, 0, 2};
        check("binary_cross_entropy",
              [&](TapeT<double>& t) {
                  return core::mean(&t, core::binary_cross_entropy_rows(&t, logits, targets));
              },
              {logits});
    }
    {
        Rng mha_rng(71);
        auto mha = model::MhaT<double>::make(8, 2, mha_rng);
        auto x = rnd({5, 8});
        check("multi_head_attention",
              [&](TapeT<double>& t) {
                  auto mask = model::make_causal_mask<double>(5);
                  auto y = model::multi_head_attention<double>(&t, mha, x, x, x, &mask);
                  return core::mean(&t, core::mul(&t, y, y));
              },
              {x, mha.wq.w, mha.wk.w, mha.wv.w, mha.wo.w, mha.wq.b, mha.wo.b});
    }

    // Composed end-to-end loss at the toy dims (L=4, d=8, vocab=16, K=2).
    model::UTConfig cfg;
    cfg.vocab_size = 16;
    cfg.d_model = 8;
    cfg.heads = 2;
    cfg.ffn_inner = 16;
    cfg.chan_hidden = 16;
    cfg.symbols_per_word = 2;
    cfg.max_cycles = 3;
    cfg.dropout = 0.0;
    auto m = model::SemanticModelT<double>::init(cfg, 23);
    text::Batch batch;
    batch.batch_size = 2;
    batch.max_len = 4;
    batch.ids = {4, 9, 6, 12, 7, 5, 11, 4};
    batch.mask.assign(8, 1);
    batch.lengths = {4, 4};

    std::vector<TensorT<double>> params;
    for (const auto& [name, t] : m.named_params()) params.push_back(t);
    const auto rep = gradcheck::check(
        [&](TapeT<double>& t) {
            Rng chan(321);  // frozen noise: reseeded on every replay
            auto stats = m.forward_batch(&t, batch, channel::Kind::awgn, 6.0, chan, nullptr);
            return stats.loss;
        },
        params, 1e-3);
    if (rep.worst_ratio > worst) {
        worst = rep.worst_ratio;
        worst_name = "composed L_total (" + rep.worst + ")";
    }

    pass = worst <= 1.0;
    return "worst |fd-ad| at " + fmtd(worst * 100, 1) + "% of tolerance (rtol 1e-3, atol 1e-5), " +
           worst_name;
}

// ---------------------------------------------------------------------------
// Criterion 2: halting-loop oracle equivalence
// ---------------------------------------------------------------------------

// Independent scalar hand-trace of the halting semantics.
struct HandTrace {
    std::vector<double> weights;
    double remainder = 0;
    int cycles = 0;
    double ponder = 0;
};

HandTrace hand_trace(const std::vector<double>& p_per_step, double threshold, int max_cycles) {
    HandTrace h;
    double accum = 0;
    for (int t = 0; t < max_cycles; ++t) {
        const double p = p_per_step[static_cast<std::size_t>(t) < p_per_step.size()
                                       ? static_cast<std::size_t>(t)
                                       : p_per_step.size() - 1];
        ++h.cycles;
        if (t == max_cycles - 1 || accum + p > threshold) {
            h.remainder = 1.0 - accum;
            h.weights.push_back(h.remainder);
            break;
        }
        accum += p;
        h.weights.push_back(p);
    }
    h.ponder = h.remainder + h.cycles;
    return h;
}

std::string criterion2(bool& pass) {
    using core::TensorT;
    const double T = 0.9;
    const int m = 5;
    const std::vector<std::vector<double>> scripts{
        {0.95}, {0.5}, {0.1}, {0.3, 0.4, 0.5}, {0.05, 0.2, 0.9}, {0.89, 0.005}};
    pass = true;
    std::ostringstream detail;
    int checked = 0;
    for (std::size_t si = 0; si < scripts.size(); ++si) {
        const auto& script = scripts[si];
        auto x = TensorT<double>::full({1, 1}, 1.0);
        std::vector<double> step_values;
        model::StepFn<double> block = [&](core::TapeT<double>*, const TensorT<double>& s, int) {
            auto nx = core::scale<double>(nullptr, s, 1.5);
            step_values.push_back(nx.value()[0]);
            return nx;
        };
        model::StepFn<double> halt = [&](core::TapeT<double>*, const TensorT<double>&, int t) {
            const double p = script[static_cast<std::size_t>(t) < script.size()
                                        ? static_cast<std::size_t>(t)
                                        : script.size() - 1];
            return TensorT<double>::full({1, 1}, p);
        };
        const auto res = model::act_run<double>(nullptr, x, block, halt, T, m, true);
        const auto oracle = hand_trace(script, T, m);

        double wsum = 0, y = 0;
        bool ok = res.cycles[0] == oracle.cycles && res.cycles[0] <= m;
        ok = ok && std::abs(res.remainder[0] - oracle.remainder) < 1e-12;
        ok = ok && res.ponder.value()[0] == res.remainder[0] + res.cycles[0];  // exact
        for (std::size_t t = 0; t < res.trace.size(); ++t) {
            ok = ok && std::abs(res.trace[t].weight[0] - oracle.weights[t]) < 1e-12;
            wsum += res.trace[t].weight[0];
            y += res.trace[t].weight[0] * step_values[t];
        }
        ok = ok && std::abs(wsum - 1.0) < 1e-6;
        ok = ok && std::abs(res.output.value()[0] - y) < 1e-12;
        if (!ok) {
            pass = false;
            detail << " script#" << si << " mismatch;";
        }
        ++checked;
    }
    return std::to_string(checked) + " scripted sequences checked" + detail.str();
}

// ---------------------------------------------------------------------------
// Criterion 3: channel calibration
// ---------------------------------------------------------------------------

std::string criterion3(bool& pass) {
    pass = true;
    std::ostringstream detail;
    double worst_db = 0;
    for (double snr : {-5.0, 0.0, 5.0, 10.0, 15.0, 20.0}) {
        channel::CVec x(1000000, {1.0, 0.0});
        auto y = x;
        Rng rng(derive_seed(77, static_cast<std::uint64_t>(snr + 100)));
        channel::add_awgn(y, channel::snr_to_noise_var(snr), rng);
        double noise = 0;
        for (std::size_t i = 0; i < y.size(); ++i) noise += std::norm(y[i] - x[i]);
        noise /= static_cast<double>(y.size());
        const double measured = 10.0 * std::log10(1.0 / noise);
        worst_db = std::max(worst_db, std::abs(measured - snr));
        if (std::abs(measured - snr) >= 0.1) pass = false;
    }
    detail << "worst SNR offset " << fmtd(worst_db, 4) << " dB";

    Rng hr(91);
    double hp = 0;
    for (int i = 0; i < 1000000; ++i) hp += std::norm(channel::draw_gain(hr));
    hp /= 1e6;
    detail << "; E|h|^2 = " << fmtd(hp, 4);
    if (std::abs(hp - 1.0) > 0.01) pass = false;

    // sigma^2 = 0 composes to the identity on both channels.
    channel::CVec sig;
    Rng sr(13);
    for (int i = 0; i < 4096; ++i) sig.emplace_back(sr.uniform(-1, 1), sr.uniform(-1, 1));
    auto awgn0 = sig;
    channel::add_awgn(awgn0, 0.0, sr);
    bool identity = awgn0 == sig;
    auto ray0 = sig;
    channel::fade_and_equalize(ray0, 0.0, sr);
    for (std::size_t i = 0; i < sig.size(); ++i)
        identity = identity && std::abs(ray0[i] - sig[i]) < 1e-9;
    if (!identity) pass = false;
    detail << "; zero-noise identity " << (identity ? "ok" : "BROKEN");
    return detail.str();
}

// ---------------------------------------------------------------------------
// Criterion 4: classical codecs
// ---------------------------------------------------------------------------

std::string criterion4(bool& pass) {
    pass = true;
    std::ostringstream detail;

    // Noiseless round trips.
    {
        Rng rng(3);
        classic::BitStream info;
        for (int i = 0; i < 1000; ++i) info.push(static_cast<int>(rng.next_u64() & 1));
        auto cw = classic::turbo_encode(info);
        std::vector<double> llrs(cw.size());
        for (std::size_t i = 0; i < cw.size(); ++i) llrs[i] = cw.get(i) == 0 ? 9.0 : -9.0;
        if (!(classic::turbo_decode(llrs, 1000) == info)) {
            pass = false;
            detail << "turbo noiseless roundtrip BROKEN; ";
        }
        std::vector<std::uint8_t> data(classic::kRsK);
        for (auto& b : data) b = static_cast<std::uint8_t>(rng.below(256));
        auto rs_cw = classic::rs_encode(data);
        auto dec = classic::rs_decode(rs_cw);
        if (!dec.ok || dec.data != data) {
            pass = false;
            detail << "rs noiseless roundtrip BROKEN; ";
        }
    }

    // RS corrects every randomized <=16-symbol-error pattern (1000 trials).
    {
        Rng rng(4);
        std::vector<std::uint8_t> data(classic::kRsK);
        for (auto& b : data) b = static_cast<std::uint8_t>(rng.below(256));
        const auto cw = classic::rs_encode(data);
        int corrected = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            auto noisy = cw;
            const int nerr = 1 + static_cast<int>(rng.below(classic::kRsT));
            std::vector<char> hit(classic::kRsN, 0);
            for (int e = 0; e < nerr;) {
                const auto p = rng.below(classic::kRsN);
                if (hit[p]) continue;
                hit[p] = 1;
                noisy[p] ^= static_cast<std::uint8_t>(1 + rng.below(255));
                ++e;
            }
            auto dec = classic::rs_decode(noisy);
            if (dec.ok && dec.data == data) ++corrected;
        }
        detail << "rs corrected " << corrected << "/1000";
        if (corrected != 1000) pass = false;
    }

    // Turbo BER < uncoded/10 at the SNR where uncoded 64-QAM BER ~ 1e-2.
    {
        double best_snr = 0, best_gap = 1e9, uncoded_at = 0;
        for (double snr : {16.0, 17.0, 18.0, 19.0, 20.0, 21.0}) {
            const double ber = classic::uncoded_qam_ber(300000, snr, 11);
            if (std::abs(ber - 1e-2) < best_gap) {
                best_gap = std::abs(ber - 1e-2);
                best_snr = snr;
                uncoded_at = ber;
            }
        }
        const double turbo_ber = classic::turbo_qam_ber(120000, 1000, best_snr, 12);
        detail << "; uncoded BER " << fmtd(uncoded_at, 5) << " @" << fmtd(best_snr, 1)
               << "dB vs turbo " << fmtd(turbo_ber, 7);
        if (!(turbo_ber < uncoded_at / 10.0)) pass = false;
    }

    // Gray adjacency over the whole constellation.
    {
        bool gray = true;
        for (int i = 0; i < 8; ++i)
            for (int q = 0; q < 8; ++q) {
                const int label = (classic::qam64_index_to_bits(i) << 3) | classic::qam64_index_to_bits(q);
                if (i + 1 < 8) {
                    const int n = (classic::qam64_index_to_bits(i + 1) << 3) | classic::qam64_index_to_bits(q);
                    const int d = label ^ n;
                    gray = gray && d != 0 && (d & (d - 1)) == 0;
                }
                if (q + 1 < 8) {
                    const int n = (classic::qam64_index_to_bits(i) << 3) | classic::qam64_index_to_bits(q + 1);
                    const int d = label ^ n;
                    gray = gray && d != 0 && (d & (d - 1)) == 0;
                }
            }
        detail << "; gray adjacency " << (gray ? "ok" : "BROKEN");
        if (!gray) pass = false;
    }
    return detail.str();
}

// ---------------------------------------------------------------------------
// Criterion 5: classical word accuracy at 8 dB
// ---------------------------------------------------------------------------

std::string criterion5(bool& pass) {
    const auto lines = text::synth_corpus(1000, 555);
    const auto corpus = text::filter_corpus(lines);
    classic::ClassicConfig cc;
    cc.codec = classic::Codec::turbo;
    cc.snr_db = 8.0;
    cc.seed = 8;
    const auto turbo = classic::run_classic_pipeline(corpus.sentences, cc);
    const double turbo_acc = metrics::word_accuracy(turbo.decoded, corpus.sentences);
    cc.codec = classic::Codec::rs;
    const auto rs = classic::run_classic_pipeline(corpus.sentences, cc);
    const double rs_acc = metrics::word_accuracy(rs.decoded, corpus.sentences);
    pass = turbo_acc >= 0.98 && rs_acc < turbo_acc;
    return "turbo word accuracy " + fmtd(turbo_acc) + ", rs " + fmtd(rs_acc) + " over " +
           std::to_string(corpus.sentences.size()) + " sentences";
}

// ---------------------------------------------------------------------------
// Criterion 6: toy end-to-end training
// ---------------------------------------------------------------------------

std::string criterion6(bool& pass) {
    const auto t0 = Clock::now();
    auto data = make_toy_data(5000, 101, 900, 1000);

    model::UTConfig mc;  // full-width configuration
    mc.vocab_size = static_cast<int>(data.vocab.size());
    mc.d_model = 128;
    mc.heads = 8;
    mc.ffn_inner = 512;
    mc.chan_hidden = 256;
    mc.symbols_per_word = 8;
    mc.max_cycles = 5;
    mc.act_threshold = 0.9;
    mc.dropout = 0.1;
    mc.ponder_tau = 0.02;
    mc.halt_bias_init = -1.0;

    const std::string path = (g_workdir / "toy_e2e.ckpt").string();
    train::TrainResult tr;
    if (fs::exists(path) && fs::exists(path + ".stats")) {
        const auto st = cfg::Config::load(path + ".stats");
        tr.first_steps_avg = st.get_double("first", 0);
        tr.final_epoch_avg = st.get_double("final", 0);
    } else {
        auto m = model::SemanticModel::init(mc, 2025);
        train::TrainConfig tc;
        tc.epochs = 40;
        tc.batch_size = 64;
        tc.optimizer = core::OptKind::adam;
        tc.lr_main = 1e-3;
        tc.lr_act = 1e-3;
        tc.clip_norm = 1.0;
        tc.regime = train::SnrRegime::parse("uniform:0:10");
        tc.seed = 2025;
        tc.warmup_steps = 300;
        tc.eval_snr_db = 10.0;
        tc.eval_sentences = 150;
        tr = train::train_model(m, data.train, data.val, data.vocab, tc, path, &std::cout);
        cfg::Config st;
        st.set("first", std::to_string(tr.first_steps_avg));
        st.set("final", std::to_string(tr.final_epoch_avg));
        st.save(path + ".stats");
    }

    auto best = train::load_model(path);
    const double bleu = bleu1_at(best, data, 10.0, 99);
    const double hours = std::chrono::duration<double>(Clock::now() - t0).count() / 3600.0;
    const bool halved = tr.final_epoch_avg <= 0.5 * tr.first_steps_avg;
    pass = halved && bleu >= 0.9 && hours <= 2.0;
    return "loss " + fmtd(tr.first_steps_avg, 3) + " -> " + fmtd(tr.final_epoch_avg, 3) +
           (halved ? " (halved)" : " (NOT halved)") + ", held-out BLEU-1@10dB " + fmtd(bleu) +
           ", " + fmtd(hours, 2) + " h";
}

// ---------------------------------------------------------------------------
// Criteria 7/8: training-SNR regimes and halting adaptivity (4 seeds)
// ---------------------------------------------------------------------------

struct RegimeModels {
    ToyData data;
    std::vector<model::SemanticModel> uniform, fixed10, fixed0;
};

RegimeModels& regime_models() {
    static RegimeModels rm = [] {
        RegimeModels r{make_toy_data(2000, 303, 320, 400, /*max_len=*/8), {}, {}, {}};
        const auto mc = small_model_config(static_cast<int>(r.data.vocab.size()), 8);
        constexpr int kEpochs = 60;
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            r.uniform.push_back(toy_train("regime_uniform_s" + std::to_string(seed), r.data, mc,
                                          train::SnrRegime::parse("uniform:0:10"), seed, kEpochs));
            r.fixed10.push_back(toy_train("regime_fixed10_s" + std::to_string(seed), r.data, mc,
                                          train::SnrRegime::parse("fixed:10"), seed, kEpochs));
            r.fixed0.push_back(toy_train("regime_fixed0_s" + std::to_string(seed), r.data, mc,
                                         train::SnrRegime::parse("fixed:0"), seed, kEpochs));
        }
        return r;
    }();
    return rm;
}

std::string criterion7(bool& pass) {
    auto& rm = regime_models();
    int low_wins = 0, high_wins = 0;
    std::ostringstream detail;
    for (std::size_t s = 0; s < 4; ++s) {
        const double uni_low = bleu1_at(rm.uniform[s], rm.data, 0.0, 41 + s);
        const double f10_low = bleu1_at(rm.fixed10[s], rm.data, 0.0, 41 + s);
        const double uni_high = bleu1_at(rm.uniform[s], rm.data, 12.0, 51 + s);
        const double f0_high = bleu1_at(rm.fixed0[s], rm.data, 12.0, 51 + s);
        if (uni_low > f10_low) ++low_wins;
        if (uni_high > f0_high) ++high_wins;
        detail << " s" << s << ":[0dB " << fmtd(uni_low, 3) << ">" << fmtd(f10_low, 3) << "|12dB "
               << fmtd(uni_high, 3) << ">" << fmtd(f0_high, 3) << "]";
    }
    pass = low_wins >= 3 && high_wins >= 3;
    return "uniform wins at 0dB " + std::to_string(low_wins) + "/4, at 12dB " +
           std::to_string(high_wins) + "/4;" + detail.str();
}

double probe_mean_cycles(const model::SemanticModel& m, const ToyData& data, double snr_db,
                         std::uint64_t seed) {
    Rng chan_rng(derive_seed(seed, 0xAB));
    double total = 0;
    std::size_t count = 0;
    constexpr std::size_t kBatch = 64;
    for (std::size_t begin = 0; begin < data.val.size(); begin += kBatch) {
        const std::size_t end = std::min(begin + kBatch, data.val.size());
        text::Batch batch;
        batch.batch_size = end - begin;
        for (std::size_t i = begin; i < end; ++i)
            batch.max_len = std::max(batch.max_len, data.val[i].length());
        batch.ids.assign(batch.batch_size * batch.max_len, text::kPad);
        batch.mask.assign(batch.batch_size * batch.max_len, 0);
        for (std::size_t i = begin; i < end; ++i) {
            batch.lengths.push_back(static_cast<int>(data.val[i].length()));
            for (std::size_t j = 0; j < data.val[i].length(); ++j) {
                batch.ids[(i - begin) * batch.max_len + j] = data.val[i].ids[j];
                batch.mask[(i - begin) * batch.max_len + j] = 1;
            }
        }
        const auto probe = m.probe_cycles(batch, channel::Kind::awgn, snr_db, chan_rng);
        for (int c : probe.enc_cycles) {
            total += c;
            ++count;
            if (c > 5) return 1e9;  // cycle cap violation
        }
        for (int c : probe.dec_cycles) {
            total += c;
            ++count;
            if (c > 5) return 1e9;
        }
    }
    return total / static_cast<double>(count);
}

std::string criterion8(bool& pass) {
    auto& rm = regime_models();
    int wins = 0;
    bool capped = true;
    std::ostringstream detail;
    for (std::size_t s = 0; s < 4; ++s) {
        const double c_low = probe_mean_cycles(rm.uniform[s], rm.data, 0.0, 61 + s);
        const double c_high = probe_mean_cycles(rm.uniform[s], rm.data, 10.0, 71 + s);
        capped = capped && c_low <= 5.0 && c_high <= 5.0;
        if (c_low >= c_high) ++wins;
        detail << " s" << s << ":" << fmtd(c_low, 3) << " vs " << fmtd(c_high, 3);
    }
    pass = wins >= 3 && capped;
    return "cycles(0dB) >= cycles(10dB) for " + std::to_string(wins) + "/4 seeds" +
           (capped ? "" : "; CYCLE CAP VIOLATED") + ";" + detail.str();
}

// ---------------------------------------------------------------------------
// Criterion 9: symbols-per-word trend
// ---------------------------------------------------------------------------

std::string criterion9(bool& pass) {
    auto& rm = regime_models();
    // K=8 reuses the seed-0 uniform-regime model; K=1 and K=4 train alike.
    std::vector<double> bleu(3, 0);
    const std::vector<int> ks{1, 4, 8};
    constexpr int kEpochs = 60;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        model::SemanticModel m =
            ks[i] == 8 ? train::load_model((g_workdir / "regime_uniform_s0.ckpt").string())
                       : toy_train("symbols_k" + std::to_string(ks[i]), rm.data,
                                   small_model_config(static_cast<int>(rm.data.vocab.size()), ks[i]),
                                   train::SnrRegime::parse("uniform:0:10"), 0, kEpochs);
        bleu[i] = bleu1_at(m, rm.data, 6.0, 81 + i);
    }
    pass = bleu[0] <= bleu[1] && bleu[1] <= bleu[2];
    return "BLEU-1@6dB: K=1 " + fmtd(bleu[0]) + ", K=4 " + fmtd(bleu[1]) + ", K=8 " + fmtd(bleu[2]);
}

// ---------------------------------------------------------------------------
// Criterion 10: parameter accounting
// ---------------------------------------------------------------------------

std::string criterion10(bool& pass) {
    const auto lines = text::synth_corpus(60, 42);
    const auto corpus = text::filter_corpus(lines);
    auto vocab = text::Vocabulary::build(corpus.sentences, 300);

    auto make = [&](const std::string& name, model::UTConfig::Kind kind, int depth) {
        model::UTConfig c;
        c.vocab_size = static_cast<int>(vocab.size());
        c.d_model = 128;
        c.heads = 8;
        c.ffn_inner = 512;
        c.chan_hidden = 256;
        c.symbols_per_word = 8;
        c.max_cycles = 5;
        c.kind = kind;
        c.depth = depth;
        auto m = model::SemanticModel::init(c, 5);
        const std::string path = (g_workdir / (name + ".ckpt")).string();
        train::save_model(m, path);
        vocab.save(path + ".vocab");
        return path;
    };

    sweep::SweepSpec spec;
    spec.systems = {
        {.name = "ut", .type = sweep::SystemSpec::Type::checkpoint, .checkpoint_path = make("dc_ut", model::UTConfig::Kind::adaptive, 1)},
        {.name = "fixed3", .type = sweep::SystemSpec::Type::checkpoint, .checkpoint_path = make("dc_fixed3", model::UTConfig::Kind::fixed_depth, 3)},
        {.name = "fixed6", .type = sweep::SystemSpec::Type::checkpoint, .checkpoint_path = make("dc_fixed6", model::UTConfig::Kind::fixed_depth, 6)}};
    spec.snr_list = {6.0, 12.0};
    spec.n_sentences = 20;
    spec.seed = 7;
    const auto res = sweep::run_depth_compare(spec);
    const std::string out = (g_workdir / "depth_compare.csv").string();
    sweep::write_rows_csv(out, res.rows);
    sweep::write_param_sidecar(out, res.param_counts);

    std::size_t put = 0, p6 = 0;
    for (const auto& [name, count] : res.param_counts) {
        if (name == "ut") put = count;
        if (name == "fixed6") p6 = count;
    }
    const bool rows_ok = res.rows.size() == 6;
    const bool sidecar_ok = fs::exists(out + ".params.csv");
    pass = put > 0 && put < p6 && rows_ok && sidecar_ok;
    return "params ut " + std::to_string(put) + " < 6*6 " + std::to_string(p6) + "; " +
           std::to_string(res.rows.size()) + " sweep rows; sidecar " +
           (sidecar_ok ? "written" : "MISSING");
}

// ---------------------------------------------------------------------------
// Criterion 11: determinism
// ---------------------------------------------------------------------------

std::string criterion11(bool& pass) {
    auto slurp = [](const std::string& p) {
        std::ifstream is(p, std::ios::binary);
        std::ostringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };

    sweep::SweepSpec spec;
    spec.systems = {{.name = "turbo", .type = sweep::SystemSpec::Type::baseline_turbo, .checkpoint_path = ""},
                    {.name = "rs", .type = sweep::SystemSpec::Type::baseline_rs, .checkpoint_path = ""},
                    {.name = "ut", .type = sweep::SystemSpec::Type::checkpoint,
                     .checkpoint_path = (g_workdir / "dc_ut.ckpt").string()}};
    spec.snr_list = {6.0, 10.0};
    spec.seed = 17;
    spec.n_sentences = 40;

    const std::string a = (g_workdir / "det_a.csv").string();
    const std::string b = (g_workdir / "det_b.csv").string();
    const std::string c = (g_workdir / "det_c.csv").string();
    sweep::write_rows_csv(a, sweep::run_snr_sweep(spec));
    sweep::write_rows_csv(b, sweep::run_snr_sweep(spec));
    auto par = spec;
    par.jobs = 4;
    sweep::write_rows_csv(c, sweep::run_snr_sweep(par));

    const bool rerun_same = slurp(a) == slurp(b);
    const bool par_same = slurp(a) == slurp(c);
    pass = rerun_same && par_same;
    return std::string("rerun byte-identical: ") + (rerun_same ? "yes" : "NO") +
           ", parallel == serial: " + (par_same ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--workdir" && i + 1 < argc) g_workdir = argv[++i];
        if (arg == "--only" && i + 1 < argc) g_only = std::atoi(argv[++i]);
    }
    fs::create_directories(g_workdir);
    std::printf("acceptance work directory: %s\n", g_workdir.string().c_str());

    run_criterion(1, "gradient correctness (finite differences, h=1e-3)", criterion1);
    run_criterion(2, "halting-loop oracle equivalence", criterion2);
    run_criterion(3, "channel calibration", criterion3);
    run_criterion(4, "classical codecs (turbo / rs / 64-qam)", criterion4);
    run_criterion(5, "classical word accuracy at 8 dB", criterion5);
    run_criterion(10, "parameter accounting (tied vs 6*6 untied)", criterion10);
    run_criterion(11, "sweep determinism (rerun + parallel)", criterion11);
    run_criterion(7, "training-SNR regime property (4 seeds)", criterion7);
    run_criterion(8, "halting adaptivity vs SNR (4 seeds)", criterion8);
    run_criterion(9, "symbols-per-word trend (K = 1, 4, 8)", criterion9);
    run_criterion(6, "toy end-to-end training (full-width model)", criterion6);

    int failures = 0;
    for (const auto& o : g_outcomes) failures += o.pass ? 0 : 1;
    std::printf("%zu criteria run, %d failed\n", g_outcomes.size(), failures);
    return failures == 0 ? 0 : 1;
}
