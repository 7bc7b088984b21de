#include "semcom/sweep.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "semcom/metrics.hpp"
#include "semcom/model.hpp"
#include "semcom/text.hpp"
#include "semcom/train.hpp"

namespace semcom::sweep {

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

bool row_less(const SweepRow& a, const SweepRow& b) {
    if (a.system != b.system) return a.system < b.system;
    if (a.channel != b.channel) return a.channel < b.channel;
    if (a.snr_db != b.snr_db) return a.snr_db < b.snr_db;
    return a.k_symbols < b.k_symbols;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

// Word lists for baseline systems / references, shared by all grid points.
std::vector<metrics::Sentence> load_eval_sentences(const SweepSpec& spec) {
    text::CorpusLoadResult corpus;
    if (spec.corpus_path.empty()) {
        corpus = text::filter_corpus(text::synth_corpus(spec.n_sentences * 2, derive_seed(spec.seed, 0xC0)));
    } else {
        corpus = text::load_corpus(spec.corpus_path);
    }
    if (corpus.sentences.empty()) throw std::runtime_error("no evaluation sentences available");
    if (corpus.sentences.size() > spec.n_sentences) corpus.sentences.resize(spec.n_sentences);
    return corpus.sentences;
}

struct LoadedSystem {
    SystemSpec spec;
    std::shared_ptr<model::SemanticModel> model;  // checkpoint systems
    std::shared_ptr<text::Vocabulary> vocab;
    std::vector<text::TokenizedSentence> tokenized;
};

LoadedSystem load_system(const SystemSpec& sys, const std::vector<metrics::Sentence>& sentences) {
    LoadedSystem ls;
    ls.spec = sys;
    if (sys.type == SystemSpec::Type::checkpoint) {
        ls.model = std::make_shared<model::SemanticModel>(train::load_model(sys.checkpoint_path));
        ls.vocab = std::make_shared<text::Vocabulary>(text::Vocabulary::load(sys.checkpoint_path + ".vocab"));
        for (const auto& s : sentences) ls.tokenized.push_back(text::encode_sentence(*ls.vocab, s));
    }
    return ls;
}

SweepRow eval_point(const LoadedSystem& sys, const std::vector<metrics::Sentence>& sentences,
                    channel::Kind chan, double snr_db, std::uint64_t point_seed) {
    SweepRow row;
    row.system = sys.spec.name;
    row.channel = channel::kind_name(chan);
    row.snr_db = snr_db;
    row.seed = point_seed;
    row.n_sentences = sentences.size();
    if (sys.spec.type == SystemSpec::Type::checkpoint) {
        const auto recs =
            train::evaluate_model(*sys.model, sys.tokenized, *sys.vocab, {snr_db}, chan, point_seed);
        row.k_symbols = sys.model->cfg.symbols_per_word;
        row.bleu1 = recs[0].bleu1;
        row.bleu2 = recs[0].bleu2;
        row.bleu3 = recs[0].bleu3;
        row.bleu4 = recs[0].bleu4;
        row.ser = recs[0].ser;
        row.mean_cycles = recs[0].mean_cycles;
    } else {
        classic::ClassicConfig cc;
        cc.codec = sys.spec.type == SystemSpec::Type::baseline_turbo ? classic::Codec::turbo
                                                                     : classic::Codec::rs;
        cc.channel = chan;
        cc.snr_db = snr_db;
        cc.seed = point_seed;
        const auto res = classic::run_classic_pipeline(sentences, cc);
        row.k_symbols = 0;
        row.bleu1 = metrics::bleu(res.decoded, sentences, 1);
        row.bleu2 = metrics::bleu(res.decoded, sentences, 2);
        row.bleu3 = metrics::bleu(res.decoded, sentences, 3);
        row.bleu4 = metrics::bleu(res.decoded, sentences, 4);
        row.ser = metrics::symbol_error_ratio(res.decoded, sentences);
        row.mean_cycles = 0;
    }
    return row;
}

}  // namespace

std::string csv_header() {
    return "system,channel,snr_db,k_symbols,bleu1,bleu2,bleu3,bleu4,ser,mean_cycles,n_sentences,seed";
}

std::string format_row(const SweepRow& r) {
    std::ostringstream os;
    os << r.system << ',' << r.channel << ',' << fmt(r.snr_db, "%.2f") << ',' << r.k_symbols << ','
       << fmt(r.bleu1) << ',' << fmt(r.bleu2) << ',' << fmt(r.bleu3) << ',' << fmt(r.bleu4) << ','
       << fmt(r.ser) << ',' << fmt(r.mean_cycles) << ',' << r.n_sentences << ',' << r.seed;
    return os.str();
}

void write_rows_csv(const std::string& path, std::vector<SweepRow> rows) {
    std::sort(rows.begin(), rows.end(), row_less);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write CSV: " + path);
    os << csv_header() << "\n";
    for (const auto& r : rows) os << format_row(r) << "\n";
}

std::vector<SweepRow> parse_rows_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != csv_header()) throw std::runtime_error("unexpected CSV header: " + line);
    std::vector<SweepRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 12) throw std::runtime_error("malformed CSV row: " + line);
        SweepRow r;
        r.system = f[0];
        r.channel = f[1];
        r.snr_db = std::stod(f[2]);
        r.k_symbols = std::stoi(f[3]);
        r.bleu1 = std::stod(f[4]);
        r.bleu2 = std::stod(f[5]);
        r.bleu3 = std::stod(f[6]);
        r.bleu4 = std::stod(f[7]);
        r.ser = std::stod(f[8]);
        r.mean_cycles = std::stod(f[9]);
        r.n_sentences = static_cast<std::size_t>(std::stoull(f[10]));
        r.seed = std::stoull(f[11]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<SweepRow> read_rows_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open CSV: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_rows_csv(ss.str());
}

std::vector<SweepRow> run_snr_sweep(const SweepSpec& spec) {
    if (spec.snr_list.empty()) throw std::invalid_argument("sweep needs a non-empty SNR grid");
    if (spec.systems.empty()) throw std::invalid_argument("sweep needs at least one system");
    const auto sentences = load_eval_sentences(spec);

    std::vector<LoadedSystem> systems;
    systems.reserve(spec.systems.size());
    for (const auto& s : spec.systems) systems.push_back(load_system(s, sentences));

    const std::size_t n_points = systems.size() * spec.snr_list.size();
    std::vector<SweepRow> rows(n_points);
    auto run_point = [&](std::size_t p) {
        const std::size_t si = p / spec.snr_list.size();
        const std::size_t ni = p % spec.snr_list.size();
        rows[p] = eval_point(systems[si], sentences, spec.channel, spec.snr_list[ni],
                             derive_seed(spec.seed, p));
    };
    if (spec.jobs > 1) {
        std::vector<std::future<void>> futures;
        for (std::size_t p = 0; p < n_points; ++p)
            futures.push_back(std::async(std::launch::async, run_point, p));
        for (auto& f : futures) f.get();
    } else {
        for (std::size_t p = 0; p < n_points; ++p) run_point(p);
    }
    std::sort(rows.begin(), rows.end(), row_less);
    return rows;
}

std::vector<SweepRow> run_symbols_sweep(const SweepSpec& spec, const std::vector<int>& k_values) {
    if (spec.systems.size() != k_values.size())
        throw std::invalid_argument("symbols sweep needs one checkpoint per K value");
    auto rows = run_snr_sweep(spec);
    std::map<std::string, int> expected;
    for (std::size_t i = 0; i < spec.systems.size(); ++i)
        expected[spec.systems[i].name] = k_values[i];
    for (const auto& r : rows) {
        const auto it = expected.find(r.system);
        if (it != expected.end() && r.k_symbols != it->second)
            throw std::runtime_error("checkpoint for system '" + r.system + "' has K=" +
                                     std::to_string(r.k_symbols) + ", expected K=" +
                                     std::to_string(it->second));
    }
    return rows;
}

CycleProbeResult run_cycles_probe(const SweepSpec& spec) {
    if (spec.systems.size() != 1 || spec.systems[0].type != SystemSpec::Type::checkpoint)
        throw std::invalid_argument("cycles probe takes exactly one checkpoint system");
    const auto sentences = load_eval_sentences(spec);
    auto sys = load_system(spec.systems[0], sentences);
    if (sys.model->cfg.kind != model::UTConfig::Kind::adaptive)
        throw std::runtime_error("cycles probe requires an adaptive checkpoint (this one has halting disabled)");

    CycleProbeResult out;
    for (std::size_t ni = 0; ni < spec.snr_list.size(); ++ni) {
        const double snr = spec.snr_list[ni];
        Rng chan_rng(derive_seed(spec.seed, 0xCE + ni));
        std::map<int, std::size_t> hist;
        std::map<std::size_t, std::pair<double, std::size_t>> by_len;
        double cycles_sum = 0;
        std::size_t positions = 0;
        constexpr std::size_t kProbeBatch = 64;
        for (std::size_t begin = 0; begin < sys.tokenized.size(); begin += kProbeBatch) {
            const std::size_t end = std::min(begin + kProbeBatch, sys.tokenized.size());
            text::Batch batch;
            batch.batch_size = end - begin;
            for (std::size_t i = begin; i < end; ++i)
                batch.max_len = std::max(batch.max_len, sys.tokenized[i].length());
            batch.ids.assign(batch.batch_size * batch.max_len, text::kPad);
            batch.mask.assign(batch.batch_size * batch.max_len, 0);
            for (std::size_t i = begin; i < end; ++i) {
                batch.lengths.push_back(static_cast<int>(sys.tokenized[i].length()));
                for (std::size_t j = 0; j < sys.tokenized[i].length(); ++j) {
                    batch.ids[(i - begin) * batch.max_len + j] = sys.tokenized[i].ids[j];
                    batch.mask[(i - begin) * batch.max_len + j] = 1;
                }
            }
            const auto probe = sys.model->probe_cycles(batch, spec.channel, snr, chan_rng);
            for (std::size_t i = 0; i < probe.enc_cycles.size(); ++i) {
                const int c = probe.enc_cycles[i];
                ++hist[c];
                cycles_sum += c;
                ++positions;
                auto& agg = by_len[probe.enc_lengths[i]];
                agg.first += c;
                ++agg.second;
            }
            for (int c : probe.dec_cycles) {
                ++hist[c];
                cycles_sum += c;
                ++positions;
            }
        }
        SweepRow row;
        row.system = sys.spec.name;
        row.channel = channel::kind_name(spec.channel);
        row.snr_db = snr;
        row.k_symbols = sys.model->cfg.symbols_per_word;
        row.mean_cycles = positions ? cycles_sum / static_cast<double>(positions) : 0;
        row.n_sentences = sentences.size();
        row.seed = derive_seed(spec.seed, 0xCE + ni);
        out.rows.push_back(row);
        for (const auto& [cycles, count] : hist)
            out.histogram.push_back({snr, cycles, count});
        for (const auto& [len, agg] : by_len)
            out.by_length.push_back({snr, len, agg.first / static_cast<double>(agg.second), agg.second});
    }
    return out;
}

void write_cycle_sidecars(const std::string& main_csv_path, const CycleProbeResult& probe) {
    {
        std::ofstream os(main_csv_path + ".hist.csv", std::ios::binary);
        if (!os) throw std::runtime_error("cannot write histogram sidecar");
        os << "snr_db,cycles,count\n";
        for (const auto& h : probe.histogram)
            os << fmt(h.snr_db, "%.2f") << ',' << h.cycles << ',' << h.count << "\n";
    }
    {
        std::ofstream os(main_csv_path + ".lengths.csv", std::ios::binary);
        if (!os) throw std::runtime_error("cannot write length sidecar");
        os << "snr_db,sentence_length,mean_cycles,n_positions\n";
        for (const auto& r : probe.by_length)
            os << fmt(r.snr_db, "%.2f") << ',' << r.sentence_length << ',' << fmt(r.mean_cycles)
               << ',' << r.n_positions << "\n";
    }
}

DepthCompareResult run_depth_compare(const SweepSpec& spec) {
    DepthCompareResult out;
    out.rows = run_snr_sweep(spec);
    const auto sentences = load_eval_sentences(spec);
    for (const auto& s : spec.systems) {
        if (s.type != SystemSpec::Type::checkpoint)
            throw std::invalid_argument("depth compare takes checkpoint systems only");
        const auto m = train::load_model(s.checkpoint_path);
        out.param_counts.emplace_back(s.name, m.param_count());
    }
    return out;
}

void write_param_sidecar(const std::string& main_csv_path,
                         const std::vector<std::pair<std::string, std::size_t>>& counts) {
    std::ofstream os(main_csv_path + ".params.csv", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write parameter-count sidecar");
    os << "system,param_count\n";
    for (const auto& [name, count] : counts) os << name << ',' << count << "\n";
}

// ---------------------------------------------------------------------------
// SVG plots
// ---------------------------------------------------------------------------

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

double metric_of(const SweepRow& r, const std::string& metric) {
    if (metric == "bleu1") return r.bleu1;
    if (metric == "bleu2") return r.bleu2;
    if (metric == "bleu3") return r.bleu3;
    if (metric == "bleu4") return r.bleu4;
    if (metric == "ser") return r.ser;
    if (metric == "mean_cycles") return r.mean_cycles;
    throw std::invalid_argument("unknown plot metric: " + metric);
}

}  // namespace

std::string render_plot_svg(const std::string& csv_text, const std::string& metric) {
    const auto rows = parse_rows_csv(csv_text);
    if (rows.empty()) throw std::runtime_error("no rows to plot");

    std::map<std::string, std::vector<std::pair<double, double>>> series;
    double xmin = rows[0].snr_db, xmax = rows[0].snr_db;
    double ymin = metric_of(rows[0], metric), ymax = ymin;
    for (const auto& r : rows) {
        const double y = metric_of(r, metric);
        series[r.system].emplace_back(r.snr_db, y);
        xmin = std::min(xmin, r.snr_db);
        xmax = std::max(xmax, r.snr_db);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    for (auto& [name, pts] : series) std::sort(pts.begin(), pts.end());

    // 5% margin around the data range.
    const double xspan = xmax - xmin, yspan = ymax - ymin;
    const double x0 = xmin - 0.05 * (xspan > 0 ? xspan : 1.0);
    const double x1 = xmax + 0.05 * (xspan > 0 ? xspan : 1.0);
    const double y0 = ymin - 0.05 * (yspan > 0 ? yspan : 1.0);
    const double y1 = ymax + 0.05 * (yspan > 0 ? yspan : 1.0);

    const double width = 800, height = 500;
    const double ml = 70, mr = 160, mt = 30, mb = 50;
    auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * (width - ml - mr); };
    auto sy = [&](double y) { return height - mb - (y - y0) / (y1 - y0) * (height - mt - mb); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
       << height - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
       << "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        const double xv = x0 + (x1 - x0) * i / 5.0;
        const double yv = y0 + (y1 - y0) * i / 5.0;
        os << "<text x=\"" << fmt(sx(xv), "%.1f") << "\" y=\"" << height - mb + 18
           << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(xv, "%.1f") << "</text>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << fmt(sy(yv) + 4.0, "%.1f")
           << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(yv, "%.3f") << "</text>\n";
    }
    os << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 10
       << "\" font-size=\"13\" text-anchor=\"middle\">SNR (dB)</text>\n";
    os << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
       << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << (mt + height - mb) / 2 << ")\">" << metric << "</text>\n";

    std::size_t idx = 0;
    for (const auto& [name, pts] : series) {
        const char* color = kPalette[idx % (sizeof(kPalette) / sizeof(kPalette[0]))];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : pts) os << fmt(sx(x), "%.2f") << "," << fmt(sy(y), "%.2f") << " ";
        os << "\"/>\n";
        for (const auto& [x, y] : pts)
            os << "<circle cx=\"" << fmt(sx(x), "%.2f") << "\" cy=\"" << fmt(sy(y), "%.2f")
               << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        const double ly = mt + 18.0 * static_cast<double>(idx);
        os << "<rect x=\"" << width - mr + 10 << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" fill=\""
           << color << "\"/>\n";
        os << "<text x=\"" << width - mr + 28 << "\" y=\"" << ly + 10 << "\" font-size=\"12\">" << name
           << "</text>\n";
        ++idx;
    }
    os << "</svg>\n";
    return os.str();
}

void emit_plot(const std::string& csv_path, const std::string& metric, const std::string& out_path) {
    std::ifstream is(csv_path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open CSV: " + csv_path);
    std::ostringstream ss;
    ss << is.rdbuf();
    const auto svg = render_plot_svg(ss.str(), metric);
    std::ofstream os(out_path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write SVG: " + out_path);
    os << svg;
}

}  // namespace semcom::sweep
