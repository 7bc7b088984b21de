#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "semcom/model.hpp"
#include "semcom/sweep.hpp"
#include "semcom/train.hpp"

using namespace semcom;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Writes an untrained checkpoint + sidecars usable by the sweep runners.
std::string make_checkpoint(const fs::path& dir, const std::string& name,
                            model::UTConfig::Kind kind, int depth, int k, std::uint64_t seed) {
    const auto lines = text::synth_corpus(80, 2, 150);
    const auto filtered = text::filter_corpus(lines);
    auto vocab = text::Vocabulary::build(filtered.sentences, 300);
    model::UTConfig c;
    c.vocab_size = static_cast<int>(vocab.size());
    c.d_model = 16;
    c.heads = 2;
    c.ffn_inner = 32;
    c.chan_hidden = 32;
    c.symbols_per_word = k;
    c.max_cycles = 3;
    c.dropout = 0.0;
    c.kind = kind;
    c.depth = depth;
    auto m = model::SemanticModel::init(c, seed);
    const std::string path = (dir / (name + ".ckpt")).string();
    train::save_model(m, path);
    vocab.save(path + ".vocab");
    return path;
}

}  // namespace

TEST_CASE("csv schema is pinned and rows round trip") {
    CHECK(sweep::csv_header() ==
          "system,channel,snr_db,k_symbols,bleu1,bleu2,bleu3,bleu4,ser,mean_cycles,n_sentences,seed");

    sweep::SweepRow r;
    r.system = "ut";
    r.channel = "awgn";
    r.snr_db = 6.0;
    r.k_symbols = 8;
    r.bleu1 = 0.912345;
    r.ser = 0.01;
    r.n_sentences = 100;
    r.seed = 42;
    const auto parsed = sweep::parse_rows_csv(sweep::csv_header() + "\n" + sweep::format_row(r) + "\n");
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].system == "ut");
    CHECK(parsed[0].snr_db == doctest::Approx(6.0));
    CHECK(parsed[0].bleu1 == doctest::Approx(0.912345));
    CHECK(parsed[0].seed == 42);

    CHECK_THROWS_AS(sweep::parse_rows_csv("bogus,header\n1,2\n"), std::runtime_error);
}

TEST_CASE("baseline sweep: cardinality, determinism, and parallel/serial agreement") {
    const auto dir = fs::temp_directory_path() / "semcom_sweep_test";
    fs::create_directories(dir);

    sweep::SweepSpec spec;
    sweep::SystemSpec turbo{.name = "turbo", .type = sweep::SystemSpec::Type::baseline_turbo,
                            .checkpoint_path = ""};
    sweep::SystemSpec rs{.name = "rs", .type = sweep::SystemSpec::Type::baseline_rs,
                         .checkpoint_path = ""};
    spec.systems = {turbo, rs};
    spec.snr_list = {8.0, 14.0};
    spec.seed = 5;
    spec.n_sentences = 25;

    const auto rows = sweep::run_snr_sweep(spec);
    CHECK(rows.size() == 4);  // 2 systems x 2 SNRs

    const std::string out1 = (dir / "a.csv").string();
    const std::string out2 = (dir / "b.csv").string();
    sweep::write_rows_csv(out1, rows);
    sweep::write_rows_csv(out2, sweep::run_snr_sweep(spec));
    CHECK(slurp(out1) == slurp(out2));  // byte-identical rerun

    auto parallel = spec;
    parallel.jobs = 4;
    const std::string out3 = (dir / "c.csv").string();
    sweep::write_rows_csv(out3, sweep::run_snr_sweep(parallel));
    CHECK(slurp(out3) == slurp(out1));  // jobs do not change the bytes

    // Classical chains should be clean at very high SNR.
    for (const auto& r : sweep::run_snr_sweep([&] {
             auto s = spec;
             s.snr_list = {200.0};
             return s;
         }()))
        CHECK(r.ser == doctest::Approx(0.0));

    fs::remove_all(dir);
}

TEST_CASE("checkpoint sweep rows carry the model's symbol width") {
    const auto dir = fs::temp_directory_path() / "semcom_sweep_ckpt";
    fs::create_directories(dir);
    const auto path = make_checkpoint(dir, "ut", model::UTConfig::Kind::adaptive, 1, 4, 7);

    sweep::SweepSpec spec;
    spec.systems = {{.name = "ut", .type = sweep::SystemSpec::Type::checkpoint,
                     .checkpoint_path = path}};
    spec.snr_list = {6.0};
    spec.n_sentences = 12;
    spec.seed = 1;
    const auto rows = sweep::run_snr_sweep(spec);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].k_symbols == 4);
    CHECK(rows[0].mean_cycles > 0.0);
    CHECK(rows[0].mean_cycles <= 3.0);

    // The symbols sweep validates the advertised K against the checkpoint.
    CHECK_THROWS_AS(sweep::run_symbols_sweep(spec, {8}), std::runtime_error);
    CHECK(sweep::run_symbols_sweep(spec, {4}).size() == 1);

    fs::remove_all(dir);
}

TEST_CASE("cycle probe reports bounded cycles and rejects fixed-depth checkpoints") {
    const auto dir = fs::temp_directory_path() / "semcom_probe_test";
    fs::create_directories(dir);
    const auto adaptive = make_checkpoint(dir, "ut", model::UTConfig::Kind::adaptive, 1, 2, 9);
    const auto fixed = make_checkpoint(dir, "fx", model::UTConfig::Kind::fixed_depth, 3, 2, 9);

    sweep::SweepSpec spec;
    spec.systems = {{.name = "ut", .type = sweep::SystemSpec::Type::checkpoint,
                     .checkpoint_path = adaptive}};
    spec.snr_list = {0.0, 10.0};
    spec.n_sentences = 16;
    spec.seed = 3;
    const auto probe = sweep::run_cycles_probe(spec);
    CHECK(probe.rows.size() == 2);
    std::size_t hist_total = 0;
    for (const auto& h : probe.histogram) {
        CHECK(h.cycles >= 1);
        CHECK(h.cycles <= 3);
        hist_total += h.count;
    }
    // Histogram covers encoder + decoder positions for every SNR point.
    CHECK(hist_total % 2 == 0);
    for (const auto& r : probe.rows) {
        CHECK(r.mean_cycles > 0.0);
        CHECK(r.mean_cycles <= 3.0);
    }
    for (const auto& l : probe.by_length) {
        CHECK(l.mean_cycles <= 3.0);
        CHECK(l.n_positions > 0);
    }

    const std::string out = (dir / "probe.csv").string();
    sweep::write_rows_csv(out, probe.rows);
    sweep::write_cycle_sidecars(out, probe);
    CHECK(fs::exists(out + ".hist.csv"));
    CHECK(fs::exists(out + ".lengths.csv"));

    auto bad = spec;
    bad.systems[0].checkpoint_path = fixed;
    CHECK_THROWS_WITH_AS(sweep::run_cycles_probe(bad), doctest::Contains("adaptive"),
                         std::runtime_error);

    fs::remove_all(dir);
}

TEST_CASE("depth compare counts parameters per system") {
    const auto dir = fs::temp_directory_path() / "semcom_depth_test";
    fs::create_directories(dir);
    const auto ut = make_checkpoint(dir, "ut", model::UTConfig::Kind::adaptive, 1, 2, 11);
    const auto f3 = make_checkpoint(dir, "fixed3", model::UTConfig::Kind::fixed_depth, 3, 2, 11);
    const auto f6 = make_checkpoint(dir, "fixed6", model::UTConfig::Kind::fixed_depth, 6, 2, 11);

    sweep::SweepSpec spec;
    spec.systems = {
        {.name = "ut", .type = sweep::SystemSpec::Type::checkpoint, .checkpoint_path = ut},
        {.name = "fixed3", .type = sweep::SystemSpec::Type::checkpoint, .checkpoint_path = f3},
        {.name = "fixed6", .type = sweep::SystemSpec::Type::checkpoint, .checkpoint_path = f6}};
    spec.snr_list = {4.0, 10.0};
    spec.n_sentences = 10;
    spec.seed = 2;

    const auto res = sweep::run_depth_compare(spec);
    CHECK(res.rows.size() == 6);  // 3 systems x 2 SNRs
    REQUIRE(res.param_counts.size() == 3);
    std::size_t put = 0, p3 = 0, p6 = 0;
    for (const auto& [name, count] : res.param_counts) {
        if (name == "ut") put = count;
        if (name == "fixed3") p3 = count;
        if (name == "fixed6") p6 = count;
    }
    CHECK(put < p3);
    CHECK(p3 < p6);

    const std::string out = (dir / "depth.csv").string();
    sweep::write_rows_csv(out, res.rows);
    sweep::write_param_sidecar(out, res.param_counts);
    const auto sidecar = slurp(out + ".params.csv");
    CHECK(sidecar.find("system,param_count") == 0);
    CHECK(sidecar.find("fixed6") != std::string::npos);

    fs::remove_all(dir);
}

TEST_CASE("plot rendering is a pure function of the csv bytes") {
    std::ostringstream csv;
    csv << sweep::csv_header() << "\n";
    sweep::SweepRow r;
    r.channel = "awgn";
    r.n_sentences = 10;
    for (const std::string sys : {"ut", "turbo"}) {
        for (double snr : {0.0, 6.0, 12.0}) {
            r.system = sys;
            r.snr_db = snr;
            r.bleu1 = sys == "ut" ? 0.5 + snr / 30.0 : 0.2 + snr / 20.0;
            csv << sweep::format_row(r) << "\n";
        }
    }
    const auto svg1 = sweep::render_plot_svg(csv.str(), "bleu1");
    const auto svg2 = sweep::render_plot_svg(csv.str(), "bleu1");
    CHECK(svg1 == svg2);

    std::size_t series = 0;
    for (std::size_t pos = svg1.find("<polyline"); pos != std::string::npos;
         pos = svg1.find("<polyline", pos + 1))
        ++series;
    CHECK(series == 2);  // one series per system

    CHECK(svg1.find("SNR (dB)") != std::string::npos);
    CHECK(svg1.find("bleu1") != std::string::npos);
    // Axis labels span the data range with a 5% margin: -0.6 and 12.6.
    CHECK(svg1.find(">-0.6<") != std::string::npos);
    CHECK(svg1.find(">12.6<") != std::string::npos);

    CHECK_THROWS_AS(sweep::render_plot_svg(csv.str(), "nonsense"), std::invalid_argument);
    CHECK_THROWS_AS(sweep::render_plot_svg("not,a,sweep\n", "bleu1"), std::runtime_error);
}
