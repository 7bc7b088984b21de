#pragma once

// Experiment orchestration: SNR sweeps over learned checkpoints and classical
// baselines, symbols-per-word sweeps, halting-cycle probes, depth comparison,
// CSV emission with a stable schema, and deterministic SVG plots.

#include <cstdint>
#include <string>
#include <vector>

#include "semcom/channel.hpp"
#include "semcom/classic/pipeline.hpp"

namespace semcom::sweep {

struct SweepRow {
    std::string system;
    std::string channel;
    double snr_db = 0;
    int k_symbols = 0;
    double bleu1 = 0, bleu2 = 0, bleu3 = 0, bleu4 = 0;
    double ser = 0;
    double mean_cycles = 0;
    std::size_t n_sentences = 0;
    std::uint64_t seed = 0;
};

// Exactly: system,channel,snr_db,k_symbols,bleu1,bleu2,bleu3,bleu4,ser,mean_cycles,n_sentences,seed
std::string csv_header();
std::string format_row(const SweepRow& r);
// Sorts rows canonically (system, channel, snr_db, k_symbols) before writing.
void write_rows_csv(const std::string& path, std::vector<SweepRow> rows);
std::vector<SweepRow> parse_rows_csv(const std::string& text);
std::vector<SweepRow> read_rows_csv(const std::string& path);

struct SystemSpec {
    enum class Type { checkpoint, baseline_turbo, baseline_rs };
    std::string name;
    Type type = Type::checkpoint;
    std::string checkpoint_path;  // checkpoint systems only
};

struct SweepSpec {
    std::vector<SystemSpec> systems;
    std::vector<double> snr_list;
    channel::Kind channel = channel::Kind::awgn;
    std::uint64_t seed = 0;
    std::size_t n_sentences = 500;
    std::string corpus_path;  // empty: deterministic synthetic corpus
    int jobs = 1;             // >1: grid points evaluated concurrently
};

// One row per (system, snr); deterministic per seed, independent of jobs.
std::vector<SweepRow> run_snr_sweep(const SweepSpec& spec);

// Per-K sweep; system names carry the K value, checkpoints must match it.
std::vector<SweepRow> run_symbols_sweep(const SweepSpec& spec, const std::vector<int>& k_values);

struct CycleHistogramRow {
    double snr_db = 0;
    int cycles = 0;
    std::size_t count = 0;
};

struct CycleLengthRow {
    double snr_db = 0;
    std::size_t sentence_length = 0;
    double mean_cycles = 0;
    std::size_t n_positions = 0;
};

struct CycleProbeResult {
    std::vector<SweepRow> rows;               // standard schema; bleu/ser zero
    std::vector<CycleHistogramRow> histogram; // per-position cycle distribution
    std::vector<CycleLengthRow> by_length;    // per-sentence-length breakdown
};

// Teacher-forced halting statistics per SNR; rejects fixed-depth checkpoints.
CycleProbeResult run_cycles_probe(const SweepSpec& spec);
void write_cycle_sidecars(const std::string& main_csv_path, const CycleProbeResult& probe);

struct DepthCompareResult {
    std::vector<SweepRow> rows;
    std::vector<std::pair<std::string, std::size_t>> param_counts;  // per system
};

// Joint sweep plus trainable-parameter accounting per system.
DepthCompareResult run_depth_compare(const SweepSpec& spec);
void write_param_sidecar(const std::string& main_csv_path,
                         const std::vector<std::pair<std::string, std::size_t>>& counts);

// Deterministic line plot (one series per system) of `metric` versus SNR.
// Pure function of the CSV bytes.
std::string render_plot_svg(const std::string& csv_text, const std::string& metric);
void emit_plot(const std::string& csv_path, const std::string& metric, const std::string& out_path);

}  // namespace semcom::sweep
