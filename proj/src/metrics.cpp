#include "semcom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace semcom::metrics {

namespace {

std::map<std::vector<std::string>, std::size_t> ngram_counts(const Sentence& s, std::size_t n) {
    std::map<std::vector<std::string>, std::size_t> counts;
    if (s.size() < n) return counts;
    for (std::size_t i = 0; i + n <= s.size(); ++i)
        ++counts[std::vector<std::string>(s.begin() + i, s.begin() + i + n)];
    return counts;
}

}  // namespace

double bleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references,
            int max_n) {
    if (candidates.empty() || candidates.size() != references.size())
        throw std::invalid_argument("bleu requires aligned non-empty candidate/reference lists");
    if (max_n < 1 || max_n > 4) throw std::invalid_argument("bleu max_n must be in [1,4]");

    std::size_t cand_len = 0, ref_len = 0;
    std::vector<std::size_t> clipped(static_cast<std::size_t>(max_n), 0);
    std::vector<std::size_t> total(static_cast<std::size_t>(max_n), 0);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        cand_len += candidates[i].size();
        ref_len += references[i].size();
        for (int n = 1; n <= max_n; ++n) {
            auto c = ngram_counts(candidates[i], static_cast<std::size_t>(n));
            auto r = ngram_counts(references[i], static_cast<std::size_t>(n));
            for (const auto& [gram, count] : c) {
                total[static_cast<std::size_t>(n - 1)] += count;
                auto it = r.find(gram);
                if (it != r.end())
                    clipped[static_cast<std::size_t>(n - 1)] += std::min(count, it->second);
            }
        }
    }

    double log_precision = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        const auto idx = static_cast<std::size_t>(n - 1);
        if (total[idx] == 0 || clipped[idx] == 0) return 0.0;
        log_precision += std::log(static_cast<double>(clipped[idx]) / static_cast<double>(total[idx]));
    }
    log_precision /= static_cast<double>(max_n);

    double bp = 1.0;
    if (cand_len == 0) return 0.0;
    if (cand_len < ref_len)
        bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
    return bp * std::exp(log_precision);
}

double symbol_error_ratio(const std::vector<Sentence>& candidates,
                          const std::vector<Sentence>& references) {
    if (candidates.empty() || candidates.size() != references.size())
        throw std::invalid_argument("symbol_error_ratio requires aligned non-empty lists");
    std::size_t errors = 0, positions = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        const auto& r = references[i];
        const std::size_t len = std::max(c.size(), r.size());
        positions += len;
        for (std::size_t j = 0; j < len; ++j) {
            if (j >= c.size() || j >= r.size() || c[j] != r[j]) ++errors;
        }
    }
    return positions == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(positions);
}

}  // namespace semcom::metrics
