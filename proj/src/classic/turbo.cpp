#include "semcom/classic/turbo.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>

#include "semcom/rng.hpp"

namespace semcom::classic {

namespace {

// State register (s1 s2 s3), s1 newest: state = s1*4 + s2*2 + s3.
// Feedback polynomial 1 + D + D^3, feedforward 1 + D^2 + D^3.
inline int feedback_bit(int state, int u) {
    const int s1 = (state >> 2) & 1, s3 = state & 1;
    return u ^ s1 ^ s3;
}

inline int parity_bit(int state, int a) {
    const int s2 = (state >> 1) & 1, s3 = state & 1;
    return a ^ s2 ^ s3;
}

inline int next_state(int state, int a) {
    const int s1 = (state >> 2) & 1, s2 = (state >> 1) & 1;
    return a * 4 + s1 * 2 + s2;
}

struct RscOutput {
    std::vector<int> parity;    // one per info bit
    std::vector<int> tail_sys;  // 3 termination inputs
    std::vector<int> tail_par;  // their parities
};

RscOutput rsc_encode(const std::vector<int>& info) {
    RscOutput out;
    out.parity.reserve(info.size());
    int state = 0;
    for (int u : info) {
        const int a = feedback_bit(state, u);
        out.parity.push_back(parity_bit(state, a));
        state = next_state(state, a);
    }
    for (int t = 0; t < kTurboMemory; ++t) {
        // Input that forces the feedback to zero, driving the register home.
        const int s1 = (state >> 2) & 1, s3 = state & 1;
        const int u = s1 ^ s3;
        out.tail_sys.push_back(u);
        out.tail_par.push_back(parity_bit(state, 0));
        state = next_state(state, 0);
    }
    return out;
}

constexpr double kNegInf = -1e30;

// Max-Log-MAP (BCJR with max) over one terminated constituent trellis.
// sys/par/apriori have length k + 3 (apriori is zero on the tail).
// Returns posterior LLRs for all k+3 steps.
std::vector<double> max_log_map(const std::vector<double>& sys, const std::vector<double>& par,
                                const std::vector<double>& apriori) {
    const std::size_t n = sys.size();
    // Transition tables indexed by [state][input bit u].
    int ns[kTurboStates][2], pbit[kTurboStates][2];
    for (int s = 0; s < kTurboStates; ++s)
        for (int u = 0; u < 2; ++u) {
            const int a = feedback_bit(s, u);
            ns[s][u] = next_state(s, a);
            pbit[s][u] = parity_bit(s, a);
        }

    auto branch = [&](std::size_t i, int u, int p) {
        const double tu = u == 0 ? 1.0 : -1.0;
        const double tp = p == 0 ? 1.0 : -1.0;
        return 0.5 * (tu * (sys[i] + apriori[i]) + tp * par[i]);
    };

    std::vector<std::array<double, kTurboStates>> alpha(n + 1), beta(n + 1);
    for (auto& a : alpha) a.fill(kNegInf);
    for (auto& b : beta) b.fill(kNegInf);
    alpha[0][0] = 0.0;
    beta[n][0] = 0.0;  // both trellises are terminated

    for (std::size_t i = 0; i < n; ++i)
        for (int s = 0; s < kTurboStates; ++s) {
            if (alpha[i][s] == kNegInf) continue;
            for (int u = 0; u < 2; ++u) {
                const double m = alpha[i][s] + branch(i, u, pbit[s][u]);
                alpha[i + 1][ns[s][u]] = std::max(alpha[i + 1][ns[s][u]], m);
            }
        }
    for (std::size_t i = n; i-- > 0;)
        for (int s = 0; s < kTurboStates; ++s)
            for (int u = 0; u < 2; ++u) {
                const double b = beta[i + 1][ns[s][u]];
                if (b == kNegInf) continue;
                beta[i][s] = std::max(beta[i][s], b + branch(i, u, pbit[s][u]));
            }

    std::vector<double> post(n);
    for (std::size_t i = 0; i < n; ++i) {
        double m0 = kNegInf, m1 = kNegInf;
        for (int s = 0; s < kTurboStates; ++s) {
            if (alpha[i][s] == kNegInf) continue;
            for (int u = 0; u < 2; ++u) {
                const double m = alpha[i][s] + branch(i, u, pbit[s][u]) + beta[i + 1][ns[s][u]];
                (u == 0 ? m0 : m1) = std::max(u == 0 ? m0 : m1, m);
            }
        }
        post[i] = m0 - m1;
    }
    return post;
}

}  // namespace

std::vector<std::size_t> turbo_interleaver(std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> perm(k);
    for (std::size_t i = 0; i < k; ++i) perm[i] = i;
    Rng rng(derive_seed(seed, k));
    for (std::size_t i = k; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    return perm;
}

BitStream turbo_encode(const BitStream& info, const TurboConfig& cfg) {
    const std::size_t k = info.size();
    if (k < 1) throw std::invalid_argument("turbo_encode requires at least one info bit");
    std::vector<int> bits = info.to_bits();

    const auto perm = turbo_interleaver(k, cfg.interleaver_seed);
    std::vector<int> interleaved(k);
    for (std::size_t i = 0; i < k; ++i) interleaved[i] = bits[perm[i]];

    const RscOutput c1 = rsc_encode(bits);
    const RscOutput c2 = rsc_encode(interleaved);

    BitStream out;
    for (int b : bits) out.push(b);
    for (int b : c1.parity) out.push(b);
    for (int b : c2.parity) out.push(b);
    for (int b : c1.tail_sys) out.push(b);
    for (int b : c1.tail_par) out.push(b);
    for (int b : c2.tail_sys) out.push(b);
    for (int b : c2.tail_par) out.push(b);
    return out;
}

BitStream turbo_decode(const std::vector<double>& llr, std::size_t k, const TurboConfig& cfg) {
    if (llr.size() != 3 * k + kTurboTailBits)
        throw std::invalid_argument("turbo_decode llr length must be 3k+12");
    const auto perm = turbo_interleaver(k, cfg.interleaver_seed);

    const double* sys = llr.data();
    const double* par1 = llr.data() + k;
    const double* par2 = llr.data() + 2 * k;
    const double* tail1 = llr.data() + 3 * k;      // sys(3) then parity(3)
    const double* tail2 = llr.data() + 3 * k + 6;  // sys(3) then parity(3)

    std::vector<double> sys1(k + kTurboMemory), p1(k + kTurboMemory);
    std::vector<double> sys2(k + kTurboMemory), p2(k + kTurboMemory);
    for (std::size_t i = 0; i < k; ++i) {
        sys1[i] = sys[i];
        p1[i] = par1[i];
        sys2[i] = sys[perm[i]];
        p2[i] = par2[i];
    }
    for (int t = 0; t < kTurboMemory; ++t) {
        sys1[k + t] = tail1[t];
        p1[k + t] = tail1[kTurboMemory + t];
        sys2[k + t] = tail2[t];
        p2[k + t] = tail2[kTurboMemory + t];
    }

    std::vector<double> ext2to1(k, 0.0);  // extrinsic from decoder 2, natural order
    std::vector<double> ext1(k, 0.0);
    std::vector<double> apriori1(k + kTurboMemory, 0.0), apriori2(k + kTurboMemory, 0.0);
    for (int it = 0; it < cfg.iterations; ++it) {
        for (std::size_t i = 0; i < k; ++i) apriori1[i] = ext2to1[i];
        const auto post1 = max_log_map(sys1, p1, apriori1);
        for (std::size_t i = 0; i < k; ++i)
            ext1[i] = cfg.extrinsic_scale * (post1[i] - sys1[i] - apriori1[i]);

        for (std::size_t i = 0; i < k; ++i) apriori2[i] = ext1[perm[i]];
        const auto post2 = max_log_map(sys2, p2, apriori2);
        for (std::size_t i = 0; i < k; ++i)
            ext2to1[perm[i]] = cfg.extrinsic_scale * (post2[i] - sys2[i] - apriori2[i]);
    }

    BitStream out;
    for (std::size_t i = 0; i < k; ++i) {
        const double posterior = sys1[i] + ext1[i] + ext2to1[i];
        out.push(posterior > 0.0 ? 0 : 1);
    }
    return out;
}

}  // namespace semcom::classic
