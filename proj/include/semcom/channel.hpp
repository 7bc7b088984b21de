#pragma once

// Physical channel layer: power normalization, AWGN and flat Rayleigh fading
// with known channel gain at the receiver. Two surfaces share the same math:
// a tape-aware tensor path used inside the learned model (noise and gain act
// as constants in backward, the normalization scale is differentiable), and
// a plain std::complex path for the classical chain and Monte-Carlo checks.

#include <complex>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "semcom/rng.hpp"
#include "semcom/tensor.hpp"

namespace semcom::channel {

enum class Kind { awgn, rayleigh };

inline Kind kind_from_string(const std::string& s) {
    if (s == "awgn") return Kind::awgn;
    if (s == "rayleigh") return Kind::rayleigh;
    throw std::invalid_argument("unknown channel kind: " + s);
}

inline const char* kind_name(Kind k) { return k == Kind::awgn ? "awgn" : "rayleigh"; }

struct ChannelConfig {
    Kind kind = Kind::awgn;
    double snr_db = 10.0;
    std::uint64_t seed = 0;
};

// Total complex-noise variance for unit average symbol power (Es/N0 reading).
inline double snr_to_noise_var(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

// Fading gains below this magnitude are redrawn to keep equalization bounded.
constexpr double kDeepFadeThreshold = 1e-12;

inline std::complex<double> draw_gain(Rng& rng) {
    for (;;) {
        const std::complex<double> h(rng.gaussian() / std::sqrt(2.0), rng.gaussian() / std::sqrt(2.0));
        if (std::abs(h) > kDeepFadeThreshold) return h;
        std::clog << "channel: deep fade |h| <= 1e-12 redrawn" << std::endl;
    }
}

// ---------------------------------------------------------------------------
// Tensor path (participates in the training graph)
// ---------------------------------------------------------------------------

// x, y in C^{rows x K} stored as separate real/imaginary tensors. The fixed
// pairing with a real [rows x 2K] layer output is (re0, im0, re1, im1, ...).
template <class S>
struct ComplexBlockT {
    core::TensorT<S> re, im;

    std::size_t rows() const { return re.rows(); }
    std::size_t symbols_per_row() const { return re.cols(); }
    std::size_t total_symbols() const { return re.size(); }
};

using ComplexBlock = ComplexBlockT<float>;

template <class S>
ComplexBlockT<S> complex_from_real(core::TapeT<S>* tape, const core::TensorT<S>& x_real) {
    auto [re, im] = core::deinterleave_cols(tape, x_real);
    return {re, im};
}

template <class S>
core::TensorT<S> real_from_complex(core::TapeT<S>* tape, const ComplexBlockT<S>& x) {
    return core::interleave_cols(tape, x.re, x.im);
}

enum class NormScope { per_batch, per_sentence };

// Scales so the average per-complex-symbol power is 1. The scale factor is a
// function of x and participates in backward.
template <class S>
ComplexBlockT<S> power_normalize(core::TapeT<S>* tape, const ComplexBlockT<S>& x) {
    const auto power = core::add(tape, core::mul(tape, x.re, x.re), core::mul(tape, x.im, x.im));
    const auto mean_power = core::mean(tape, power);
    if (mean_power.scalar_value() <= S(0))
        throw std::invalid_argument("power_normalize on all-zero block");
    const auto scale = core::rsqrt(tape, mean_power);
    return {core::mul_scalar(tape, x.re, scale), core::mul_scalar(tape, x.im, scale)};
}

// Sentence boundaries for per-sentence operations: row range [offsets[i], offsets[i+1]).
template <class S>
ComplexBlockT<S> power_normalize_per_sentence(core::TapeT<S>* tape, const ComplexBlockT<S>& x,
                                              const std::vector<std::size_t>& offsets) {
    std::vector<core::TensorT<S>> re_parts, im_parts;
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
        ComplexBlockT<S> part{core::slice_rows(tape, x.re, offsets[i], offsets[i + 1]),
                              core::slice_rows(tape, x.im, offsets[i], offsets[i + 1])};
        auto norm = power_normalize(tape, part);
        re_parts.push_back(norm.re);
        im_parts.push_back(norm.im);
    }
    return {core::concat_rows(tape, re_parts), core::concat_rows(tape, im_parts)};
}

// y = x + n with n drawn i.i.d. circularly symmetric complex Gaussian of
// total variance noise_var (noise_var/2 per real component). The noise is a
// constant in backward.
template <class S>
ComplexBlockT<S> transmit_awgn(core::TapeT<S>* tape, const ComplexBlockT<S>& x, double noise_var,
                               Rng& rng) {
    const double sd = std::sqrt(noise_var / 2.0);
    auto n_re = core::TensorT<S>::zeros(x.re.shape());
    auto n_im = core::TensorT<S>::zeros(x.im.shape());
    for (std::size_t i = 0; i < n_re.size(); ++i) {
        n_re.value()[i] = static_cast<S>(sd * rng.gaussian());
        n_im.value()[i] = static_cast<S>(sd * rng.gaussian());
    }
    return {core::add(tape, x.re, n_re), core::add(tape, x.im, n_im)};
}

// y = h*x + n with one complex gain per sentence, constant throughout that
// sentence; returns y and the drawn gains so the receiver can equalize.
template <class S>
struct FadedBlockT {
    ComplexBlockT<S> y;
    std::vector<std::complex<double>> gains;  // one per sentence
};

template <class S>
FadedBlockT<S> transmit_rayleigh(core::TapeT<S>* tape, const ComplexBlockT<S>& x, double noise_var,
                                 Rng& rng, const std::vector<std::size_t>& offsets) {
    const std::size_t rows = x.rows();
    std::vector<std::complex<double>> gains;
    auto h_re = core::TensorT<S>::zeros({rows, 1});
    auto h_im = core::TensorT<S>::zeros({rows, 1});
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
        const auto h = draw_gain(rng);
        gains.push_back(h);
        for (std::size_t r = offsets[i]; r < offsets[i + 1]; ++r) {
            h_re.value()[r] = static_cast<S>(h.real());
            h_im.value()[r] = static_cast<S>(h.imag());
        }
    }
    // (a+bi)(c+di) = (ac - bd) + (ad + bc)i with h constant.
    auto yr = core::sub(tape, core::mul_colvec(tape, x.re, h_re), core::mul_colvec(tape, x.im, h_im));
    auto yi = core::add(tape, core::mul_colvec(tape, x.im, h_re), core::mul_colvec(tape, x.re, h_im));
    auto faded = transmit_awgn(tape, ComplexBlockT<S>{yr, yi}, noise_var, rng);
    return {faded, gains};
}

// Perfect-CSI equalization: y / h per sentence.
template <class S>
ComplexBlockT<S> equalize(core::TapeT<S>* tape, const ComplexBlockT<S>& y,
                          const std::vector<std::complex<double>>& gains,
                          const std::vector<std::size_t>& offsets) {
    const std::size_t rows = y.rows();
    auto g_re = core::TensorT<S>::zeros({rows, 1});
    auto g_im = core::TensorT<S>::zeros({rows, 1});
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
        const auto inv = 1.0 / gains[i];
        for (std::size_t r = offsets[i]; r < offsets[i + 1]; ++r) {
            g_re.value()[r] = static_cast<S>(inv.real());
            g_im.value()[r] = static_cast<S>(inv.imag());
        }
    }
    auto xr = core::sub(tape, core::mul_colvec(tape, y.re, g_re), core::mul_colvec(tape, y.im, g_im));
    auto xi = core::add(tape, core::mul_colvec(tape, y.im, g_re), core::mul_colvec(tape, y.re, g_im));
    return {xr, xi};
}

// Normalized transmit + equalized receive in one call; what the model treats
// as its "channel layer".
template <class S>
ComplexBlockT<S> transmit(core::TapeT<S>* tape, const ComplexBlockT<S>& x, const ChannelConfig& cfg,
                          Rng& rng, const std::vector<std::size_t>& offsets) {
    const double noise_var = snr_to_noise_var(cfg.snr_db);
    if (cfg.kind == Kind::awgn) return transmit_awgn(tape, x, noise_var, rng);
    auto faded = transmit_rayleigh(tape, x, noise_var, rng, offsets);
    return equalize(tape, faded.y, faded.gains, offsets);
}

// ---------------------------------------------------------------------------
// Plain complex path (classical chain, Monte-Carlo calibration)
// ---------------------------------------------------------------------------

using CVec = std::vector<std::complex<double>>;

inline void add_awgn(CVec& x, double noise_var, Rng& rng) {
    const double sd = std::sqrt(noise_var / 2.0);
    for (auto& v : x) v += std::complex<double>(sd * rng.gaussian(), sd * rng.gaussian());
}

// Applies one gain to the whole vector (one "sentence"), adds noise, and
// equalizes with the known gain. Returns the gain actually used.
inline std::complex<double> fade_and_equalize(CVec& x, double noise_var, Rng& rng) {
    const auto h = draw_gain(rng);
    for (auto& v : x) v *= h;
    add_awgn(x, noise_var, rng);
    for (auto& v : x) v /= h;
    return h;
}

inline double mean_power(const CVec& x) {
    double p = 0;
    for (const auto& v : x) p += std::norm(v);
    return x.empty() ? 0.0 : p / static_cast<double>(x.size());
}

}  // namespace semcom::channel
