#include "semcom/classic/rs.hpp"

#include <array>
#include <stdexcept>

namespace semcom::classic {

namespace gf256 {

namespace {

constexpr int kPrimPoly = 0x11D;

struct Tables {
    std::array<std::uint8_t, 512> exp{};
    std::array<int, 256> log{};

    Tables() {
        int x = 1;
        for (int i = 0; i < 255; ++i) {
            exp[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(x);
            log[static_cast<std::size_t>(x)] = i;
            x <<= 1;
            if (x & 0x100) x ^= kPrimPoly;
        }
        for (int i = 255; i < 512; ++i) exp[static_cast<std::size_t>(i)] = exp[static_cast<std::size_t>(i - 255)];
        log[0] = -1;
    }
};

const Tables& tables() {
    static const Tables t;
    return t;
}

}  // namespace

std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
    if (a == 0 || b == 0) return 0;
    const auto& t = tables();
    return t.exp[static_cast<std::size_t>(t.log[a] + t.log[b])];
}

std::uint8_t inv(std::uint8_t a) {
    if (a == 0) throw std::domain_error("gf256 inverse of zero");
    const auto& t = tables();
    return t.exp[static_cast<std::size_t>(255 - t.log[a])];
}

std::uint8_t pow_alpha(int e) {
    e %= 255;
    if (e < 0) e += 255;
    return tables().exp[static_cast<std::size_t>(e)];
}

}  // namespace gf256

namespace {

using Poly = std::vector<std::uint8_t>;  // coefficients, lowest degree first

// Generator polynomial with roots alpha^1 .. alpha^(2t).
const Poly& generator_poly() {
    static const Poly g = [] {
        Poly g{1};
        for (int i = 1; i <= 2 * kRsT; ++i) {
            const std::uint8_t root = gf256::pow_alpha(i);
            Poly next(g.size() + 1, 0);
            for (std::size_t j = 0; j < g.size(); ++j) {
                next[j + 1] ^= g[j];                    // x * g
                next[j] ^= gf256::mul(g[j], root);      // root * g
            }
            g = std::move(next);
        }
        return g;
    }();
    return g;
}

std::uint8_t poly_eval(const Poly& p, std::uint8_t x) {
    std::uint8_t acc = 0;
    for (std::size_t i = p.size(); i-- > 0;) acc = static_cast<std::uint8_t>(gf256::mul(acc, x) ^ p[i]);
    return acc;
}

}  // namespace

std::vector<std::uint8_t> rs_encode(const std::vector<std::uint8_t>& data) {
    if (data.size() != kRsK) throw std::invalid_argument("rs_encode expects exactly 223 bytes");
    // Systematic encoding: parity = (data * x^(2t)) mod g(x).
    const auto& g = generator_poly();
    std::vector<std::uint8_t> rem(2 * kRsT, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::uint8_t feedback = static_cast<std::uint8_t>(data[i] ^ rem[0]);
        for (std::size_t j = 0; j + 1 < rem.size(); ++j)
            rem[j] = static_cast<std::uint8_t>(rem[j + 1] ^ gf256::mul(feedback, g[2 * kRsT - 1 - j]));
        rem[rem.size() - 1] = gf256::mul(feedback, g[0]);
    }
    std::vector<std::uint8_t> out = data;
    out.insert(out.end(), rem.begin(), rem.end());
    return out;
}

RsDecodeResult rs_decode(const std::vector<std::uint8_t>& received) {
    if (received.size() != kRsN) throw std::invalid_argument("rs_decode expects exactly 255 bytes");
    RsDecodeResult res;
    res.data.assign(received.begin(), received.begin() + kRsK);

    // Codeword convention matching the encoder: received[0] is the highest
    // degree coefficient, so r(x) = sum received[i] * x^(254-i).
    std::array<std::uint8_t, 2 * kRsT> synd{};
    bool all_zero = true;
    for (int j = 1; j <= 2 * kRsT; ++j) {
        std::uint8_t acc = 0;
        const std::uint8_t xj = gf256::pow_alpha(j);
        for (int i = 0; i < kRsN; ++i) acc = static_cast<std::uint8_t>(gf256::mul(acc, xj) ^ received[static_cast<std::size_t>(i)]);
        synd[static_cast<std::size_t>(j - 1)] = acc;
        all_zero = all_zero && acc == 0;
    }
    if (all_zero) {
        res.ok = true;
        return res;
    }

    // Berlekamp-Massey for the error locator sigma(x).
    Poly sigma{1}, prev{1};
    int l = 0, m = 1;
    std::uint8_t b = 1;
    for (int n = 0; n < 2 * kRsT; ++n) {
        std::uint8_t d = synd[static_cast<std::size_t>(n)];
        for (int i = 1; i <= l; ++i)
            if (static_cast<std::size_t>(i) < sigma.size())
                d ^= gf256::mul(sigma[static_cast<std::size_t>(i)], synd[static_cast<std::size_t>(n - i)]);
        if (d == 0) {
            ++m;
            continue;
        }
        if (2 * l <= n) {
            const Poly tmp = sigma;
            const std::uint8_t coef = gf256::mul(d, gf256::inv(b));
            if (sigma.size() < prev.size() + static_cast<std::size_t>(m)) sigma.resize(prev.size() + static_cast<std::size_t>(m), 0);
            for (std::size_t i = 0; i < prev.size(); ++i)
                sigma[i + static_cast<std::size_t>(m)] ^= gf256::mul(coef, prev[i]);
            l = n + 1 - l;
            prev = tmp;
            b = d;
            m = 1;
        } else {
            const std::uint8_t coef = gf256::mul(d, gf256::inv(b));
            if (sigma.size() < prev.size() + static_cast<std::size_t>(m)) sigma.resize(prev.size() + static_cast<std::size_t>(m), 0);
            for (std::size_t i = 0; i < prev.size(); ++i)
                sigma[i + static_cast<std::size_t>(m)] ^= gf256::mul(coef, prev[i]);
            ++m;
        }
    }
    while (!sigma.empty() && sigma.back() == 0) sigma.pop_back();
    const int nu = static_cast<int>(sigma.size()) - 1;
    if (nu <= 0 || nu > kRsT) return res;  // beyond correction capability

    // Chien search: error at position i (power of x = 254-i) when
    // sigma(alpha^{-(254-i)}) == 0.
    std::vector<int> error_pos;  // byte index in `received`
    for (int i = 0; i < kRsN; ++i) {
        const int power = kRsN - 1 - i;
        if (poly_eval(sigma, gf256::pow_alpha(-power)) == 0) error_pos.push_back(i);
    }
    if (static_cast<int>(error_pos.size()) != nu) return res;

    // Forney: omega(x) = [S(x) sigma(x)] mod x^{2t}, with S(x) = sum S_j x^{j-1};
    // magnitude at X = alpha^{power} is X * omega(X^{-1}) / sigma'(X^{-1}).
    Poly omega(2 * kRsT, 0);
    for (int i = 0; i < 2 * kRsT; ++i) {
        for (std::size_t j = 0; j < sigma.size(); ++j) {
            if (static_cast<std::size_t>(i) + j >= omega.size()) break;
            omega[static_cast<std::size_t>(i) + j] ^=
                gf256::mul(synd[static_cast<std::size_t>(i)], sigma[j]);
        }
    }

    std::vector<std::uint8_t> corrected = received;
    for (int pos : error_pos) {
        const int power = kRsN - 1 - pos;
        const std::uint8_t xinv = gf256::pow_alpha(-power);
        std::uint8_t num = poly_eval(omega, xinv);
        std::uint8_t den = 0;  // sigma'(xinv): odd-degree terms only
        for (std::size_t j = 1; j < sigma.size(); j += 2) {
            std::uint8_t term = sigma[j];
            for (std::size_t e = 0; e + 1 < j; ++e) term = gf256::mul(term, xinv);
            den ^= term;
        }
        if (den == 0) return res;
        const std::uint8_t mag = gf256::mul(num, gf256::inv(den));
        corrected[static_cast<std::size_t>(pos)] ^= mag;
    }

    // Accept only if the corrected word is a genuine codeword.
    for (int j = 1; j <= 2 * kRsT; ++j) {
        std::uint8_t acc = 0;
        const std::uint8_t xj = gf256::pow_alpha(j);
        for (int i = 0; i < kRsN; ++i) acc = static_cast<std::uint8_t>(gf256::mul(acc, xj) ^ corrected[static_cast<std::size_t>(i)]);
        if (acc != 0) return res;
    }
    res.data.assign(corrected.begin(), corrected.begin() + kRsK);
    res.ok = true;
    res.corrected = nu;
    return res;
}

}  // namespace semcom::classic
