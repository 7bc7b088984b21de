#pragma once

// Finite-difference gradient oracle for the test suites. Rebuilds the forward
// pass per perturbation in float64 and compares central differences against
// the reverse-mode gradients; independent of the pullback implementations it
// checks.
//
// Pass condition per element: |fd - ad| <= atol + rtol * max(|fd|, |ad|)
// with rtol = 1e-3 and atol = 1e-5. The absolute term absorbs central-
// difference truncation noise on near-zero gradients; any genuine pullback
// defect on a gradient of visible magnitude lands far outside it.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "semcom/tensor.hpp"

namespace gradcheck {

using semcom::core::TapeT;
using semcom::core::TensorT;

constexpr double kRtol = 1e-3;
constexpr double kAtol = 1e-5;

struct Report {
    bool ok = true;
    double worst_ratio = 0;  // |fd-ad| / (atol + rtol*max(|fd|,|ad|)); > 1 fails
    std::size_t checked = 0;
    std::string worst;
};

// `forward` must rebuild the graph from the current parameter values and
// return the scalar loss.
inline Report check(const std::function<TensorT<double>(TapeT<double>&)>& forward,
                    std::vector<TensorT<double>> params, double h = 1e-3) {
    for (auto& p : params) p.drop_grad();
    TapeT<double> tape;
    auto loss = forward(tape);
    tape.backward(loss);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p.grad());

    Report rep;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p.value()[i];
            p.value()[i] = saved + h;
            TapeT<double> t1;
            const double up = forward(t1).scalar_value();
            p.value()[i] = saved - h;
            TapeT<double> t2;
            const double dn = forward(t2).scalar_value();
            p.value()[i] = saved;
            const double fd = (up - dn) / (2 * h);
            const double ad = analytic[pi][i];
            const double tol = kAtol + kRtol * std::max(std::abs(fd), std::abs(ad));
            const double ratio = std::abs(fd - ad) / tol;
            if (ratio > rep.worst_ratio) {
                rep.worst_ratio = ratio;
                rep.worst = (params[pi].name().empty() ? "param" + std::to_string(pi)
                                                       : params[pi].name()) +
                            "[" + std::to_string(i) + "] fd=" + std::to_string(fd) +
                            " ad=" + std::to_string(ad);
            }
            ++rep.checked;
        }
    }
    rep.ok = rep.worst_ratio <= 1.0;
    return rep;
}

}  // namespace gradcheck
