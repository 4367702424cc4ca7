#pragma once

// Composite Gauss-Legendre rules on top of the tabulated Boost nodes.

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace pulab {

/// Nodes and weights of the 20-point rule on [-1, 1].
inline const std::array<std::pair<double, double>, 20>& gauss20() {
    static const auto rule = [] {
        using G = boost::math::quadrature::gauss<double, 20>;
        std::array<std::pair<double, double>, 20> r{};
        const auto& x = G::abscissa();
        const auto& w = G::weights();
        for (std::size_t i = 0; i < x.size(); ++i) {
            r[2 * i] = {-x[i], w[i]};
            r[2 * i + 1] = {x[i], w[i]};
        }
        return r;
    }();
    return rule;
}

/// Sum of 20-point rules over `panels` equal panels of [a, b].
template <class F>
auto composite_gauss(F&& f, double a, double b, int panels) {
    using R = decltype(f(a));
    const double h = (b - a) / panels;
    R total{};
    for (int k = 0; k < panels; ++k) {
        const double c = a + (k + 0.5) * h;
        R part{};
        for (const auto& [x, w] : gauss20()) part += w * f(c + 0.5 * h * x);
        total += 0.5 * h * part;
    }
    return total;
}

/// Nodes and weights of the composite rule, for integrands evaluated in bulk.
inline std::vector<std::pair<double, double>> composite_gauss_nodes(double a, double b, int panels) {
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(panels) * 20);
    const double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
        const double c = a + (k + 0.5) * h;
        for (const auto& [x, w] : gauss20()) out.emplace_back(c + 0.5 * h * x, 0.5 * h * w);
    }
    return out;
}

}  // namespace pulab
