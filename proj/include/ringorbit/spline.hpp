#pragma once

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <span>
#include <vector>

#include "ringorbit/errors.hpp"

namespace ringorbit {

/// Interpolating cubic spline with not-a-knot end conditions. Abscissae must
/// be strictly monotone (either direction); at least four points.
class CubicSpline {
public:
    CubicSpline(std::span<const double> x, std::span<const double> y) : x_(x.begin(), x.end()), y_(y.begin(), y.end()) {
        const std::size_t n = x_.size();
        if (n != y_.size()) throw InvalidConfiguration("spline abscissae and values differ in length");
        if (n < 4) throw InvalidConfiguration("not-a-knot spline needs at least four points");
        if (x_.front() > x_.back()) {
            std::reverse(x_.begin(), x_.end());
            std::reverse(y_.begin(), y_.end());
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (!(x_[i + 1] > x_[i])) throw InvalidConfiguration("spline abscissae must be strictly monotone");
        }
        solve_moments();
    }

    [[nodiscard]] double lo() const { return x_.front(); }
    [[nodiscard]] double hi() const { return x_.back(); }

    [[nodiscard]] double operator()(double x) const {
        const std::size_t i = interval(x);
        const double h = x_[i + 1] - x_[i];
        const double a = x_[i + 1] - x;
        const double b = x - x_[i];
        return m_[i] * a * a * a / (6.0 * h) + m_[i + 1] * b * b * b / (6.0 * h) + (y_[i] / h - m_[i] * h / 6.0) * a +
               (y_[i + 1] / h - m_[i + 1] * h / 6.0) * b;
    }

    [[nodiscard]] double derivative(double x) const {
        const std::size_t i = interval(x);
        const double h = x_[i + 1] - x_[i];
        const double a = x_[i + 1] - x;
        const double b = x - x_[i];
        return -m_[i] * a * a / (2.0 * h) + m_[i + 1] * b * b / (2.0 * h) - (y_[i] / h - m_[i] * h / 6.0) +
               (y_[i + 1] / h - m_[i + 1] * h / 6.0);
    }

private:
    [[nodiscard]] std::size_t interval(double x) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        auto idx = static_cast<std::size_t>(std::distance(x_.begin(), it));
        if (idx == 0) return 0;
        return std::min(idx - 1, x_.size() - 2);
    }

    // Second-derivative moments. Not-a-knot eliminates M0 and M_{n-1}, leaving
    // a tridiagonal system in M1..M_{n-2}.
    void solve_moments() {
        const std::size_t n = x_.size();
        std::vector<double> h(n - 1), slope(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            slope[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        const std::size_t m = n - 2;
        std::vector<double> lower(m, 0.0), diag(m, 0.0), upper(m, 0.0), rhs(m, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = k + 1;
            lower[k] = h[i - 1];
            diag[k] = 2.0 * (h[i - 1] + h[i]);
            upper[k] = h[i];
            rhs[k] = 6.0 * (slope[i] - slope[i - 1]);
        }
        // M0 = M1 - (h0 / h1) (M2 - M1)
        diag[0] += h[0] + h[0] * h[0] / h[1];
        upper[0] -= h[0] * h[0] / h[1];
        // M_{n-1} = M_{n-2} + (h_{n-2} / h_{n-3}) (M_{n-2} - M_{n-3})
        const double hl = h[n - 2];
        const double hp = h[n - 3];
        diag[m - 1] += hl + hl * hl / hp;
        lower[m - 1] -= hl * hl / hp;

        for (std::size_t k = 1; k < m; ++k) {
            const double w = lower[k] / diag[k - 1];
            diag[k] -= w * upper[k - 1];
            rhs[k] -= w * rhs[k - 1];
        }
        std::vector<double> inner(m);
        inner[m - 1] = rhs[m - 1] / diag[m - 1];
        for (std::size_t k = m - 1; k-- > 0;) inner[k] = (rhs[k] - upper[k] * inner[k + 1]) / diag[k];

        m_.assign(n, 0.0);
        for (std::size_t k = 0; k < m; ++k) m_[k + 1] = inner[k];
        m_[0] = m_[1] - h[0] / h[1] * (m_[2] - m_[1]);
        m_[n - 1] = m_[n - 2] + hl / hp * (m_[n - 2] - m_[n - 3]);
    }

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_;
};

} // namespace ringorbit
