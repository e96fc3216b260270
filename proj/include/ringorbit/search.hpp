#pragma once

// Periodicity residual xi, closure checks, simplex refinement and grid sweeps.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ringorbit/dynamics.hpp"
#include "ringorbit/errors.hpp"
#include "ringorbit/integrate.hpp"
#include "ringorbit/model.hpp"
#include "ringorbit/seed_io.hpp"

namespace ringorbit {

struct PeriodicCandidate {
    SeedConfig q;
    double xi = std::numeric_limits<double>::infinity();
    bool refined = false;
    std::int64_t full_period_multiplier = 1;
};

inline PeriodicCandidate make_candidate(const SeedConfig& q, double xi_value, bool refined = false) {
    return {q, xi_value, refined, full_period_multiplier(q.theta0)};
}

namespace detail {

inline double require_t0(const SeedConfig& q) {
    if (!q.t0) throw InvalidConfiguration("seed has no t0");
    return *q.t0;
}

inline double xi_terms(const ReducedState& end, const SeedConfig& q) {
    const double dfd = end.fdot - q.df0;
    const double dth = end.theta - q.theta0.radians();
    return dfd * dfd + dth * dth + end.rdot * end.rdot + end.f * end.f;
}

} // namespace detail

/// (f'(t0) - df0)^2 + (theta(t0) - theta0)^2 + r'(t0)^2 + f(t0)^2, with the
/// unwrapped angle.
inline double xi(const SeedConfig& q, const IntegratorSettings& settings = {}) {
    q.validate();
    const double t0 = detail::require_t0(q);
    if (!validate_family(q).in_L) throw OutsideFamily("xi is defined for seeds with c2 < 0 and c1 != 0");
    const auto sys = RingSystem::from_seed(q);
    return detail::xi_terms(propagate(sys, initial_state(q), t0, settings), q);
}

struct RecurrenceReport {
    double xi = 0.0;
    double radius_mismatch = 0.0;  ///< |r(t0) - y10|
    bool periodic = false;         ///< xi below the closure threshold
    std::int64_t multiplier = 1;
    /// Max component deviation after multiplier * t0 with theta unwound by
    /// multiplier * theta0. Empty when the closure check was skipped.
    std::optional<double> closure;
};

inline RecurrenceReport verify_recurrence(const SeedConfig& q, const IntegratorSettings& settings = {},
                                          double periodic_threshold = 1e-3) {
    q.validate();
    const double t0 = detail::require_t0(q);
    if (!validate_family(q).in_L) throw OutsideFamily("recurrence needs a seed with c2 < 0 and c1 != 0");
    const auto sys = RingSystem::from_seed(q);
    const auto s0 = initial_state(q);
    const auto end = propagate(sys, s0, t0, settings);
    RecurrenceReport rep;
    rep.xi = detail::xi_terms(end, q);
    rep.radius_mismatch = std::abs(end.r - q.y10);
    rep.multiplier = full_period_multiplier(q.theta0);
    rep.periodic = rep.xi < periodic_threshold;
    if (!rep.periodic) return rep;
    const double s = static_cast<double>(rep.multiplier);
    const auto full = propagate(sys, s0, s * t0, settings);
    const double unwound = full.theta - s * q.theta0.radians();
    rep.closure = std::max({std::abs(full.f - s0.f), std::abs(full.fdot - s0.fdot), std::abs(full.r - s0.r),
                            std::abs(full.rdot - s0.rdot), std::abs(unwound - s0.theta)});
    return rep;
}

struct RefineOptions {
    std::size_t max_evaluations = 3000;
    std::size_t restarts = 4;
    double initial_step = 2.5e-4;  ///< relative simplex edge
    double xi_target = 1e-14;
    double x_tolerance = 1e-13;  ///< relative simplex diameter at which a run stops
};

namespace detail {

// Nelder-Mead on R^4 with standard coefficients. Returns the best vertex.
template <class F>
std::pair<std::array<double, 4>, double> nelder_mead(F&& fn, std::array<double, 4> start, double step,
                                                     const RefineOptions& opt, std::size_t& evaluations) {
    constexpr std::size_t dim = 4;
    std::array<std::array<double, 4>, dim + 1> v{};
    std::array<double, dim + 1> fv{};
    auto eval = [&](const std::array<double, 4>& x) {
        ++evaluations;
        return fn(x);
    };
    v[0] = start;
    fv[0] = eval(start);
    for (std::size_t i = 0; i < dim; ++i) {
        v[i + 1] = start;
        v[i + 1][i] += step;
        fv[i + 1] = eval(v[i + 1]);
    }
    std::array<std::size_t, dim + 1> order{};
    while (evaluations < opt.max_evaluations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[dim - 1];
        if (fv[best] < opt.xi_target) break;
        double diameter = 0.0;
        for (std::size_t i = 0; i <= dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) diameter = std::max(diameter, std::abs(v[i][j] - v[best][j]));
        }
        if (diameter < opt.x_tolerance) break;

        std::array<double, 4> centroid{};
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += v[i][j] / dim;
        }
        auto along = [&](double coef) {
            std::array<double, 4> x{};
            for (std::size_t j = 0; j < dim; ++j) x[j] = centroid[j] + coef * (v[worst][j] - centroid[j]);
            return x;
        };
        const auto xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < fv[best]) {
            const auto xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                v[worst] = xe;
                fv[worst] = fe;
            } else {
                v[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            v[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        const bool outside = fr < fv[worst];
        const auto xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < (outside ? fr : fv[worst])) {
            v[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < dim; ++j) v[i][j] = v[best][j] + 0.5 * (v[i][j] - v[best][j]);
            fv[i] = eval(v[i]);
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= dim; ++i) {
        if (fv[i] < fv[best]) best = i;
    }
    return {v[best], fv[best]};
}

} // namespace detail

/// Minimizes xi over (y10, dy20, df0, t0) with n, masses and theta0 fixed.
/// Coordinates are relative offsets from the input seed; any point outside
/// the family or whose integration fails scores +inf, so the simplex never
/// leaves the family. Output xi never exceeds input xi.
inline PeriodicCandidate refine(const PeriodicCandidate& start, const IntegratorSettings& settings = {},
                                const RefineOptions& opt = {}) {
    const SeedConfig base = start.q;
    base.validate();
    detail::require_t0(base);
    if (!validate_family(base).in_L) throw OutsideFamily("refinement needs a seed with c2 < 0 and c1 != 0");
    const std::array<double, 4> origin{base.y10, base.dy20, base.df0, *base.t0};
    std::array<double, 4> scale{};
    for (std::size_t i = 0; i < 4; ++i) scale[i] = origin[i] != 0.0 ? std::abs(origin[i]) : 1.0;

    auto seed_at = [&](const std::array<double, 4>& x) {
        SeedConfig q = base;
        q.y10 = origin[0] + scale[0] * x[0];
        q.dy20 = origin[1] + scale[1] * x[1];
        q.df0 = origin[2] + scale[2] * x[2];
        q.t0 = origin[3] + scale[3] * x[3];
        return q;
    };
    auto objective = [&](const std::array<double, 4>& x) {
        const SeedConfig q = seed_at(x);
        if (!(q.y10 > 0.0) || !(*q.t0 > 0.0)) return std::numeric_limits<double>::infinity();
        try {
            if (!validate_family(q).in_L) return std::numeric_limits<double>::infinity();
            const double v = xi(q, settings);
            return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const double start_xi = std::isfinite(start.xi) ? start.xi : objective({0.0, 0.0, 0.0, 0.0});
    std::array<double, 4> best_x{};
    double best = start_xi;
    std::size_t evaluations = 0;
    double step = opt.initial_step;
    for (std::size_t run = 0; run <= opt.restarts && evaluations < opt.max_evaluations; ++run) {
        const auto [x, fx] = detail::nelder_mead(objective, best_x, step, opt, evaluations);
        const bool improved = fx < best;
        if (improved) {
            best = fx;
            best_x = x;
        }
        if (best < opt.xi_target) break;
        // Restart around the incumbent with a simplex scaled to how far the last run moved.
        step = improved ? std::max(step * 0.1, 1e-9) : step * 0.5;
    }

    if (!(best < start_xi)) {
        PeriodicCandidate out = start;
        out.xi = start_xi;
        out.refined = false;
        out.full_period_multiplier = full_period_multiplier(base.theta0);
        return out;
    }
    return make_candidate(seed_at(best_x), best, true);
}

/// Values along one seed component.
using Axis = std::vector<double>;

inline Axis linspace(double from, double to, std::size_t count) {
    Axis out;
    if (count == 0) return out;
    if (count == 1) return {from};
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(from + (to - from) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return out;
}

struct GridSpec {
    int n = 2;
    PiFraction theta0;
    Axis m1, m2, y10, dy20, df0, t0;
    double threshold = 1e-3;  ///< xi below which a grid point is refined

    [[nodiscard]] std::size_t size() const {
        return m1.size() * m2.size() * y10.size() * dy20.size() * df0.size() * t0.size();
    }

    /// Grid point by row-major index (t0 varies fastest).
    [[nodiscard]] SeedConfig at(std::size_t index) const {
        std::array<std::size_t, 6> idx{};
        const std::array<const Axis*, 6> axes{&m1, &m2, &y10, &dy20, &df0, &t0};
        for (std::size_t k = 6; k-- > 0;) {
            idx[k] = index % axes[k]->size();
            index /= axes[k]->size();
        }
        SeedConfig q;
        q.n = n;
        q.theta0 = theta0;
        q.m1 = m1[idx[0]];
        q.m2 = m2[idx[1]];
        q.y10 = y10[idx[2]];
        q.dy20 = dy20[idx[3]];
        q.df0 = df0[idx[4]];
        q.t0 = t0[idx[5]];
        return q;
    }
};

namespace detail {

inline Axis axis_from_json(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw InvalidConfiguration("grid is missing axis '" + key + "'");
    const auto& a = j.at(key);
    try {
        if (a.is_number()) return {a.get<double>()};
        if (a.is_array()) return a.get<std::vector<double>>();
        if (a.is_object()) {
            const auto from = a.at("from").get<double>();
            const auto to = a.at("to").get<double>();
            const auto count = a.at("count").get<std::int64_t>();
            if (count < 0) throw InvalidConfiguration("axis '" + key + "' has a negative count");
            return linspace(from, to, static_cast<std::size_t>(count));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfiguration("axis '" + key + "': " + e.what());
    }
    throw InvalidConfiguration("axis '" + key + "' must be a number, a list or {from, to, count}");
}

} // namespace detail

/// {"n": 2, "theta0": "7/6", "threshold": 1e-3, "m1": [..] | 1.0 | {"from":..,"to":..,"count":..}, ...}
inline GridSpec grid_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidConfiguration("grid must be a JSON object");
    GridSpec g;
    try {
        g.n = j.at("n").get<int>();
        const auto& th = j.at("theta0");
        g.theta0 = th.is_string() ? PiFraction::parse(th.get<std::string>()) : PiFraction(th.get<std::int64_t>(), 1);
        if (j.contains("threshold")) g.threshold = j.at("threshold").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfiguration(std::string("invalid grid: ") + e.what());
    }
    if (g.n < 2) throw InvalidConfiguration("grid n must be at least 2");
    if (!(g.threshold > 0.0)) throw InvalidConfiguration("grid threshold must be positive");
    g.m1 = detail::axis_from_json(j, "m1");
    g.m2 = detail::axis_from_json(j, "m2");
    g.y10 = detail::axis_from_json(j, "y10");
    g.dy20 = detail::axis_from_json(j, "dy20");
    g.df0 = detail::axis_from_json(j, "df0");
    g.t0 = detail::axis_from_json(j, "t0");
    return g;
}

struct SweepResult {
    std::vector<PeriodicCandidate> candidates;
    std::size_t evaluated = 0;
    std::size_t out_of_family = 0;
    std::size_t failed = 0;  ///< invalid seeds or integration failures
};

namespace detail {

// Runs task(i) for i in [0, count) on `jobs` threads. Each index is handled by
// exactly one worker, results go to caller-owned slots.
inline void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) task(i);
        });
    }
    for (auto& th : pool) th.join();
}

inline bool same_seed(const SeedConfig& a, const SeedConfig& b, double rel) {
    auto close = [rel](double x, double y) { return std::abs(x - y) <= rel * std::max(std::abs(x), std::abs(y)); };
    return a.n == b.n && a.theta0 == b.theta0 && close(a.m1, b.m1) && close(a.m2, b.m2) && close(a.y10, b.y10) &&
           close(a.dy20, b.dy20) && close(a.df0, b.df0) && close(a.t0.value_or(0.0), b.t0.value_or(0.0));
}

} // namespace detail

/// Evaluates xi on every grid point, refines points below the threshold and
/// drops refined seeds within 1e-6 relative of an earlier one. The result
/// depends only on the grid, never on `jobs`.
inline SweepResult sweep(const GridSpec& grid, std::size_t jobs = 1, const IntegratorSettings& settings = {},
                         const RefineOptions& refine_opt = {}) {
    settings.validate();
    SweepResult out;
    const std::size_t total = grid.size();
    if (total == 0) return out;

    enum class Status { ok, out_of_family, failed };
    std::vector<Status> status(total, Status::failed);
    std::vector<double> values(total, std::numeric_limits<double>::infinity());
    detail::parallel_for(total, jobs, [&](std::size_t i) {
        try {
            const SeedConfig q = grid.at(i);
            q.validate();
            if (!validate_family(q).in_L) {
                status[i] = Status::out_of_family;
                return;
            }
            values[i] = xi(q, settings);
            status[i] = Status::ok;
        } catch (const Error&) {
            status[i] = Status::failed;
        }
    });

    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < total; ++i) {
        if (status[i] == Status::out_of_family) ++out.out_of_family;
        if (status[i] == Status::failed) ++out.failed;
        if (status[i] == Status::ok && values[i] < grid.threshold) selected.push_back(i);
    }
    out.evaluated = total;

    std::vector<PeriodicCandidate> refined(selected.size());
    detail::parallel_for(selected.size(), jobs, [&](std::size_t j) {
        const std::size_t i = selected[j];
        refined[j] = refine(make_candidate(grid.at(i), values[i]), settings, refine_opt);
    });

    for (auto& c : refined) {
        const bool dup = std::any_of(out.candidates.begin(), out.candidates.end(),
                                     [&](const PeriodicCandidate& k) { return detail::same_seed(k.q, c.q, 1e-6); });
        if (!dup) out.candidates.push_back(std::move(c));
    }
    return out;
}

/// One JSON object per line: seed fields, then xi, refined, full_period_multiplier.
inline std::string catalog_line(const PeriodicCandidate& c) {
    auto j = seed_to_json(c.q);
    j["xi"] = c.xi;
    j["refined"] = c.refined;
    j["full_period_multiplier"] = c.full_period_multiplier;
    return j.dump();
}

inline void write_catalog(std::ostream& os, const std::vector<PeriodicCandidate>& candidates) {
    for (const auto& c : candidates) os << catalog_line(c) << '\n';
}

/// Reads catalog lines; blank lines and '#' comment lines are skipped.
inline std::vector<PeriodicCandidate> read_catalog(std::istream& is) {
    std::vector<PeriodicCandidate> out;
    std::string line;
    while (std::getline(is, line)) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(t);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidConfiguration(std::string("invalid catalog line: ") + e.what());
        }
        PeriodicCandidate c;
        c.q = seed_from_key_values(key_values_from_json(j));
        c.xi = j.contains("xi") && j.at("xi").is_number() ? j.at("xi").get<double>()
                                                          : std::numeric_limits<double>::infinity();
        c.refined = j.value("refined", false);
        c.full_period_multiplier = full_period_multiplier(c.q.theta0);
        out.push_back(c);
    }
    return out;
}

} // namespace ringorbit
