#pragma once

// Shared 1D integration utilities: adaptive Gauss-Kronrod quadrature (GSL's
// QAG under the hood), sign-change location for |current| kinks, piecewise
// integration with breakpoints, and the cutoff-extension loop that turns
// [0,inf) time integrals into finite ones.
//
// Everything here is deterministic: identical inputs and policy give
// bit-identical results (GSL QAG is a deterministic heap-driven QUADPACK
// port, and all our bookkeeping is order-stable).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <type_traits>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "core.hpp"

namespace weq {

struct QuadraturePolicy {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    int max_subdivisions = 1000;       // validation floor: 16
    double initial_cutoff_factor = 4.0; // T0 = factor * classical crossing estimate
    double tail_fraction = 1e-8;        // extension stop rule
    // Hard stop for the extension loop, in units of the packet-spreading time
    // t_ref(mass). The free-evolution first moment of |j1| diverges
    // logarithmically, so the tail rule alone can never terminate there; the
    // default reproduces the free-evolution reference table (see README).
    double cutoff_cap_factor = 15.0;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
            throw validation_error("QuadraturePolicy: tolerances must be > 0");
        if (max_subdivisions < 16)
            throw validation_error("QuadraturePolicy: max_subdivisions must be >= 16");
        if (!(initial_cutoff_factor > 0.0) || !(tail_fraction > 0.0) ||
            !(cutoff_cap_factor > 0.0))
            throw validation_error("QuadraturePolicy: cutoff parameters must be > 0");
    }
};

struct IntegrationResult {
    double value = 0.0;
    double error = 0.0;
};

namespace detail {

// GSL aborts by default; switch it to error codes exactly once.
inline void quiet_gsl() {
    static const int once = (gsl_set_error_handler_off(), 0);
    (void)once;
}

struct WorkspaceDeleter {
    void operator()(gsl_integration_workspace* w) const {
        gsl_integration_workspace_free(w);
    }
};

// Reusable workspaces, one per nesting depth per thread. A single shared
// workspace would be corrupted when an outer QAG integrand runs an inner
// integral (the 2D spin flux does exactly that), so each nesting level leases
// its own slot.
struct WorkspacePool {
    std::vector<std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter>> slots;
    std::vector<std::size_t> sizes;
    std::size_t depth = 0;
};

inline WorkspacePool& workspace_pool() {
    thread_local WorkspacePool pool;
    return pool;
}

class WorkspaceLease {
public:
    explicit WorkspaceLease(std::size_t n) {
        WorkspacePool& pool = workspace_pool();
        if (pool.slots.size() <= pool.depth) {
            pool.slots.resize(pool.depth + 1);
            pool.sizes.resize(pool.depth + 1, 0);
        }
        if (!pool.slots[pool.depth] || pool.sizes[pool.depth] < n) {
            pool.slots[pool.depth].reset(gsl_integration_workspace_alloc(n));
            if (!pool.slots[pool.depth])
                throw numerical_error("quadrature: workspace allocation failed");
            pool.sizes[pool.depth] = n;
        }
        ws_ = pool.slots[pool.depth].get();
        ++pool.depth;
    }
    ~WorkspaceLease() { --workspace_pool().depth; }
    WorkspaceLease(const WorkspaceLease&) = delete;
    WorkspaceLease& operator=(const WorkspaceLease&) = delete;

    gsl_integration_workspace* get() const { return ws_; }

private:
    gsl_integration_workspace* ws_ = nullptr;
};

template <class F>
double trampoline(double x, void* params) {
    return (*static_cast<F*>(params))(x);
}

} // namespace detail

// Adaptive Gauss-Kronrod (15-point rule) on [a,b]. The integrand must not
// throw. Budget exhaustion or roundoff failure raises convergence_error
// carrying the best estimate.
template <class F>
IntegrationResult integrate_adaptive(F&& f, double a, double b,
                                     const QuadraturePolicy& policy) {
    policy.validate();
    if (!(a < b))
        throw validation_error("integrate_adaptive: requires a < b");
    detail::quiet_gsl();
    using Fn = std::remove_reference_t<F>;
    gsl_function gf;
    gf.function = &detail::trampoline<Fn>;
    gf.params = const_cast<void*>(static_cast<const void*>(std::addressof(f)));
    double result = 0.0, abserr = 0.0;
    const std::size_t limit = static_cast<std::size_t>(policy.max_subdivisions);
    detail::WorkspaceLease lease(limit);
    const int status = gsl_integration_qag(&gf, a, b, policy.abs_tol,
                                           policy.rel_tol, limit,
                                           GSL_INTEG_GAUSS15, lease.get(),
                                           &result, &abserr);
    if (status != 0)
        throw convergence_error(std::string("integrate_adaptive: ") +
                                    gsl_strerror(status),
                                result, abserr);
    return {result, abserr};
}

// Integrate over [pts_front, pts_back] split at the interior breakpoints
// (e.g. |j1| kinks); value and error estimates add up.
template <class F>
IntegrationResult integrate_with_breakpoints(F&& f, std::vector<double> pts,
                                             const QuadraturePolicy& policy) {
    if (pts.size() < 2)
        throw validation_error("integrate_with_breakpoints: need >= 2 points");
    std::sort(pts.begin(), pts.end());
    IntegrationResult total;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i], b = pts[i + 1];
        if (!(b > a)) continue; // duplicate breakpoint
        const IntegrationResult part = integrate_adaptive(f, a, b, policy);
        total.value += part.value;
        total.error += part.error;
    }
    return total;
}

// Uniform scan plus bisection; returns ascending roots where f changes sign.
// Zeros that the scan resolution misses are not found (the callers' adaptive
// quadrature still converges across them, just more slowly).
template <class F>
std::vector<double> locate_sign_changes(F&& f, double a, double b,
                                        int scan_points) {
    if (scan_points < 32)
        throw validation_error("locate_sign_changes: scan_points must be >= 32");
    if (!(a < b))
        throw validation_error("locate_sign_changes: requires a < b");
    const double tol = 1e-12 * (b - a);
    std::vector<double> roots;
    double x_prev = a, f_prev = f(a);
    for (int i = 1; i < scan_points; ++i) {
        const double x = a + (b - a) * i / (scan_points - 1);
        const double fx = f(x);
        if (f_prev * fx < 0.0) {
            double lo = x_prev, hi = x, flo = f_prev;
            while (hi - lo > tol) {
                const double mid = 0.5 * (lo + hi);
                const double fm = f(mid);
                if (flo * fm <= 0.0) hi = mid;
                else { lo = mid; flo = fm; }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        x_prev = x;
        f_prev = fx;
    }
    return roots;
}

// Result of integrating |f| and t|f| over [0, cutoff] with automatic cutoff
// extension. tail_drift estimates how much the mean first_moment/norm would
// move if the cutoff were doubled (measured across the last extension chunk).
struct TailIntegralResult {
    double norm = 0.0;
    double first_moment = 0.0;
    double cutoff = 0.0;
    double norm_error = 0.0;
    double moment_error = 0.0;
    double tail_drift = 0.0;
    bool converged = false;
    std::vector<double> sign_changes; // kinks of |f|, ascending
};

// Cutoff-extension loop for semi-infinite time integrals of |signed_f|:
// start at T0 = initial_cutoff_factor * crossing_estimate, keep doubling the
// window until one extension chunk contributes less than tail_fraction of
// both running totals, or the hard cap is reached. Kinks of the signed
// integrand are located per chunk and used as breakpoints.
template <class F>
TailIntegralResult integrate_time_tail(F&& signed_f, double crossing_estimate,
                                       double cap_time,
                                       const QuadraturePolicy& policy,
                                       const std::vector<double>& feature_points = {}) {
    policy.validate();
    if (!(crossing_estimate > 0.0) || !(cap_time > 0.0))
        throw validation_error("integrate_time_tail: time scales must be > 0");
    auto abs_f = [&](double t) { return std::abs(signed_f(t)); };
    auto t_abs_f = [&](double t) { return t * std::abs(signed_f(t)); };

    TailIntegralResult res;
    const double t0 = std::min(policy.initial_cutoff_factor * crossing_estimate,
                               cap_time);
    double lo = 0.0, hi = t0;
    constexpr int chunk_scan = 256;
    while (true) {
        std::vector<double> kinks = locate_sign_changes(signed_f, lo, hi, chunk_scan);
        std::vector<double> pts;
        pts.push_back(lo);
        // Feature points mark where the caller expects |f| to be sharply
        // localized (e.g. a heavy, slowly spreading packet crossing the
        // detector). Without them the first Gauss rule over a wide chunk can
        // sample past a narrow pulse and accept ~0 with a tiny error estimate.
        for (double p : feature_points)
            if (p > lo && p < hi) pts.push_back(p);
        pts.insert(pts.end(), kinks.begin(), kinks.end());
        pts.push_back(hi);
        const IntegrationResult m0 = integrate_with_breakpoints(abs_f, pts, policy);
        const IntegrationResult m1 = integrate_with_breakpoints(t_abs_f, pts, policy);

        const double mean_before = res.norm > 0.0 ? res.first_moment / res.norm : 0.0;
        res.norm += m0.value;
        res.first_moment += m1.value;
        res.norm_error += m0.error;
        res.moment_error += m1.error;
        res.sign_changes.insert(res.sign_changes.end(), kinks.begin(), kinks.end());
        res.cutoff = hi;

        if (lo > 0.0 && res.norm > 0.0) {
            // extension chunk: check the stop rule and record the mean drift,
            // rescaled to a full doubling of the cutoff
            const double mean_after = res.first_moment / res.norm;
            res.tail_drift = std::abs(mean_after - mean_before) *
                             (M_LN2 / std::log(hi / lo));
            const bool tail_small =
                std::abs(m0.value) <= policy.tail_fraction * std::abs(res.norm) &&
                std::abs(m1.value) <= policy.tail_fraction * std::abs(res.first_moment);
            if (tail_small) {
                res.converged = true;
                break;
            }
        }
        if (hi >= cap_time) break; // capped; converged stays false
        lo = hi;
        hi = std::min(2.0 * hi, cap_time);
    }
    return res;
}

// Nested 2D quadrature: outer adaptive integral over t of an inner adaptive
// integral over x. The inner tolerances are tightened so inner noise does not
// stall the outer subdivision. inner_pts(t) returns the x breakpoints
// (endpoints plus any interior kinks).
template <class F2, class PtsFn>
IntegrationResult integrate_nested(F2&& f, double t_lo, double t_hi,
                                   PtsFn&& inner_pts,
                                   const QuadraturePolicy& policy) {
    QuadraturePolicy inner = policy;
    inner.abs_tol *= 0.1;
    inner.rel_tol *= 0.1;
    auto outer = [&](double t) {
        auto slice = [&](double x) { return f(x, t); };
        return integrate_with_breakpoints(slice, inner_pts(t), inner).value;
    };
    return integrate_adaptive(outer, t_lo, t_hi, policy);
}

} // namespace weq
