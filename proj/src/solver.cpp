#include "cbct/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cbct {

namespace {

// Kahan-compensated dot product; the adjoint test compares two O(n) sums at
// 1e-12, which plain accumulation does not reliably support.
double dot_kahan(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0, c = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double y = a[i] * b[i] - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return sum;
}

double norm2(std::span<const double> a) { return std::sqrt(dot_kahan(a, a)); }

} // namespace

void fill_uniform01(std::span<double> out, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (double& v : out) v = uniform01(rng);
}

double adjoint_test(const LinearOperatorPair& pair, std::uint64_t seed) {
    AttenuationVolume x = AttenuationVolume::zeros(pair.vol_geom);
    ProjectionStack b = ProjectionStack::zeros(pair.det, pair.n_views);
    // one stream for both vectors keeps the draw order documented and fixed
    std::mt19937_64 rng(seed);
    for (double& v : x.values) v = uniform01(rng);
    for (double& v : b.values) v = uniform01(rng);

    ProjectionStack ax = ProjectionStack::zeros(pair.det, pair.n_views);
    pair.forward(x, ax);
    AttenuationVolume atb = AttenuationVolume::zeros(pair.vol_geom);
    pair.adjoint(b, atb);

    double lhs = dot_kahan(b.values, ax.values);
    double rhs = dot_kahan(x.values, atb.values);
    double denom = std::max(std::abs(lhs), std::abs(rhs));
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::abs(lhs - rhs) / denom;
}

CglsResult cgls(const LinearOperatorPair& pair, ProjectionStack b, int iterations) {
    if (iterations < 1) throw std::invalid_argument("cgls needs at least one iteration");
    if (b.det != pair.det || b.n_views != pair.n_views)
        throw std::invalid_argument("cgls data does not match the operator range");

    auto check_finite = [](std::span<const double> v, int iter) {
        for (double x : v)
            if (!std::isfinite(x))
                throw std::runtime_error("CGLS diverged (non-finite iterate) at iteration " +
                                         std::to_string(iter));
    };

    CglsResult res;
    res.x = AttenuationVolume::zeros(pair.vol_geom);

    ProjectionStack& r = b;  // residual b - A x, with x = 0 initially
    res.residual_norms.push_back(norm2(r.values));

    AttenuationVolume s = AttenuationVolume::zeros(pair.vol_geom);
    pair.adjoint(r, s);
    AttenuationVolume p = s;
    ProjectionStack q = ProjectionStack::zeros(pair.det, pair.n_views);

    double gamma = dot_kahan(s.values, s.values);

    for (int it = 1; it <= iterations; ++it) {
        if (gamma == 0.0) {
            // normal equations already satisfied; keep the history flat
            res.residual_norms.push_back(res.residual_norms.back());
            continue;
        }
        pair.forward(p, q);
        double qq = dot_kahan(q.values, q.values);
        if (qq == 0.0)
            throw std::runtime_error("CGLS breakdown (A p = 0) at iteration " +
                                     std::to_string(it));
        double alpha = gamma / qq;
        for (std::size_t i = 0; i < res.x.values.size(); ++i) res.x.values[i] += alpha * p.values[i];
        for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] -= alpha * q.values[i];
        pair.adjoint(r, s);
        double gamma_new = dot_kahan(s.values, s.values);
        double beta = gamma_new / gamma;
        for (std::size_t i = 0; i < p.values.size(); ++i)
            p.values[i] = s.values[i] + beta * p.values[i];
        gamma = gamma_new;

        check_finite(res.x.values, it);
        check_finite(r.values, it);
        res.residual_norms.push_back(norm2(r.values));
    }
    return res;
}

double relative_projector_error(std::span<const double> view, std::span<const double> view_ref) {
    if (view.size() != view_ref.size())
        throw std::invalid_argument("view dimensions do not match");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < view.size(); ++i) {
        double d = view[i] - view_ref[i];
        num += d * d;
        den += view_ref[i] * view_ref[i];
    }
    if (den == 0.0) throw std::domain_error("reference view has zero norm");
    return 100.0 * std::sqrt(num / den);
}

double extinction_from_intensity(double I0, double I) {
    if (!(I0 > 0.0) || !(I > 0.0))
        throw std::domain_error("intensities must be positive");
    return std::log(I0) - std::log(I);
}

} // namespace cbct
