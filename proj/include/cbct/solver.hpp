#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "cbct/volume.hpp"

namespace cbct {

/// Matched forward/adjoint pair of a CT operator with its dimension metadata.
struct LinearOperatorPair {
    std::function<void(const AttenuationVolume&, ProjectionStack&)> forward;
    std::function<void(const ProjectionStack&, AttenuationVolume&)> adjoint;
    VolumeGeometry vol_geom;
    DetectorGeometry det;
    int n_views = 0;

    std::size_t domain_size() const { return vol_geom.voxel_count(); }
    std::size_t range_size() const { return det.pixel_count() * std::size_t(n_views); }
};

/// Portable uniform [0,1) draw; avoids std::uniform_real_distribution whose
/// output is implementation-defined.
inline double uniform01(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

void fill_uniform01(std::span<double> out, std::uint64_t seed);

/// Dot-product test |b.(Ax) - x.(A'b)| / max(|b.(Ax)|, |x.(A'b)|) with x, b
/// drawn uniform [0,1) from the seed. Returns NaN when both denominators are
/// zero (pathological all-zero operator).
double adjoint_test(const LinearOperatorPair& pair, std::uint64_t seed);

struct CglsResult {
    AttenuationVolume x;
    /// ||b - A x_k||; entry 0 is ||b||, one further entry per iteration.
    std::vector<double> residual_norms;
};

/// Classical CGLS on the normal equations, zero initial iterate. Throws on
/// NaN/Inf in the iterates, reporting the iteration index.
CglsResult cgls(const LinearOperatorPair& pair, ProjectionStack b, int iterations);

/// 100 * ||P - P_ref||_F / ||P_ref||_F over one view image.
double relative_projector_error(std::span<const double> view, std::span<const double> view_ref);

/// E = ln(I0) - ln(I); intensities must be positive.
double extinction_from_intensity(double I0, double I);

} // namespace cbct
