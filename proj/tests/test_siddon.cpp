#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "cbct/siddon.hpp"

using namespace cbct;
using doctest::Approx;

namespace {

double dot_plain(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void fill_random(std::vector<double>& v, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (double& x : v) x = oracle::uniform(rng);
}

} // namespace

TEST_CASE("trace_ray: axis-aligned row of four voxels") {
    auto vol = VolumeGeometry::make({4, 1, 1}, {1.0, 1.0, 1.0});
    auto list = trace_ray(vol, {-10.0, 0.0, 0.0}, {10.0, 0.0, 0.0});
    REQUIRE(list.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(list[i].i == i);
        CHECK(list[i].j == 0);
        CHECK(list[i].k == 0);
        CHECK(list[i].length == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("trace_ray: miss produces an empty list") {
    auto vol = VolumeGeometry::make({4, 4, 4}, {1.0, 1.0, 1.0});
    CHECK(trace_ray(vol, {-10.0, 8.0, 0.0}, {10.0, 8.0, 0.0}).empty());
    CHECK(trace_ray(vol, {-10.0, 0.0, 0.0}, {-20.0, 0.0, 0.0}).empty());  // pointing away
}

TEST_CASE("trace_ray: cube main diagonal") {
    auto vol = VolumeGeometry::make({1, 1, 1}, {1.0, 1.0, 1.0});
    auto list = trace_ray(vol, {-5.0, -5.0, -5.0}, {5.0, 5.0, 5.0});
    REQUIRE(list.size() == 1);
    CHECK(list[0].length == Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("trace_ray: a shared face belongs to exactly one voxel") {
    // The ray runs along the plane y = 0 between the j = 0 and j = 1 voxel
    // rows; half-open intervals put it in j = 1.
    auto vol = VolumeGeometry::make({2, 2, 1}, {1.0, 1.0, 1.0});
    auto list = trace_ray(vol, {-10.0, 0.0, 0.0}, {10.0, 0.0, 0.0});
    REQUIRE(list.size() == 2);
    double total = 0.0;
    for (const auto& e : list) {
        CHECK(e.j == 1);
        total += e.length;
    }
    CHECK(total == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("trace_ray: corner crossing steps both axes at once") {
    auto vol = VolumeGeometry::make({2, 2, 1}, {1.0, 1.0, 1.0});
    auto list = trace_ray(vol, {-10.0, -10.0, 0.0}, {10.0, 10.0, 0.0});
    REQUIRE(list.size() == 2);
    CHECK(list[0].i == 0);
    CHECK(list[0].j == 0);
    CHECK(list[1].i == 1);
    CHECK(list[1].j == 1);
    CHECK(list[0].length == Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(list[1].length == Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("trace_ray: random rays sum to the slab-method box chord") {
    auto vol = VolumeGeometry::make({7, 5, 3}, {0.8, 1.1, 0.6});
    Vec3d lo = vol.min_corner();
    Vec3d hi = lo + vol.extent();
    std::mt19937_64 rng(2024);
    int nonempty = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        double az = 2.0 * std::numbers::pi * oracle::uniform(rng);
        double cz = 2.0 * oracle::uniform(rng) - 1.0;
        double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
        Vec3d src = Vec3d{sz * std::cos(az), sz * std::sin(az), cz} * 30.0;
        Vec3d tgt{6.0 * oracle::uniform(rng) - 3.0, 6.0 * oracle::uniform(rng) - 3.0,
                  6.0 * oracle::uniform(rng) - 3.0};
        auto list = trace_ray(vol, src, tgt);
        double sum = 0.0;
        for (const auto& e : list) {
            CHECK(e.length > 0.0);
            sum += e.length;
        }
        double ref = oracle::box_chord(lo, hi, src, tgt - src);
        CHECK(std::abs(sum - ref) < 1e-9);
        if (!list.empty()) ++nonempty;

        // Index monotonicity along the ray direction, axis by axis.
        Vec3d d = tgt - src;
        for (std::size_t e = 1; e < list.size(); ++e) {
            if (d.x >= 0.0) CHECK(list[e].i >= list[e - 1].i);
            if (d.x <= 0.0) CHECK(list[e].i <= list[e - 1].i);
            if (d.y >= 0.0) CHECK(list[e].j >= list[e - 1].j);
            if (d.y <= 0.0) CHECK(list[e].j <= list[e - 1].j);
            if (d.z >= 0.0) CHECK(list[e].k >= list[e - 1].k);
            if (d.z <= 0.0) CHECK(list[e].k <= list[e - 1].k);
        }
    }
    CHECK(nonempty > 5000);  // the sweep actually exercises the box
}

TEST_CASE("trace_ray: invalid configurations") {
    auto vol = VolumeGeometry::make({4, 4, 4}, {1.0, 1.0, 1.0});
    CHECK_THROWS_AS(trace_ray(vol, {0.1, 0.2, -0.3}, {10.0, 0.0, 0.0}), std::runtime_error);
    CHECK_THROWS_AS(trace_ray(vol, {-10.0, 0.0, 0.0}, {-10.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("project: zero volume gives zero projections") {
    auto geom = VolumeGeometry::make({8, 8, 8}, {1.0, 1.0, 1.0});
    auto det = DetectorGeometry::make(12, 12, 1.0, 1.0);
    auto views = make_circular_trajectory(100.0, 150.0, 4, 360.0, det);
    auto proj = project_siddon_k(AttenuationVolume::zeros(geom), views, det, 2);
    for (double v : proj.values) CHECK(v == 0.0);
}

TEST_CASE("project: single voxel, central pixel, K = 1") {
    auto geom = VolumeGeometry::make({1, 1, 1}, {1.0, 1.0, 1.0});
    auto vol = AttenuationVolume::zeros(geom);
    vol.at(0, 0, 0) = 1.0;
    auto det = DetectorGeometry::make(11, 11, 1.0, 1.0);
    auto views = make_circular_trajectory(60.0, 100.0, 1, 360.0, det);
    auto proj = project_siddon_k(vol, views, det, 1);

    // The principal ray passes straight through the cube: chord 1 mm.
    CHECK(proj.at(0, 5, 5) == Approx(1.0).epsilon(1e-12));

    // Every pixel agrees with an explicit trace of its center ray.
    for (int m = 0; m < det.rows; ++m)
        for (int n = 0; n < det.cols; ++n) {
            Vec3d tgt = views[0].detector_point({double(n), double(m)});
            double expect = 0.0;
            for (const auto& e : trace_ray(geom, views[0].source(), tgt)) expect += e.length;
            CHECK(std::abs(proj.at(0, m, n) - expect) < 1e-12);
        }
}

TEST_CASE("project: homogeneous volume matches the box-chord oracle") {
    auto geom = VolumeGeometry::make({7, 5, 3}, {0.8, 1.1, 0.6});
    auto vol = AttenuationVolume::zeros(geom);
    const double c = 0.37;
    for (double& v : vol.values) v = c;
    auto det = DetectorGeometry::make(9, 13, 1.2, 0.9);
    auto views = make_circular_trajectory(50.0, 80.0, 3, 360.0, det);
    auto proj = project_siddon_k(vol, views, det, 1);

    Vec3d lo = geom.min_corner();
    Vec3d hi = lo + geom.extent();
    for (int v = 0; v < int(views.size()); ++v)
        for (int m = 0; m < det.rows; ++m)
            for (int n = 0; n < det.cols; ++n) {
                Vec3d tgt = views[v].detector_point({double(n), double(m)});
                double ref = c * oracle::box_chord(lo, hi, views[v].source(), tgt - views[v].source());
                CHECK(std::abs(proj.at(v, m, n) - ref) < 1e-9);
            }
}

TEST_CASE("project: linearity") {
    auto geom = VolumeGeometry::make({6, 6, 4}, {1.0, 1.0, 1.0});
    auto det = DetectorGeometry::make(10, 10, 1.0, 1.0);
    auto views = make_circular_trajectory(40.0, 70.0, 2, 360.0, det);

    auto x = AttenuationVolume::zeros(geom);
    auto y = AttenuationVolume::zeros(geom);
    fill_random(x.values, 11);
    fill_random(y.values, 12);
    const double alpha = 1.7, beta = -0.4;
    auto mix = AttenuationVolume::zeros(geom);
    for (std::size_t i = 0; i < mix.values.size(); ++i)
        mix.values[i] = alpha * x.values[i] + beta * y.values[i];

    auto px = project_siddon_k(x, views, det, 2);
    auto py = project_siddon_k(y, views, det, 2);
    auto pm = project_siddon_k(mix, views, det, 2);
    double scale = 0.0;
    for (double v : pm.values) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < pm.values.size(); ++i) {
        double want = alpha * px.values[i] + beta * py.values[i];
        CHECK(std::abs(pm.values[i] - want) <= 1e-12 * scale);
    }
}

TEST_CASE("project: pixel ROI restricts without changing values") {
    auto geom = VolumeGeometry::make({6, 6, 4}, {1.0, 1.0, 1.0});
    auto vol = AttenuationVolume::zeros(geom);
    fill_random(vol.values, 5);
    auto det = DetectorGeometry::make(10, 14, 1.0, 1.0);
    auto views = make_circular_trajectory(40.0, 70.0, 2, 360.0, det);

    auto full = project_siddon_k(vol, views, det, 2);
    auto part = ProjectionStack::zeros(det, int(views.size()));
    project_siddon_k_into(vol, views, det, 2, {}, part, PixelRoi{2, 7, 3, 11});

    for (int v = 0; v < part.n_views; ++v)
        for (int m = 0; m < det.rows; ++m)
            for (int n = 0; n < det.cols; ++n) {
                bool in = m >= 2 && m < 7 && n >= 3 && n < 11;
                if (in)
                    CHECK(part.at(v, m, n) == full.at(v, m, n));
                else
                    CHECK(part.at(v, m, n) == 0.0);
            }
}

TEST_CASE("project: K >= 128 requires the expensive opt-in") {
    auto geom = VolumeGeometry::make({2, 2, 2}, {1.0, 1.0, 1.0});
    auto vol = AttenuationVolume::zeros(geom);
    vol.at(0, 0, 0) = 1.0;
    auto det = DetectorGeometry::make(3, 3, 1.0, 1.0);
    auto views = make_circular_trajectory(30.0, 50.0, 1, 360.0, det);

    CHECK_THROWS_AS(project_siddon_k(vol, views, det, 128), std::invalid_argument);
    CHECK_THROWS_AS(project_siddon_k(vol, views, det, 0), std::invalid_argument);

    ExecPolicy expensive{0, true, true};
    auto proj = project_siddon_k(vol, views, det, 128, expensive);
    double sum = 0.0;
    for (double v : proj.values) sum += v;
    CHECK(sum > 0.0);
}

TEST_CASE("project: detector must match the views") {
    auto geom = VolumeGeometry::make({2, 2, 2}, {1.0, 1.0, 1.0});
    auto det = DetectorGeometry::make(4, 4, 1.0, 1.0);
    auto other = DetectorGeometry::make(4, 4, 0.5, 1.0);
    auto views = make_circular_trajectory(30.0, 50.0, 1, 360.0, det);
    CHECK_THROWS_AS(project_siddon_k(AttenuationVolume::zeros(geom), views, other, 1),
                    std::invalid_argument);
}

TEST_CASE("backproject: single pixel deposits chords along one ray") {
    auto geom = VolumeGeometry::make({5, 5, 3}, {1.0, 1.0, 1.0});
    auto det = DetectorGeometry::make(9, 11, 1.0, 1.0);
    auto views = make_circular_trajectory(40.0, 70.0, 1, 360.0, det);
    const int m = 4, n = 7;

    auto proj = ProjectionStack::zeros(det, 1);
    proj.at(0, m, n) = 1.0;
    auto vol = backproject_siddon_k(proj, views, geom, 1);

    auto expect = AttenuationVolume::zeros(geom);
    Vec3d tgt = views[0].detector_point({double(n), double(m)});
    for (const auto& e : trace_ray(geom, views[0].source(), tgt))
        expect.at(e.i, e.j, e.k) += e.length;

    for (std::size_t i = 0; i < vol.values.size(); ++i)
        CHECK(std::abs(vol.values[i] - expect.values[i]) < 1e-12);
}

TEST_CASE("backproject: zero projections give a zero volume") {
    auto geom = VolumeGeometry::make({4, 4, 4}, {1.0, 1.0, 1.0});
    auto det = DetectorGeometry::make(6, 6, 1.0, 1.0);
    auto views = make_circular_trajectory(30.0, 50.0, 2, 360.0, det);
    auto vol = backproject_siddon_k(ProjectionStack::zeros(det, 2), views, geom, 2);
    for (double v : vol.values) CHECK(v == 0.0);
}

TEST_CASE("adjoint identity on an 8x8x8 volume and 16x16 detector") {
    auto geom = VolumeGeometry::make({8, 8, 8}, {1.0, 1.0, 1.0});
    auto det = DetectorGeometry::make(16, 16, 1.0, 1.0);
    auto views = make_circular_trajectory(40.0, 70.0, 4, 360.0, det);

    for (int k : {1, 2, 4}) {
        auto x = AttenuationVolume::zeros(geom);
        auto b = ProjectionStack::zeros(det, int(views.size()));
        fill_random(x.values, 100 + k);
        fill_random(b.values, 200 + k);

        auto ax = project_siddon_k(x, views, det, k);
        auto atb = backproject_siddon_k(b, views, geom, k);
        double lhs = dot_plain(b.values, ax.values);
        double rhs = dot_plain(x.values, atb.values);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(lhs), std::abs(rhs)));
    }
}

TEST_CASE("parallel and serial kernels agree") {
    auto geom = VolumeGeometry::make({6, 6, 4}, {1.0, 1.0, 1.0});
    auto vol = AttenuationVolume::zeros(geom);
    fill_random(vol.values, 31);
    auto det = DetectorGeometry::make(12, 12, 1.0, 1.0);
    auto views = make_circular_trajectory(40.0, 70.0, 3, 360.0, det);

    ExecPolicy par{0, false, false};
    ExecPolicy ser{0, true, false};

    auto pp = project_siddon_k(vol, views, det, 2, par);
    auto ps = project_siddon_k(vol, views, det, 2, ser);
    double pscale = 0.0;
    for (double v : ps.values) pscale = std::max(pscale, std::abs(v));
    for (std::size_t i = 0; i < pp.values.size(); ++i)
        CHECK(std::abs(pp.values[i] - ps.values[i]) <= 1e-10 * pscale);

    auto bp = backproject_siddon_k(pp, views, geom, 2, par);
    auto bs = backproject_siddon_k(pp, views, geom, 2, ser);
    double bscale = 0.0;
    for (double v : bs.values) bscale = std::max(bscale, std::abs(v));
    for (std::size_t i = 0; i < bp.values.size(); ++i)
        CHECK(std::abs(bp.values[i] - bs.values[i]) <= 1e-10 * bscale);
}
