#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "cbct/geometry.hpp"
#include "oracles.hpp"

using namespace cbct;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

ViewGeometry first_view(double sid = 541.0, double sdd = 949.0) {
    DetectorGeometry det = DetectorGeometry::make(128, 128, 1.0, 1.0);
    return make_circular_trajectory(sid, sdd, 1, 360.0, det)[0];
}

} // namespace

TEST_CASE("voxel centers span the centered lattice") {
    VolumeGeometry g = VolumeGeometry::make({512, 512, 128}, {0.5, 0.5, 0.5});
    Vec3d c0 = g.voxel_center(0, 0, 0);
    CHECK(c0.x == Approx(-127.75).epsilon(1e-15));
    CHECK(c0.y == Approx(-127.75).epsilon(1e-15));
    CHECK(c0.z == Approx(-31.75).epsilon(1e-15));
    Vec3d c1 = g.voxel_center(511, 511, 127);
    CHECK(c1.x == Approx(127.75).epsilon(1e-15));
    CHECK(c1.y == Approx(127.75).epsilon(1e-15));
    CHECK(c1.z == Approx(31.75).epsilon(1e-15));
    CHECK_THROWS_AS((void)g.voxel_center(512, 0, 0), std::out_of_range);

    CHECK(g.extent().x == Approx(256.0));
    CHECK(g.voxel_count() == std::size_t(512) * 512 * 128);
    // x1 fastest, x3 slowest
    CHECK(g.linear_index(1, 0, 0) == 1);
    CHECK(g.linear_index(0, 1, 0) == 512);
    CHECK(g.linear_index(0, 0, 1) == std::size_t(512) * 512);
}

TEST_CASE("volume and detector geometry validation") {
    CHECK_THROWS_AS(VolumeGeometry::make({0, 1, 1}, {1, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(VolumeGeometry::make({1, 1, 1}, {0.0, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(DetectorGeometry::make(0, 4, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(DetectorGeometry::make(4, 4, -1, 1), std::invalid_argument);
    DetectorGeometry det = DetectorGeometry::make(480, 616, 0.154, 0.154);
    CHECK(det.pixel_area() == Approx(0.154 * 0.154));
    CHECK(det.pixel_count() == std::size_t(480) * 616);
}

TEST_CASE("circular trajectory spacing") {
    DetectorGeometry det = DetectorGeometry::make(128, 128, 1.0, 1.0);

    SUBCASE("full circle divides by n") {
        auto views = make_circular_trajectory(541.0, 949.0, 720, 360.0, det);
        REQUIRE(views.size() == 720);
        // second view sits at 0.5 degrees
        Vec3d s = views[1].source();
        CHECK(s.x == Approx(541.0 * std::cos(0.5 * kPi / 180.0)).epsilon(1e-14));
        CHECK(s.y == Approx(541.0 * std::sin(0.5 * kPi / 180.0)).epsilon(1e-14));
        CHECK(s.z == 0.0);
    }
    SUBCASE("partial arc includes both endpoints") {
        auto views = make_circular_trajectory(750.0, 1000.0, 100, 198.0, det);
        REQUIRE(views.size() == 100);
        double last = std::atan2(views[99].source().y, views[99].source().x) * 180.0 / kPi;
        CHECK(last == Approx(198.0 - 360.0).epsilon(1e-12));  // atan2 wraps past 180
    }
    SUBCASE("detector orientation follows the source") {
        auto views = make_circular_trajectory(541.0, 949.0, 8, 360.0, det);
        for (const auto& v : views) {
            // e_w points from the source towards the detector through the origin
            Vec3d ew = v.frame().row(2);
            Vec3d want = normalized(-v.source());
            CHECK(dot(ew, want) == Approx(1.0).epsilon(1e-14));
            // chi2 axis antiparallel to x3
            CHECK(v.frame().row(1).z == -1.0);
            CHECK(v.focal_length() == 949.0);
        }
    }
    SUBCASE("invalid arguments") {
        CHECK_THROWS_AS(make_circular_trajectory(541, 949, 0, 360, det), std::invalid_argument);
        CHECK_THROWS_AS(make_circular_trajectory(541, 949, 4, 0.0, det), std::invalid_argument);
        CHECK_THROWS_AS(make_circular_trajectory(-1, 949, 4, 360, det), std::invalid_argument);
    }
}

TEST_CASE("view frame validation") {
    Vec2d b{1.0, 1.0};
    Vec3d s{541, 0, 0};
    Mat3d good = Mat3d::from_rows({0, 1, 0}, {0, 0, -1}, {-1, 0, 0});
    CHECK_NOTHROW(ViewGeometry::make(s, good, 949.0, {63.5, 63.5}, b));

    // chi2 axis pointing up violates the convention
    Mat3d flipped = Mat3d::from_rows({0, -1, 0}, {0, 0, 1}, {-1, 0, 0});
    CHECK_THROWS_AS(ViewGeometry::make(s, flipped, 949.0, {63.5, 63.5}, b),
                    std::invalid_argument);

    // left-handed frame
    Mat3d lh = Mat3d::from_rows({0, -1, 0}, {0, 0, -1}, {-1, 0, 0});
    CHECK_THROWS_AS(ViewGeometry::make(s, lh, 949.0, {63.5, 63.5}, b), std::invalid_argument);

    Mat3d skew = Mat3d::from_rows({0, 1, 1e-6}, {0, 0, -1}, {-1, 0, 0});
    CHECK_THROWS_AS(ViewGeometry::make(s, skew, 949.0, {63.5, 63.5}, b), std::invalid_argument);
}

TEST_CASE("projection matches the standard 3x4 matrix") {
    ViewGeometry v = first_view();
    std::array<double, 12> P = v.standard_matrix();
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
        Vec3d x{(oracle::uniform(rng) - 0.5) * 200.0, (oracle::uniform(rng) - 0.5) * 200.0,
                (oracle::uniform(rng) - 0.5) * 100.0};
        Vec2d chi = v.project_point(x);
        Vec2d ref = oracle::project_3x4(P, x);
        CHECK(chi.x == Approx(ref.x).epsilon(1e-12));
        CHECK(chi.y == Approx(ref.y).epsilon(1e-12));
    }

    // the isocenter projects onto the principal point
    Vec2d c = v.project_point({0, 0, 0});
    CHECK(c.x == Approx(63.5).epsilon(1e-13));
    CHECK(c.y == Approx(63.5).epsilon(1e-13));

    // points behind the source are rejected
    CHECK_THROWS_AS((void)v.project_point({1000.0, 0.0, 0.0}), std::domain_error);
    CHECK(v.depth({0, 0, 0}) == Approx(541.0));
}

TEST_CASE("projection and detector_point are inverse on the detector plane") {
    ViewGeometry v = first_view();
    std::mt19937_64 rng(6);
    for (int t = 0; t < 100; ++t) {
        Vec2d chi{oracle::uniform(rng) * 127.0, oracle::uniform(rng) * 127.0};
        Vec3d p = v.detector_point(chi);
        Vec2d back = v.project_point(p);
        CHECK(back.x == Approx(chi.x).epsilon(1e-12));
        CHECK(back.y == Approx(chi.y).epsilon(1e-12));
    }
}

TEST_CASE("local spherical coordinates") {
    ViewGeometry v = first_view();

    // displacement with local coordinates (1, 0, 1): one unit along e_u, one
    // along the principal axis
    Vec3d x = v.source() + v.frame().row(0) + v.frame().row(2);
    LocalSpherical ls = v.to_local_spherical(x);
    CHECK(ls.r == Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(ls.theta == Approx(kPi / 4.0).epsilon(1e-14));
    CHECK(ls.phi == Approx(0.0));

    SUBCASE("roundtrip recovers the point") {
        std::mt19937_64 rng(7);
        for (int t = 0; t < 200; ++t) {
            Vec3d p{(oracle::uniform(rng) - 0.5) * 300.0, (oracle::uniform(rng) - 0.5) * 300.0,
                    (oracle::uniform(rng) - 0.5) * 300.0};
            LocalSpherical s = v.to_local_spherical(p);
            CHECK(s.r == Approx(norm(p - v.source())).epsilon(1e-12));
            Vec3d local{s.r * std::sin(s.theta) * std::cos(s.phi),
                        s.r * std::sin(s.theta) * std::sin(s.phi), s.r * std::cos(s.theta)};
            Vec3d back = v.source() + v.frame().transposed() * local;
            CHECK(back.x == Approx(p.x).epsilon(1e-11));
            CHECK(back.y == Approx(p.y).epsilon(1e-11));
            CHECK(back.z == Approx(p.z).epsilon(1e-11));
        }
    }
    CHECK_THROWS_AS((void)v.to_local_spherical(v.source()), std::domain_error);
}

TEST_CASE("elevation angle") {
    ViewGeometry v = first_view();
    // zero on the central row through the principal point
    CHECK(v.elevation_angle({10.0, 63.5}) == 0.0);
    CHECK(v.elevation_angle({120.0, 63.5}) == 0.0);
    // one pixel up at the principal column: atan(b2 / f)
    CHECK(v.elevation_angle({63.5, 64.5}) == Approx(std::atan(1.0 / 949.0)).epsilon(1e-13));
    // elevation never exceeds the cone angle
    std::mt19937_64 rng(8);
    for (int t = 0; t < 100; ++t) {
        Vec2d chi{oracle::uniform(rng) * 127.0, oracle::uniform(rng) * 127.0};
        double e = v.elevation_angle(chi);
        LocalSpherical ls = v.to_local_spherical(v.detector_point(chi));
        CHECK(e <= ls.theta + 1e-12);
    }
}

TEST_CASE("standard matrix factorization roundtrip") {
    DetectorGeometry det = DetectorGeometry::make(480, 616, 0.154, 0.154);
    auto views = make_circular_trajectory(749.0, 1198.0, 12, 360.0, det);
    for (const ViewGeometry& v : views) {
        std::array<double, 12> P = v.standard_matrix();
        ViewGeometry back = ViewGeometry::from_standard_matrix(P, det.pixel_size());
        CHECK(norm(back.source() - v.source()) < 1e-9);
        CHECK(back.focal_length() == Approx(v.focal_length()).epsilon(1e-12));
        CHECK(back.principal_point().x == Approx(v.principal_point().x).epsilon(1e-10));
        CHECK(back.principal_point().y == Approx(v.principal_point().y).epsilon(1e-10));
        // projections agree everywhere that matters
        std::mt19937_64 rng(9);
        for (int t = 0; t < 20; ++t) {
            Vec3d x{(oracle::uniform(rng) - 0.5) * 100.0, (oracle::uniform(rng) - 0.5) * 100.0,
                    (oracle::uniform(rng) - 0.5) * 100.0};
            Vec2d a = v.project_point(x);
            Vec2d b = back.project_point(x);
            CHECK(a.x == Approx(b.x).epsilon(1e-10));
            CHECK(a.y == Approx(b.y).epsilon(1e-10));
        }
    }

    SUBCASE("scale invariance") {
        ViewGeometry v = views[3];
        std::array<double, 12> P = v.standard_matrix();
        for (double& e : P) e *= -7.25;  // arbitrary nonzero scale, sign flipped
        ViewGeometry back = ViewGeometry::from_standard_matrix(P, det.pixel_size());
        CHECK(norm(back.source() - v.source()) < 1e-9);
        CHECK(back.focal_length() == Approx(v.focal_length()).epsilon(1e-12));
    }
}

TEST_CASE("camera matrix text files roundtrip") {
    DetectorGeometry det = DetectorGeometry::make(128, 128, 1.0, 1.0);
    auto views = make_circular_trajectory(541.0, 949.0, 36, 360.0, det);
    auto path = std::filesystem::temp_directory_path() / "cbct_test_matrices.txt";
    write_camera_matrices(path, views);

    auto back = read_camera_matrices(path, det.pixel_size());
    REQUIRE(back.size() == views.size());
    for (std::size_t i = 0; i < views.size(); ++i) {
        CHECK(norm(back[i].source() - views[i].source()) < 1e-9);
        CHECK(back[i].focal_length() == Approx(views[i].focal_length()).epsilon(1e-12));
    }

    SUBCASE("comment lines are skipped") {
        std::ofstream out(path, std::ios::app);
        out << "# trailing comment\n";
        out.close();
        CHECK(read_camera_matrices(path, det.pixel_size()).size() == views.size());
    }
    SUBCASE("short lines are rejected") {
        std::ofstream out(path, std::ios::app);
        out << "1 2 3\n";
        out.close();
        CHECK_THROWS(read_camera_matrices(path, det.pixel_size()));
    }
    std::filesystem::remove(path);
}
