#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cbct/cvp.hpp"
#include "cbct/den.hpp"
#include "cbct/geometry.hpp"
#include "cbct/log.hpp"
#include "cbct/siddon.hpp"
#include "cbct/solver.hpp"

namespace cbct::cli {
namespace {

/// Error carrying a dedicated process exit code (capacity errors use 2).
struct ExitWith : std::runtime_error {
    int code;
    ExitWith(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// ---------- shared flag bundles ----------

struct ProjectorOpts {
    std::string projector = "cvp";
    int siddon_k = 8;
    bool cos_scaling = false;
    bool exact_scaling = false;
    bool elevation_on = false;
    bool elevation_off = false;
    bool relaxed = false;
    int threads = 0;
    bool deterministic = false;

    bool is_cvp() const { return projector == "cvp"; }

    CvpOptions cvp() const {
        CvpOptions o;
        o.scaling = cos_scaling ? PixelScaling::Cos : PixelScaling::Exact;
        o.elevation_correction = !elevation_off;
        o.precision = relaxed ? CvpPrecision::Single : CvpPrecision::Double;
        return o;
    }

    ExecPolicy exec() const {
        // a user typing --siddon-k 512 is deliberate; no extra opt-in flag
        return {threads, deterministic, true};
    }
};

void add_projector_flags(CLI::App* cmd, ProjectorOpts& o) {
    cmd->add_option("--projector", o.projector, "Projector family")
        ->check(CLI::IsMember({"cvp", "siddon"}))
        ->capture_default_str();
    cmd->add_option("--siddon-k", o.siddon_k, "Rays per pixel edge for the siddon projector")
        ->check(CLI::Range(1, 512))
        ->capture_default_str();
    auto* cosf =
        cmd->add_flag("--cos-scaling", o.cos_scaling, "Pixel factor f^2/(b1 b2 cos^3 theta)");
    auto* exactf = cmd->add_flag("--exact-scaling", o.exact_scaling,
                                 "Pixel factor 1/(pixel solid angle) (default)");
    cosf->excludes(exactf);
    exactf->excludes(cosf);
    auto* eon = cmd->add_flag("--elevation-correction", o.elevation_on,
                              "Rectangle-model row split (default)");
    auto* eoff = cmd->add_flag("--no-elevation-correction", o.elevation_off,
                               "Plain centroid row split");
    eon->excludes(eoff);
    eoff->excludes(eon);
    cmd->add_flag("--relaxed", o.relaxed, "Single-precision accumulation in the CVP kernels");
    cmd->add_option("--threads", o.threads, "Worker threads for operator kernels (0 = all cores)");
    cmd->add_flag("--deterministic", o.deterministic, "Force sequential operator mode");
}

struct TrajectoryOpts {
    std::string matrices;
    std::vector<double> circular;  // sid sdd n_views arc_deg
    double pixel_width = 1.0;
    double pixel_height = 1.0;
};

void add_trajectory_flags(CLI::App* cmd, TrajectoryOpts& t) {
    auto* mat = cmd->add_option("--matrices", t.matrices,
                                "Camera matrix text file, 12 numbers per view line")
                    ->check(CLI::ExistingFile);
    auto* circ = cmd->add_option("--circular", t.circular,
                                 "Synthesize a circular trajectory: SID SDD N_VIEWS ARC_DEG")
                     ->expected(4);
    mat->excludes(circ);
    circ->excludes(mat);
    cmd->add_option("--pixel-width", t.pixel_width, "Detector pixel width b1 [mm]")
        ->capture_default_str();
    cmd->add_option("--pixel-height", t.pixel_height, "Detector pixel height b2 [mm]")
        ->capture_default_str();
}

std::vector<ViewGeometry> load_views(const TrajectoryOpts& t, const DetectorGeometry& det) {
    if (!t.matrices.empty()) return read_camera_matrices(t.matrices, det.pixel_size());
    if (t.circular.size() == 4) {
        int n = int(t.circular[2]);
        if (n < 1 || double(n) != t.circular[2])
            throw std::invalid_argument("--circular N_VIEWS must be a positive integer");
        return make_circular_trajectory(t.circular[0], t.circular[1], n, t.circular[3], det);
    }
    throw ExitWith(1, "either --matrices or --circular is required");
}

Vec3d parse_voxel_size(const std::vector<double>& v) {
    if (v.empty()) return {1.0, 1.0, 1.0};
    if (v.size() == 1) return {v[0], v[0], v[0]};
    if (v.size() == 3) return {v[0], v[1], v[2]};
    throw std::invalid_argument("--voxel-size takes one or three values");
}

double view_angle_deg(int v, int n_views, double arc_deg) {
    double step = std::abs(arc_deg - 360.0) < 1e-9 ? arc_deg / n_views
                                                   : (n_views > 1 ? arc_deg / (n_views - 1) : 0.0);
    return v * step;
}

// ---------- presets ----------

struct Preset {
    VolumeGeometry vol;
    DetectorGeometry det;
    double sid = 0, sdd = 0, arc = 360.0;
    int views = 0;
};

Preset preset_by_name(const std::string& name) {
    if (name == "desk")
        return {VolumeGeometry::make({64, 64, 64}, {0.5, 0.5, 0.5}),
                DetectorGeometry::make(128, 128, 1.0, 1.0), 541.0, 949.0, 360.0, 36};
    if (name == "long2010")
        return {VolumeGeometry::make({512, 512, 128}, {0.5, 0.5, 0.5}),
                DetectorGeometry::make(512, 512, 1.0, 1.0), 541.0, 949.0, 360.0, 720};
    if (name == "pfeiffer2021")
        return {VolumeGeometry::make({256, 256, 256}, {0.5, 0.5, 0.5}),
                DetectorGeometry::make(960, 1280, 0.25, 0.25), 750.0, 1000.0, 198.0, 100};
    throw std::invalid_argument("unknown preset: " + name);
}

// ---------- timed operator pairs ----------

struct OpTimers {
    double fwd_seconds = 0.0, bwd_seconds = 0.0;
    int fwd_count = 0, bwd_count = 0;
    std::vector<double> first_fwd_view_seconds;
};

LinearOperatorPair make_operator(const ProjectorOpts& po, const VolumeGeometry& vol_geom,
                                 const DetectorGeometry& det, std::vector<ViewGeometry> views,
                                 OpTimers* timers = nullptr) {
    LinearOperatorPair pair;
    pair.vol_geom = vol_geom;
    pair.det = det;
    pair.n_views = int(views.size());

    auto shared = std::make_shared<std::vector<ViewGeometry>>(std::move(views));
    const ExecPolicy exec = po.exec();
    const CvpOptions copts = po.cvp();
    const bool is_cvp = po.is_cvp();
    const int k = po.siddon_k;
    using clock = std::chrono::steady_clock;

    pair.forward = [=](const AttenuationVolume& x, ProjectionStack& out) {
        auto tic = clock::now();
        std::vector<double> per_view;
        bool want_views = timers && timers->first_fwd_view_seconds.empty();
        std::vector<double>* vp = want_views ? &per_view : nullptr;
        if (is_cvp)
            project_cvp_into(x, *shared, det, copts, exec, out, vp);
        else
            project_siddon_k_into(x, *shared, det, k, exec, out, {}, vp);
        if (timers) {
            timers->fwd_seconds += std::chrono::duration<double>(clock::now() - tic).count();
            ++timers->fwd_count;
            if (want_views) timers->first_fwd_view_seconds = std::move(per_view);
        }
    };
    pair.adjoint = [=](const ProjectionStack& p, AttenuationVolume& out) {
        auto tic = clock::now();
        if (is_cvp)
            backproject_cvp_into(p, *shared, vol_geom, copts, exec, out);
        else
            backproject_siddon_k_into(p, *shared, vol_geom, k, exec, out);
        if (timers) {
            timers->bwd_seconds += std::chrono::duration<double>(clock::now() - tic).count();
            ++timers->bwd_count;
        }
    };
    return pair;
}

std::uint64_t mem_available_bytes() {
    std::ifstream in("/proc/meminfo");
    std::string key;
    std::uint64_t kb = 0;
    while (in >> key >> kb) {
        if (key == "MemAvailable:") return kb * 1024;
        in.ignore(256, '\n');
    }
    return 0;  // unknown; skip the capacity check
}

FILE* open_csv(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

// ---------- subcommand configs ----------

struct ProjectCfg {
    std::string volume, output;
    TrajectoryOpts traj;
    std::vector<double> voxel_size;
    int det_rows = 0, det_cols = 0;
    ProjectorOpts po;
};

int run_project(const ProjectCfg& c) {
    DetectorGeometry det =
        DetectorGeometry::make(c.det_rows, c.det_cols, c.traj.pixel_width, c.traj.pixel_height);
    std::vector<ViewGeometry> views = load_views(c.traj, det);
    AttenuationVolume vol = volume_from_den(den_read(c.volume), parse_voxel_size(c.voxel_size));
    log_info("projecting " + std::to_string(vol.geom.counts[0]) + "x" +
             std::to_string(vol.geom.counts[1]) + "x" + std::to_string(vol.geom.counts[2]) +
             " volume onto " + std::to_string(views.size()) + " views");

    ProjectionStack out = ProjectionStack::zeros(det, int(views.size()));
    if (c.po.is_cvp())
        project_cvp_into(vol, views, det, c.po.cvp(), c.po.exec(), out);
    else
        project_siddon_k_into(vol, views, det, c.po.siddon_k, c.po.exec(), out);
    den_write(c.output, to_den(out));
    std::printf("wrote %s (%d x %d x %d)\n", c.output.c_str(), det.rows, det.cols,
                out.n_views);
    return 0;
}

struct BackprojectCfg {
    std::string projections, output;
    TrajectoryOpts traj;
    std::vector<int> vol_dims;
    std::vector<double> voxel_size;
    ProjectorOpts po;
};

int run_backproject(const BackprojectCfg& c) {
    ProjectionStack proj =
        stack_from_den(den_read(c.projections), c.traj.pixel_width, c.traj.pixel_height);
    std::vector<ViewGeometry> views = load_views(c.traj, proj.det);
    if (int(views.size()) != proj.n_views)
        throw std::runtime_error("trajectory has " + std::to_string(views.size()) +
                                 " views but projection stack has " +
                                 std::to_string(proj.n_views));
    VolumeGeometry vg = VolumeGeometry::make({c.vol_dims[0], c.vol_dims[1], c.vol_dims[2]},
                                             parse_voxel_size(c.voxel_size));
    AttenuationVolume out = AttenuationVolume::zeros(vg);
    if (c.po.is_cvp())
        backproject_cvp_into(proj, views, vg, c.po.cvp(), c.po.exec(), out);
    else
        backproject_siddon_k_into(proj, views, vg, c.po.siddon_k, c.po.exec(), out);
    den_write(c.output, to_den(out));
    std::printf("wrote %s (%d x %d x %d voxels)\n", c.output.c_str(), vg.counts[0], vg.counts[1],
                vg.counts[2]);
    return 0;
}

struct ReconCfg {
    std::string projections, output, residuals;
    TrajectoryOpts traj;
    std::vector<int> vol_dims;
    std::vector<double> voxel_size;
    int iterations = 30;
    ProjectorOpts po;
};

int run_recon(const ReconCfg& c) {
    ProjectionStack b =
        stack_from_den(den_read(c.projections), c.traj.pixel_width, c.traj.pixel_height);
    std::vector<ViewGeometry> views = load_views(c.traj, b.det);
    if (int(views.size()) != b.n_views)
        throw std::runtime_error("trajectory/projection view count mismatch");
    VolumeGeometry vg = VolumeGeometry::make({c.vol_dims[0], c.vol_dims[1], c.vol_dims[2]},
                                             parse_voxel_size(c.voxel_size));
    DetectorGeometry det = b.det;
    LinearOperatorPair pair = make_operator(c.po, vg, det, std::move(views));
    CglsResult result = cgls(pair, std::move(b), c.iterations);

    double b_norm = result.residual_norms.front();
    double final_rel =
        b_norm > 0 ? result.residual_norms.back() / b_norm : result.residual_norms.back();
    std::printf("CGLS %d iterations, relative residual %.6e\n",
                int(result.residual_norms.size()) - 1, final_rel);
    if (!c.residuals.empty()) {
        FILE* f = open_csv(c.residuals);
        std::fprintf(f, "iteration,residual_norm,relative_residual\n");
        for (std::size_t i = 0; i < result.residual_norms.size(); ++i)
            std::fprintf(f, "%zu,%.17g,%.17g\n", i, result.residual_norms[i],
                         b_norm > 0 ? result.residual_norms[i] / b_norm : 0.0);
        std::fclose(f);
    }
    den_write(c.output, to_den(result.x));
    std::printf("wrote %s (%d x %d x %d voxels)\n", c.output.c_str(), vg.counts[0], vg.counts[1],
                vg.counts[2]);
    return 0;
}

struct CompareCfg {
    std::string file_a, file_b, report;
    double arc = 360.0;
    double tol = -1.0;
};

int run_compare(const CompareCfg& c) {
    DenFile a = den_read(c.file_a);
    DenFile b = den_read(c.file_b);
    if (a.dim_x != b.dim_x || a.dim_y != b.dim_y || a.dim_z != b.dim_z)
        throw std::runtime_error("dimension mismatch: " + c.file_a + " vs " + c.file_b);

    const std::size_t frame = std::size_t(a.dim_x) * a.dim_y;
    const int n_views = a.dim_z;
    std::vector<double> errors(n_views);
    double mean = 0.0, worst = 0.0;
    for (int v = 0; v < n_views; ++v) {
        const float* pa = a.values.data() + frame * v;
        const float* pb = b.values.data() + frame * v;
        double ref2 = 0.0, diff2 = 0.0;
        for (std::size_t i = 0; i < frame; ++i) {
            double d = double(pb[i]) - double(pa[i]);
            ref2 += double(pa[i]) * double(pa[i]);
            diff2 += d * d;
        }
        double err;
        if (ref2 > 0.0)
            err = 100.0 * std::sqrt(diff2 / ref2);
        else
            err = diff2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        errors[v] = err;
        mean += err;
        worst = std::max(worst, err);
    }
    mean /= std::max(n_views, 1);

    if (!c.report.empty()) {
        FILE* f = open_csv(c.report);
        std::fprintf(f, "view,angle_deg,error_percent\n");
        for (int v = 0; v < n_views; ++v)
            std::fprintf(f, "%d,%.6f,%.9g\n", v, view_angle_deg(v, n_views, c.arc), errors[v]);
        std::fclose(f);
    }
    std::printf("views %d, mean error %.6g%%, max error %.6g%%\n", n_views, mean, worst);
    if (c.tol >= 0.0 && !(worst <= c.tol)) {
        std::fprintf(stderr, "max error %.6g%% exceeds tolerance %.6g%%\n", worst, c.tol);
        return 1;
    }
    return 0;
}

struct BenchCfg {
    std::string preset = "desk";
    int iterations = 2;
    std::string csv, save_matrices;
    std::uint64_t seed = 1;
    bool force = false;
    ProjectorOpts po;
};

int run_bench(const BenchCfg& c) {
    Preset p = preset_by_name(c.preset);
    const double vol_bytes = double(p.vol.voxel_count()) * 8.0;
    const double stack_bytes = double(p.det.pixel_count()) * p.views * 8.0;
    // CGLS holds three volume-sized and two stack-sized arrays at peak
    const double need = 3.0 * vol_bytes + 2.0 * stack_bytes + (256 << 20);
    std::uint64_t avail = mem_available_bytes();
    if (!c.force && avail > 0 && need > double(avail))
        throw ExitWith(2, "estimated peak memory " + std::to_string(need / (1 << 30)) +
                              " GiB exceeds available " + std::to_string(avail / double(1 << 30)) +
                              " GiB; use --preset desk or pass --force");

    std::vector<ViewGeometry> views = make_circular_trajectory(p.sid, p.sdd, p.views, p.arc, p.det);
    if (!c.save_matrices.empty()) write_camera_matrices(c.save_matrices, views);

    OpTimers timers;
    LinearOperatorPair pair = make_operator(c.po, p.vol, p.det, std::move(views), &timers);
    ProjectionStack b = ProjectionStack::zeros(p.det, p.views);
    fill_uniform01(b.values, c.seed);

    std::printf("bench %s: volume %dx%dx%d, detector %dx%d, %d views, %d CGLS iterations (%s)\n",
                c.preset.c_str(), p.vol.counts[0], p.vol.counts[1], p.vol.counts[2], p.det.rows,
                p.det.cols, p.views, c.iterations, c.po.projector.c_str());
    CglsResult result = cgls(pair, std::move(b), c.iterations);

    double fwd_mean = timers.fwd_count ? timers.fwd_seconds / timers.fwd_count : 0.0;
    double bwd_mean = timers.bwd_count ? timers.bwd_seconds / timers.bwd_count : 0.0;
    std::string csv_path = c.csv.empty() ? "bench_" + c.preset + ".csv" : c.csv;
    FILE* f = open_csv(csv_path);
    std::fprintf(f, "record,index,angle_deg,value\n");
    for (std::size_t v = 0; v < timers.first_fwd_view_seconds.size(); ++v)
        std::fprintf(f, "project_view_s,%zu,%.6f,%.9f\n", v,
                     view_angle_deg(int(v), p.views, p.arc), timers.first_fwd_view_seconds[v]);
    std::fprintf(f, "project_applications,,,%d\n", timers.fwd_count);
    std::fprintf(f, "backproject_applications,,,%d\n", timers.bwd_count);
    std::fprintf(f, "project_mean_s,,,%.9f\n", fwd_mean);
    std::fprintf(f, "backproject_mean_s,,,%.9f\n", bwd_mean);
    for (std::size_t i = 0; i < result.residual_norms.size(); ++i)
        std::fprintf(f, "cgls_residual,%zu,,%.17g\n", i, result.residual_norms[i]);
    std::fclose(f);

    double b_norm = result.residual_norms.front();
    std::printf("mean projector time %.3f s, mean backprojector time %.3f s\n", fwd_mean, bwd_mean);
    std::printf("relative residual after %d iterations: %.6e\n", c.iterations,
                b_norm > 0 ? result.residual_norms.back() / b_norm : 0.0);
    std::printf("wrote %s\n", csv_path.c_str());
    return 0;
}

struct AdjointCfg {
    std::string preset = "desk";
    std::uint64_t seed = 1;
    int n_seeds = 1;
    bool mismatched = false;
    ProjectorOpts po;
};

int run_adjoint_test(const AdjointCfg& c) {
    Preset p = preset_by_name(c.preset);
    std::vector<ViewGeometry> views = make_circular_trajectory(p.sid, p.sdd, p.views, p.arc, p.det);

    LinearOperatorPair pair;
    if (c.mismatched) {
        // deliberately broken pair: forward casts 1 ray/pixel, adjoint spreads 4
        ProjectorOpts fwd = c.po;
        fwd.projector = "siddon";
        fwd.siddon_k = 1;
        ProjectorOpts bwd = fwd;
        bwd.siddon_k = 2;
        pair = make_operator(fwd, p.vol, p.det, views);
        pair.adjoint = make_operator(bwd, p.vol, p.det, std::move(views)).adjoint;
    } else {
        pair = make_operator(c.po, p.vol, p.det, std::move(views));
    }

    const double threshold = (c.po.is_cvp() && c.po.relaxed) ? 1e-4 : 1e-12;
    double worst = 0.0;
    for (int i = 0; i < c.n_seeds; ++i) {
        double d = adjoint_test(pair, c.seed + std::uint64_t(i));
        std::printf("seed %llu: discrepancy %.6e\n",
                    (unsigned long long)(c.seed + std::uint64_t(i)), d);
        worst = std::max(worst, d);
    }
    std::printf("max discrepancy %.6e, threshold %.0e -> %s\n", worst, threshold,
                worst < threshold ? "PASS" : "FAIL");
    return worst < threshold ? 0 : 1;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Cone-beam CT projection/backprojection toolkit"};
    app.require_subcommand(1);
    int rc = 0;

    ProjectCfg pc;
    auto* project = app.add_subcommand("project", "Forward project a volume to extinction images");
    project->add_option("--volume", pc.volume, "Input volume (DEN)")
        ->required()
        ->check(CLI::ExistingFile);
    project->add_option("--output", pc.output, "Output projection stack (DEN)")->required();
    project->add_option("--det-rows", pc.det_rows, "Detector rows")
        ->required()
        ->check(CLI::PositiveNumber);
    project->add_option("--det-cols", pc.det_cols, "Detector columns")
        ->required()
        ->check(CLI::PositiveNumber);
    project->add_option("--voxel-size", pc.voxel_size, "Voxel size [mm], one or three values")
        ->expected(1, 3);
    add_trajectory_flags(project, pc.traj);
    add_projector_flags(project, pc.po);
    project->callback([&] { rc = run_project(pc); });

    BackprojectCfg bc;
    auto* backproject = app.add_subcommand("backproject", "Apply the adjoint operator");
    backproject->add_option("--projections", bc.projections, "Input projection stack (DEN)")
        ->required()
        ->check(CLI::ExistingFile);
    backproject->add_option("--output", bc.output, "Output volume (DEN)")->required();
    backproject->add_option("--vol-dims", bc.vol_dims, "Volume voxel counts: N1 N2 N3")
        ->required()
        ->expected(3);
    backproject->add_option("--voxel-size", bc.voxel_size, "Voxel size [mm], one or three values")
        ->expected(1, 3);
    add_trajectory_flags(backproject, bc.traj);
    add_projector_flags(backproject, bc.po);
    backproject->callback([&] { rc = run_backproject(bc); });

    ReconCfg rcfg;
    auto* recon = app.add_subcommand("recon", "CGLS reconstruction from projections");
    recon->add_option("--projections", rcfg.projections, "Input projection stack (DEN)")
        ->required()
        ->check(CLI::ExistingFile);
    recon->add_option("--output", rcfg.output, "Output volume (DEN)")->required();
    recon->add_option("--vol-dims", rcfg.vol_dims, "Volume voxel counts: N1 N2 N3")
        ->required()
        ->expected(3);
    recon->add_option("--voxel-size", rcfg.voxel_size, "Voxel size [mm], one or three values")
        ->expected(1, 3);
    recon->add_option("--iterations", rcfg.iterations, "CGLS iterations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    recon->add_option("--residuals", rcfg.residuals, "Write residual norms CSV here");
    add_trajectory_flags(recon, rcfg.traj);
    add_projector_flags(recon, rcfg.po);
    recon->callback([&] { rc = run_recon(rcfg); });

    CompareCfg cc;
    auto* compare = app.add_subcommand("compare", "Per-view relative error of B against A");
    compare->add_option("a", cc.file_a, "Reference stack (DEN)")
        ->required()
        ->check(CLI::ExistingFile);
    compare->add_option("b", cc.file_b, "Stack under test (DEN)")
        ->required()
        ->check(CLI::ExistingFile);
    compare->add_option("--report", cc.report, "Write per-view error CSV here");
    compare->add_option("--arc", cc.arc, "Trajectory arc for the CSV angle column [deg]")
        ->capture_default_str();
    compare->add_option("--tol", cc.tol, "Fail (exit 1) if max error exceeds this [%]");
    compare->callback([&] { rc = run_compare(cc); });

    BenchCfg bench_cfg;
    auto* bench = app.add_subcommand("bench", "CGLS benchmark on seeded random data");
    bench->add_option("--preset", bench_cfg.preset, "Geometry preset")
        ->check(CLI::IsMember({"desk", "long2010", "pfeiffer2021"}))
        ->capture_default_str();
    bench->add_option("--iterations", bench_cfg.iterations, "CGLS iterations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench->add_option("--csv", bench_cfg.csv, "Timing CSV path (default bench_<preset>.csv)");
    bench->add_option("--save-matrices", bench_cfg.save_matrices,
                      "Also write the trajectory's camera matrices to this file");
    bench->add_option("--seed", bench_cfg.seed, "Seed for the uniform [0,1) projection data")
        ->capture_default_str();
    bench->add_flag("--force", bench_cfg.force, "Skip the memory capacity check");
    add_projector_flags(bench, bench_cfg.po);
    bench->callback([&] { rc = run_bench(bench_cfg); });

    AdjointCfg ac;
    auto* adjoint = app.add_subcommand("adjoint-test", "Randomized dot-product test of the pair");
    adjoint->add_option("--preset", ac.preset, "Geometry preset")
        ->check(CLI::IsMember({"desk", "long2010", "pfeiffer2021"}))
        ->capture_default_str();
    adjoint->add_option("--seed", ac.seed, "Base seed")->capture_default_str();
    adjoint->add_option("--seeds", ac.n_seeds, "Number of consecutive seeds to test")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    adjoint->add_flag("--mismatched-pair", ac.mismatched)->group("");  // negative-control hook
    add_projector_flags(adjoint, ac.po);
    adjoint->callback([&] { rc = run_adjoint_test(ac); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ExitWith& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return rc;
}

} // namespace cbct::cli
