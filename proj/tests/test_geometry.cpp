#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "t4dr/error.hpp"
#include "t4dr/geometry.hpp"
#include "t4dr/rng.hpp"

using namespace t4dr;

namespace {

Quat random_quat(Rng& rng) {
    Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    return q.normalized();
}

SE3Pose random_pose(Rng& rng, double tscale = 2.0) {
    return {random_quat(rng), Vec3{rng.normal() * tscale, rng.normal() * tscale, rng.normal() * tscale}};
}

// renders the camera-frame pointmap of a synthetic frustum with known focal
Pointmap render_pointmap(int w, int h, double f, Rng& rng) {
    std::vector<double> depth(static_cast<size_t>(w) * h);
    for (auto& d : depth) d = rng.uniform(1.0, 6.0);
    CameraIntrinsics c{f, f, (w - 1) / 2.0, (h - 1) / 2.0};
    return unproject(depth, w, h, c, SE3Pose::identity());
}

double residual(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).dot(a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace

TEST_CASE("unproject principal ray and plane oracle") {
    CameraIntrinsics c{100, 100, 4, 3};
    std::vector<double> depth(9 * 7, 1.0);
    Pointmap pm = unproject(depth, 9, 7, c, SE3Pose::identity());
    Vec3 p = pm.pts[static_cast<size_t>(pm.idx(4, 3))];
    CHECK(p.x == doctest::Approx(0).epsilon(1e-15));
    CHECK(p.y == doctest::Approx(0).epsilon(1e-15));
    CHECK(p.z == doctest::Approx(1).epsilon(1e-15));

    // plane z = 2 + 0.1x + 0.05y in camera coordinates: depth solved per pixel
    Rng rng(5);
    SE3Pose T = random_pose(rng);
    int w = 16, h = 12;
    CameraIntrinsics ci{50, 50, (w - 1) / 2.0, (h - 1) / 2.0};
    std::vector<double> d(static_cast<size_t>(w) * h);
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            double rx = (u - ci.cx) / ci.fx, ry = (v - ci.cy) / ci.fy;
            d[static_cast<size_t>(v * w + u)] = 2.0 / (1.0 - 0.1 * rx - 0.05 * ry);
        }
    Pointmap pm2 = unproject(d, w, h, ci, T);
    SE3Pose Ti = T.inverse();
    for (const Vec3& pt : pm2.pts) {
        Vec3 cam = Ti.apply(pt);
        CHECK(std::abs(cam.z - (2.0 + 0.1 * cam.x + 0.05 * cam.y)) < 1e-12);
    }
}

TEST_CASE("project inverts unproject to 1e-9") {
    Rng rng(6);
    SE3Pose T = random_pose(rng);
    int w = 12, h = 10;
    CameraIntrinsics c{73, 73, (w - 1) / 2.0, (h - 1) / 2.0};
    std::vector<double> d(static_cast<size_t>(w) * h);
    for (auto& v : d) v = rng.uniform(0.5, 8.0);
    Pointmap pm = unproject(d, w, h, c, T);
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            Projected pr = project(pm.pts[static_cast<size_t>(pm.idx(u, v))], c, T);
            CHECK(std::abs(pr.u - u) < 1e-9);
            CHECK(std::abs(pr.v - v) < 1e-9);
        }
}

TEST_CASE("unproject marks nonpositive depth invalid") {
    CameraIntrinsics c{10, 10, 1, 1};
    std::vector<double> d = {1.0, 0.0, -2.0, 3.0};
    Pointmap pm = unproject(d, 2, 2, c, SE3Pose::identity());
    CHECK(pm.valid[0] == 1);
    CHECK(pm.valid[1] == 0);
    CHECK(pm.valid[2] == 0);
    CHECK(pm.valid[3] == 1);
    CHECK(pm.conf[1] == 0.0);
}

TEST_CASE("weiszfeld recovers a noiseless focal to 1e-6 relative") {
    Rng rng(7);
    Pointmap pm = render_pointmap(32, 24, 256.0, rng);
    double f = weiszfeld_focal(pm, (32 - 1) / 2.0, (24 - 1) / 2.0);
    CHECK(std::abs(f - 256.0) / 256.0 < 1e-6);
}

TEST_CASE("weiszfeld single off-axis pixel gives the closed-form ratio") {
    // one valid pixel at (u,v) = (6,2) with a point (x,y,z): f = <p,q>/|q|^2
    Pointmap pm;
    pm.w = 8;
    pm.h = 4;
    pm.pts.assign(32, Vec3{});
    pm.conf.assign(32, 0.0);
    pm.valid.assign(32, 0);
    Vec3 pt{0.3, -0.1, 2.0};
    pm.pts[static_cast<size_t>(pm.idx(6, 2))] = pt;
    pm.valid[static_cast<size_t>(pm.idx(6, 2))] = 1;
    pm.conf[static_cast<size_t>(pm.idx(6, 2))] = 1.0;
    double cx = 3.5, cy = 1.5;
    double qu = pt.x / pt.z, qv = pt.y / pt.z;
    double expect = ((6 - cx) * qu + (2 - cy) * qv) / (qu * qu + qv * qv);
    double f = weiszfeld_focal(pm, cx, cy);
    CHECK(f == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("weiszfeld shrugs off 10 percent gross outliers") {
    // outliers = wrong correspondences: a tenth of the points land on random
    // other pixels, so their rays are grossly inconsistent with their pixel
    Rng rng(8);
    Pointmap pm = render_pointmap(40, 30, 180.0, rng);
    int64_t n = pm.size();
    for (int64_t i = 0; i < n / 10; ++i) {
        int64_t a = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n)));
        int64_t b = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n)));
        pm.pts[static_cast<size_t>(a)] = pm.pts[static_cast<size_t>(b)];
    }
    double f = weiszfeld_focal(pm, (40 - 1) / 2.0, (30 - 1) / 2.0);
    CHECK(std::abs(f - 180.0) / 180.0 < 1e-2);
}

TEST_CASE("weiszfeld is invariant to uniform depth rescaling") {
    Rng rng(9);
    Pointmap pm = render_pointmap(24, 24, 120.0, rng);
    Pointmap scaled = pm;
    for (auto& p : scaled.pts) p = p * 3.7;
    double f0 = weiszfeld_focal(pm, 11.5, 11.5);
    double f1 = weiszfeld_focal(scaled, 11.5, 11.5);
    CHECK(f0 == doctest::Approx(f1).epsilon(1e-12));
}

TEST_CASE("weiszfeld degenerate axial rays fail loudly") {
    Pointmap pm;
    pm.w = 4;
    pm.h = 4;
    pm.pts.assign(16, Vec3{0, 0, 2});
    pm.conf.assign(16, 1.0);
    pm.valid.assign(16, 1);
    CHECK_THROWS_AS(weiszfeld_focal(pm, 1.5, 1.5), EstimationFailed);
}

TEST_CASE("umeyama identity and constructed similarity") {
    Rng rng(10);
    std::vector<Vec3> src;
    for (int i = 0; i < 20; ++i) src.push_back({rng.normal(), rng.normal(), rng.normal()});
    Sim3 g = umeyama(src, src, true);
    CHECK(g.s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((g.R * Vec3{1, 0, 0} - Vec3{1, 0, 0}).norm() < 1e-12);
    CHECK(g.t.norm() < 1e-12);

    for (int trial = 0; trial < 50; ++trial) {
        Mat3 R0 = random_quat(rng).to_mat3();
        Vec3 t0{rng.normal(), rng.normal(), rng.normal()};
        double s0 = 2.5;
        std::vector<Vec3> dst(src.size());
        for (size_t i = 0; i < src.size(); ++i) dst[i] = (R0 * src[i]) * s0 + t0;
        Sim3 rec = umeyama(src, dst, true);
        CHECK(std::abs(rec.s - s0) < 1e-9);
        for (int k = 0; k < 9; ++k) CHECK(std::abs(rec.R.m[static_cast<size_t>(k)] - R0.m[static_cast<size_t>(k)]) < 1e-9);
        CHECK((rec.t - t0).norm() < 1e-9);
    }
}

TEST_CASE("umeyama enforces a proper rotation on reflection-shaped data") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vec3> src, dst;
        for (int i = 0; i < 12; ++i) {
            Vec3 p{rng.normal(), rng.normal(), rng.normal()};
            src.push_back(p);
            dst.push_back({p.x, p.y, -p.z});  // mirrored
        }
        Sim3 g = umeyama(src, dst, true);
        CHECK(g.R.det() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("umeyama rejects degenerate configurations") {
    std::vector<Vec3> line, copy;
    for (int i = 0; i < 10; ++i) {
        line.push_back({static_cast<double>(i), 2.0 * i, -1.0 * i});
        copy.push_back({static_cast<double>(i), 2.0 * i, -1.0 * i});
    }
    CHECK_THROWS_AS(umeyama(line, copy, true), DegenerateConfiguration);
    std::vector<Vec3> same(5, Vec3{1, 2, 3});
    CHECK_THROWS_AS(umeyama(same, same, true), DegenerateConfiguration);
}

TEST_CASE("umeyama residual is invariant to a common similarity") {
    Rng rng(12);
    std::vector<Vec3> src, dst;
    for (int i = 0; i < 15; ++i) {
        src.push_back({rng.normal(), rng.normal(), rng.normal()});
        dst.push_back({rng.normal(), rng.normal(), rng.normal()});
    }
    Sim3 base = umeyama(src, dst, true);
    std::vector<Vec3> asrc(src.size()), adst(dst.size());
    Mat3 Rg = random_quat(rng).to_mat3();
    Vec3 tg{0.3, -1.2, 2.0};
    double sg = 1.7;
    for (size_t i = 0; i < src.size(); ++i) {
        asrc[i] = (Rg * src[i]) * sg + tg;
        adst[i] = (Rg * dst[i]) * sg + tg;
    }
    Sim3 moved = umeyama(asrc, adst, true);
    std::vector<Vec3> r0(src.size()), r1(src.size());
    for (size_t i = 0; i < src.size(); ++i) {
        r0[i] = base.apply(src[i]);
        r1[i] = moved.apply(asrc[i]);
    }
    double res0 = residual(r0, dst);
    double res1 = residual(r1, adst);
    // the residual transforms with the common similarity's scale
    CHECK(std::abs(res1 - sg * res0) / std::max(1.0, sg * res0) < 1e-9);
}

TEST_CASE("align_joints modes behave per contract") {
    Rng rng(13);
    std::vector<Vec3> gt;
    for (int i = 0; i < 12; ++i) gt.push_back({rng.normal(), rng.normal(), rng.normal()});

    auto aligned = align_joints(gt, gt, AlignMode::Rigid);
    CHECK(residual(aligned, gt) < 1e-12);

    std::vector<Vec3> scaled(gt.size());
    for (size_t i = 0; i < gt.size(); ++i) scaled[i] = gt[i] * 3.0;
    CHECK(residual(align_joints(scaled, gt, AlignMode::ProcrustesSim), gt) < 1e-9);
    CHECK(residual(align_joints(scaled, gt, AlignMode::Rigid), gt) > 1e-3);

    std::vector<Vec3> shifted(gt.size());
    for (size_t i = 0; i < gt.size(); ++i) shifted[i] = gt[i] + Vec3{0.4, -0.2, 0.9};
    CHECK(residual(align_joints(shifted, gt, AlignMode::Rigid), gt) < 1e-12);

    // sim alignment can only beat rigid, rigid can only beat nothing
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<Vec3> pred(gt.size());
        for (size_t i = 0; i < gt.size(); ++i)
            pred[i] = gt[i] * rng.uniform(0.8, 1.2) + Vec3{rng.normal() * 0.1, rng.normal() * 0.1, rng.normal() * 0.1};
        double rs = residual(align_joints(pred, gt, AlignMode::ProcrustesSim), gt);
        double rr = residual(align_joints(pred, gt, AlignMode::Rigid), gt);
        double rn = residual(pred, gt);
        CHECK(rs <= rr + 1e-12);
        CHECK(rr <= rn + 1e-12);
    }
}

TEST_CASE("trajectory jsonl round-trip and ply export") {
    namespace fs = std::filesystem;
    Rng rng(14);
    std::vector<SE3Pose> traj;
    for (int i = 0; i < 9; ++i) traj.push_back(random_pose(rng));
    fs::path p = fs::temp_directory_path() / "t4dr_traj.jsonl";
    save_trajectory(p.string(), traj);
    auto back = load_trajectory(p.string());
    REQUIRE(back.size() == traj.size());
    for (size_t i = 0; i < traj.size(); ++i) {
        CHECK(std::abs(back[i].q.w - traj[i].q.w) < 1e-15);
        CHECK(std::abs(back[i].t.x - traj[i].t.x) < 1e-15);
    }
    fs::remove(p);

    Pointmap pm = render_pointmap(8, 8, 40.0, rng);
    fs::path ply = fs::temp_directory_path() / "t4dr_pm.ply";
    save_pointmap_ply(ply.string(), pm);
    CHECK(fs::file_size(ply) > 64u * 4 * 8);
    fs::remove(ply);
}
