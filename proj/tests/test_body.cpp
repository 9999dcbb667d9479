#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "t4dr/body.hpp"
#include "t4dr/error.hpp"
#include "t4dr/rng.hpp"

using namespace t4dr;

namespace {

Quat random_quat(Rng& rng) {
    return Quat{rng.normal(), rng.normal(), rng.normal(), rng.normal()}.normalized();
}

SE3Pose random_pose(Rng& rng, double tscale = 1.5) {
    return {random_quat(rng), Vec3{rng.normal() * tscale, rng.normal() * tscale, rng.normal() * tscale}};
}

BodyParams random_params(const BodyTemplate& tpl, Rng& rng, double theta_amp = 0.6) {
    BodyParams p;
    p.theta.assign(static_cast<size_t>(tpl.K), Vec3{});
    for (int k = 1; k < tpl.K; ++k)
        p.theta[static_cast<size_t>(k)] = Vec3{rng.normal() * theta_amp, rng.normal() * theta_amp,
                                               rng.normal() * theta_amp};
    p.beta.resize(static_cast<size_t>(tpl.n_beta));
    for (auto& b : p.beta) b = rng.normal() * 0.5;
    p.alpha.resize(static_cast<size_t>(tpl.n_alpha));
    p.root_world = random_pose(rng);
    p.authoritative = RootFrame::World;
    return p;
}

double max_vert_err(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).norm());
    return m;
}

}  // namespace

TEST_CASE("template invariants: stochastic rows, tree parents") {
    BodyTemplate tpl = BodyTemplate::procedural(3);
    REQUIRE(tpl.V == 64);
    REQUIRE(tpl.K == 12);
    for (int v = 0; v < tpl.V; ++v) {
        double s = 0;
        for (int k = 0; k < tpl.K; ++k) {
            double w = tpl.skin_weights[static_cast<size_t>(v) * tpl.K + k];
            CHECK(w >= 0);
            s += w;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (int k = 0; k < tpl.K; ++k) {
        double s = 0;
        for (int v = 0; v < tpl.V; ++v) s += tpl.joint_regressor[static_cast<size_t>(k) * tpl.V + v];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(tpl.parents[0] == -1);
    for (int k = 1; k < tpl.K; ++k) CHECK(tpl.parents[static_cast<size_t>(k)] < k);
    CHECK_FALSE(tpl.faces.empty());
    // same seed regenerates the identical template
    BodyTemplate tpl2 = BodyTemplate::procedural(3);
    CHECK(tpl2.template_verts[10].x == tpl.template_verts[10].x);
    BodyTemplate other = BodyTemplate::procedural(4);
    CHECK(other.template_verts[10].x != tpl.template_verts[10].x);
}

TEST_CASE("rodrigues basics and quaternion oracle") {
    Mat3 I = rodrigues(Vec3{0, 0, 0});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(I(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-15));

    Mat3 half = rodrigues(Vec3{0, 0, M_PI});
    CHECK(half(0, 0) == doctest::Approx(-1).epsilon(1e-12));
    CHECK(half(1, 1) == doctest::Approx(-1).epsilon(1e-12));
    CHECK(half(2, 2) == doctest::Approx(1).epsilon(1e-12));

    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        Vec3 aa{rng.normal(), rng.normal(), rng.normal()};
        if (trial % 10 == 0) aa = aa * 1e-6;  // exercise the Taylor branch
        Mat3 R = rodrigues(aa);
        Mat3 Q = Quat::from_axis_angle(aa).to_mat3();
        for (int i = 0; i < 9; ++i) CHECK(std::abs(R.m[static_cast<size_t>(i)] - Q.m[static_cast<size_t>(i)]) < 1e-10);
        // orthonormal, det +1
        Mat3 RtR = R.transposed() * R;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(std::abs(RtR(i, j) - (i == j ? 1 : 0)) < 1e-12);
        CHECK(R.det() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("rest pose reproduces the template exactly") {
    BodyTemplate tpl = BodyTemplate::procedural(5);
    BodyParams p;
    p.theta.assign(static_cast<size_t>(tpl.K), Vec3{});
    p.beta.assign(static_cast<size_t>(tpl.n_beta), 0.0);
    p.alpha.assign(static_cast<size_t>(tpl.n_alpha), 0.0);
    p.root_world = SE3Pose::identity();
    BodyMesh m = pose_body(tpl, p);
    CHECK(max_vert_err(m.verts, tpl.template_verts) <= 1e-12);
}

TEST_CASE("rigid root equivariance") {
    BodyTemplate tpl = BodyTemplate::procedural(6);
    Rng rng(31);
    BodyParams p = random_params(tpl, rng);
    p.root_world = SE3Pose::identity();
    BodyMesh base = pose_body(tpl, p);

    BodyParams shifted = p;
    shifted.root_world = SE3Pose{Quat::identity(), Vec3{1, 2, 3}};
    BodyMesh m = pose_body(tpl, shifted);
    for (size_t i = 0; i < m.verts.size(); ++i)
        CHECK((m.verts[i] - (base.verts[i] + Vec3{1, 2, 3})).norm() < 1e-12);

    for (int trial = 0; trial < 100; ++trial) {
        BodyParams q = random_params(tpl, rng);
        SE3Pose g = random_pose(rng);
        BodyMesh a = pose_body(tpl, q);
        BodyParams qg = q;
        qg.root_world = g.compose(q.root_world);
        BodyMesh b = pose_body(tpl, qg);
        double err = 0;
        for (size_t i = 0; i < a.verts.size(); ++i)
            err = std::max(err, (b.verts[i] - g.apply(a.verts[i])).norm());
        for (size_t i = 0; i < a.joints.size(); ++i)
            err = std::max(err, (b.joints[i] - g.apply(a.joints[i])).norm());
        CHECK(err <= 1e-9);
    }
}

TEST_CASE("posed vertices are the convex combination of their joint transforms") {
    BodyTemplate tpl = BodyTemplate::procedural(7);
    Rng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        BodyParams p = random_params(tpl, rng);
        p.root_world = SE3Pose::identity();
        BodyMesh m = pose_body(tpl, p);
        // recompute the per-joint rigid images of each vertex and blend
        BodyParams rest = p;
        for (auto& th : rest.theta) th = Vec3{};
        for (int v = 0; v < tpl.V; ++v) {
            Vec3 blended{0, 0, 0};
            double wsum = 0;
            for (int k = 0; k < tpl.K; ++k) {
                double w = tpl.skin_weights[static_cast<size_t>(v) * tpl.K + k];
                if (w == 0) continue;
                wsum += w;
                // one-hot body with only joint k weights: isolate G'_k v
                BodyTemplate iso = tpl;
                for (int kk = 0; kk < tpl.K; ++kk)
                    iso.skin_weights[static_cast<size_t>(v) * tpl.K + kk] = kk == k ? 1.0 : 0.0;
                BodyMesh mk = pose_body(iso, p);
                blended = blended + mk.verts[static_cast<size_t>(v)] * w;
            }
            CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
            CHECK((blended - m.verts[static_cast<size_t>(v)]).norm() < 1e-12);
        }
    }
}

TEST_CASE("shape response is affine with slope matching the basis") {
    BodyTemplate tpl = BodyTemplate::procedural(8);
    BodyParams p;
    p.theta.assign(static_cast<size_t>(tpl.K), Vec3{});
    p.beta.assign(static_cast<size_t>(tpl.n_beta), 0.0);
    p.root_world = SE3Pose::identity();
    for (int b = 0; b < tpl.n_beta; ++b) {
        double h = 0.25;
        BodyParams pp = p, pm = p;
        pp.beta[static_cast<size_t>(b)] = h;
        pm.beta[static_cast<size_t>(b)] = -h;
        BodyMesh mp = pose_body(tpl, pp), mm = pose_body(tpl, pm);
        for (int v = 0; v < tpl.V; ++v) {
            Vec3 slope = (mp.verts[static_cast<size_t>(v)] - mm.verts[static_cast<size_t>(v)]) * (1.0 / (2 * h));
            Vec3 basis{tpl.shape_basis[(static_cast<size_t>(v) * 3 + 0) * tpl.n_beta + b],
                       tpl.shape_basis[(static_cast<size_t>(v) * 3 + 1) * tpl.n_beta + b],
                       tpl.shape_basis[(static_cast<size_t>(v) * 3 + 2) * tpl.n_beta + b]};
            CHECK((slope - basis).norm() < 1e-9);
        }
    }
}

TEST_CASE("compose and decompose root") {
    Rng rng(51);
    SE3Pose pcam = random_pose(rng);
    CHECK((compose_root(SE3Pose::identity(), pcam).t - pcam.t).norm() < 1e-15);

    for (int trial = 0; trial < 50; ++trial) {
        SE3Pose T = random_pose(rng), pc = random_pose(rng);
        SE3Pose world = compose_root(T, pc);
        SE3Pose back = decompose_root(world, T);
        CHECK((back.t - pc.t).norm() < 1e-12);
        CHECK(back.q.angle_to(pc.q) < 1e-12);
    }

    SE3Pose rotz{Quat::from_axis_angle(Vec3{0, 0, M_PI / 2}), Vec3{0, 0, 0}};
    SE3Pose pc{Quat::identity(), Vec3{1, 0, 0}};
    SE3Pose world = compose_root(rotz, pc);
    CHECK(world.t.x == doctest::Approx(0).epsilon(1e-14));
    CHECK(world.t.y == doctest::Approx(1).epsilon(1e-14));
    CHECK(world.t.z == doctest::Approx(0).epsilon(1e-14));
}

TEST_CASE("pose_body rejects mismatched dims") {
    BodyTemplate tpl = BodyTemplate::procedural(9);
    BodyParams p;
    p.theta.assign(static_cast<size_t>(tpl.K) - 1, Vec3{});
    p.beta.assign(static_cast<size_t>(tpl.n_beta), 0.0);
    CHECK_THROWS_AS(pose_body(tpl, p), ContractViolation);
}

TEST_CASE("graph posing matches the plain path") {
    BodyTemplate tpl = BodyTemplate::procedural(10);
    Rng rng(61);
    for (int trial = 0; trial < 5; ++trial) {
        BodyParams p = random_params(tpl, rng);
        BodyMesh ref = pose_body(tpl, p);

        std::vector<double> th(static_cast<size_t>(tpl.K) * 3);
        for (int k = 0; k < tpl.K; ++k) {
            th[static_cast<size_t>(k) * 3 + 0] = p.theta[static_cast<size_t>(k)].x;
            th[static_cast<size_t>(k) * 3 + 1] = p.theta[static_cast<size_t>(k)].y;
            th[static_cast<size_t>(k) * 3 + 2] = p.theta[static_cast<size_t>(k)].z;
        }
        Tensor theta = Tensor::from({tpl.K, 3}, th);
        Tensor beta = Tensor::from({tpl.n_beta}, p.beta);
        Tensor alpha;
        Tensor quat = Tensor::from({4}, {p.root_world.q.w, p.root_world.q.x, p.root_world.q.y, p.root_world.q.z});
        Tensor trans = Tensor::from({3}, {p.root_world.t.x, p.root_world.t.y, p.root_world.t.z});
        PosedBodyGraph g = pose_body_graph(tpl, theta, beta, alpha, quat, trans);
        double err = 0;
        for (int v = 0; v < tpl.V; ++v) {
            err = std::max(err, std::abs(g.verts.at({v, 0}) - ref.verts[static_cast<size_t>(v)].x));
            err = std::max(err, std::abs(g.verts.at({v, 1}) - ref.verts[static_cast<size_t>(v)].y));
            err = std::max(err, std::abs(g.verts.at({v, 2}) - ref.verts[static_cast<size_t>(v)].z));
        }
        for (int k = 0; k < tpl.K; ++k) {
            err = std::max(err, std::abs(g.joints.at({k, 0}) - ref.joints[static_cast<size_t>(k)].x));
            err = std::max(err, std::abs(g.joints.at({k, 1}) - ref.joints[static_cast<size_t>(k)].y));
            err = std::max(err, std::abs(g.joints.at({k, 2}) - ref.joints[static_cast<size_t>(k)].z));
        }
        CHECK(err < 1e-11);
    }
}

TEST_CASE("graph posing is differentiable") {
    BodyTemplate tpl = BodyTemplate::procedural(11);
    Rng rng(71);
    std::vector<double> th(static_cast<size_t>(tpl.K) * 3);
    for (auto& v : th) v = rng.normal() * 0.4;
    Tensor theta0 = Tensor::from({tpl.K, 3}, th);
    Tensor beta0 = Tensor::randn({tpl.n_beta}, rng, 0.3);
    Quat q = Quat{rng.normal(), rng.normal(), rng.normal(), rng.normal()}.normalized();
    Tensor trans = Tensor::from({3}, {0.2, -0.1, 0.5});

    auto f_theta = [&](const Tensor& t) {
        Tensor quat = Tensor::from({4}, {q.w, q.x, q.y, q.z});
        PosedBodyGraph g = pose_body_graph(tpl, t, beta0, Tensor(), quat, trans);
        return sum(g.verts);
    };
    auto rep = grad_check(f_theta, theta0, 1e-6);
    CHECK(rep.max_rel_err < 1e-5);

    auto f_beta = [&](const Tensor& b) {
        Tensor quat = Tensor::from({4}, {q.w, q.x, q.y, q.z});
        PosedBodyGraph g = pose_body_graph(tpl, theta0, b, Tensor(), quat, trans);
        return sum(g.verts);
    };
    rep = grad_check(f_beta, beta0, 1e-6);
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("template round-trips through its directory form, obj export works") {
    namespace fs = std::filesystem;
    BodyTemplate tpl = BodyTemplate::procedural(12);
    fs::path dir = fs::temp_directory_path() / "t4dr_tpl";
    save_template(dir.string(), tpl);
    BodyTemplate back = load_template(dir.string());
    CHECK(back.V == tpl.V);
    CHECK(back.K == tpl.K);
    CHECK(back.head_joint == tpl.head_joint);
    CHECK(back.parents == tpl.parents);
    CHECK(back.faces == tpl.faces);
    CHECK(back.skin_weights == tpl.skin_weights);
    double err = 0;
    for (int v = 0; v < tpl.V; ++v)
        err = std::max(err, (back.template_verts[static_cast<size_t>(v)] - tpl.template_verts[static_cast<size_t>(v)]).norm());
    CHECK(err == 0.0);

    fs::path obj = fs::temp_directory_path() / "t4dr_body.obj";
    save_obj(obj.string(), tpl.template_verts, tpl.faces);
    CHECK(fs::file_size(obj) > 100);
    fs::remove_all(dir);
    fs::remove(obj);
}
