#include "t4dr/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "t4dr/error.hpp"
#include "t4dr/tensor_io.hpp"

#include "json.hpp"

namespace fs = std::filesystem;

namespace t4dr {

namespace {

uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// natural cubic spline on uniform-ish knots
struct CubicSpline {
    std::vector<double> xs, ys, m;

    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y) : xs(std::move(x)), ys(std::move(y)) {
        size_t n = xs.size();
        m.assign(n, 0.0);
        if (n < 3) return;
        std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
        for (size_t i = 1; i + 1 < n; ++i) {
            double h0 = xs[i] - xs[i - 1], h1 = xs[i + 1] - xs[i];
            a[i] = h0 / 6.0;
            b[i] = (h0 + h1) / 3.0;
            c[i] = h1 / 6.0;
            d[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        // Thomas solve on the interior
        for (size_t i = 2; i + 1 < n; ++i) {
            double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        for (size_t i = n - 2; i >= 1; --i) {
            m[i] = (d[i] - c[i] * (i + 2 < n ? m[i + 1] : 0.0)) / b[i];
            if (i == 1) break;
        }
    }

    double eval(double t) const {
        size_t n = xs.size();
        if (n == 1) return ys[0];
        t = std::clamp(t, xs.front(), xs.back());
        size_t i = 1;
        while (i + 1 < n && t > xs[i]) ++i;
        double h = xs[i] - xs[i - 1];
        double A = (xs[i] - t) / h, B = 1.0 - A;
        return A * ys[i - 1] + B * ys[i] +
               ((A * A * A - A) * m[i - 1] + (B * B * B - B) * m[i]) * h * h / 6.0;
    }
};

CubicSpline random_spline(Rng& rng, int n_way, double lo, double hi) {
    std::vector<double> xs(static_cast<size_t>(n_way)), ys(static_cast<size_t>(n_way));
    for (int i = 0; i < n_way; ++i) {
        xs[static_cast<size_t>(i)] = n_way == 1 ? 0.0 : static_cast<double>(i) / (n_way - 1);
        ys[static_cast<size_t>(i)] = rng.uniform(lo, hi);
    }
    return CubicSpline(std::move(xs), std::move(ys));
}

Quat look_at(const Vec3& pos, const Vec3& target) {
    Vec3 f = (target - pos).normalized();
    Vec3 up{0, 1, 0};
    Vec3 r = up.cross(f);
    if (r.norm() < 1e-6) r = Vec3{1, 0, 0};
    r = r.normalized();
    Vec3 u = f.cross(r);
    Mat3 R;
    R(0, 0) = r.x; R(0, 1) = u.x; R(0, 2) = f.x;
    R(1, 0) = r.y; R(1, 1) = u.y; R(1, 2) = f.y;
    R(2, 0) = r.z; R(2, 1) = u.z; R(2, 2) = f.z;
    return Quat::from_mat3(R);
}

Quat slerp(const Quat& a, const Quat& b, double t) {
    double d = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
    Quat bb = b;
    if (d < 0) {
        bb = {-b.w, -b.x, -b.y, -b.z};
        d = -d;
    }
    if (d > 0.9995) {
        Quat q{a.w + t * (bb.w - a.w), a.x + t * (bb.x - a.x), a.y + t * (bb.y - a.y),
               a.z + t * (bb.z - a.z)};
        return q.normalized();
    }
    double th = std::acos(std::clamp(d, -1.0, 1.0));
    double sa = std::sin((1 - t) * th) / std::sin(th), sb = std::sin(t * th) / std::sin(th);
    return Quat{sa * a.w + sb * bb.w, sa * a.x + sb * bb.x, sa * a.y + sb * bb.y,
                sa * a.z + sb * bb.z}.normalized();
}

nlohmann::json pose_json(const SE3Pose& p) {
    return {{"qw", p.q.w}, {"qx", p.q.x}, {"qy", p.q.y}, {"qz", p.q.z},
            {"tx", p.t.x}, {"ty", p.t.y}, {"tz", p.t.z}};
}

SE3Pose pose_from_json(const nlohmann::json& j) {
    SE3Pose p;
    p.q = Quat{j["qw"], j["qx"], j["qy"], j["qz"]}.normalized();
    p.t = Vec3{j["tx"], j["ty"], j["tz"]};
    return p;
}

}  // namespace

void SceneConfig::validate() const {
    if (frames < 2) throw ContractViolation("scene config: frames must be >= 2");
    if (width % 8 != 0 || height % 8 != 0 || width <= 0 || height <= 0)
        throw ContractViolation("scene config: image sides must be positive multiples of 8");
    if (n_people_min < 1 || n_people_max > kMaxPeopleSlots || n_people_min > n_people_max)
        throw ContractViolation("scene config: people count must lie in [1," +
                                std::to_string(kMaxPeopleSlots) + "]");
    if (!(focal_min > 0 && focal_max >= focal_min))
        throw ContractViolation("scene config: bad focal range");
}

std::vector<SE3Pose> camera_path(uint64_t seed, int frames, const SceneConfig& cfg) {
    if (frames < 2) throw ContractViolation("camera_path: frames must be >= 2");
    Rng rng(mix_seed(seed, 0xca3e7a));
    int n_way = std::clamp(frames / 6, 2, 6);

    // waypoints on an orbit band, angles strictly progressing so the look-at
    // direction sweeps slowly
    double a0 = rng.uniform(0, 2 * M_PI);
    double swing = rng.uniform(0.5, 1.6);
    std::vector<double> xs(static_cast<size_t>(n_way)), ax(xs), ay(xs), az(xs);
    for (int i = 0; i < n_way; ++i) {
        double u = n_way == 1 ? 0.0 : static_cast<double>(i) / (n_way - 1);
        double ang = a0 + swing * u + rng.uniform(-0.06, 0.06);
        double rad = rng.uniform(2.7, 3.4);
        xs[static_cast<size_t>(i)] = u;
        ax[static_cast<size_t>(i)] = std::cos(ang) * rad;
        az[static_cast<size_t>(i)] = std::sin(ang) * rad;
        ay[static_cast<size_t>(i)] = rng.uniform(1.2, 1.9);
    }
    CubicSpline sx(xs, ax), sy(xs, ay), sz(xs, az);
    Vec3 target{rng.uniform(-0.2, 0.2), 0.9, rng.uniform(-0.2, 0.2)};

    std::vector<SE3Pose> out(static_cast<size_t>(frames));
    for (int t = 0; t < frames; ++t) {
        double u = static_cast<double>(t) / (frames - 1);
        Vec3 pos{sx.eval(u), sy.eval(u), sz.eval(u)};
        out[static_cast<size_t>(t)] = {look_at(pos, target), pos};
    }
    // angular velocity bound 0.2 rad/frame, clamped by slerp if ever exceeded
    for (int t = 1; t < frames; ++t) {
        double ang = out[static_cast<size_t>(t - 1)].q.angle_to(out[static_cast<size_t>(t)].q);
        if (ang > 0.2)
            out[static_cast<size_t>(t)].q = slerp(out[static_cast<size_t>(t - 1)].q,
                                                  out[static_cast<size_t>(t)].q, 0.2 / ang);
    }
    return out;
}

SceneSpec make_scene(uint64_t seed, const SceneConfig& cfg) {
    cfg.validate();
    SceneSpec spec;
    spec.seed = seed;
    spec.cfg = cfg;
    spec.room_extent = cfg.ground_extent;

    Rng rng(mix_seed(seed, 0x5eed));
    double f = rng.uniform(cfg.focal_min, cfg.focal_max);
    spec.intr = {f, f, (cfg.width - 1) / 2.0, (cfg.height - 1) / 2.0};
    spec.camera = camera_path(seed, cfg.frames, cfg);

    for (int b = 0; b < cfg.n_boxes; ++b) {
        Vec3 center{rng.uniform(-2.2, 2.2), 0.0, rng.uniform(-2.2, 2.2)};
        Vec3 size{rng.uniform(0.3, 0.9), rng.uniform(0.3, 1.4), rng.uniform(0.3, 0.9)};
        spec.boxes.push_back({Vec3{center.x - size.x / 2, 0.0, center.z - size.z / 2},
                              Vec3{center.x + size.x / 2, size.y, center.z + size.z / 2}});
    }

    int n_people = cfg.n_people_min +
                   static_cast<int>(rng.uniform_int(static_cast<uint64_t>(cfg.n_people_max - cfg.n_people_min + 1)));
    int K = 12;
    std::vector<Vec3> spawn;
    for (int p = 0; p < n_people; ++p) {
        // spawn points kept apart so heads rarely collide in image space
        Vec3 s;
        for (int attempt = 0; attempt < 64; ++attempt) {
            s = Vec3{rng.uniform(-1.8, 1.8), 0, rng.uniform(-1.8, 1.8)};
            bool ok = true;
            for (const Vec3& q : spawn) ok &= (s - q).norm() > 1.2;
            if (ok) break;
        }
        spawn.push_back(s);

        PersonTrack tr;
        tr.beta.resize(4);
        for (auto& v : tr.beta) v = std::clamp(rng.normal() * 0.4, -1.0, 1.0);

        int n_way = std::clamp(cfg.frames / 5, 2, 6);
        Rng prng(mix_seed(seed, 0xb0d1e5 + static_cast<uint64_t>(p)));
        CubicSpline px = random_spline(prng, n_way, s.x - 0.7, s.x + 0.7);
        CubicSpline pz = random_spline(prng, n_way, s.z - 0.7, s.z + 0.7);
        CubicSpline bob = random_spline(prng, n_way, -0.03, 0.03);
        CubicSpline yaw = random_spline(prng, n_way, -M_PI, M_PI);

        std::vector<CubicSpline> joints(static_cast<size_t>(K) * 3);
        for (int k = 1; k < K; ++k) {
            double amp = cfg.theta_amplitude * (k <= 3 ? 0.35 : 1.0);  // torso stiffer than limbs
            for (int c = 0; c < 3; ++c)
                joints[static_cast<size_t>(k) * 3 + c] = random_spline(prng, n_way, -amp, amp);
        }

        for (int t = 0; t < cfg.frames; ++t) {
            double u = static_cast<double>(t) / (cfg.frames - 1);
            SE3Pose root;
            root.t = Vec3{px.eval(u), bob.eval(u), pz.eval(u)};
            root.q = Quat::from_axis_angle(Vec3{0, yaw.eval(u), 0});
            tr.root_world.push_back(root);
            std::vector<Vec3> th(static_cast<size_t>(K), Vec3{});
            for (int k = 1; k < K; ++k)
                th[static_cast<size_t>(k)] = Vec3{joints[static_cast<size_t>(k) * 3 + 0].eval(u),
                                                  joints[static_cast<size_t>(k) * 3 + 1].eval(u),
                                                  joints[static_cast<size_t>(k) * 3 + 2].eval(u)};
            tr.theta.push_back(std::move(th));
        }
        spec.people.push_back(std::move(tr));
    }
    return spec;
}

// ----- rendering -----------------------------------------------------------------

namespace {

struct Hit {
    double t = 1e300;
    Vec3 normal;  // world frame, facing the ray origin
    int person = -1;
};

void ray_room(const Vec3& o, const Vec3& d, double extent, double height, Hit& hit) {
    // camera is inside the room: take the exit distance
    double lo[3] = {-extent, 0.0, -extent};
    double hi[3] = {extent, height, extent};
    double ov[3] = {o.x, o.y, o.z}, dv[3] = {d.x, d.y, d.z};
    double t_exit = 1e300;
    int axis = -1;
    double sign = 0;
    for (int a = 0; a < 3; ++a) {
        if (dv[a] == 0) continue;
        double t = dv[a] > 0 ? (hi[a] - ov[a]) / dv[a] : (lo[a] - ov[a]) / dv[a];
        if (t < t_exit) {
            t_exit = t;
            axis = a;
            sign = dv[a] > 0 ? -1.0 : 1.0;  // inward normal
        }
    }
    if (axis >= 0 && t_exit > 0 && t_exit < hit.t) {
        hit.t = t_exit;
        hit.normal = Vec3{axis == 0 ? sign : 0.0, axis == 1 ? sign : 0.0, axis == 2 ? sign : 0.0};
        hit.person = -1;
    }
}

void ray_box(const Vec3& o, const Vec3& d, const SceneSpec::Box& b, Hit& hit) {
    double t0 = 1e-6, t1 = hit.t;
    int axis = -1;
    double sign = 0;
    double lo[3] = {b.lo.x, b.lo.y, b.lo.z}, hi[3] = {b.hi.x, b.hi.y, b.hi.z};
    double ov[3] = {o.x, o.y, o.z}, dv[3] = {d.x, d.y, d.z};
    for (int a = 0; a < 3; ++a) {
        if (dv[a] == 0) {
            if (ov[a] < lo[a] || ov[a] > hi[a]) return;
            continue;
        }
        double ta = (lo[a] - ov[a]) / dv[a], tb = (hi[a] - ov[a]) / dv[a];
        double s = -1;
        if (ta > tb) {
            std::swap(ta, tb);
            s = 1;
        }
        if (ta > t0) {
            t0 = ta;
            axis = a;
            sign = s;
        }
        t1 = std::min(t1, tb);
        if (t0 > t1) return;
    }
    if (axis >= 0 && t0 < hit.t) {
        hit.t = t0;
        hit.normal = Vec3{axis == 0 ? sign : 0.0, axis == 1 ? sign : 0.0, axis == 2 ? sign : 0.0};
        hit.person = -1;
    }
}

}  // namespace

RasterOut rasterize_bodies(const std::vector<BodyMesh>& meshes,
                           const std::vector<std::array<int, 3>>& faces,
                           const CameraIntrinsics& intr, const SE3Pose& cam, int w, int h,
                           int scale) {
    int W = w * scale, H = h * scale;
    RasterOut out;
    out.depth.assign(static_cast<size_t>(W) * H, 1e300);
    out.person.assign(static_cast<size_t>(W) * H, -1);
    out.normal_world.assign(static_cast<size_t>(W) * H, Vec3{});
    CameraIntrinsics si{intr.fx * scale, intr.fy * scale,
                        (intr.cx + 0.5) * scale - 0.5, (intr.cy + 0.5) * scale - 0.5};
    SE3Pose w2c = cam.inverse();

    for (size_t pi = 0; pi < meshes.size(); ++pi) {
        const BodyMesh& mesh = meshes[pi];
        std::vector<Vec3> pc(mesh.verts.size());
        std::vector<double> pu(mesh.verts.size()), pv(mesh.verts.size());
        for (size_t v = 0; v < mesh.verts.size(); ++v) {
            pc[v] = w2c.apply(mesh.verts[v]);
            if (pc[v].z > 1e-6) {
                pu[v] = si.cx + si.fx * pc[v].x / pc[v].z;
                pv[v] = si.cy + si.fy * pc[v].y / pc[v].z;
            }
        }
        for (const auto& f : faces) {
            const Vec3 &c0 = pc[static_cast<size_t>(f[0])], &c1 = pc[static_cast<size_t>(f[1])],
                       &c2 = pc[static_cast<size_t>(f[2])];
            if (c0.z < 0.05 || c1.z < 0.05 || c2.z < 0.05) continue;
            double u0 = pu[static_cast<size_t>(f[0])], v0 = pv[static_cast<size_t>(f[0])];
            double u1 = pu[static_cast<size_t>(f[1])], v1 = pv[static_cast<size_t>(f[1])];
            double u2 = pu[static_cast<size_t>(f[2])], v2 = pv[static_cast<size_t>(f[2])];
            double area = (u1 - u0) * (v2 - v0) - (u2 - u0) * (v1 - v0);
            if (std::abs(area) < 1e-12) continue;
            int xmin = std::max(0, static_cast<int>(std::floor(std::min({u0, u1, u2}))));
            int xmax = std::min(W - 1, static_cast<int>(std::ceil(std::max({u0, u1, u2}))));
            int ymin = std::max(0, static_cast<int>(std::floor(std::min({v0, v1, v2}))));
            int ymax = std::min(H - 1, static_cast<int>(std::ceil(std::max({v0, v1, v2}))));
            if (xmin > xmax || ymin > ymax) continue;

            Vec3 e1 = mesh.verts[static_cast<size_t>(f[1])] - mesh.verts[static_cast<size_t>(f[0])];
            Vec3 e2 = mesh.verts[static_cast<size_t>(f[2])] - mesh.verts[static_cast<size_t>(f[0])];
            Vec3 n = e1.cross(e2).normalized();
            Vec3 toward = cam.t - mesh.verts[static_cast<size_t>(f[0])];
            if (n.dot(toward) < 0) n = n * -1.0;

            for (int y = ymin; y <= ymax; ++y)
                for (int x = xmin; x <= xmax; ++x) {
                    double w0 = ((u1 - x) * (v2 - y) - (u2 - x) * (v1 - y)) / area;
                    double w1 = ((u2 - x) * (v0 - y) - (u0 - x) * (v2 - y)) / area;
                    double w2 = 1.0 - w0 - w1;
                    if (w0 < 0 || w1 < 0 || w2 < 0) continue;
                    double z = w0 * c0.z + w1 * c1.z + w2 * c2.z;
                    size_t idx = static_cast<size_t>(y) * W + x;
                    if (z < out.depth[idx]) {
                        out.depth[idx] = z;
                        out.person[idx] = static_cast<int>(pi);
                        out.normal_world[idx] = n;
                    }
                }
        }
    }
    return out;
}

FrameGt render_frame(const SceneSpec& spec, const BodyTemplate& tpl, int t, int patch) {
    const SceneConfig& cfg = spec.cfg;
    int W = cfg.width, H = cfg.height;
    FrameGt gt;
    gt.T = spec.camera[static_cast<size_t>(t)];
    gt.focal = spec.intr.fx;
    gt.depth.assign(static_cast<size_t>(W) * H, 0.0);
    gt.image = Image(W, H, kImageChannels);
    gt.body_mask.assign(static_cast<size_t>(W) * H, 0.0);

    Mat3 Rc = gt.T.q.to_mat3();
    Mat3 Rcw = Rc.transposed();

    std::vector<BodyMesh> meshes;
    for (size_t p = 0; p < spec.people.size(); ++p) {
        BodyParams bp;
        bp.theta = spec.people[p].theta[static_cast<size_t>(t)];
        bp.beta = spec.people[p].beta;
        bp.alpha.assign(static_cast<size_t>(tpl.n_alpha), 0.0);
        bp.root_world = spec.people[p].root_world[static_cast<size_t>(t)];
        bp.root_cam = decompose_root(bp.root_world, gt.T);
        bp.authoritative = RootFrame::World;
        FramePersonGt pg;
        pg.slot = static_cast<int>(p);
        pg.params = bp;
        gt.people.push_back(pg);
        meshes.push_back(pose_body(tpl, bp));
    }
    RasterOut bodies = rasterize_bodies(meshes, tpl.faces, spec.intr, gt.T, W, H, 1);

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            Vec3 dc{(x - spec.intr.cx) / spec.intr.fx, (y - spec.intr.cy) / spec.intr.fy, 1.0};
            Vec3 dw = Rc * dc;
            Hit hit;
            ray_room(gt.T.t, dw, spec.room_extent, spec.room_height, hit);
            for (const auto& b : spec.boxes) ray_box(gt.T.t, dw, b, hit);

            size_t idx = static_cast<size_t>(y) * W + x;
            int person = -1;
            Vec3 normal = hit.normal;
            double depth = hit.t;
            if (bodies.person[idx] >= 0 && bodies.depth[idx] < depth) {
                depth = bodies.depth[idx];
                person = bodies.person[idx];
                normal = bodies.normal_world[idx];
            }
            if (!(depth > 0) || depth > 1e6)
                throw EstimationFailed("render_frame: open ray at pixel " + std::to_string(x) + "," +
                                       std::to_string(y));
            gt.depth[idx] = depth;
            Vec3 nc = Rcw * normal;
            gt.image.at(0, x, y) = std::clamp(1.0 / depth, 0.0, 1.0);
            gt.image.at(1, x, y) = nc.x;
            gt.image.at(2, x, y) = nc.y;
            gt.image.at(3, x, y) = nc.z;
            if (person >= 0) {
                gt.image.at(4 + person, x, y) = 1.0;
                gt.body_mask[idx] = 1.0;
            }
        }

    // head labels: the patch containing the projected head joint, when the
    // joint survives the z-buffer at its pixel
    for (size_t p = 0; p < gt.people.size(); ++p) {
        BodyMesh& mesh = meshes[p];
        Vec3 head = mesh.joints[static_cast<size_t>(tpl.head_joint)];
        gt.people[p].head_joint_world = head;
        Projected pr = project(head, spec.intr, gt.T);
        if (pr.z < 0.05) continue;
        int px = static_cast<int>(std::llround(pr.u)), py = static_cast<int>(std::llround(pr.v));
        if (px < 0 || px >= W || py < 0 || py >= H) continue;
        size_t idx = static_cast<size_t>(py) * W + px;
        bool surface_is_person = gt.image.at(4 + static_cast<int>(p), px, py) > 0.5;
        bool unoccluded = gt.depth[idx] > pr.z - 0.35;
        if (surface_is_person && unoccluded) {
            gt.people[p].head_visible = true;
            gt.people[p].head_px_u = pr.u;
            gt.people[p].head_px_v = pr.v;
            gt.people[p].head_patch_x = px / patch;
            gt.people[p].head_patch_y = py / patch;
        }
    }

    // ground-truth self-consistency, checked on every generated frame
    CameraIntrinsics ci = gt.intrinsics(W, H);
    Pointmap world = gt.world_points(ci);
    SE3Pose w2c = gt.T.inverse();
    for (int s = 0; s < 64; ++s) {
        size_t idx = (static_cast<size_t>(s) * 2654435761u) % gt.depth.size();
        double z = w2c.apply(world.pts[idx]).z;
        if (std::abs(z - gt.depth[idx]) > 1e-9)
            throw EstimationFailed("render_frame: world pointmap inconsistent with depth");
    }
    for (const auto& pg : gt.people) {
        SE3Pose recomposed = compose_root(gt.T, pg.params.root_cam);
        if ((recomposed.t - pg.params.root_world.t).norm() > 1e-9 ||
            recomposed.q.angle_to(pg.params.root_world.q) > 1e-9)
            throw EstimationFailed("render_frame: root decomposition inconsistent");
        if (pg.head_visible) {
            Projected pr = project(pg.head_joint_world, spec.intr, gt.T);
            if (static_cast<int>(std::llround(pr.u)) / patch != pg.head_patch_x ||
                static_cast<int>(std::llround(pr.v)) / patch != pg.head_patch_y)
                throw EstimationFailed("render_frame: head label patch mismatch");
        }
    }
    return gt;
}

CameraIntrinsics FrameGt::intrinsics(int w, int h) const {
    return {focal, focal, (w - 1) / 2.0, (h - 1) / 2.0};
}

Pointmap FrameGt::cam_points(const CameraIntrinsics& c) const {
    return unproject(depth, image.w, image.h, c, SE3Pose::identity());
}

Pointmap FrameGt::world_points(const CameraIntrinsics& c) const {
    return unproject(depth, image.w, image.h, c, T);
}

// ----- dataset write/read ----------------------------------------------------------

namespace {

void write_frame(const std::string& seq_dir, int t, const FrameGt& gt, const BodyTemplate& tpl) {
    int W = gt.image.w, H = gt.image.h;
    char name[64];
    std::snprintf(name, sizeof(name), "/frame_%04d", t);
    std::string base = seq_dir + name;

    Shape shape{kImageChannels + 1, H, W};
    std::vector<double> packed(gt.image.data);
    packed.insert(packed.end(), gt.depth.begin(), gt.depth.end());
    save_tensor(base + ".t4dr", Tensor::from(std::move(shape), std::move(packed)));

    nlohmann::json j;
    j["T"] = pose_json(gt.T);
    j["focal"] = gt.focal;
    nlohmann::json people = nlohmann::json::array();
    for (const auto& p : gt.people) {
        nlohmann::json pj;
        pj["slot"] = p.slot;
        std::vector<double> th(static_cast<size_t>(tpl.K) * 3);
        for (int k = 0; k < tpl.K; ++k) {
            th[static_cast<size_t>(k) * 3 + 0] = p.params.theta[static_cast<size_t>(k)].x;
            th[static_cast<size_t>(k) * 3 + 1] = p.params.theta[static_cast<size_t>(k)].y;
            th[static_cast<size_t>(k) * 3 + 2] = p.params.theta[static_cast<size_t>(k)].z;
        }
        pj["theta"] = th;
        pj["beta"] = p.params.beta;
        pj["alpha"] = p.params.alpha;
        pj["root_world"] = pose_json(p.params.root_world);
        pj["root_cam"] = pose_json(p.params.root_cam);
        pj["head_visible"] = p.head_visible;
        pj["head_patch"] = {p.head_patch_x, p.head_patch_y};
        pj["head_px"] = {p.head_px_u, p.head_px_v};
        people.push_back(pj);
    }
    j["people"] = people;
    std::ofstream f(base + ".json", std::ios::trunc);
    if (!f) throw IoError(base + ".json", "cannot open for writing");
    f << j.dump() << "\n";
}

}  // namespace

void generate(const std::string& out_dir, const GenConfig& cfg) {
    cfg.scene.validate();
    if (cfg.sequences < 1) throw ContractViolation("generate: sequences must be >= 1");
    if (cfg.val_sequences < 0 || cfg.val_sequences >= cfg.sequences)
        throw ContractViolation("generate: val split must leave at least one training sequence");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    BodyTemplate tpl = BodyTemplate::procedural(cfg.scene.body_seed);
    save_template(out_dir + "/body_template", tpl);

    std::vector<std::string> names(static_cast<size_t>(cfg.sequences));
    for (int s = 0; s < cfg.sequences; ++s) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "seq_%04d", s);
        names[static_cast<size_t>(s)] = buf;
    }

    auto run_one = [&](int s) {
        std::string seq_dir = out_dir + "/" + names[static_cast<size_t>(s)];
        fs::create_directories(seq_dir);
        SceneSpec spec = make_scene(mix_seed(cfg.seed, static_cast<uint64_t>(s)), cfg.scene);
        for (int t = 0; t < cfg.scene.frames; ++t) {
            FrameGt gt = render_frame(spec, tpl, t, 8);
            write_frame(seq_dir, t, gt, tpl);
        }
    };

    int workers = std::max(1, cfg.workers);
    if (workers == 1) {
        for (int s = 0; s < cfg.sequences; ++s) run_one(s);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int s = next.fetch_add(1); s < cfg.sequences; s = next.fetch_add(1)) run_one(s);
            });
        for (auto& th : pool) th.join();
    }

    nlohmann::json m;
    m["seed"] = cfg.seed;
    m["sequences"] = names;
    m["train"] = std::vector<std::string>(names.begin(), names.end() - cfg.val_sequences);
    m["val"] = std::vector<std::string>(names.end() - cfg.val_sequences, names.end());
    m["frames"] = cfg.scene.frames;
    m["width"] = cfg.scene.width;
    m["height"] = cfg.scene.height;
    m["channels"] = kImageChannels;
    m["scene"] = {{"frames", cfg.scene.frames},
                  {"width", cfg.scene.width},
                  {"height", cfg.scene.height},
                  {"n_people_min", cfg.scene.n_people_min},
                  {"n_people_max", cfg.scene.n_people_max},
                  {"n_boxes", cfg.scene.n_boxes},
                  {"ground_extent", cfg.scene.ground_extent},
                  {"focal_min", cfg.scene.focal_min},
                  {"focal_max", cfg.scene.focal_max},
                  {"theta_amplitude", cfg.scene.theta_amplitude},
                  {"body_seed", cfg.scene.body_seed}};
    std::ofstream f(out_dir + "/manifest.json", std::ios::trunc);
    if (!f) throw IoError(out_dir + "/manifest.json", "cannot open for writing");
    f << m.dump(1) << "\n";
}

DatasetIndex load_dataset(const std::string& dir) {
    std::ifstream f(dir + "/manifest.json");
    if (!f) throw IoError(dir + "/manifest.json", "cannot open for reading");
    nlohmann::json m = nlohmann::json::parse(f);
    DatasetIndex ds;
    ds.dir = dir;
    ds.train = m["train"].get<std::vector<std::string>>();
    ds.val = m["val"].get<std::vector<std::string>>();
    ds.frames = m["frames"];
    ds.width = m["width"];
    ds.height = m["height"];
    ds.cfg.seed = m["seed"];
    const auto& sc = m["scene"];
    ds.cfg.scene.frames = sc["frames"];
    ds.cfg.scene.width = sc["width"];
    ds.cfg.scene.height = sc["height"];
    ds.cfg.scene.n_people_min = sc["n_people_min"];
    ds.cfg.scene.n_people_max = sc["n_people_max"];
    ds.cfg.scene.n_boxes = sc["n_boxes"];
    ds.cfg.scene.ground_extent = sc["ground_extent"];
    ds.cfg.scene.focal_min = sc["focal_min"];
    ds.cfg.scene.focal_max = sc["focal_max"];
    ds.cfg.scene.theta_amplitude = sc["theta_amplitude"];
    ds.cfg.scene.body_seed = sc["body_seed"];
    ds.body = load_template(dir + "/body_template");
    return ds;
}

FrameGt load_frame(const DatasetIndex& ds, const std::string& seq, int t, int patch) {
    char name[64];
    std::snprintf(name, sizeof(name), "/frame_%04d", t);
    std::string base = ds.seq_dir(seq) + name;

    Tensor packed = load_tensor(base + ".t4dr");
    if (packed.rank() != 3 || packed.dim(0) != kImageChannels + 1)
        throw IoError(base + ".t4dr", "unexpected frame tensor shape " + shape_str(packed.shape()));
    int H = static_cast<int>(packed.dim(1)), W = static_cast<int>(packed.dim(2));

    FrameGt gt;
    gt.image = Image(W, H, kImageChannels);
    size_t plane = static_cast<size_t>(W) * H;
    std::copy(packed.data().begin(), packed.data().begin() + static_cast<long>(plane * kImageChannels),
              gt.image.data.begin());
    gt.depth.assign(packed.data().begin() + static_cast<long>(plane * kImageChannels), packed.data().end());

    std::ifstream f(base + ".json");
    if (!f) throw IoError(base + ".json", "cannot open for reading");
    nlohmann::json j = nlohmann::json::parse(f);
    gt.T = pose_from_json(j["T"]);
    gt.focal = j["focal"];
    for (const auto& pj : j["people"]) {
        FramePersonGt p;
        p.slot = pj["slot"];
        auto th = pj["theta"].get<std::vector<double>>();
        int K = static_cast<int>(th.size() / 3);
        p.params.theta.resize(static_cast<size_t>(K));
        for (int k = 0; k < K; ++k)
            p.params.theta[static_cast<size_t>(k)] = Vec3{th[static_cast<size_t>(k) * 3 + 0],
                                                          th[static_cast<size_t>(k) * 3 + 1],
                                                          th[static_cast<size_t>(k) * 3 + 2]};
        p.params.beta = pj["beta"].get<std::vector<double>>();
        p.params.alpha = pj["alpha"].get<std::vector<double>>();
        p.params.root_world = pose_from_json(pj["root_world"]);
        p.params.root_cam = pose_from_json(pj["root_cam"]);
        p.params.authoritative = RootFrame::World;
        p.head_visible = pj["head_visible"];
        p.head_patch_x = pj["head_patch"][0];
        p.head_patch_y = pj["head_patch"][1];
        p.head_px_u = pj["head_px"][0];
        p.head_px_v = pj["head_px"][1];
        gt.people.push_back(std::move(p));
    }
    gt.body_mask.assign(plane, 0.0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 4; c < kImageChannels; ++c)
                if (gt.image.at(c, x, y) > 0.5) {
                    gt.body_mask[static_cast<size_t>(y) * W + x] = 1.0;
                    break;
                }
    if (patch > 0) {
        // labels were generated on this grid; re-derive to guard stale files
        for (auto& p : gt.people)
            if (p.head_visible &&
                (p.head_patch_x != static_cast<int>(std::llround(p.head_px_u)) / patch ||
                 p.head_patch_y != static_cast<int>(std::llround(p.head_px_v)) / patch))
                throw IoError(base + ".json", "head label grid mismatch");
    }
    return gt;
}

}  // namespace t4dr
