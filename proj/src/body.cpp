#include "t4dr/body.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "t4dr/error.hpp"
#include "t4dr/rng.hpp"
#include "t4dr/tensor_io.hpp"

#include "json.hpp"

namespace t4dr {

namespace {

// joint layout: 0 pelvis, 1 spine, 2 neck, 3 head, 4/6 hips, 5/7 knees,
// 8/10 shoulders, 9/11 elbows
constexpr int kParents[12] = {-1, 0, 1, 2, 0, 4, 0, 6, 1, 8, 1, 10};

struct JointSpec {
    Vec3 pos;
    double radius;
    int ring;  // vertices on this joint's ring
};

}  // namespace

BodyTemplate BodyTemplate::procedural(uint64_t seed, int V, int K, int n_beta, int n_alpha) {
    if (V != 64 || K != 12)
        throw ContractViolation("procedural template is generated at V=64, K=12 (asked for V=" +
                                std::to_string(V) + ", K=" + std::to_string(K) + ")");
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    auto jit = [&](double s) { return rng.uniform(-s, s); };

    // ring sizes sum to 60; four extra vertices follow (apex, nose, foot tips)
    JointSpec js[12] = {
        {{0.00, 0.95, 0.00}, 0.13, 6},   // pelvis
        {{0.00, 1.25, 0.00}, 0.13, 6},   // spine
        {{0.00, 1.48, 0.00}, 0.06, 4},   // neck
        {{0.00, 1.62, 0.00}, 0.09, 6},   // head
        {{-0.12, 0.88, 0.00}, 0.07, 5},  // L hip
        {{-0.14, 0.45, 0.00}, 0.06, 5},  // L knee
        {{0.12, 0.88, 0.00}, 0.07, 5},   // R hip
        {{0.14, 0.45, 0.00}, 0.06, 5},   // R knee
        {{-0.21, 1.42, 0.00}, 0.055, 4}, // L shoulder
        {{-0.33, 1.10, 0.00}, 0.05, 5},  // L elbow
        {{0.21, 1.42, 0.00}, 0.055, 4},  // R shoulder
        {{0.33, 1.10, 0.00}, 0.05, 5},   // R elbow
    };
    for (auto& j : js) {
        j.pos.x += jit(0.008);
        j.pos.y += jit(0.008);
        j.pos.z += jit(0.004);
        j.radius *= 1.0 + jit(0.08);
    }

    BodyTemplate t;
    t.V = V;
    t.K = K;
    t.n_beta = n_beta;
    t.n_alpha = n_alpha;
    t.seed = seed;
    t.head_joint = 3;
    t.parents.assign(kParents, kParents + 12);
    t.template_verts.resize(static_cast<size_t>(V));
    t.joint_regressor.assign(static_cast<size_t>(K) * V, 0.0);
    t.skin_weights.assign(static_cast<size_t>(V) * K, 0.0);

    // rings: 4x6 torso chain + 8x5 limbs = 64 - 4 extras... ring vertices first
    std::vector<int> ring_start(12), ring_size(12);
    int vi = 0;
    for (int k = 0; k < 12; ++k) {
        ring_start[k] = vi;
        ring_size[k] = js[k].ring;
        // ring plane is horizontal for torso, perpendicular-ish elsewhere; a
        // plain horizontal circle keeps the construction simple and convex
        for (int i = 0; i < js[k].ring; ++i) {
            double a = 2.0 * M_PI * i / js[k].ring;
            Vec3 v = js[k].pos + Vec3{std::cos(a) * js[k].radius, 0.0, std::sin(a) * js[k].radius};
            t.template_verts[static_cast<size_t>(vi)] = v;
            t.joint_regressor[static_cast<size_t>(k) * V + vi] = 1.0 / js[k].ring;
            ++vi;
        }
    }
    // extras: head apex, nose, two foot tips (vi..vi+3), bound to their joints
    int head_apex = vi, nose = vi + 1, lfoot = vi + 2, rfoot = vi + 3;
    t.template_verts[static_cast<size_t>(head_apex)] = js[3].pos + Vec3{0, js[3].radius * 1.4, 0};
    t.template_verts[static_cast<size_t>(nose)] = js[3].pos + Vec3{0, 0.01, js[3].radius * 1.5};
    t.template_verts[static_cast<size_t>(lfoot)] = js[5].pos + Vec3{0, -0.42, 0.04};
    t.template_verts[static_cast<size_t>(rfoot)] = js[7].pos + Vec3{0, -0.42, 0.04};

    // skin weights: ring verts blend to the parent joint, extras ride a joint
    for (int k = 0; k < 12; ++k) {
        double wp = t.parents[static_cast<size_t>(k)] >= 0 ? 0.2 : 0.0;
        for (int i = 0; i < ring_size[k]; ++i) {
            int v = ring_start[k] + i;
            t.skin_weights[static_cast<size_t>(v) * K + k] = 1.0 - wp;
            if (wp > 0) t.skin_weights[static_cast<size_t>(v) * K + t.parents[static_cast<size_t>(k)]] = wp;
        }
    }
    t.skin_weights[static_cast<size_t>(head_apex) * K + 3] = 1.0;
    t.skin_weights[static_cast<size_t>(nose) * K + 3] = 1.0;
    t.skin_weights[static_cast<size_t>(lfoot) * K + 5] = 1.0;
    t.skin_weights[static_cast<size_t>(rfoot) * K + 7] = 1.0;

    // tube faces along every bone, plus fans to the extras
    auto bridge = [&](int a, int b) {
        int na = ring_size[a], nb = ring_size[b];
        int n = std::min(na, nb);
        for (int i = 0; i < n; ++i) {
            int a0 = ring_start[a] + i, a1 = ring_start[a] + (i + 1) % na;
            int b0 = ring_start[b] + i, b1 = ring_start[b] + (i + 1) % nb;
            t.faces.push_back({a0, b0, b1});
            t.faces.push_back({a0, b1, a1});
        }
    };
    for (int k = 1; k < 12; ++k) bridge(t.parents[static_cast<size_t>(k)], k);
    auto fan = [&](int apex, int ring) {
        for (int i = 0; i < ring_size[ring]; ++i) {
            int r0 = ring_start[ring] + i;
            int r1 = ring_start[ring] + (i + 1) % ring_size[ring];
            t.faces.push_back({apex, r0, r1});
        }
    };
    fan(head_apex, 3);
    fan(lfoot, 5);
    fan(rfoot, 7);
    t.faces.push_back({nose, ring_start[3], ring_start[3] + 1});

    // shape basis: height, girth, limb length, head size
    t.shape_basis.assign(static_cast<size_t>(V) * 3 * n_beta, 0.0);
    auto sb = [&](int v, int c, int b) -> double& {
        return t.shape_basis[(static_cast<size_t>(v) * 3 + static_cast<size_t>(c)) * n_beta + b];
    };
    Vec3 pelvis = js[0].pos;
    for (int v = 0; v < V; ++v) {
        Vec3 p = t.template_verts[static_cast<size_t>(v)];
        if (n_beta > 0) sb(v, 1, 0) = 0.12 * (p.y - pelvis.y);
        if (n_beta > 1) {
            Vec3 radial{p.x - pelvis.x, 0, p.z - pelvis.z};
            sb(v, 0, 1) = 0.35 * radial.x;
            sb(v, 2, 1) = 0.35 * radial.z;
        }
        if (n_beta > 2) {
            // limbs stretch away from the torso axis
            double reach = std::abs(p.x - pelvis.x) + std::max(0.0, pelvis.y - p.y);
            sb(v, 0, 2) = 0.10 * (p.x > pelvis.x ? reach : -reach) * 0.5;
            sb(v, 1, 2) = -0.08 * std::max(0.0, pelvis.y - p.y);
        }
        if (n_beta > 3) {
            Vec3 from_head = p - js[3].pos;
            if (from_head.norm() < 0.22) {
                sb(v, 0, 3) = 0.5 * from_head.x;
                sb(v, 1, 3) = 0.5 * from_head.y;
                sb(v, 2, 3) = 0.5 * from_head.z;
            }
        }
    }
    t.expr_basis.assign(static_cast<size_t>(V) * 3 * n_alpha, 0.0);
    if (n_alpha > 0) {
        Rng erng(seed ^ 0xda3e39cb94b95bdbull);
        for (int v = 0; v < V; ++v) {
            Vec3 from_head = t.template_verts[static_cast<size_t>(v)] - js[3].pos;
            if (from_head.norm() >= 0.22) continue;
            for (int c = 0; c < 3; ++c)
                for (int a = 0; a < n_alpha; ++a)
                    t.expr_basis[(static_cast<size_t>(v) * 3 + static_cast<size_t>(c)) * n_alpha + a] =
                        0.01 * erng.normal();
        }
    }
    return t;
}

std::vector<Vec3> BodyTemplate::rest_joints() const {
    std::vector<Vec3> j(static_cast<size_t>(K));
    for (int k = 0; k < K; ++k) {
        Vec3 acc{0, 0, 0};
        for (int v = 0; v < V; ++v) {
            double w = joint_regressor[static_cast<size_t>(k) * V + v];
            if (w != 0) acc = acc + template_verts[static_cast<size_t>(v)] * w;
        }
        j[static_cast<size_t>(k)] = acc;
    }
    return j;
}

Mat3 rodrigues(const Vec3& aa) {
    double th2 = aa.dot(aa);
    double th = std::sqrt(th2);
    double a, b;  // sin(t)/t and (1-cos(t))/t^2
    if (th < 1e-4) {
        a = 1.0 - th2 / 6.0 + th2 * th2 / 120.0;
        b = 0.5 - th2 / 24.0 + th2 * th2 / 720.0;
    } else {
        a = std::sin(th) / th;
        b = (1.0 - std::cos(th)) / th2;
    }
    Mat3 K;
    K.m = {0, -aa.z, aa.y, aa.z, 0, -aa.x, -aa.y, aa.x, 0};
    Mat3 K2 = K * K;
    Mat3 R = Mat3::identity();
    for (int i = 0; i < 9; ++i) R.m[static_cast<size_t>(i)] += a * K.m[static_cast<size_t>(i)] + b * K2.m[static_cast<size_t>(i)];
    return R;
}

BodyMesh pose_body(const BodyTemplate& tpl, const BodyParams& p) {
    if (static_cast<int>(p.theta.size()) != tpl.K)
        throw ContractViolation("pose_body: theta has " + std::to_string(p.theta.size()) +
                                " rows, template expects " + std::to_string(tpl.K));
    if (static_cast<int>(p.beta.size()) != tpl.n_beta)
        throw ContractViolation("pose_body: beta size " + std::to_string(p.beta.size()) +
                                " != " + std::to_string(tpl.n_beta));
    if (static_cast<int>(p.alpha.size()) != tpl.n_alpha)
        throw ContractViolation("pose_body: alpha size " + std::to_string(p.alpha.size()) +
                                " != " + std::to_string(tpl.n_alpha));
    int V = tpl.V, K = tpl.K;

    std::vector<Vec3> shaped(tpl.template_verts);
    for (int v = 0; v < V; ++v) {
        Vec3& s = shaped[static_cast<size_t>(v)];
        for (int b = 0; b < tpl.n_beta; ++b) {
            double w = p.beta[static_cast<size_t>(b)];
            s.x += tpl.shape_basis[(static_cast<size_t>(v) * 3 + 0) * tpl.n_beta + b] * w;
            s.y += tpl.shape_basis[(static_cast<size_t>(v) * 3 + 1) * tpl.n_beta + b] * w;
            s.z += tpl.shape_basis[(static_cast<size_t>(v) * 3 + 2) * tpl.n_beta + b] * w;
        }
        for (int a = 0; a < tpl.n_alpha; ++a) {
            double w = p.alpha[static_cast<size_t>(a)];
            s.x += tpl.expr_basis[(static_cast<size_t>(v) * 3 + 0) * tpl.n_alpha + a] * w;
            s.y += tpl.expr_basis[(static_cast<size_t>(v) * 3 + 1) * tpl.n_alpha + a] * w;
            s.z += tpl.expr_basis[(static_cast<size_t>(v) * 3 + 2) * tpl.n_alpha + a] * w;
        }
    }

    std::vector<Vec3> j_rest(static_cast<size_t>(K), Vec3{0, 0, 0});
    for (int k = 0; k < K; ++k)
        for (int v = 0; v < V; ++v) {
            double w = tpl.joint_regressor[static_cast<size_t>(k) * V + v];
            if (w != 0) j_rest[static_cast<size_t>(k)] = j_rest[static_cast<size_t>(k)] + shaped[static_cast<size_t>(v)] * w;
        }

    // kinematic chain; joint 0 rotation is owned by the root pose
    std::vector<Mat3> Rw(static_cast<size_t>(K));
    std::vector<Vec3> tw(static_cast<size_t>(K));
    for (int k = 0; k < K; ++k) {
        Mat3 Rl = k == 0 ? Mat3::identity() : rodrigues(p.theta[static_cast<size_t>(k)]);
        int par = tpl.parents[static_cast<size_t>(k)];
        if (par < 0) {
            Rw[static_cast<size_t>(k)] = Rl;
            tw[static_cast<size_t>(k)] = j_rest[static_cast<size_t>(k)];
        } else {
            Rw[static_cast<size_t>(k)] = Rw[static_cast<size_t>(par)] * Rl;
            Vec3 off = j_rest[static_cast<size_t>(k)] - j_rest[static_cast<size_t>(par)];
            tw[static_cast<size_t>(k)] = tw[static_cast<size_t>(par)] + Rw[static_cast<size_t>(par)] * off;
        }
    }

    BodyMesh out;
    out.verts.resize(static_cast<size_t>(V));
    out.joints.resize(static_cast<size_t>(K));
    const SE3Pose& root = p.root();
    Mat3 rootR = root.q.to_mat3();
    for (int k = 0; k < K; ++k) out.joints[static_cast<size_t>(k)] = rootR * tw[static_cast<size_t>(k)] + root.t;

    for (int v = 0; v < V; ++v) {
        Vec3 acc{0, 0, 0};
        for (int k = 0; k < K; ++k) {
            double w = tpl.skin_weights[static_cast<size_t>(v) * K + k];
            if (w == 0) continue;
            // G'_k x = R_k (x - j_rest_k) + t_k
            Vec3 loc = shaped[static_cast<size_t>(v)] - j_rest[static_cast<size_t>(k)];
            acc = acc + (Rw[static_cast<size_t>(k)] * loc + tw[static_cast<size_t>(k)]) * w;
        }
        out.verts[static_cast<size_t>(v)] = rootR * acc + root.t;
    }
    return out;
}

SE3Pose compose_root(const SE3Pose& T, const SE3Pose& p_cam) { return T.compose(p_cam); }

SE3Pose decompose_root(const SE3Pose& p_world, const SE3Pose& T) {
    return T.inverse().compose(p_world);
}

// ----- differentiable path ----------------------------------------------------

namespace {

// (1,3) row from three scalar tensors
Tensor row3(const Tensor& a, const Tensor& b, const Tensor& c) {
    return reshape(concat({a, b, c}, 0), {1, 3});
}

Tensor rodrigues_graph(const Tensor& aa_row /*(1,3)*/) {
    Tensor aa = reshape(aa_row, {3});
    Tensor th = sqrt(addc(l2(aa), 1e-24));
    Tensor axis = mul(aa, recip(th));
    Tensor zero = Tensor::scalar(0.0);
    Tensor ax = slice(axis, 0, 0, 1), ay = slice(axis, 0, 1, 1), az = slice(axis, 0, 2, 1);
    Tensor K = concat({row3(zero, scale(az, -1), ay), row3(az, zero, scale(ax, -1)),
                       row3(scale(ay, -1), ax, zero)},
                      0);
    Tensor I = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor sin_th = sin(th);
    Tensor omc = addc(scale(cos(th), -1), 1.0);  // 1 - cos
    return add(add(I, mul(K, sin_th)), mul(matmul(K, K), omc));
}

Tensor quat_to_mat_graph(const Tensor& q /*(4) unit*/) {
    Tensor w = slice(q, 0, 0, 1), x = slice(q, 0, 1, 1), y = slice(q, 0, 2, 1), z = slice(q, 0, 3, 1);
    auto two = [](const Tensor& t) { return scale(t, 2.0); };
    Tensor xx = mul(x, x), yy = mul(y, y), zz = mul(z, z);
    Tensor xy = mul(x, y), xz = mul(x, z), yz = mul(y, z);
    Tensor wx = mul(w, x), wy = mul(w, y), wz = mul(w, z);
    Tensor r00 = addc(scale(add(yy, zz), -2.0), 1.0);
    Tensor r11 = addc(scale(add(xx, zz), -2.0), 1.0);
    Tensor r22 = addc(scale(add(xx, yy), -2.0), 1.0);
    Tensor r01 = two(sub(xy, wz)), r02 = two(add(xz, wy));
    Tensor r10 = two(add(xy, wz)), r12 = two(sub(yz, wx));
    Tensor r20 = two(sub(xz, wy)), r21 = two(add(yz, wx));
    return concat({row3(r00, r01, r02), row3(r10, r11, r12), row3(r20, r21, r22)}, 0);
}

}  // namespace

PosedBodyGraph pose_body_graph(const BodyTemplate& tpl, const Tensor& theta, const Tensor& beta,
                               const Tensor& alpha, const Tensor& root_quat,
                               const Tensor& root_trans) {
    int V = tpl.V, K = tpl.K;
    if (theta.rank() != 2 || theta.dim(0) != K || theta.dim(1) != 3)
        throw ContractViolation("pose_body_graph: theta must be (" + std::to_string(K) + ",3), got " +
                                shape_str(theta.shape()));

    std::vector<double> base(static_cast<size_t>(V) * 3);
    for (int v = 0; v < V; ++v) {
        base[static_cast<size_t>(v) * 3 + 0] = tpl.template_verts[static_cast<size_t>(v)].x;
        base[static_cast<size_t>(v) * 3 + 1] = tpl.template_verts[static_cast<size_t>(v)].y;
        base[static_cast<size_t>(v) * 3 + 2] = tpl.template_verts[static_cast<size_t>(v)].z;
    }
    Tensor shaped = Tensor::from({V, 3}, std::move(base));
    if (tpl.n_beta > 0) {
        Tensor B = Tensor::from({V * 3, tpl.n_beta}, tpl.shape_basis);
        shaped = add(shaped, reshape(matmul(B, reshape(beta, {tpl.n_beta, 1})), {V, 3}));
    }
    if (tpl.n_alpha > 0) {
        Tensor E = Tensor::from({V * 3, tpl.n_alpha}, tpl.expr_basis);
        shaped = add(shaped, reshape(matmul(E, reshape(alpha, {tpl.n_alpha, 1})), {V, 3}));
    }
    Tensor Jreg = Tensor::from({K, V}, tpl.joint_regressor);
    Tensor j_rest = matmul(Jreg, shaped);  // (K,3)

    std::vector<Tensor> Rw(static_cast<size_t>(K)), tw(static_cast<size_t>(K));
    for (int k = 0; k < K; ++k) {
        int par = tpl.parents[static_cast<size_t>(k)];
        Tensor jk = slice(j_rest, 0, k, 1);  // (1,3)
        if (par < 0) {
            Rw[static_cast<size_t>(k)] = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
            tw[static_cast<size_t>(k)] = jk;
        } else {
            Tensor Rl = rodrigues_graph(slice(theta, 0, k, 1));
            Rw[static_cast<size_t>(k)] = matmul(Rw[static_cast<size_t>(par)], Rl);
            Tensor off = sub(jk, slice(j_rest, 0, par, 1));
            tw[static_cast<size_t>(k)] =
                add(tw[static_cast<size_t>(par)], matmul(off, transpose(Rw[static_cast<size_t>(par)])));
        }
    }

    Tensor verts;
    for (int k = 0; k < K; ++k) {
        std::vector<double> wcol(static_cast<size_t>(V) * 3);
        bool any = false;
        for (int v = 0; v < V; ++v) {
            double w = tpl.skin_weights[static_cast<size_t>(v) * K + k];
            any |= w != 0;
            wcol[static_cast<size_t>(v) * 3 + 0] = w;
            wcol[static_cast<size_t>(v) * 3 + 1] = w;
            wcol[static_cast<size_t>(v) * 3 + 2] = w;
        }
        if (!any) continue;
        Tensor posed = add(matmul(sub(shaped, concat(std::vector<Tensor>(static_cast<size_t>(V), slice(j_rest, 0, k, 1)), 0)),
                                  transpose(Rw[static_cast<size_t>(k)])),
                           reshape(tw[static_cast<size_t>(k)], {3}));
        Tensor term = mul(Tensor::from({V, 3}, std::move(wcol)), posed);
        verts = verts.defined() ? add(verts, term) : term;
    }
    Tensor joints = concat(tw, 0);  // (K,3)

    Tensor R = quat_to_mat_graph(root_quat);
    Tensor Rt = transpose(R);
    Tensor tr = reshape(root_trans, {3});
    PosedBodyGraph out;
    out.verts = add(matmul(verts, Rt), tr);
    out.joints = add(matmul(joints, Rt), tr);
    return out;
}

// ----- serialization -----------------------------------------------------------

void save_template(const std::string& dir, const BodyTemplate& tpl) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    nlohmann::json h;
    h["V"] = tpl.V;
    h["K"] = tpl.K;
    h["n_beta"] = tpl.n_beta;
    h["n_alpha"] = tpl.n_alpha;
    h["seed"] = tpl.seed;
    h["head_joint"] = tpl.head_joint;
    h["parents"] = tpl.parents;
    h["faces"] = tpl.faces;
    std::ofstream f(dir + "/header.json", std::ios::trunc);
    if (!f) throw IoError(dir + "/header.json", "cannot open for writing");
    f << h.dump(1) << "\n";

    std::vector<double> verts(static_cast<size_t>(tpl.V) * 3);
    for (int v = 0; v < tpl.V; ++v) {
        verts[static_cast<size_t>(v) * 3 + 0] = tpl.template_verts[static_cast<size_t>(v)].x;
        verts[static_cast<size_t>(v) * 3 + 1] = tpl.template_verts[static_cast<size_t>(v)].y;
        verts[static_cast<size_t>(v) * 3 + 2] = tpl.template_verts[static_cast<size_t>(v)].z;
    }
    save_tensor(dir + "/template_verts.t4dr", Tensor::from({tpl.V, 3}, std::move(verts)));
    save_tensor(dir + "/shape_basis.t4dr", Tensor::from({tpl.V, 3, tpl.n_beta}, tpl.shape_basis));
    save_tensor(dir + "/expr_basis.t4dr", Tensor::from({tpl.V, 3, tpl.n_alpha}, tpl.expr_basis));
    save_tensor(dir + "/joint_regressor.t4dr", Tensor::from({tpl.K, tpl.V}, tpl.joint_regressor));
    save_tensor(dir + "/skin_weights.t4dr", Tensor::from({tpl.V, tpl.K}, tpl.skin_weights));
}

BodyTemplate load_template(const std::string& dir) {
    std::ifstream f(dir + "/header.json");
    if (!f) throw IoError(dir + "/header.json", "cannot open for reading");
    nlohmann::json h = nlohmann::json::parse(f);
    BodyTemplate tpl;
    tpl.V = h["V"];
    tpl.K = h["K"];
    tpl.n_beta = h["n_beta"];
    tpl.n_alpha = h["n_alpha"];
    tpl.seed = h["seed"];
    tpl.head_joint = h["head_joint"];
    tpl.parents = h["parents"].get<std::vector<int>>();
    tpl.faces = h["faces"].get<std::vector<std::array<int, 3>>>();
    Tensor verts = load_tensor(dir + "/template_verts.t4dr");
    tpl.template_verts.resize(static_cast<size_t>(tpl.V));
    for (int v = 0; v < tpl.V; ++v)
        tpl.template_verts[static_cast<size_t>(v)] = Vec3{verts.data()[static_cast<size_t>(v) * 3 + 0],
                                                          verts.data()[static_cast<size_t>(v) * 3 + 1],
                                                          verts.data()[static_cast<size_t>(v) * 3 + 2]};
    tpl.shape_basis = load_tensor(dir + "/shape_basis.t4dr").data();
    tpl.expr_basis = load_tensor(dir + "/expr_basis.t4dr").data();
    tpl.joint_regressor = load_tensor(dir + "/joint_regressor.t4dr").data();
    tpl.skin_weights = load_tensor(dir + "/skin_weights.t4dr").data();
    return tpl;
}

void save_obj(const std::string& path, const std::vector<Vec3>& verts,
              const std::vector<std::array<int, 3>>& faces) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError(path, "cannot open for writing");
    f.precision(9);
    for (const Vec3& v : verts) f << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& fc : faces) f << "f " << fc[0] + 1 << " " << fc[1] + 1 << " " << fc[2] + 1 << "\n";
    if (!f) throw IoError(path, "write failed");
}

}  // namespace t4dr
