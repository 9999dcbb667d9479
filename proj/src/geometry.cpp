#include "t4dr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "t4dr/error.hpp"
#include "t4dr/kernels.hpp"

#include "json.hpp"

namespace t4dr {

Pointmap unproject(const std::vector<double>& depth, int w, int h, const CameraIntrinsics& c,
                   const SE3Pose& T) {
    if (static_cast<int64_t>(depth.size()) != static_cast<int64_t>(w) * h)
        throw ContractViolation("unproject: depth size " + std::to_string(depth.size()) +
                                " != " + std::to_string(w) + "x" + std::to_string(h));
    Pointmap pm;
    pm.w = w;
    pm.h = h;
    pm.pts.resize(depth.size());
    pm.conf.assign(depth.size(), 0.0);
    pm.valid.assign(depth.size(), 0);
    const bool parallel = kern::detail::parallel_enabled(static_cast<int64_t>(depth.size()) * 8);
#pragma omp parallel for schedule(static) if (parallel)
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            int64_t i = pm.idx(u, v);
            double d = depth[static_cast<size_t>(i)];
            if (!(d > 0)) continue;
            Vec3 cam{(u - c.cx) / c.fx * d, (v - c.cy) / c.fy * d, d};
            pm.pts[static_cast<size_t>(i)] = T.apply(cam);
            pm.conf[static_cast<size_t>(i)] = 1.0;
            pm.valid[static_cast<size_t>(i)] = 1;
        }
    }
    return pm;
}

Projected project(const Vec3& p, const CameraIntrinsics& c, const SE3Pose& T) {
    Vec3 cam = T.inverse().apply(p);
    Projected out;
    out.z = cam.z;
    if (cam.z != 0) {
        out.u = c.cx + c.fx * cam.x / cam.z;
        out.v = c.cy + c.fy * cam.y / cam.z;
    }
    return out;
}

double weiszfeld_focal(const Pointmap& cam_pm, double cx, double cy) {
    // one 2-d residual per pixel: (u-cx, v-cy) - f * (x/z, y/z)
    std::vector<double> pu, pv, qu, qv;
    for (int v = 0; v < cam_pm.h; ++v)
        for (int u = 0; u < cam_pm.w; ++u) {
            int64_t i = cam_pm.idx(u, v);
            if (!cam_pm.valid[static_cast<size_t>(i)]) continue;
            const Vec3& p = cam_pm.pts[static_cast<size_t>(i)];
            if (!(p.z > 0)) continue;
            pu.push_back(u - cx);
            pv.push_back(v - cy);
            qu.push_back(p.x / p.z);
            qv.push_back(p.y / p.z);
        }
    size_t n = pu.size();
    if (n == 0) throw EstimationFailed("weiszfeld_focal: no valid pixels");
    double qq = 0, pq = 0;
    for (size_t i = 0; i < n; ++i) {
        qq += qu[i] * qu[i] + qv[i] * qv[i];
        pq += pu[i] * qu[i] + pv[i] * qv[i];
    }
    if (qq < 1e-18) throw EstimationFailed("weiszfeld_focal: all rays axial");
    double f = pq / qq;
    for (int it = 0; it < 50; ++it) {
        double num = 0, den = 0;
        for (size_t i = 0; i < n; ++i) {
            double ru = pu[i] - f * qu[i];
            double rv = pv[i] - f * qv[i];
            double r = std::sqrt(ru * ru + rv * rv);
            double wgt = 1.0 / std::max(r, 1e-8);
            num += wgt * (pu[i] * qu[i] + pv[i] * qv[i]);
            den += wgt * (qu[i] * qu[i] + qv[i] * qv[i]);
        }
        if (den < 1e-18) throw EstimationFailed("weiszfeld_focal: degenerate reweighting");
        double fn = num / den;
        double delta = std::abs(fn - f) / std::max(std::abs(fn), 1e-12);
        f = fn;
        if (delta < 1e-6) break;
    }
    if (!(f > 0)) throw EstimationFailed("weiszfeld_focal: nonpositive focal " + std::to_string(f));
    return f;
}

namespace {

// one-sided Jacobi SVD of a 3x3: A = U * diag(s) * V^T, singular values sorted
// descending, U and V orthonormal (U completed by cross products on rank loss).
struct Svd3 {
    Mat3 U, V;
    double s[3];
};

Svd3 svd3(const Mat3& A) {
    double a[9];
    std::copy(A.m.begin(), A.m.end(), a);  // columns rotated in place
    Mat3 V = Mat3::identity();
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) {
                double alpha = 0, beta = 0, gamma = 0;
                for (int i = 0; i < 3; ++i) {
                    alpha += a[i * 3 + p] * a[i * 3 + p];
                    beta += a[i * 3 + q] * a[i * 3 + q];
                    gamma += a[i * 3 + p] * a[i * 3 + q];
                }
                off = std::max(off, std::abs(gamma));
                if (std::abs(gamma) < 1e-300) continue;
                double theta = 0.5 * std::atan2(2 * gamma, alpha - beta);
                double c = std::cos(theta), s = std::sin(theta);
                for (int i = 0; i < 3; ++i) {
                    double ap = a[i * 3 + p], aq = a[i * 3 + q];
                    a[i * 3 + p] = c * ap + s * aq;
                    a[i * 3 + q] = -s * ap + c * aq;
                    double vp = V(i, p), vq = V(i, q);
                    V(i, p) = c * vp + s * vq;
                    V(i, q) = -s * vp + c * vq;
                }
            }
        if (off < 1e-15) break;
    }
    Svd3 out;
    int order[3] = {0, 1, 2};
    double norms[3];
    for (int j = 0; j < 3; ++j) {
        norms[j] = std::sqrt(a[j] * a[j] + a[3 + j] * a[3 + j] + a[6 + j] * a[6 + j]);
    }
    std::sort(order, order + 3, [&](int x, int y) { return norms[x] > norms[y]; });
    Mat3 U;
    Mat3 Vs;
    for (int j = 0; j < 3; ++j) {
        int src = order[j];
        out.s[j] = norms[src];
        for (int i = 0; i < 3; ++i) {
            U(i, j) = norms[src] > 1e-300 ? a[i * 3 + src] / norms[src] : 0.0;
            Vs(i, j) = V(i, src);
        }
    }
    // complete U when columns vanished (rank-deficient input)
    auto col = [&](const Mat3& M, int j) { return Vec3{M(0, j), M(1, j), M(2, j)}; };
    auto set_col = [&](Mat3& M, int j, const Vec3& v) {
        M(0, j) = v.x;
        M(1, j) = v.y;
        M(2, j) = v.z;
    };
    if (out.s[1] <= 1e-300 * std::max(1.0, out.s[0])) {
        // rank <= 1: build any orthonormal complement of column 0
        Vec3 u0 = out.s[0] > 0 ? col(U, 0) : Vec3{1, 0, 0};
        if (out.s[0] <= 0) set_col(U, 0, u0);
        Vec3 h = std::abs(u0.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        Vec3 u1 = u0.cross(h).normalized();
        set_col(U, 1, u1);
        set_col(U, 2, u0.cross(u1));
    } else if (out.s[2] <= 1e-300 * std::max(1.0, out.s[0])) {
        set_col(U, 2, col(U, 0).cross(col(U, 1)));
    }
    out.U = U;
    out.V = Vs;
    return out;
}

}  // namespace

Sim3 umeyama(const std::vector<Vec3>& src, const std::vector<Vec3>& dst, bool with_scale) {
    size_t n = src.size();
    if (n != dst.size() || n < 2)
        throw ContractViolation("umeyama: need matching point sets of size >= 2, got " +
                                std::to_string(src.size()) + " / " + std::to_string(dst.size()));
    double inv_n = 1.0 / static_cast<double>(n);
    Vec3 mu_s{0, 0, 0}, mu_d{0, 0, 0};
    for (size_t i = 0; i < n; ++i) {
        mu_s = mu_s + src[i];
        mu_d = mu_d + dst[i];
    }
    mu_s = mu_s * inv_n;
    mu_d = mu_d * inv_n;
    Mat3 cov;
    cov.m.fill(0);
    double var_s = 0;
    for (size_t i = 0; i < n; ++i) {
        Vec3 a = dst[i] - mu_d;
        Vec3 b = src[i] - mu_s;
        cov(0, 0) += a.x * b.x; cov(0, 1) += a.x * b.y; cov(0, 2) += a.x * b.z;
        cov(1, 0) += a.y * b.x; cov(1, 1) += a.y * b.y; cov(1, 2) += a.y * b.z;
        cov(2, 0) += a.z * b.x; cov(2, 1) += a.z * b.y; cov(2, 2) += a.z * b.z;
        var_s += b.dot(b);
    }
    for (double& m : cov.m) m *= inv_n;
    var_s *= inv_n;

    Svd3 svd = svd3(cov);
    if (svd.s[1] <= 1e-12 * std::max(1.0, svd.s[0]) || svd.s[0] <= 0)
        throw DegenerateConfiguration("umeyama: rank-deficient covariance (collinear or coincident points)");

    double sign = (svd.U.det() * svd.V.det()) < 0 ? -1.0 : 1.0;
    Mat3 S = Mat3::identity();
    S(2, 2) = sign;
    Sim3 out;
    out.R = svd.U * S * svd.V.transposed();
    if (with_scale) {
        double trace_ds = svd.s[0] + svd.s[1] + sign * svd.s[2];
        if (var_s <= 0) throw DegenerateConfiguration("umeyama: zero source variance");
        out.s = trace_ds / var_s;
    } else {
        out.s = 1.0;
    }
    out.t = mu_d - (out.R * mu_s) * out.s;
    return out;
}

std::vector<Vec3> align_joints(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
                               AlignMode mode) {
    if (pred.size() != gt.size())
        throw ContractViolation("align_joints: size mismatch " + std::to_string(pred.size()) +
                                " vs " + std::to_string(gt.size()));
    Sim3 g = umeyama(pred, gt, mode == AlignMode::ProcrustesSim);
    std::vector<Vec3> out(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) out[i] = g.apply(pred[i]);
    return out;
}

void save_trajectory(const std::string& path, const std::vector<SE3Pose>& traj) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError(path, "cannot open for writing");
    f.precision(17);
    for (size_t i = 0; i < traj.size(); ++i) {
        const SE3Pose& p = traj[i];
        f << "{\"t\":" << i << ",\"qw\":" << p.q.w << ",\"qx\":" << p.q.x << ",\"qy\":" << p.q.y
          << ",\"qz\":" << p.q.z << ",\"tx\":" << p.t.x << ",\"ty\":" << p.t.y
          << ",\"tz\":" << p.t.z << "}\n";
    }
    if (!f) throw IoError(path, "write failed");
}

std::vector<SE3Pose> load_trajectory(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError(path, "cannot open for reading");
    std::vector<SE3Pose> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        SE3Pose p;
        p.q = Quat{j["qw"], j["qx"], j["qy"], j["qz"]}.normalized();
        p.t = Vec3{j["tx"], j["ty"], j["tz"]};
        out.push_back(p);
    }
    return out;
}

void save_pointmap_ply(const std::string& path, const Pointmap& pm) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(path, "cannot open for writing");
    int64_t n = 0;
    for (uint8_t v : pm.valid) n += v;
    std::ostringstream head;
    head << "ply\nformat binary_little_endian 1.0\nelement vertex " << n
         << "\nproperty double x\nproperty double y\nproperty double z\n"
            "property double confidence\nend_header\n";
    f << head.str();
    for (size_t i = 0; i < pm.pts.size(); ++i) {
        if (!pm.valid[i]) continue;
        double rec[4] = {pm.pts[i].x, pm.pts[i].y, pm.pts[i].z, pm.conf[i]};
        f.write(reinterpret_cast<const char*>(rec), sizeof(rec));
    }
    if (!f) throw IoError(path, "write failed");
}

}  // namespace t4dr
