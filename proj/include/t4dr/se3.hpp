#pragma once

#include <array>
#include <cmath>

namespace t4dr {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{0, 0, 0};
    }
};

struct Mat3 {
    // row-major
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }

    double operator()(int r, int c) const { return m[r * 3 + c]; }
    double& operator()(int r, int c) { return m[r * 3 + c]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
    double det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }
};

struct Quat {
    double w = 1, x = 0, y = 0, z = 0;

    static Quat identity() { return {}; }

    static Quat from_axis_angle(const Vec3& aa) {
        double a = aa.norm();
        if (a < 1e-12) return {1, aa.x * 0.5, aa.y * 0.5, aa.z * 0.5};
        double h = 0.5 * a, s = std::sin(h) / a;
        return {std::cos(h), aa.x * s, aa.y * s, aa.z * s};
    }

    // Shepperd's method
    static Quat from_mat3(const Mat3& R) {
        Quat q;
        double tr = R(0, 0) + R(1, 1) + R(2, 2);
        if (tr > 0) {
            double s = std::sqrt(tr + 1.0) * 2;
            q.w = 0.25 * s;
            q.x = (R(2, 1) - R(1, 2)) / s;
            q.y = (R(0, 2) - R(2, 0)) / s;
            q.z = (R(1, 0) - R(0, 1)) / s;
        } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
            double s = std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2)) * 2;
            q.w = (R(2, 1) - R(1, 2)) / s;
            q.x = 0.25 * s;
            q.y = (R(0, 1) + R(1, 0)) / s;
            q.z = (R(0, 2) + R(2, 0)) / s;
        } else if (R(1, 1) > R(2, 2)) {
            double s = std::sqrt(1.0 + R(1, 1) - R(0, 0) - R(2, 2)) * 2;
            q.w = (R(0, 2) - R(2, 0)) / s;
            q.x = (R(0, 1) + R(1, 0)) / s;
            q.y = 0.25 * s;
            q.z = (R(1, 2) + R(2, 1)) / s;
        } else {
            double s = std::sqrt(1.0 + R(2, 2) - R(0, 0) - R(1, 1)) * 2;
            q.w = (R(1, 0) - R(0, 1)) / s;
            q.x = (R(0, 2) + R(2, 0)) / s;
            q.y = (R(1, 2) + R(2, 1)) / s;
            q.z = 0.25 * s;
        }
        return q.normalized();
    }

    Quat operator*(const Quat& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }
    Quat conj() const { return {w, -x, -y, -z}; }
    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const {
        double n = norm();
        if (n < 1e-30) return identity();
        return {w / n, x / n, y / n, z / n};
    }
    // canonical sign: w >= 0
    Quat canonical() const { return w < 0 ? Quat{-w, -x, -y, -z} : *this; }

    Vec3 rotate(const Vec3& v) const {
        Vec3 u{x, y, z};
        Vec3 t = u.cross(v) * 2.0;
        return v + t * w + u.cross(t);
    }

    Mat3 to_mat3() const {
        Mat3 R;
        double xx = x * x, yy = y * y, zz = z * z;
        double xy = x * y, xz = x * z, yz = y * z;
        double wx = w * x, wy = w * y, wz = w * z;
        R(0, 0) = 1 - 2 * (yy + zz);
        R(0, 1) = 2 * (xy - wz);
        R(0, 2) = 2 * (xz + wy);
        R(1, 0) = 2 * (xy + wz);
        R(1, 1) = 1 - 2 * (xx + zz);
        R(1, 2) = 2 * (yz - wx);
        R(2, 0) = 2 * (xz - wy);
        R(2, 1) = 2 * (yz + wx);
        R(2, 2) = 1 - 2 * (xx + yy);
        return R;
    }

    // geodesic angle to another rotation, in radians; the atan2 form stays
    // well-conditioned near zero where acos of the dot product loses digits
    double angle_to(const Quat& o) const {
        Quat r = conj() * o;
        double v = std::sqrt(r.x * r.x + r.y * r.y + r.z * r.z);
        return 2.0 * std::atan2(v, std::abs(r.w));
    }
};

// Rigid transform, rotation stored as a unit quaternion.
struct SE3Pose {
    Quat q;
    Vec3 t;

    static SE3Pose identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return q.rotate(p) + t; }
    SE3Pose compose(const SE3Pose& o) const { return {(q * o.q).normalized(), q.rotate(o.t) + t}; }
    SE3Pose inverse() const {
        Quat qi = q.conj();
        return {qi, qi.rotate(t * -1.0)};
    }
};

// Similarity transform (scale, rotation, translation).
struct Sim3 {
    double s = 1.0;
    Mat3 R;
    Vec3 t;

    Vec3 apply(const Vec3& p) const { return (R * p) * s + t; }
};

}  // namespace t4dr
