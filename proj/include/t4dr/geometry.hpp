#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "t4dr/se3.hpp"

namespace t4dr {

struct CameraIntrinsics {
    double fx = 1, fy = 1, cx = 0, cy = 0;
};

// Pixel-aligned 3D points with per-pixel confidence. Index layout is v*w + u
// (row-major, u = column, v = row); pixel (u,v) has continuous image
// coordinates exactly (u, v).
struct Pointmap {
    int w = 0, h = 0;
    std::vector<Vec3> pts;
    std::vector<double> conf;
    std::vector<uint8_t> valid;

    int64_t size() const { return static_cast<int64_t>(w) * h; }
    int64_t idx(int u, int v) const { return static_cast<int64_t>(v) * w + u; }
};

// Per-pixel back-projection of a depth map; points end up in the frame reached
// by T (camera frame for T = identity). Nonpositive depths are marked invalid.
Pointmap unproject(const std::vector<double>& depth, int w, int h, const CameraIntrinsics& c,
                   const SE3Pose& T);

// Perspective projection into pixel coordinates; z_cam is returned for
// visibility tests. T maps camera to the frame p lives in.
struct Projected {
    double u = 0, v = 0, z = 0;
};
Projected project(const Vec3& p, const CameraIntrinsics& c, const SE3Pose& T);

// Recovers the shared focal length of a camera-frame pointmap by iteratively
// reweighted least squares on the pixel-alignment residuals.
double weiszfeld_focal(const Pointmap& cam_pm, double cx, double cy);

// Least-squares similarity (or rigid, with_scale = false) transform mapping
// src onto dst. Throws DegenerateConfiguration when the covariance has rank
// below 2.
Sim3 umeyama(const std::vector<Vec3>& src, const std::vector<Vec3>& dst, bool with_scale);

enum class AlignMode { ProcrustesSim, Rigid };
std::vector<Vec3> align_joints(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
                               AlignMode mode);

// trajectory files: JSON Lines, one {t, qw..qz, tx..tz} record per frame
void save_trajectory(const std::string& path, const std::vector<SE3Pose>& traj);
std::vector<SE3Pose> load_trajectory(const std::string& path);

// binary PLY with a per-vertex confidence property; invalid pixels are skipped
void save_pointmap_ply(const std::string& path, const Pointmap& pm);

}  // namespace t4dr
