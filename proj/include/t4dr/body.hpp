#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "t4dr/se3.hpp"
#include "t4dr/tensor.hpp"

namespace t4dr {

// Simplified SMPL-X-style template: shape blendshapes, a kinematic tree and
// linear blend skinning over a procedurally generated capsule-limb humanoid.
struct BodyTemplate {
    int V = 0, K = 0;
    int n_beta = 0, n_alpha = 0;
    uint64_t seed = 0;
    int head_joint = 0;
    std::vector<Vec3> template_verts;              // V
    std::vector<double> shape_basis;               // V*3*n_beta, [(v*3+c)*n_beta + b]
    std::vector<double> expr_basis;                // V*3*n_alpha
    std::vector<double> joint_regressor;           // K*V, rows sum to 1
    std::vector<double> skin_weights;              // V*K, rows sum to 1, >= 0
    std::vector<int> parents;                      // parents[0] = -1
    std::vector<std::array<int, 3>> faces;

    // deterministic desk-scale humanoid
    static BodyTemplate procedural(uint64_t seed, int V = 64, int K = 12, int n_beta = 4,
                                   int n_alpha = 0);

    std::vector<Vec3> rest_joints() const;
};

// Full-scale model constants, exposed as a named preset (the desk build never
// instantiates a template this large).
struct FullScalePreset {
    static constexpr int V = 10475;
    static constexpr int K = 54;
    static constexpr int n_beta = 10;
    static constexpr int n_alpha = 10;
};

enum class RootFrame { World, Cam };

struct BodyParams {
    std::vector<Vec3> theta;    // K axis-angle rows; row 0 is unused, the root
                                // rotation is carried by the rigid root pose
    std::vector<double> beta;
    std::vector<double> alpha;
    SE3Pose root_world;
    SE3Pose root_cam;
    RootFrame authoritative = RootFrame::World;

    const SE3Pose& root() const { return authoritative == RootFrame::World ? root_world : root_cam; }
};

struct BodyMesh {
    std::vector<Vec3> verts;
    std::vector<Vec3> joints;
};

// axis-angle to rotation matrix, Taylor branch near zero
Mat3 rodrigues(const Vec3& aa);

BodyMesh pose_body(const BodyTemplate& tpl, const BodyParams& p);

// world root from camera pose and camera-frame root: P = T * P_cam
SE3Pose compose_root(const SE3Pose& T, const SE3Pose& p_cam);
// exact inverse given T
SE3Pose decompose_root(const SE3Pose& p_world, const SE3Pose& T);

// Differentiable posing on the tensor graph; used by the mesh/reprojection
// losses. theta (K,3), beta (n_beta), alpha (n_alpha or empty), root_quat (4)
// unit-normalized, root_trans (3). Matches pose_body bit-for-near.
struct PosedBodyGraph {
    Tensor verts;   // (V,3)
    Tensor joints;  // (K,3)
};
PosedBodyGraph pose_body_graph(const BodyTemplate& tpl, const Tensor& theta, const Tensor& beta,
                               const Tensor& alpha, const Tensor& root_quat,
                               const Tensor& root_trans);

// template directory: header.json + one T4DR tensor per field
void save_template(const std::string& dir, const BodyTemplate& tpl);
BodyTemplate load_template(const std::string& dir);

void save_obj(const std::string& path, const std::vector<Vec3>& verts,
              const std::vector<std::array<int, 3>>& faces);

}  // namespace t4dr
