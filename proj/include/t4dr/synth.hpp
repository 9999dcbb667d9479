#pragma once

#include <optional>
#include <string>
#include <vector>

#include "t4dr/body.hpp"
#include "t4dr/geometry.hpp"
#include "t4dr/image.hpp"
#include "t4dr/rng.hpp"

namespace t4dr {

// Procedural box-world scenes with articulated bodies and a smooth camera.
// Pseudo-image channels: normalized inverse depth, camera-frame surface
// normal xyz, then one one-hot rasterization channel per person slot.
constexpr int kMaxPeopleSlots = 4;
constexpr int kImageChannels = 4 + kMaxPeopleSlots;

struct SceneConfig {
    int frames = 16;
    int width = 64, height = 64;
    int n_people_min = 1, n_people_max = 2;  // clamped to [1, kMaxPeopleSlots]
    int n_boxes = 3;
    double ground_extent = 4.0;
    double focal_min = 52.0, focal_max = 80.0;
    double theta_amplitude = 0.5;
    uint64_t body_seed = 7;

    void validate() const;
};

struct GenConfig {
    SceneConfig scene;
    int sequences = 20;
    int val_sequences = 0;  // taken from the tail
    uint64_t seed = 1;
    int workers = 1;
};

// spline-driven specification of one sequence, deterministic from its seed
struct PersonTrack {
    std::vector<double> beta;
    std::vector<SE3Pose> root_world;     // per frame
    std::vector<std::vector<Vec3>> theta;  // per frame, K rows
};

struct SceneSpec {
    uint64_t seed = 0;
    SceneConfig cfg;
    CameraIntrinsics intr;
    std::vector<SE3Pose> camera;  // per frame
    std::vector<PersonTrack> people;
    struct Box {
        Vec3 lo, hi;
    };
    std::vector<Box> boxes;
    double room_extent = 4.0, room_height = 3.0;
};

SceneSpec make_scene(uint64_t seed, const SceneConfig& cfg);

// C2 position spline through seeded waypoints with a look-at orientation;
// consecutive-frame rotation stays under 0.2 rad
std::vector<SE3Pose> camera_path(uint64_t seed, int frames, const SceneConfig& cfg);

struct FramePersonGt {
    int slot = 0;
    BodyParams params;          // both roots populated, world authoritative
    bool head_visible = false;
    int head_patch_x = -1, head_patch_y = -1;  // patch column/row (p=8 grid)
    double head_px_u = 0, head_px_v = 0;
    Vec3 head_joint_world;
};

struct FrameGt {
    SE3Pose T;      // camera pose, camera-to-world
    double focal = 0;
    std::vector<double> depth;  // H*W metric
    Image image;                // kImageChannels x H x W
    std::vector<FramePersonGt> people;
    std::vector<double> body_mask;  // H*W in {0,1}

    Pointmap cam_points(const CameraIntrinsics& c) const;
    Pointmap world_points(const CameraIntrinsics& c) const;
    CameraIntrinsics intrinsics(int w, int h) const;
};

struct RasterOut {
    std::vector<double> depth;       // body-only z-buffer composited by caller
    std::vector<int> person;         // -1 where no body
    std::vector<Vec3> normal_world;
};

// z-buffered triangle rasterization of posed bodies at scale x supersampling
RasterOut rasterize_bodies(const std::vector<BodyMesh>& meshes,
                           const std::vector<std::array<int, 3>>& faces,
                           const CameraIntrinsics& intr, const SE3Pose& cam, int w, int h,
                           int scale = 1);

// full per-frame ground truth (raycast world + rasterized bodies + labels);
// patch size fixes the head-label grid
FrameGt render_frame(const SceneSpec& spec, const BodyTemplate& tpl, int t, int patch);

// dataset layout: manifest.json + body_template/ + seq_%04d/frame_%04d.{t4dr,json}
void generate(const std::string& out_dir, const GenConfig& cfg);

// ----- dataset access -----------------------------------------------------------

struct DatasetIndex {
    std::string dir;
    GenConfig cfg;
    std::vector<std::string> train, val;         // sequence directory names
    BodyTemplate body;
    int frames = 0, width = 0, height = 0;

    std::string seq_dir(const std::string& name) const { return dir + "/" + name; }
};

DatasetIndex load_dataset(const std::string& dir);
FrameGt load_frame(const DatasetIndex& ds, const std::string& seq, int t, int patch);

}  // namespace t4dr
