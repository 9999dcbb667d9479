#pragma once

#include <map>
#include <string>
#include <vector>

#include "t4dr/image.hpp"
#include "t4dr/se3.hpp"
#include "t4dr/tensor.hpp"

namespace t4dr {

struct ModelConfig {
    int patch = 8;
    int width = 64, height = 64;
    int in_channels = 8;
    int d_model = 64;        // c
    int n_heads = 4;
    int n_layers = 2;        // per decoder
    int n_state_tokens = 16; // r
    int d_state = 64;
    int c_prior = 32;        // 0 disables the prior branch
    int prior_layers = 1;
    int mlp_ratio = 2;
    int head_hidden = 64;
    double tau = 0.5;
    int max_people = 8;
    bool state_reads_prompts = true;  // prompts included in the state branch's cross-attention
    int body_joints = 12;
    int n_beta = 4;
    int n_alpha = 0;

    int grid_h() const { return height / patch; }
    int grid_w() const { return width / patch; }
    int tokens() const { return grid_h() * grid_w(); }
    int human_out_dim() const { return body_joints * 3 + n_beta + n_alpha + 7; }
    void validate() const;

    // paper-scale constants, exposed as a named preset
    static ModelConfig full_scale();
};

// named parameter tensors in deterministic (lexicographic) order
struct ParamStore {
    std::map<std::string, Tensor> params;

    Tensor& create(const std::string& name, Shape shape, Rng& rng, double stdev);
    Tensor& create_zeros(const std::string& name, Shape shape);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool has(const std::string& name) const { return params.count(name) > 0; }
};

class Model {
public:
    Model(ModelConfig cfg, uint64_t seed);

    ModelConfig cfg;
    ParamStore params;
    uint64_t seed = 0;
    int64_t train_step = 0;
    bool prior_trained = false;

    // per-patch linear embedding + learnable 2-d positional encoding
    Tensor tokenize(const Image& img) const;  // (hw, c)

    struct Detection {
        Tensor scores;            // (hw, 1) in (0,1)
        std::vector<int> patches; // threshold + 3x3 strict local maxima, row-major order
    };
    Detection detect_heads(const Tensor& F) const;

    // frozen human-centric tokenizer/encoder, full grid
    Tensor prior_tokens(const Image& img) const;  // (hw, c_prior)
    // spec surface: prior tokens gathered at the prompt patches
    Tensor prior_encode(const Image& img, const std::vector<int>& u) const;  // (n, c_prior)

    // concat(F^u, F_prior^u) -> projection MLP -> + source patch pos encoding
    Tensor build_prompts(const Tensor& F, const Tensor& prior_full,
                         const std::vector<int>& u) const;  // (n, c)

    struct DecodeOut {
        Tensor F;  // (hw, c)
        Tensor z;  // (1, c)
        Tensor H;  // (n, c) or undefined when no prompts
        Tensor S;  // (r, d_state) proposed state
        std::vector<double> state_attn;  // final state layer cross-attn, head mean, r x n_inputs
    };
    DecodeOut decoders_step(const Tensor& F, const Tensor& z, const Tensor& H,
                            const Tensor& S_prev) const;

    struct PointmapsOut {
        Tensor cam_pts;     // (H*W, 3)
        Tensor cam_conf;    // (H*W, 1), > 1
        Tensor world_pts;
        Tensor world_conf;
    };
    PointmapsOut head_pointmaps(const Tensor& Fp, const Tensor& zp) const;

    struct PoseOut {
        Tensor quat;   // (4) unit
        Tensor trans;  // (3)
        bool fallback = false;  // raw quaternion vanished, identity substituted
    };
    PoseOut head_pose(const Tensor& zp) const;

    struct HumanOut {
        Tensor theta;  // (K, 3)
        Tensor beta;   // (n_beta)
        Tensor alpha;  // (n_alpha)
        Tensor quat;   // (4) unit, camera-frame root
        Tensor trans;  // (3)
    };
    std::vector<HumanOut> head_human(const Tensor& Hp) const;

    Tensor head_mask(const Tensor& F) const;  // (H*W, 1) in (0,1), pixel-shuffled

    Tensor camera_token() const { return params.at("cam.token"); }
    Tensor initial_state() const { return params.at("state.init"); }
    Tensor patch_pos() const { return params.at("tok.pos"); }

    // names trained under the given freezing policy; the prior encoder is
    // always frozen during the main stage
    std::vector<std::string> trainable_names(bool freeze_backbone) const;
    std::vector<std::string> prior_names() const;
    void set_requires_grad(const std::vector<std::string>& names, bool value);

    void save_checkpoint(const std::string& dir) const;
    static Model load_checkpoint(const std::string& dir);

private:
    Tensor mlp2(const std::string& prefix, const Tensor& x) const;  // linear-GELU-linear
    Tensor attention(const std::string& prefix, const Tensor& q_in, const Tensor& kv_in,
                     std::vector<double>* attn_head_mean) const;
    Tensor patch_matrix(const Image& img) const;  // (hw, p*p*C)
    void init_params();
};

// pixel-shuffle index: row pixel_y*W + pixel_x <- patch-major row
// patch_idx*p*p + k with pixel (py*p + k/p, px*p + k%p)
std::vector<int64_t> pixel_shuffle_index(int grid_w, int grid_h, int patch);

}  // namespace t4dr
