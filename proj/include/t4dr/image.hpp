#pragma once

#include <cstdint>
#include <vector>

namespace t4dr {

// channel-major (CHW) grid of doubles
struct Image {
    int w = 0, h = 0, c = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w_, int h_, int c_) : w(w_), h(h_), c(c_), data(static_cast<size_t>(w_) * h_ * c_, 0.0) {}

    double& at(int ch, int x, int y) { return data[(static_cast<size_t>(ch) * h + y) * w + x]; }
    double at(int ch, int x, int y) const { return data[(static_cast<size_t>(ch) * h + y) * w + x]; }
};

}  // namespace t4dr
