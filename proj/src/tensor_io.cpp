#include "t4dr/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "t4dr/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "t4dr container i/o assumes a little-endian host");

namespace t4dr {

namespace {
constexpr char kMagic[4] = {'T', '4', 'D', 'R'};
constexpr uint8_t kVersion = 1;
constexpr uint8_t kDtypeF64 = 0;
}  // namespace

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(path, "cannot open for writing");
    f.write(kMagic, 4);
    f.put(static_cast<char>(kVersion));
    f.put(static_cast<char>(kDtypeF64));
    uint32_t rank = static_cast<uint32_t>(t.rank());
    f.write(reinterpret_cast<const char*>(&rank), 4);
    for (int i = 0; i < t.rank(); ++i) {
        uint64_t d = static_cast<uint64_t>(t.dim(i));
        f.write(reinterpret_cast<const char*>(&d), 8);
    }
    f.write(reinterpret_cast<const char*>(t.data().data()),
            static_cast<std::streamsize>(t.numel() * 8));
    if (!f) throw IoError(path, "write failed");
}

Tensor load_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(path, "cannot open for reading");
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0) throw IoError(path, "bad magic");
    uint8_t version = static_cast<uint8_t>(f.get());
    uint8_t dtype = static_cast<uint8_t>(f.get());
    if (version != kVersion) throw IoError(path, "unsupported version " + std::to_string(version));
    if (dtype != kDtypeF64) throw IoError(path, "unsupported dtype " + std::to_string(dtype));
    uint32_t rank = 0;
    f.read(reinterpret_cast<char*>(&rank), 4);
    if (!f || rank > 16) throw IoError(path, "bad rank");
    Shape shape(rank);
    int64_t numel = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        uint64_t d = 0;
        f.read(reinterpret_cast<char*>(&d), 8);
        shape[i] = static_cast<int64_t>(d);
        numel *= shape[i];
    }
    std::vector<double> data(static_cast<size_t>(numel));
    f.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(numel * 8));
    if (!f) throw IoError(path, "truncated payload");
    return Tensor::from(std::move(shape), std::move(data));
}

}  // namespace t4dr
