#include "pgs/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "pgs/selector.hpp"

namespace pgs {

namespace {

struct ByteCursor {
    const std::vector<std::uint8_t>& bytes;
    std::size_t off = 0;

    bool eof() const { return off >= bytes.size(); }
    std::uint8_t peek() const { return bytes[off]; }

    [[noreturn]] void fail(const std::string& what) const {
        throw DecodeError("ppm: " + what + " at byte offset " + std::to_string(off));
    }

    static bool is_space(std::uint8_t c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    }

    // Whitespace and '#' comments between header tokens.
    void skip_separators() {
        while (!eof()) {
            if (is_space(peek())) {
                ++off;
            } else if (peek() == '#') {
                while (!eof() && peek() != '\n') ++off;
            } else {
                break;
            }
        }
    }

    int read_int(const char* field) {
        skip_separators();
        if (eof() || peek() < '0' || peek() > '9') fail(std::string("expected ") + field);
        long v = 0;
        while (!eof() && peek() >= '0' && peek() <= '9') {
            v = v * 10 + (peek() - '0');
            if (v > 1'000'000'000L) fail(std::string(field) + " out of range");
            ++off;
        }
        return static_cast<int>(v);
    }
};

}  // namespace

Image load_ppm(const std::vector<std::uint8_t>& bytes) {
    ByteCursor cur{bytes};
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') cur.fail("missing P6 magic");
    cur.off = 2;

    const int width = cur.read_int("width");
    const int height = cur.read_int("height");
    const int maxval = cur.read_int("maxval");
    if (width <= 0 || height <= 0) cur.fail("non-positive dimensions");
    if (maxval != 255) cur.fail("unsupported maxval " + std::to_string(maxval) + " (want 255)");

    // Exactly one whitespace byte separates the header from the payload.
    if (cur.eof() || !ByteCursor::is_space(cur.peek())) cur.fail("expected whitespace after maxval");
    ++cur.off;

    const std::size_t need = std::size_t(width) * height * 3;
    const std::size_t have = bytes.size() - cur.off;
    if (have < need) {
        throw DecodeError("ppm: truncated payload at byte offset " + std::to_string(cur.off) +
                          ": need " + std::to_string(need) + " bytes, have " + std::to_string(have));
    }

    Image img;
    img.width = width;
    img.height = height;
    img.data.assign(bytes.begin() + cur.off, bytes.begin() + cur.off + need);
    return img;
}

Image load_ppm_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DecodeError("ppm: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return load_ppm(bytes);
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
    char header[64];
    const int n = std::snprintf(header, sizeof header, "P6\n%d %d\n255\n", img.width, img.height);
    std::vector<std::uint8_t> out(header, header + n);
    out.insert(out.end(), img.data.begin(), img.data.end());
    return out;
}

void save_ppm_file(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DecodeError("ppm: cannot open " + path + " for writing");
    const auto bytes = encode_ppm(img);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

GrayImage to_grayscale(const Image& img) {
    GrayImage g;
    g.width = img.width;
    g.height = img.height;
    g.data.resize(std::size_t(img.width) * img.height);
    const std::uint8_t* p = img.data.data();
    for (double& out : g.data) {
        out = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        p += 3;
    }
    return g;
}

PatchGrid patchify(const Image& img, int patch_size) {
    if (patch_size <= 0) throw ConfigError("patchify: patch_size must be positive");
    if (patch_size > img.width || patch_size > img.height) {
        throw ConfigError("patchify: patch_size " + std::to_string(patch_size) +
                          " exceeds image " + std::to_string(img.width) + "x" +
                          std::to_string(img.height));
    }

    PatchGrid grid;
    grid.patch_size = patch_size;
    grid.grid_w = img.width / patch_size;
    grid.grid_h = img.height / patch_size;

    // Center-crop any remainder.
    const int x0 = (img.width - grid.grid_w * patch_size) / 2;
    const int y0 = (img.height - grid.grid_h * patch_size) / 2;

    grid.patches.reserve(std::size_t(grid.n_patches()));
    for (int gy = 0; gy < grid.grid_h; ++gy) {
        for (int gx = 0; gx < grid.grid_w; ++gx) {
            std::vector<std::uint8_t> patch;
            patch.reserve(std::size_t(grid.patch_dim()));
            for (int py = 0; py < patch_size; ++py) {
                const std::uint8_t* row = img.pixel(x0 + gx * patch_size, y0 + gy * patch_size + py);
                patch.insert(patch.end(), row, row + 3 * patch_size);
            }
            grid.patches.push_back(std::move(patch));
        }
    }
    return grid;
}

Image reassemble(const PatchGrid& grid) {
    Image img;
    img.width = grid.grid_w * grid.patch_size;
    img.height = grid.grid_h * grid.patch_size;
    img.data.resize(std::size_t(img.width) * img.height * 3);
    for (int gy = 0; gy < grid.grid_h; ++gy) {
        for (int gx = 0; gx < grid.grid_w; ++gx) {
            const auto& patch = grid.patches[std::size_t(gy) * grid.grid_w + gx];
            for (int py = 0; py < grid.patch_size; ++py) {
                std::uint8_t* dst = img.pixel(gx * grid.patch_size, gy * grid.patch_size + py);
                const std::uint8_t* src = patch.data() + std::size_t(py) * 3 * grid.patch_size;
                std::copy(src, src + 3 * grid.patch_size, dst);
            }
        }
    }
    return img;
}

GrayImage grid_to_grayscale(const PatchGrid& grid) {
    GrayImage g;
    g.width = grid.grid_w * grid.patch_size;
    g.height = grid.grid_h * grid.patch_size;
    g.data.resize(std::size_t(g.width) * g.height);
    for (int gy = 0; gy < grid.grid_h; ++gy) {
        for (int gx = 0; gx < grid.grid_w; ++gx) {
            const auto& patch = grid.patches[std::size_t(gy) * grid.grid_w + gx];
            for (int py = 0; py < grid.patch_size; ++py) {
                const std::uint8_t* src = patch.data() + std::size_t(py) * 3 * grid.patch_size;
                double* dst = &g.at(gx * grid.patch_size, gy * grid.patch_size + py);
                for (int px = 0; px < grid.patch_size; ++px) {
                    dst[px] = 0.299 * src[3 * px] + 0.587 * src[3 * px + 1] + 0.114 * src[3 * px + 2];
                }
            }
        }
    }
    return g;
}

Image render_mask_overlay(const Image& img, const MaskPlan& plan, double dim) {
    if (dim < 0.0 || dim > 1.0) throw ConfigError("overlay: dim must lie in [0, 1]");
    if (plan.grid_w <= 0 || plan.grid_h <= 0 || img.width % plan.grid_w != 0 ||
        img.height % plan.grid_h != 0 || img.width / plan.grid_w != img.height / plan.grid_h) {
        throw ShapeError("overlay: plan grid " + std::to_string(plan.grid_h) + "x" +
                         std::to_string(plan.grid_w) + " does not tile image " +
                         std::to_string(img.width) + "x" + std::to_string(img.height));
    }
    const int patch = img.width / plan.grid_w;

    Image out = img;
    for (int idx : plan.masked) {
        const int gy = idx / plan.grid_w;
        const int gx = idx % plan.grid_w;
        for (int py = 0; py < patch; ++py) {
            std::uint8_t* p = out.pixel(gx * patch, gy * patch + py);
            for (int i = 0; i < 3 * patch; ++i) {
                p[i] = static_cast<std::uint8_t>(std::lround(p[i] * dim));
            }
        }
    }
    return out;
}

}  // namespace pgs
