#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgs/errors.hpp"

namespace pgs {

struct MaskPlan;  // selector.hpp

// 8-bit RGB raster, row-major, interleaved channels.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // width * height * 3

    std::uint8_t* pixel(int x, int y) { return data.data() + 3 * (std::size_t(y) * width + x); }
    const std::uint8_t* pixel(int x, int y) const {
        return data.data() + 3 * (std::size_t(y) * width + x);
    }
};

// Single luminance plane, values in [0, 255].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // width * height

    double at(int x, int y) const { return data[std::size_t(y) * width + x]; }
    double& at(int x, int y) { return data[std::size_t(y) * width + x]; }
};

// Row-major grid of flattened patches. Each patch is patch_size^2 * 3
// interleaved RGB samples in patch-row-major order.
struct PatchGrid {
    int grid_h = 0;
    int grid_w = 0;
    int patch_size = 0;
    std::vector<std::vector<std::uint8_t>> patches;

    int n_patches() const { return grid_h * grid_w; }
    int patch_dim() const { return patch_size * patch_size * 3; }
};

// Binary PPM (P6, maxval 255). Decode errors name the offending byte offset.
Image load_ppm(const std::vector<std::uint8_t>& bytes);
Image load_ppm_file(const std::string& path);
std::vector<std::uint8_t> encode_ppm(const Image& img);
void save_ppm_file(const std::string& path, const Image& img);

// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
GrayImage to_grayscale(const Image& img);

// Splits into patch_size x patch_size tiles, center-cropping when the
// dimensions are not divisible. Pixels are copied untransformed.
PatchGrid patchify(const Image& img, int patch_size);

// Inverse of patchify over the cropped region; bit-exact.
Image reassemble(const PatchGrid& grid);

// Gray plane of the reassembled grid, without materializing the Image.
GrayImage grid_to_grayscale(const PatchGrid& grid);

// Darkens masked patches by `dim` (rounded to nearest), leaves the rest alone.
Image render_mask_overlay(const Image& img, const MaskPlan& plan, double dim);

}  // namespace pgs
