#pragma once
// Independent reference implementations used only by the test suites.

#include <cstdint>
#include <vector>

#include "rop/annot.hpp"
#include "rop/enhance.hpp"
#include "rop/imgcore.hpp"
#include "rop/rng.hpp"

namespace oracle {

/// Classic PNPOLY crossing test.
bool inside_even_odd(const std::vector<rop::Point>& poly, double px, double py);

/// Clamp vertices to the image rectangle, then test every pixel center.
rop::BinaryMask rasterize(const rop::AnnotatedPolygon& poly, int width, int height);

/// AP as sum over true positives at rank k of (1 / num_gt) * max precision at ranks >= k.
/// `flags` must already be in ranked order.
double envelope_ap(const std::vector<bool>& flags, std::size_t num_gt);

/// Straight-line CLAHE following the documented rules pixel by pixel.
rop::GrayImage clahe(const rop::GrayImage& img, int tiles_x, int tiles_y, double clip_limit);

/// Half-pixel bilinear resize evaluated one output pixel at a time.
rop::GrayImage resize(const rop::GrayImage& img, int out_w, int out_h);

/// Maximum number of true positives any one-to-one assignment could reach.
std::size_t best_assignment_tp(const std::vector<std::vector<double>>& iou, double threshold);

rop::GrayImage random_image(rop::SplitMix64& rng, int w, int h);
rop::BinaryMask random_mask(rop::SplitMix64& rng, int w, int h, double density);

}  // namespace oracle
