#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "artready/asset_model.hpp"

namespace artready {

enum class View { Front, Back, Left, Right, Top, Perspective };

std::string_view to_string(View view);
std::optional<View> view_from_string(std::string_view text);

/// Front/back look along +y/-y, left/right along +x/-x, top down -z;
/// the perspective camera sits on the (1, -1, 1) diagonal.
inline const std::vector<View> kCanonicalViews = {View::Front, View::Back, View::Left, View::Right,
                                                  View::Perspective};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  std::size_t lit_pixels() const;
};

struct RenderOptions {
  int width = 256;
  int height = 256;
};

/// Flat-shaded depth-buffered rasterization of every visual mesh (collision
/// meshes when a link has no visuals). Orthographic framing fits the
/// projected bounding box with 10% margin.
std::vector<Image> render_views(const AssetModel& model, const JointConfig& q, const std::vector<View>& views,
                                const RenderOptions& options = {});

std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace artready
