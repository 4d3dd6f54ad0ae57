// Minimal flat-shaded rasterizer for the canonical views. One directional
// light sits up and to the left of each camera; shading is two-sided
// ambient 0.2 + diffuse 0.8 on a black background.

#include "artready/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "artready/error.hpp"
#include "artready/mesh.hpp"
#include "artready/text.hpp"

namespace artready {

std::string_view to_string(View view) {
  switch (view) {
    case View::Front: return "front";
    case View::Back: return "back";
    case View::Left: return "left";
    case View::Right: return "right";
    case View::Top: return "top";
    case View::Perspective: return "perspective";
  }
  return "front";
}

std::optional<View> view_from_string(std::string_view text) {
  for (auto v : {View::Front, View::Back, View::Left, View::Right, View::Top, View::Perspective}) {
    if (to_string(v) == to_lower(text)) return v;
  }
  return std::nullopt;
}

std::size_t Image::lit_pixels() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 2 < rgb.size(); i += 3) {
    if (rgb[i] || rgb[i + 1] || rgb[i + 2]) ++n;
  }
  return n;
}

namespace {

struct Colored {
  TriMesh mesh;
  Vec3 color;
};

struct Camera {
  Vec3 forward;
  Vec3 up;
  Vec3 right;
  bool perspective = false;
  Vec3 eye = Vec3::Zero();
  double focal = 1.0;  // perspective: image-plane scale
  Vec3 center = Vec3::Zero();
  double half = 1.0;   // orthographic half-extent in metres
};

Camera axis_camera(View view) {
  Camera c;
  switch (view) {
    case View::Front: c.forward = Vec3::UnitY(); c.up = Vec3::UnitZ(); break;
    case View::Back: c.forward = -Vec3::UnitY(); c.up = Vec3::UnitZ(); break;
    case View::Left: c.forward = Vec3::UnitX(); c.up = Vec3::UnitZ(); break;
    case View::Right: c.forward = -Vec3::UnitX(); c.up = Vec3::UnitZ(); break;
    case View::Top: c.forward = -Vec3::UnitZ(); c.up = Vec3::UnitY(); break;
    case View::Perspective:
      c.forward = -Vec3(1, -1, 1).normalized();
      c.up = Vec3::UnitZ();
      c.perspective = true;
      break;
  }
  c.right = c.forward.cross(c.up).normalized();
  c.up = c.right.cross(c.forward).normalized();
  return c;
}

std::vector<Colored> scene(const AssetModel& model, const JointConfig& q) {
  const auto poses = forward_kinematics(model, q);
  std::vector<Colored> out;
  for (const auto& link : model.links) {
    const auto& refs = link.visual_meshes.empty() ? link.collision_meshes : link.visual_meshes;
    for (const auto& ref : refs) {
      Colored c;
      c.mesh = transform_mesh(load_mesh_ref(model, ref), poses.at(link.name));
      c.color = ref.rgba ? Vec3((*ref.rgba)[0], (*ref.rgba)[1], (*ref.rgba)[2]) : Vec3(0.7, 0.7, 0.7);
      out.push_back(std::move(c));
    }
  }
  return out;
}

Image rasterize(const std::vector<Colored>& items, Camera cam, const RenderOptions& opt) {
  Image img;
  img.width = opt.width;
  img.height = opt.height;
  img.rgb.assign(static_cast<std::size_t>(opt.width) * opt.height * 3, 0);
  std::vector<double> depth(static_cast<std::size_t>(opt.width) * opt.height, std::numeric_limits<double>::infinity());

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& it : items) {
    for (const auto& v : it.mesh.vertices) lo = lo.cwiseMin(v), hi = hi.cwiseMax(v);
  }
  if (!(lo.array() <= hi.array()).all()) return img;
  cam.center = (lo + hi) / 2.0;
  const double aspect = static_cast<double>(opt.width) / opt.height;
  if (cam.perspective) {
    const double radius = std::max((hi - lo).norm() / 2.0, 1e-9);
    const double fov = 40.0 * M_PI / 180.0;
    cam.eye = cam.center - cam.forward * (radius * 1.1 / std::sin(fov / 2.0));
    cam.focal = 1.0 / std::tan(fov / 2.0);
  } else {
    double half = 0.0;
    for (int i = 0; i < 8; ++i) {
      const Vec3 corner((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
      const Vec3 d = corner - cam.center;
      half = std::max({half, std::abs(d.dot(cam.right)) / aspect, std::abs(d.dot(cam.up))});
    }
    cam.half = std::max(half * 1.1, 1e-9);
  }
  const Vec3 light = (-cam.forward + 0.5 * cam.up - 0.3 * cam.right).normalized();

  // Screen coordinates in pixels plus view depth.
  const auto project = [&](const Vec3& p) -> Vec3 {
    double sx, sy, z;
    if (cam.perspective) {
      const Vec3 d = p - cam.eye;
      z = d.dot(cam.forward);
      if (z <= 1e-9) return Vec3(std::nan(""), 0, 0);
      sx = cam.focal * d.dot(cam.right) / z / aspect;
      sy = cam.focal * d.dot(cam.up) / z;
    } else {
      const Vec3 d = p - cam.center;
      z = d.dot(cam.forward);
      sx = d.dot(cam.right) / (cam.half * aspect);
      sy = d.dot(cam.up) / cam.half;
    }
    return {(sx + 1.0) * 0.5 * opt.width, (1.0 - sy) * 0.5 * opt.height, z};
  };

  for (const auto& it : items) {
    for (const auto& t : it.mesh.triangles) {
      const Vec3& a = it.mesh.vertices[t[0]];
      const Vec3& b = it.mesh.vertices[t[1]];
      const Vec3& c = it.mesh.vertices[t[2]];
      const Vec3 n = (b - a).cross(c - a).normalized();
      const double shade = 0.2 + 0.8 * std::abs(n.dot(light));
      const Vec3 col = (it.color * shade).cwiseMin(Vec3::Ones()) * 255.0;
      std::array<std::uint8_t, 3> px{};
      for (int k = 0; k < 3; ++k) px[k] = static_cast<std::uint8_t>(std::max(1.0, std::round(col[k])));

      const Vec3 p0 = project(a), p1 = project(b), p2 = project(c);
      if (!p0.allFinite() || !p1.allFinite() || !p2.allFinite()) continue;
      const double area = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p1.y() - p0.y()) * (p2.x() - p0.x());
      if (std::abs(area) < 1e-12) continue;
      const int x0 = std::max(0, static_cast<int>(std::floor(std::min({p0.x(), p1.x(), p2.x()}))));
      const int x1 = std::min(opt.width - 1, static_cast<int>(std::ceil(std::max({p0.x(), p1.x(), p2.x()}))));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min({p0.y(), p1.y(), p2.y()}))));
      const int y1 = std::min(opt.height - 1, static_cast<int>(std::ceil(std::max({p0.y(), p1.y(), p2.y()}))));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double px_ = x + 0.5, py_ = y + 0.5;
          double w0 = (p1.x() - px_) * (p2.y() - py_) - (p1.y() - py_) * (p2.x() - px_);
          double w1 = (p2.x() - px_) * (p0.y() - py_) - (p2.y() - py_) * (p0.x() - px_);
          double w2 = (p0.x() - px_) * (p1.y() - py_) - (p0.y() - py_) * (p1.x() - px_);
          w0 /= area, w1 /= area, w2 /= area;
          if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
          const double z = w0 * p0.z() + w1 * p1.z() + w2 * p2.z();
          const std::size_t idx = static_cast<std::size_t>(y) * opt.width + x;
          if (z >= depth[idx]) continue;
          depth[idx] = z;
          std::copy(px.begin(), px.end(), img.rgb.begin() + static_cast<std::ptrdiff_t>(idx * 3));
        }
      }
    }
  }
  return img;
}

void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

}  // namespace

std::vector<Image> render_views(const AssetModel& model, const JointConfig& q, const std::vector<View>& views,
                                const RenderOptions& options) {
  if (options.width <= 0 || options.height <= 0) throw Error(ErrorKind::InvalidArgument, "image size must be positive");
  const auto items = scene(model, q);
  std::vector<Image> out;
  for (View v : views) out.push_back(rasterize(items, axis_camera(v), options));
  return out;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorKind::Io, "png writer unavailable");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "png encoding failed");
  }
  png_set_write_fn(png, &out, png_append, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, image.rgb.data() + static_cast<std::size_t>(y) * image.width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  write_file(path.string(), std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace artready
