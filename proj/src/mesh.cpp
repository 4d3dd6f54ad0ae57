#include "artready/mesh.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <unordered_map>

#include "artready/error.hpp"
#include "artready/text.hpp"

namespace artready {

std::string_view to_string(VolumeSource source) {
  return source == VolumeSource::Exact ? "exact" : "bbox-estimate";
}

namespace {

int obj_index(const std::string& token, int vertex_count) {
  const auto slash = token.find('/');
  const auto head = token.substr(0, slash);
  const auto v = parse_number(head);
  if (!v || *v == 0.0 || *v != std::floor(*v)) throw Error(ErrorKind::MeshFormat, "bad face index '" + token + "'");
  const int i = static_cast<int>(*v);
  const int idx = i > 0 ? i - 1 : vertex_count + i;
  if (idx < 0 || idx >= vertex_count) throw Error(ErrorKind::MeshFormat, "face index out of range '" + token + "'");
  return idx;
}

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  size_t operator()(const CellKey& k) const {
    std::uint64_t h = 1469598103934665603ull;
    for (std::int64_t v : {k.x, k.y, k.z}) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 1099511628211ull;
    }
    return h;
  }
};

}  // namespace

TriMesh parse_obj(std::string_view text) {
  TriMesh mesh;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const auto f = split_ws(raw);
    if (f.empty()) continue;
    if (f[0] == "v") {
      if (f.size() < 4) throw Error(ErrorKind::MeshFormat, "vertex needs 3 coordinates", "line " + std::to_string(line_no));
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        const auto d = parse_number(f[k + 1]);
        if (!d) throw Error(ErrorKind::MeshFormat, "bad vertex coordinate", "line " + std::to_string(line_no));
        p[k] = *d;
      }
      mesh.vertices.push_back(p);
    } else if (f[0] == "f") {
      if (f.size() < 4) throw Error(ErrorKind::MeshFormat, "face needs 3 vertices", "line " + std::to_string(line_no));
      const int n = static_cast<int>(mesh.vertices.size());
      const int a = obj_index(f[1], n);
      for (size_t k = 2; k + 1 < f.size(); ++k) {
        mesh.triangles.push_back({a, obj_index(f[k], n), obj_index(f[k + 1], n)});
      }
    }
  }
  return mesh;
}

TriMesh parse_stl(std::string_view bytes) {
  TriMesh mesh;
  if (bytes.size() >= 84) {
    std::uint32_t count = 0;
    std::memcpy(&count, bytes.data() + 80, 4);
    if (84 + 50ull * count == bytes.size()) {
      for (std::uint32_t t = 0; t < count; ++t) {
        const char* rec = bytes.data() + 84 + 50ull * t;
        std::array<int, 3> tri{};
        for (int v = 0; v < 3; ++v) {
          float xyz[3];
          std::memcpy(xyz, rec + 12 + 12 * v, 12);
          tri[v] = static_cast<int>(mesh.vertices.size());
          mesh.vertices.emplace_back(xyz[0], xyz[1], xyz[2]);
        }
        mesh.triangles.push_back(tri);
      }
      return mesh;
    }
  }
  const auto tokens = split_ws(bytes);
  if (tokens.empty() || to_lower(tokens[0]) != "solid") throw Error(ErrorKind::MeshFormat, "not a binary or ASCII STL");
  std::vector<int> pending;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] != "vertex") continue;
    if (i + 3 >= tokens.size()) throw Error(ErrorKind::MeshFormat, "truncated STL vertex");
    Vec3 p;
    for (int k = 0; k < 3; ++k) {
      const auto d = parse_number(tokens[i + 1 + k]);
      if (!d) throw Error(ErrorKind::MeshFormat, "bad STL vertex coordinate");
      p[k] = *d;
    }
    pending.push_back(static_cast<int>(mesh.vertices.size()));
    mesh.vertices.push_back(p);
    if (pending.size() == 3) {
      mesh.triangles.push_back({pending[0], pending[1], pending[2]});
      pending.clear();
    }
    i += 3;
  }
  return mesh;
}

TriMesh clean_mesh(const TriMesh& mesh, double weld, double min_area) {
  std::unordered_map<CellKey, std::vector<int>, CellHash> grid;
  std::vector<int> remap(mesh.vertices.size(), -1);
  TriMesh out;
  const auto cell_of = [&](const Vec3& p) {
    return CellKey{static_cast<std::int64_t>(std::floor(p.x() / weld)), static_cast<std::int64_t>(std::floor(p.y() / weld)),
                   static_cast<std::int64_t>(std::floor(p.z() / weld))};
  };
  const auto weld_vertex = [&](int original) {
    if (remap[original] >= 0) return remap[original];
    const Vec3& p = mesh.vertices[original];
    const CellKey c = cell_of(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == grid.end()) continue;
          for (int cand : it->second) {
            if ((out.vertices[cand] - p).norm() <= weld) return remap[original] = cand;
          }
        }
      }
    }
    const int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back(p);
    grid[c].push_back(id);
    return remap[original] = id;
  };
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= static_cast<int>(mesh.vertices.size()))
        throw Error(ErrorKind::MeshFormat, "triangle index out of range");
      if (!mesh.vertices[t[k]].allFinite()) throw Error(ErrorKind::MeshFormat, "non-finite vertex");
    }
    const std::array<int, 3> w{weld_vertex(t[0]), weld_vertex(t[1]), weld_vertex(t[2])};
    if (w[0] == w[1] || w[1] == w[2] || w[0] == w[2]) continue;
    const double area = 0.5 * (out.vertices[w[1]] - out.vertices[w[0]]).cross(out.vertices[w[2]] - out.vertices[w[0]]).norm();
    if (area < min_area) continue;
    out.triangles.push_back(w);
  }
  // Drop vertices that only belonged to discarded triangles.
  std::vector<int> used(out.vertices.size(), -1);
  TriMesh compact;
  for (auto& t : out.triangles) {
    std::array<int, 3> n{};
    for (int k = 0; k < 3; ++k) {
      if (used[t[k]] < 0) {
        used[t[k]] = static_cast<int>(compact.vertices.size());
        compact.vertices.push_back(out.vertices[t[k]]);
      }
      n[k] = used[t[k]];
    }
    compact.triangles.push_back(n);
  }
  return compact;
}

TriMesh load_mesh(const std::filesystem::path& path) {
  const std::string ext = to_lower(path.extension().string());
  if (ext != ".obj" && ext != ".stl") throw Error(ErrorKind::MeshFormat, "unsupported mesh extension '" + ext + "'", path.string());
  std::string data;
  try {
    data = read_file(path.string());
  } catch (const Error&) {
    throw Error(ErrorKind::MeshIo, "cannot read mesh", path.string());
  }
  TriMesh raw;
  try {
    raw = ext == ".obj" ? parse_obj(data) : parse_stl(data);
  } catch (const Error& e) {
    throw Error(e.kind(), e.what(), path.string());
  }
  TriMesh mesh = clean_mesh(raw);
  if (mesh.empty()) throw Error(ErrorKind::EmptyMesh, "mesh has no usable triangles", path.string());
  return mesh;
}

MeshAnalysis analyze_mesh(const TriMesh& mesh) {
  if (mesh.empty()) throw Error(ErrorKind::EmptyMesh, "cannot analyze an empty mesh");
  MeshAnalysis a;
  a.bbox_min = Vec3::Constant(std::numeric_limits<double>::infinity());
  a.bbox_max = -a.bbox_min;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      a.bbox_min = a.bbox_min.cwiseMin(mesh.vertices[t[k]]);
      a.bbox_max = a.bbox_max.cwiseMax(mesh.vertices[t[k]]);
    }
  }

  // Directed-edge bookkeeping: closed and consistently oriented means every
  // directed edge occurs once and its reverse occurs once.
  std::unordered_map<std::uint64_t, int> directed;
  const auto key = [](int a0, int b0) { return (static_cast<std::uint64_t>(a0) << 32) | static_cast<std::uint32_t>(b0); };
  double signed_volume = 0.0;
  Vec3 moment = Vec3::Zero();
  // Accumulate relative to the bbox center to keep the sums well conditioned.
  const Vec3 ref = 0.5 * (a.bbox_min + a.bbox_max);
  for (const auto& t : mesh.triangles) {
    const Vec3 p0 = mesh.vertices[t[0]] - ref;
    const Vec3 p1 = mesh.vertices[t[1]] - ref;
    const Vec3 p2 = mesh.vertices[t[2]] - ref;
    a.surface_area += 0.5 * (p1 - p0).cross(p2 - p0).norm();
    const double v = p0.dot(p1.cross(p2)) / 6.0;
    signed_volume += v;
    moment += v * (p0 + p1 + p2) / 4.0;
    for (int k = 0; k < 3; ++k) ++directed[key(t[k], t[(k + 1) % 3])];
  }
  bool closed = true;
  for (const auto& [k, count] : directed) {
    const int from = static_cast<int>(k >> 32);
    const int to = static_cast<int>(k & 0xffffffffu);
    const auto rev = directed.find(key(to, from));
    if (count != 1 || rev == directed.end() || rev->second != 1) {
      closed = false;
      break;
    }
  }
  const Vec3 ext = a.extents();
  if (closed && std::abs(signed_volume) > 1e-18) {
    a.watertight = true;
    a.volume = std::abs(signed_volume);
    a.center_of_mass = ref + moment / signed_volume;
    a.volume_source = VolumeSource::Exact;
  } else {
    a.watertight = false;
    a.volume = ext.x() * ext.y() * ext.z();
    a.center_of_mass = ref;
    a.volume_source = VolumeSource::BboxEstimate;
  }
  return a;
}

TriMesh transform_mesh(const TriMesh& mesh, const Transform& pose, const Triple& scale) {
  TriMesh out = mesh;
  const Vec3 s = to_vec(scale);
  for (auto& v : out.vertices) v = pose * v.cwiseProduct(s);
  // A mirroring scale flips orientation; restore outward winding.
  if (s.x() * s.y() * s.z() * pose.linear().determinant() < 0.0) {
    for (auto& t : out.triangles) std::swap(t[1], t[2]);
  }
  return out;
}

TriMesh merge_meshes(const std::vector<TriMesh>& meshes) {
  TriMesh out;
  for (const auto& m : meshes) {
    const int offset = static_cast<int>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), m.vertices.begin(), m.vertices.end());
    for (const auto& t : m.triangles) out.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
  }
  return out;
}

TriMesh load_mesh_ref(const AssetModel& model, const MeshRef& ref) {
  return transform_mesh(load_mesh(model.resolve(ref.filename)), ref.origin.transform(), ref.scale);
}

TriMesh link_geometry(const AssetModel& model, const LinkSpec& link) {
  const auto& refs = link.collision_meshes.empty() ? link.visual_meshes : link.collision_meshes;
  std::vector<TriMesh> parts;
  for (const auto& r : refs) parts.push_back(load_mesh_ref(model, r));
  return merge_meshes(parts);
}

std::map<std::string, MeshAnalysis> analyze_links(const AssetModel& model) {
  std::map<std::string, MeshAnalysis> out;
  for (const auto& link : model.links) {
    const TriMesh geometry = link_geometry(model, link);
    if (!geometry.empty()) out.emplace(link.name, analyze_mesh(geometry));
  }
  return out;
}

}  // namespace artready
