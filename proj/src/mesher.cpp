#include "semsurf/mesher.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "semsurf/kdtree.hpp"
#include "semsurf/parallel.hpp"

namespace semsurf {

namespace {

// Corner layout (Lorensen/Bourke): 0..3 ring on the lower z face starting at
// the cube origin, 4..7 the matching ring at z+1. Bit i is set when the
// corner is inside (d < 0).
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

}  // namespace

LabeledMesh extract_mesh(const SdfSampler& sdf, const Aabb& bbox, int resolution,
                         const LabelSampler* labeler) {
  if (resolution < 8) throw input_error("extract_mesh: resolution must be >= 8");
  const int n = resolution + 1;  // lattice points per axis
  const Vec3 step = bbox.extent() / resolution;

  auto lattice_point = [&](int ix, int iy, int iz) {
    return Vec3(bbox.lo.x() + ix * step.x(), bbox.lo.y() + iy * step.y(),
                bbox.lo.z() + iz * step.z());
  };

  auto eval_slab = [&](int iz, std::vector<double>& out) {
    std::vector<Vec3> pts(std::size_t(n) * n);
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) pts[std::size_t(iy) * n + ix] = lattice_point(ix, iy, iz);
    out.resize(pts.size());
    sdf(pts, out);
  };

  LabeledMesh mesh;
  // Edge key -> welded vertex index. An edge is identified by its lattice
  // origin and axis, shared exactly between neighboring cubes.
  std::unordered_map<std::uint64_t, int> edge_vertex;
  auto edge_key = [&](int ix, int iy, int iz, int axis) {
    return ((std::uint64_t(iz) * n + iy) * n + ix) * 4 + std::uint64_t(axis);
  };

  std::vector<double> lower, upper;
  auto slab_at = [&](const std::vector<double>& slab, int ix, int iy) {
    return slab[std::size_t(iy) * n + ix];
  };
  eval_slab(0, lower);

  for (int iz = 0; iz < resolution; ++iz) {
    eval_slab(iz + 1, upper);
    for (int iy = 0; iy < resolution; ++iy) {
      for (int ix = 0; ix < resolution; ++ix) {
        double val[8];
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          const auto& slab = kCorner[c][2] == 0 ? lower : upper;
          val[c] = slab_at(slab, ix + kCorner[c][0], iy + kCorner[c][1]);
          if (val[c] < 0.0) cube |= 1 << c;
        }
        if (kMcEdgeTable[cube] == 0) continue;

        int edge_idx[12];
        for (int e = 0; e < 12; ++e) {
          if (!(kMcEdgeTable[cube] & (1 << e))) continue;
          const int a = kEdge[e][0], b = kEdge[e][1];
          const int ax[3] = {ix + kCorner[a][0], iy + kCorner[a][1], iz + kCorner[a][2]};
          const int bx[3] = {ix + kCorner[b][0], iy + kCorner[b][1], iz + kCorner[b][2]};
          int axis = 0;
          for (int k = 0; k < 3; ++k)
            if (ax[k] != bx[k]) axis = k;
          const std::uint64_t key = edge_key(std::min(ax[0], bx[0]), std::min(ax[1], bx[1]),
                                             std::min(ax[2], bx[2]), axis);
          auto it = edge_vertex.find(key);
          if (it == edge_vertex.end()) {
            const double da = val[a], db = val[b];
            double t = (da - db) != 0.0 ? da / (da - db) : 0.5;  // linear zero crossing
            t = std::clamp(t, 0.0, 1.0);
            const Vec3 pa = lattice_point(ax[0], ax[1], ax[2]);
            const Vec3 pb = lattice_point(bx[0], bx[1], bx[2]);
            it = edge_vertex.emplace(key, int(mesh.vertices.size())).first;
            mesh.vertices.push_back(pa + t * (pb - pa));
          }
          edge_idx[e] = it->second;
        }

        for (int t = 0; kMcTriTable[cube][t] != -1; t += 3) {
          std::array<int, 3> tri = {edge_idx[kMcTriTable[cube][t]],
                                    edge_idx[kMcTriTable[cube][t + 1]],
                                    edge_idx[kMcTriTable[cube][t + 2]]};
          if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;
          const Vec3& p0 = mesh.vertices[std::size_t(tri[0])];
          const Vec3& p1 = mesh.vertices[std::size_t(tri[1])];
          const Vec3& p2 = mesh.vertices[std::size_t(tri[2])];
          if (0.5 * (p1 - p0).cross(p2 - p0).norm() < 1e-12) continue;
          mesh.triangles.push_back(tri);
        }
      }
    }
    std::swap(lower, upper);
  }

  if (mesh.vertices.empty()) {
    std::fprintf(stderr, "extract_mesh: empty level set in given bounds\n");
    return mesh;
  }

  if (labeler) {
    (*labeler)(mesh.vertices, mesh.labels, mesh.label_prob);
  } else {
    mesh.labels.assign(mesh.vertices.size(), 0);
  }
  return mesh;
}

std::vector<std::uint8_t> transfer_labels(const LabeledMesh& source,
                                          const std::vector<Vec3>& target_vertices) {
  if (source.empty()) throw input_error("transfer_labels: empty source mesh");
  KdTree tree(source.vertices);
  std::vector<std::uint8_t> out(target_vertices.size());
  parallel_chunks(target_vertices.size(), 4096, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      out[i] = source.labels[std::size_t(tree.nearest(target_vertices[i]).first)];
  });
  return out;
}

void write_ply(const std::string& path, const LabeledMesh& mesh, bool binary,
               const std::vector<Vec3>* palette) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path);
  const bool color = palette != nullptr;
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar label\n";
  if (color) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << mesh.triangles.size() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";

  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const float xyz[3] = {float(mesh.vertices[i].x()), float(mesh.vertices[i].y()),
                          float(mesh.vertices[i].z())};
    const std::uint8_t label = mesh.labels.empty() ? 0 : mesh.labels[i];
    std::uint8_t rgb[3] = {0, 0, 0};
    if (color) {
      const Vec3& a = (*palette)[std::size_t(label) % palette->size()];
      for (int k = 0; k < 3; ++k)
        rgb[k] = std::uint8_t(std::clamp(a[k], 0.0, 1.0) * 255.0 + 0.5);
    }
    if (binary) {
      out.write(reinterpret_cast<const char*>(xyz), 12);
      out.write(reinterpret_cast<const char*>(&label), 1);
      if (color) out.write(reinterpret_cast<const char*>(rgb), 3);
    } else {
      out << xyz[0] << " " << xyz[1] << " " << xyz[2] << " " << int(label);
      if (color) out << " " << int(rgb[0]) << " " << int(rgb[1]) << " " << int(rgb[2]);
      out << "\n";
    }
  }
  for (const auto& tri : mesh.triangles) {
    if (binary) {
      const std::uint8_t three = 3;
      out.write(reinterpret_cast<const char*>(&three), 1);
      const std::int32_t idx[3] = {tri[0], tri[1], tri[2]};
      out.write(reinterpret_cast<const char*>(idx), 12);
    } else {
      out << "3 " << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
    }
  }
  if (!out) throw io_error("write failed: " + path);
}

LabeledMesh read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::string line;
  bool binary = false;
  std::size_t n_vertices = 0, n_faces = 0;
  struct Prop {
    std::string type, name;
  };
  std::vector<Prop> vprops;
  std::string element;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") throw io_error("not a PLY: " + path);
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw == "format") {
      std::string fmt;
      ss >> fmt;
      binary = fmt == "binary_little_endian";
      if (!binary && fmt != "ascii") throw io_error("unsupported PLY format: " + fmt);
    } else if (kw == "element") {
      std::size_t count;
      ss >> element >> count;
      if (element == "vertex")
        n_vertices = count;
      else if (element == "face")
        n_faces = count;
    } else if (kw == "property" && element == "vertex") {
      Prop p;
      ss >> p.type >> p.name;
      vprops.push_back(p);
    } else if (kw == "end_header") {
      break;
    }
  }

  LabeledMesh mesh;
  mesh.vertices.resize(n_vertices);
  mesh.labels.assign(n_vertices, 0);
  for (std::size_t i = 0; i < n_vertices; ++i) {
    double xyz[3] = {0, 0, 0};
    int label = 0;
    if (binary) {
      for (const auto& p : vprops) {
        if (p.type == "float") {
          float v;
          in.read(reinterpret_cast<char*>(&v), 4);
          if (p.name == "x") xyz[0] = v;
          if (p.name == "y") xyz[1] = v;
          if (p.name == "z") xyz[2] = v;
        } else if (p.type == "uchar") {
          std::uint8_t v;
          in.read(reinterpret_cast<char*>(&v), 1);
          if (p.name == "label") label = v;
        } else {
          throw io_error("unsupported vertex property type: " + p.type);
        }
      }
    } else {
      std::getline(in, line);
      std::istringstream ss(line);
      for (const auto& p : vprops) {
        double v;
        ss >> v;
        if (p.name == "x") xyz[0] = v;
        if (p.name == "y") xyz[1] = v;
        if (p.name == "z") xyz[2] = v;
        if (p.name == "label") label = int(v);
      }
    }
    mesh.vertices[i] = Vec3(xyz[0], xyz[1], xyz[2]);
    mesh.labels[i] = std::uint8_t(label);
  }
  mesh.triangles.reserve(n_faces);
  for (std::size_t i = 0; i < n_faces; ++i) {
    if (binary) {
      std::uint8_t cnt;
      in.read(reinterpret_cast<char*>(&cnt), 1);
      std::vector<std::int32_t> idx(cnt);
      in.read(reinterpret_cast<char*>(idx.data()), 4 * cnt);
      for (int k = 2; k < int(cnt); ++k)
        mesh.triangles.push_back({idx[0], idx[std::size_t(k) - 1], idx[std::size_t(k)]});
    } else {
      std::getline(in, line);
      std::istringstream ss(line);
      int cnt;
      ss >> cnt;
      std::vector<int> idx(static_cast<std::size_t>(cnt));
      for (auto& v : idx) ss >> v;
      for (int k = 2; k < cnt; ++k)
        mesh.triangles.push_back({idx[0], idx[std::size_t(k) - 1], idx[std::size_t(k)]});
    }
  }
  if (!in) throw io_error("truncated PLY: " + path);
  return mesh;
}

}  // namespace semsurf
