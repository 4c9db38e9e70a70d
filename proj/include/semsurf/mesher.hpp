#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "semsurf/common.hpp"

namespace semsurf {

/// Triangle mesh with one semantic class per vertex.
struct LabeledMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::uint8_t> labels;      // one class per vertex
  std::vector<float> label_prob;         // optional argmax probability

  bool empty() const { return vertices.empty(); }
};

/// Evaluates the signed distance at many points (batched so implicit-field
/// backends can amortize; called from multiple threads on disjoint slabs).
using SdfSampler = std::function<void(const std::vector<Vec3>&, std::vector<double>&)>;
/// Class id and argmax probability per point.
using LabelSampler =
    std::function<void(const std::vector<Vec3>&, std::vector<std::uint8_t>&, std::vector<float>&)>;

/// Marching cubes over a resolution^3 grid spanning bbox, zero level set,
/// linear interpolation along edges. Vertices are welded on shared edges and
/// degenerate triangles (area < 1e-12) dropped. An empty level set produces
/// an empty mesh (with a warning on stderr), not an error.
LabeledMesh extract_mesh(const SdfSampler& sdf, const Aabb& bbox, int resolution,
                         const LabelSampler* labeler = nullptr);

/// Nearest-source-vertex class per target vertex.
std::vector<std::uint8_t> transfer_labels(const LabeledMesh& source,
                                          const std::vector<Vec3>& target_vertices);

/// PLY with positions, `uchar label`, and optional palette colors.
void write_ply(const std::string& path, const LabeledMesh& mesh, bool binary = true,
               const std::vector<Vec3>* palette = nullptr);
LabeledMesh read_ply(const std::string& path);

extern const int kMcEdgeTable[256];
extern const int kMcTriTable[256][16];

}  // namespace semsurf
