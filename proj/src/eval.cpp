#include "semsurf/eval.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "semsurf/kdtree.hpp"
#include "semsurf/parallel.hpp"
#include "semsurf/renderer.hpp"

namespace semsurf {

SemanticMetrics semantic_metrics(const std::vector<std::uint8_t>& pred,
                                 const std::vector<std::uint8_t>& gt, int num_classes,
                                 std::uint8_t sentinel) {
  if (pred.size() != gt.size()) throw input_error("semantic_metrics: size mismatch");
  const int L = num_classes;
  std::vector<std::int64_t> confusion(std::size_t(L) * L, 0);  // [gt][pred]
  std::int64_t total = 0, correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (gt[i] == sentinel) continue;
    if (gt[i] >= L || pred[i] >= L) throw input_error("semantic_metrics: label out of range");
    ++confusion[std::size_t(gt[i]) * L + pred[i]];
    ++total;
    if (gt[i] == pred[i]) ++correct;
  }
  if (total == 0) throw input_error("semantic_metrics: no valid pixels");

  SemanticMetrics m;
  m.acc = double(correct) / double(total);
  m.per_class_iou.assign(std::size_t(L), std::nan(""));
  double macc_sum = 0.0, miou_sum = 0.0;
  int supported = 0;
  for (int c = 0; c < L; ++c) {
    std::int64_t tp = confusion[std::size_t(c) * L + c];
    std::int64_t gt_count = 0, pred_count = 0;
    for (int k = 0; k < L; ++k) {
      gt_count += confusion[std::size_t(c) * L + k];
      pred_count += confusion[std::size_t(k) * L + c];
    }
    if (gt_count == 0) continue;  // no support: excluded from the means
    ++supported;
    macc_sum += double(tp) / double(gt_count);
    const std::int64_t denom = gt_count + pred_count - tp;
    const double iou = denom > 0 ? double(tp) / double(denom) : 0.0;
    m.per_class_iou[std::size_t(c)] = iou;
    miou_sum += iou;
  }
  m.macc = macc_sum / supported;
  m.miou = miou_sum / supported;
  return m;
}

MeshSamples sample_mesh_points(const LabeledMesh& mesh, int n, Rng& rng) {
  if (mesh.empty() || mesh.triangles.empty()) throw input_error("sample_mesh_points: empty mesh");
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[std::size_t(tri[0])];
    const Vec3& b = mesh.vertices[std::size_t(tri[1])];
    const Vec3& c = mesh.vertices[std::size_t(tri[2])];
    total += 0.5 * (b - a).cross(c - a).norm();
    cumulative[t] = total;
  }
  if (total <= 0.0) throw input_error("sample_mesh_points: zero-area mesh");

  MeshSamples out;
  out.points.reserve(std::size_t(n));
  out.labels.reserve(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t t = std::size_t(it - cumulative.begin());
    const auto& tri = mesh.triangles[std::min(t, mesh.triangles.size() - 1)];
    double r1 = rng.uniform(), r2 = rng.uniform();
    if (r1 + r2 > 1.0) {
      r1 = 1.0 - r1;
      r2 = 1.0 - r2;
    }
    const Vec3& a = mesh.vertices[std::size_t(tri[0])];
    const Vec3& b = mesh.vertices[std::size_t(tri[1])];
    const Vec3& c = mesh.vertices[std::size_t(tri[2])];
    out.points.push_back(a + r1 * (b - a) + r2 * (c - a));
    // the sample inherits the class of the barycentrically nearest corner
    const int corner = (1.0 - r1 - r2 >= r1 && 1.0 - r1 - r2 >= r2) ? 0 : (r1 >= r2 ? 1 : 2);
    out.labels.push_back(mesh.labels.empty() ? 0 : mesh.labels[std::size_t(tri[corner])]);
  }
  return out;
}

namespace {

std::vector<double> nearest_distances(const std::vector<Vec3>& from, const KdTree& to) {
  std::vector<double> d(from.size());
  parallel_chunks(from.size(), 2048, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) d[i] = std::sqrt(to.nearest(from[i]).second);
  });
  return d;
}

double mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / double(v.size());
}

double mean_sq(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return v.empty() ? 0.0 : acc / double(v.size());
}

double fraction_below(const std::vector<double>& v, double thr) {
  std::size_t n = 0;
  for (double x : v)
    if (x < thr) ++n;
  return v.empty() ? 0.0 : double(n) / double(v.size());
}

}  // namespace

GeometryMetrics geometry_metrics(const LabeledMesh& pred, const LabeledMesh& gt, int n_samples,
                                 double threshold, std::uint64_t seed) {
  if (pred.empty() || gt.empty()) throw input_error("geometry_metrics: empty mesh");
  Rng rng(seed);
  const MeshSamples ps = sample_mesh_points(pred, n_samples, rng);
  const MeshSamples gs = sample_mesh_points(gt, n_samples, rng);
  KdTree pred_tree(ps.points);
  KdTree gt_tree(gs.points);
  const std::vector<double> d_pg = nearest_distances(ps.points, gt_tree);
  const std::vector<double> d_gp = nearest_distances(gs.points, pred_tree);

  GeometryMetrics m;
  m.accuracy = mean(d_pg);
  m.completeness = mean(d_gp);
  m.precision = fraction_below(d_pg, threshold);
  m.recall = fraction_below(d_gp, threshold);
  m.fscore = (m.precision + m.recall) > 0.0
                 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                 : 0.0;
  m.chamfer = 0.5 * (mean_sq(d_pg) + mean_sq(d_gp));
  return m;
}

double region_chamfer(const LabeledMesh& pred, const LabeledMesh& gt, std::uint8_t cls,
                      int n_samples, std::uint64_t seed) {
  if (pred.empty() || gt.empty()) throw input_error("region_chamfer: empty mesh");
  Rng rng(seed);
  const MeshSamples ps = sample_mesh_points(pred, n_samples, rng);
  const MeshSamples gs = sample_mesh_points(gt, n_samples, rng);
  std::vector<Vec3> region;
  for (std::size_t i = 0; i < gs.points.size(); ++i)
    if (gs.labels[i] == cls) region.push_back(gs.points[i]);
  if (region.empty()) throw input_error("region_chamfer: class absent from gt surface");
  KdTree region_tree(region);
  KdTree gt_tree(gs.points);

  // pred samples belonging to the region = those whose nearest gt sample has
  // the class
  std::vector<Vec3> pred_region;
  for (const auto& p : ps.points)
    if (gs.labels[std::size_t(gt_tree.nearest(p).first)] == cls) pred_region.push_back(p);
  if (pred_region.empty()) return std::numeric_limits<double>::infinity();
  KdTree pred_tree(pred_region);

  double fwd = 0.0;
  for (const auto& p : pred_region) fwd += region_tree.nearest(p).second;
  fwd /= double(pred_region.size());
  double bwd = 0.0;
  for (const auto& p : region) bwd += pred_tree.nearest(p).second;
  bwd /= double(region.size());
  return 0.5 * (fwd + bwd);
}

RenderedView render_view(const FieldBundle<float>& bundle, const CameraIntrinsics& K,
                         const Pose& pose, const RenderOptions& opts) {
  RenderedView view;
  view.label = Image<std::uint8_t>(K.width, K.height, kUnlabeled);
  if (opts.want_rgb) view.rgb = Image<Rgb8>(K.width, K.height, {0, 0, 0});
  if (opts.want_normal) view.normal = Image<Normal3f>(K.width, K.height, {0.f, 0.f, 0.f});

  const int Sn = opts.samples_per_ray;
  const int L = bundle.cfg.classes;
  const int F = bundle.cfg.feature_dim;
  const double h = bundle.cfg.fd_step;

  parallel_chunks(std::size_t(K.height), 4, [&](std::size_t rb, std::size_t re) {
    for (std::size_t row = rb; row < re; ++row) {
      // One batched field evaluation per scanline.
      const int n_rays = K.width;
      const Eigen::Index per_ray = Sn + 1;
      MatX<float> pos(n_rays * per_ray, 3);
      std::vector<Ray> rays(static_cast<std::size_t>(n_rays));
      Rng no_jitter(0);
      for (int c = 0; c < n_rays; ++c) {
        const Ray ray = pixel_to_ray(K, pose, int(row), c);
        rays[std::size_t(c)] = ray;
        auto span = ray_aabb(ray, bundle.cfg.bbox, opts.near);
        const double far = span ? span->second : opts.near + 1.0;
        RaySamples s = sample_ray(opts.near, far, Sn, false, no_jitter);
        for (int i = 0; i < Sn; ++i) {
          const Vec3 x = ray.origin + s.depth[std::size_t(i)] * ray.direction;
          for (int k = 0; k < 3; ++k) pos(c * per_ray + i, k) = float(x[k]);
        }
        const Vec3 xv =
            ray.origin + (s.depth.back() + s.spacing.back()) * ray.direction;
        for (int k = 0; k < 3; ++k) pos(c * per_ray + Sn, k) = float(xv[k]);
      }
      const MatX<float> field = bundle.eval_sdf_batch(pos);
      // features of real samples feed the semantic head
      MatX<float> feats(n_rays * Sn, F);
      for (int c = 0; c < n_rays; ++c)
        feats.middleRows(Eigen::Index(c) * Sn, Sn) =
            field.block(Eigen::Index(c) * per_ray, 1, Sn, F);
      const MatX<float> logits = bundle.semantic_net.forward(bundle.store, feats);

      MatX<float> grads;
      MatX<float> colors;
      if (opts.want_rgb || opts.want_normal) {
        MatX<float> shift(Eigen::Index(6) * n_rays * Sn, 3);
        for (Eigen::Index i = 0; i < Eigen::Index(n_rays) * Sn; ++i) {
          const Eigen::Index ray_i = i / Sn, samp_i = i % Sn;
          const Eigen::Index src = ray_i * per_ray + samp_i;
          for (int k = 0; k < 3; ++k) {
            for (int c3 = 0; c3 < 3; ++c3) {
              shift((2 * k) * n_rays * Sn + i, c3) = pos(src, c3);
              shift((2 * k + 1) * n_rays * Sn + i, c3) = pos(src, c3);
            }
            shift((2 * k) * n_rays * Sn + i, k) += float(h);
            shift((2 * k + 1) * n_rays * Sn + i, k) -= float(h);
          }
        }
        const MatX<float> ds = bundle.eval_sdf_batch(shift).col(0);
        grads.resize(Eigen::Index(n_rays) * Sn, 3);
        const Eigen::Index NS = Eigen::Index(n_rays) * Sn;
        for (int k = 0; k < 3; ++k)
          grads.col(k) =
              (ds.middleRows((2 * k) * NS, NS) - ds.middleRows((2 * k + 1) * NS, NS)) /
              float(2.0 * h);
        if (opts.want_rgb) {
          MatX<float> xs(NS, 3), vs(NS, 3);
          for (int c = 0; c < n_rays; ++c)
            for (int i = 0; i < Sn; ++i) {
              xs.row(Eigen::Index(c) * Sn + i) = pos.row(Eigen::Index(c) * per_ray + i);
              for (int k = 0; k < 3; ++k)
                vs(Eigen::Index(c) * Sn + i, k) = float(rays[std::size_t(c)].direction[k]);
            }
          MatX<float> in(NS, bundle.color_net.in_dim);
          in << bundle.x_enc.apply(xs), bundle.v_enc.apply(vs), feats, grads;
          MatX<float> raw = bundle.color_net.forward(bundle.store, in);
          colors = (1.f / (1.f + (-raw.array()).exp())).matrix();
        }
      }

      const double inv_std = bundle.inv_std();
      for (int c = 0; c < n_rays; ++c) {
        std::vector<double> alpha(static_cast<std::size_t>(Sn));
        for (int i = 0; i < Sn; ++i)
          alpha[std::size_t(i)] =
              sdf_to_opacity(double(field(Eigen::Index(c) * per_ray + i, 0)),
                             double(field(Eigen::Index(c) * per_ray + i + 1, 0)), inv_std);
        const std::vector<double> w = transmittance_weights(alpha);
        Eigen::VectorXd acc_logits = Eigen::VectorXd::Zero(L);
        Vec3 acc_rgb = Vec3::Zero(), acc_n = Vec3::Zero();
        double opacity = 0.0;
        for (int i = 0; i < Sn; ++i) {
          const double wi = w[std::size_t(i)];
          opacity += wi;
          acc_logits += wi * logits.row(Eigen::Index(c) * Sn + i).cast<double>().transpose();
          if (opts.want_rgb)
            acc_rgb += wi * colors.row(Eigen::Index(c) * Sn + i).cast<double>().transpose();
          if (opts.want_normal) {
            Vec3 g = grads.row(Eigen::Index(c) * Sn + i).cast<double>().transpose();
            const double norm = g.norm();
            if (norm > 1e-12) g /= norm;
            acc_n += wi * g;
          }
        }
        if (opacity >= opts.background_opacity) {
          Eigen::Index arg;
          acc_logits.maxCoeff(&arg);
          view.label.at(int(row), c) = std::uint8_t(arg);
        }
        if (opts.want_rgb) {
          Rgb8 px;
          for (int k = 0; k < 3; ++k)
            px[std::size_t(k)] = std::uint8_t(std::clamp(acc_rgb[k], 0.0, 1.0) * 255.0 + 0.5);
          view.rgb.at(int(row), c) = px;
        }
        if (opts.want_normal) {
          const double norm = acc_n.norm();
          if (norm > 1e-12) acc_n /= norm;  // re-normalized for output only
          view.normal.at(int(row), c) = {float(acc_n.x()), float(acc_n.y()), float(acc_n.z())};
        }
      }
    }
  });
  return view;
}

SdfSampler make_sdf_sampler(const FieldBundle<float>& bundle) {
  return [&bundle](const std::vector<Vec3>& pts, std::vector<double>& out) {
    MatX<float> x(Eigen::Index(pts.size()), 3);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (int k = 0; k < 3; ++k) x(Eigen::Index(i), k) = float(pts[i][k]);
    const MatX<float> field = bundle.eval_sdf_batch(x);
    out.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = double(field(Eigen::Index(i), 0));
  };
}

LabelSampler make_label_sampler(const FieldBundle<float>& bundle) {
  return [&bundle](const std::vector<Vec3>& pts, std::vector<std::uint8_t>& cls,
                   std::vector<float>& prob) {
    MatX<float> x(Eigen::Index(pts.size()), 3);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (int k = 0; k < 3; ++k) x(Eigen::Index(i), k) = float(pts[i][k]);
    const MatX<float> field = bundle.eval_sdf_batch(x);
    const MatX<float> logits =
        bundle.semantic_net.forward(bundle.store, field.rightCols(bundle.cfg.feature_dim));
    cls.resize(pts.size());
    prob.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Eigen::VectorXd row = logits.row(Eigen::Index(i)).cast<double>();
      Eigen::VectorXd p = render_semantic_probability(row);
      Eigen::Index arg;
      const double best = p.maxCoeff(&arg);
      cls[i] = std::uint8_t(arg);
      prob[i] = float(best);
    }
  };
}

MetricsReport evaluate_run(const FieldBundle<float>& bundle, const Dataset& dataset,
                           const EvalConfig& cfg, LabeledMesh* out_mesh) {
  MetricsReport report;

  // 2D: rendered labels at training viewpoints vs clean GT labels.
  std::vector<std::uint8_t> pred2d, gt2d;
  RenderOptions ropts;
  ropts.samples_per_ray = cfg.samples_per_ray;
  ropts.near = cfg.near;
  for (const Frame& gt : dataset.gt_frames) {
    const RenderedView view = render_view(bundle, dataset.intrinsics, gt.pose, ropts);
    pred2d.insert(pred2d.end(), view.label.data.begin(), view.label.data.end());
    gt2d.insert(gt2d.end(), gt.label.data.begin(), gt.label.data.end());
  }
  report.semantic2d = semantic_metrics(pred2d, gt2d, dataset.classes);

  // 3D: extracted labeled mesh vs the GT mesh.
  const SdfSampler sdf = make_sdf_sampler(bundle);
  const LabelSampler labeler = make_label_sampler(bundle);
  LabeledMesh pred_mesh = extract_mesh(sdf, bundle.cfg.bbox, cfg.mesh_resolution, &labeler);
  if (pred_mesh.empty()) throw numeric_error("evaluate_run: empty reconstructed surface");
  LabeledMesh gt_mesh = read_ply(dataset.gt_mesh_path);

  const std::vector<std::uint8_t> transferred = transfer_labels(pred_mesh, gt_mesh.vertices);
  report.semantic3d = semantic_metrics(transferred, gt_mesh.labels, dataset.classes);
  report.geometry =
      geometry_metrics(pred_mesh, gt_mesh, cfg.n_samples, cfg.threshold, cfg.seed);
  if (out_mesh) *out_mesh = std::move(pred_mesh);
  return report;
}

namespace {

void write_semantic(std::ostream& out, const char* prefix, const SemanticMetrics& m) {
  out << prefix << ".acc = " << m.acc << "\n";
  out << prefix << ".macc = " << m.macc << "\n";
  out << prefix << ".miou = " << m.miou << "\n";
  for (std::size_t c = 0; c < m.per_class_iou.size(); ++c)
    if (!std::isnan(m.per_class_iou[c]))
      out << prefix << ".iou." << c << " = " << m.per_class_iou[c] << "\n";
}

}  // namespace

void write_report(const std::string& txt_path, const std::string& csv_path,
                  const MetricsReport& r) {
  {
    std::ofstream out(txt_path);
    if (!out) throw io_error("cannot open " + txt_path);
    out.precision(10);
    write_semantic(out, "semantic2d", r.semantic2d);
    write_semantic(out, "semantic3d", r.semantic3d);
    out << "geometry.accuracy = " << r.geometry.accuracy << "\n";
    out << "geometry.completeness = " << r.geometry.completeness << "\n";
    out << "geometry.precision = " << r.geometry.precision << "\n";
    out << "geometry.recall = " << r.geometry.recall << "\n";
    out << "geometry.fscore = " << r.geometry.fscore << "\n";
    out << "geometry.chamfer = " << r.geometry.chamfer << "\n";
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw io_error("cannot open " + csv_path);
    out.precision(10);
    out << "acc2d,macc2d,miou2d,acc3d,macc3d,miou3d,geo_acc,geo_comp,precision,recall,fscore,"
           "chamfer\n";
    out << r.semantic2d.acc << ',' << r.semantic2d.macc << ',' << r.semantic2d.miou << ','
        << r.semantic3d.acc << ',' << r.semantic3d.macc << ',' << r.semantic3d.miou << ','
        << r.geometry.accuracy << ',' << r.geometry.completeness << ',' << r.geometry.precision
        << ',' << r.geometry.recall << ',' << r.geometry.fscore << ',' << r.geometry.chamfer
        << "\n";
  }
}

MetricsReport read_report(const std::string& txt_path) {
  std::ifstream in(txt_path);
  if (!in) throw io_error("cannot open " + txt_path);
  MetricsReport r;
  std::map<std::string, double> kv;
  std::string key, eq;
  double value;
  while (in >> key >> eq >> value) kv[key] = value;
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw io_error("report missing key " + k);
    return it->second;
  };
  r.semantic2d.acc = get("semantic2d.acc");
  r.semantic2d.macc = get("semantic2d.macc");
  r.semantic2d.miou = get("semantic2d.miou");
  r.semantic3d.acc = get("semantic3d.acc");
  r.semantic3d.macc = get("semantic3d.macc");
  r.semantic3d.miou = get("semantic3d.miou");
  r.geometry.accuracy = get("geometry.accuracy");
  r.geometry.completeness = get("geometry.completeness");
  r.geometry.precision = get("geometry.precision");
  r.geometry.recall = get("geometry.recall");
  r.geometry.fscore = get("geometry.fscore");
  r.geometry.chamfer = get("geometry.chamfer");
  for (const auto& [k, v] : kv) {
    auto parse_iou = [&](const char* prefix, SemanticMetrics& m) {
      const std::string p = std::string(prefix) + ".iou.";
      if (k.rfind(p, 0) == 0) {
        const std::size_t cls = std::size_t(std::stoi(k.substr(p.size())));
        if (m.per_class_iou.size() <= cls) m.per_class_iou.resize(cls + 1, std::nan(""));
        m.per_class_iou[cls] = v;
      }
    };
    parse_iou("semantic2d", r.semantic2d);
    parse_iou("semantic3d", r.semantic3d);
  }
  return r;
}

}  // namespace semsurf
