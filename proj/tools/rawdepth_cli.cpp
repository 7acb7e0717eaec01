// rawdepth command-line front end. Every command writes text to stdout with
// 9 significant digits and exits nonzero with a message on stderr on failure.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rawdepth/camera.hpp"
#include "rawdepth/errors.hpp"
#include "rawdepth/io.hpp"
#include "rawdepth/losses.hpp"
#include "rawdepth/metrics.hpp"
#include "rawdepth/optimizer.hpp"
#include "rawdepth/synthetic.hpp"
#include "rawdepth/warp.hpp"
#include "selftest.hpp"

using namespace rawdepth;

namespace {

std::string fmt(double v) { return format_double(v); }

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

DistanceKind parse_kind(const std::string& s) {
  if (s == "depth") return DistanceKind::PlanarDepth;
  if (s == "distance") return DistanceKind::EuclideanDistance;
  throw Error(ErrorCode::InvalidParameter, "kind");
}

const char* kind_name(DistanceKind k) { return k == DistanceKind::PlanarDepth ? "depth" : "distance"; }

std::pair<int, int> parse_size(const std::string& s) {
  int w = 0, h = 0;
  char x = 0, extra = 0;
  if (std::sscanf(s.c_str(), "%d%c%d%c", &w, &x, &h, &extra) != 3 || (x != 'x' && x != 'X') || w <= 0 || h <= 0) {
    throw Error(ErrorCode::InvalidParameter, "raw-size");
  }
  return {w, h};
}

std::vector<Se3Transform> read_poses(const std::string& path, size_t expected) {
  auto poses = parse_poses_csv(read_text_file(path));
  if (poses.size() != expected) {
    throw Error(ErrorCode::DimensionMismatch,
                "poses: expected " + std::to_string(expected) + " rows, got " + std::to_string(poses.size()));
  }
  return poses;
}

// -- calib validate --------------------------------------------------------------

int cmd_calib_validate(const std::string& path) {
  const CameraModel cam = load_calibration(path);
  std::ostringstream out;
  out << "model=" << cam.model_name() << "\n";
  out << "width=" << cam.width() << "\nheight=" << cam.height() << "\n";
  out << "distance_kind=" << kind_name(cam.distance_kind()) << "\n";
  if (const auto* f = cam.fisheye()) {
    out << "theta_max=" << fmt(f->theta_max()) << "\nr_max=" << fmt(f->r_max()) << "\n";
    out << "lut_resolution=" << (f->lut() ? f->lut()->resolution() : 0) << "\n";
  } else {
    out << "r_max_normalized=" << fmt(cam.brown_conrady_r_max()) << "\n";
  }
  out << "monotone=1\n";

  // invariant report: round trip over a 16x16 grid at 5 m
  double worst = 0.0;
  long long valid = 0;
  for (int j = 0; j < 16; ++j) {
    for (int i = 0; i < 16; ++i) {
      const Eigen::Vector2d p((cam.width() - 1) * i / 15.0, (cam.height() - 1) * j / 15.0);
      const auto ray = try_ray(cam, p, cam.distance_kind());
      if (!ray) continue;
      const auto q = try_project(cam, 5.0 * *ray);
      if (!q) continue;
      worst = std::max(worst, (*q - p).norm());
      ++valid;
    }
  }
  out << "roundtrip_samples=" << valid << "\nroundtrip_max_px=" << fmt(worst) << "\n";
  const bool reparsed = parse_calibration(serialize_calibration(cam)).model_name() == cam.model_name();
  out << "serialize_roundtrip=" << (reparsed ? 1 : 0) << "\n";
  std::cout << out.str();
  return worst < 1e-5 && reparsed ? 0 : 1;
}

// -- project / unproject -------------------------------------------------------------

int cmd_project(const std::string& calib, const std::string& points) {
  const CameraModel cam = load_calibration(calib);
  std::ostringstream out;
  out << "u,v,valid\n";
  for (const auto& row : parse_csv_numbers(read_text_file(points))) {
    if (row.size() != 3) throw Error(ErrorCode::DimensionMismatch, "points: 3 columns per row");
    const auto q = try_project(cam, Eigen::Vector3d(row[0], row[1], row[2]));
    if (q) {
      out << fmt(q->x()) << "," << fmt(q->y()) << ",1\n";
    } else {
      out << "nan,nan,0\n";
    }
  }
  std::cout << out.str();
  return 0;
}

int cmd_unproject(const std::string& calib, const std::string& pixels, double range, const std::string& kind_s) {
  const CameraModel cam = load_calibration(calib);
  const DistanceKind kind = parse_kind(kind_s);
  if (!(range > 0.0) || !std::isfinite(range)) throw Error(ErrorCode::NonPositiveDepth, "range");
  const InverseLut* lut = cam.fisheye() ? cam.fisheye()->lut() : nullptr;
  std::ostringstream out;
  out << "x,y,z,valid\n";
  for (const auto& row : parse_csv_numbers(read_text_file(pixels))) {
    if (row.size() != 2) throw Error(ErrorCode::DimensionMismatch, "pixels: 2 columns per row");
    const auto ray = try_ray(cam, Eigen::Vector2d(row[0], row[1]), kind, lut);
    if (ray) {
      const Eigen::Vector3d X = range * *ray;
      out << fmt(X.x()) << "," << fmt(X.y()) << "," << fmt(X.z()) << ",1\n";
    } else {
      out << "nan,nan,nan,0\n";
    }
  }
  std::cout << out.str();
  return 0;
}

// -- rectification -----------------------------------------------------------------------

std::optional<double> fov_arg(double deg) {
  if (deg <= 0.0) return std::nullopt;
  if (!(deg < 180.0)) throw Error(ErrorCode::InvalidParameter, "target-fov");
  return deg2rad(deg);
}

int cmd_rectify_maps(const std::string& calib, double fov_deg, const std::string& out_path) {
  const CameraModel cam = load_calibration(calib);
  const PinholeIntrinsics dst = rectified_canvas(cam, fov_arg(fov_deg));
  const CoordinateMap map = rectification_maps(cam, dst);
  write_coordinate_map(out_path, map);
  long long valid = 0;
  for (size_t i = 0; i < map.valid.size(); ++i) valid += map.valid[i];
  std::cout << "canvas_width=" << dst.width << "\ncanvas_height=" << dst.height << "\nfx=" << fmt(dst.fx)
            << "\nfy=" << fmt(dst.fy) << "\ncx=" << fmt(dst.cx) << "\ncy=" << fmt(dst.cy)
            << "\nvalid_pixels=" << valid << "\n";
  return 0;
}

int cmd_fov_report(const std::string& calib, const std::string& raw_size, double fov_deg, std::uint64_t seed) {
  const CameraModel cam = load_calibration(calib);
  const auto [w, h] = parse_size(raw_size);
  if (w != cam.width() || h != cam.height()) {
    throw Error(ErrorCode::DimensionMismatch, "raw-size " + raw_size + " does not match the calibration");
  }
  const RectificationReport r = fov_loss(cam, fov_arg(fov_deg), seed);
  std::ostringstream out;
  out << "model=" << cam.model_name() << "\n";
  out << "raw_width=" << r.raw_width << "\nraw_height=" << r.raw_height << "\n";
  out << "canvas_width=" << r.canvas_width << "\ncanvas_height=" << r.canvas_height << "\n";
  out << "crop_x0=" << r.crop.x0 << "\ncrop_y0=" << r.crop.y0 << "\ncrop_x1=" << r.crop.x1
      << "\ncrop_y1=" << r.crop.y1 << "\n";
  out << "crop_width=" << r.crop.width() << "\ncrop_height=" << r.crop.height() << "\n";
  out << "valid_raw_pixels=" << r.valid_raw_pixels << "\nretained_raw_pixels=" << r.retained_raw_pixels << "\n";
  out << "info_loss_fraction=" << fmt(r.info_loss_fraction) << "\n";
  out << "rectified_area_loss_fraction=" << fmt(r.rectified_area_loss_fraction) << "\n";
  out << "resampling_psnr=" << fmt(r.resampling_psnr) << "\nresampling_ssim=" << fmt(r.resampling_ssim) << "\n";
  std::cout << out.str();
  return 0;
}

// -- warp / render ------------------------------------------------------------------------

int cmd_warp(const std::string& calib, const std::string& src, const std::string& depth, const std::string& pose,
             const std::string& out_path, const std::string& mask_path) {
  const CameraModel cam = load_calibration(calib);
  const ImageBuffer image = read_image(src);
  const DepthMap d = read_depth(depth, cam.distance_kind());
  const SynthesizedView v = synthesize_view(image, d, parse_pose(pose), cam, cam);
  write_image(out_path, v.image);
  long long valid = 0;
  for (size_t i = 0; i < v.mask.size(); ++i) valid += v.mask[i];
  if (!mask_path.empty()) {
    ImageBuffer m(v.mask.width(), v.mask.height());
    for (size_t i = 0; i < v.mask.size(); ++i) m[i] = v.mask[i];
    write_png(mask_path, m, 8);
  }
  std::cout << "valid_pixels=" << valid << "\ntotal_pixels=" << v.mask.size() << "\n";
  return 0;
}

int cmd_render(const std::string& calib, const std::string& scene_path, const std::string& pose,
               std::optional<std::uint64_t> seed, const std::string& out_path, const std::string& depth_out) {
  const CameraModel cam = load_calibration(calib);
  SyntheticScene scene = parse_scene(read_text_file(scene_path));
  if (seed) {
    for (size_t i = 0; i < scene.primitives.size(); ++i) scene.primitives[i].texture.seed = *seed + i;
  }
  const Se3Transform camera_to_world = pose.empty() ? Se3Transform::identity() : parse_pose(pose);
  const RenderResult r = render(scene, cam, camera_to_world);
  write_image(out_path, r.image);
  if (!depth_out.empty()) write_depth(depth_out, r.depth);
  long long hit = 0;
  for (size_t i = 0; i < r.hit.size(); ++i) hit += r.hit[i];
  std::cout << "hit_pixels=" << hit << "\ntotal_pixels=" << r.hit.size() << "\n";
  return 0;
}

// -- loss / optimization --------------------------------------------------------------------

struct WeightArgs {
  double omega = 0.85;
  double beta = 0.001;
  double gamma = 0.001;
  double clip = 0.95;
  int scales = 4;
  std::vector<std::string> disable;
};

LossWeights to_weights(const WeightArgs& a) {
  LossWeights w;
  w.omega = a.omega;
  w.beta_smooth = a.beta;
  w.gamma_dc = a.gamma;
  w.clip_percentile = a.clip;
  w.num_scales = a.scales;
  for (const auto& t : a.disable) {
    if (t == "forward") w.terms.forward_sequence = false;
    else if (t == "backward") w.terms.backward_sequence = false;
    else if (t == "consistency") w.terms.consistency = false;
    else if (t == "smoothness") w.terms.smoothness = false;
    else if (t == "static-mask") w.terms.static_mask = false;
    else throw Error(ErrorCode::InvalidParameter, "disable");
  }
  w.validate();
  return w;
}

int cmd_loss(const std::string& calib, const std::vector<std::string>& seq, const std::vector<std::string>& depths,
             const std::string& poses_path, const WeightArgs& wa) {
  const CameraModel cam = load_calibration(calib);
  const LossWeights w = to_weights(wa);
  const auto poses = read_poses(poses_path, 2);
  SnippetInputs in;
  for (int k = 0; k < 3; ++k) {
    in.images[k] = read_image(seq[k]);
    const DepthMap d = read_depth(depths[k], cam.distance_kind());
    in.depths[k].push_back(d);
    for (int s = 1; s < w.num_scales; ++s) {
      in.depths[k].push_back(DepthMap(downsample_area(d.values, 1 << s), d.kind));
    }
  }
  in.target_to_prev = poses[0];
  in.target_to_next = poses[1];
  std::cout << to_report(total_loss(in, cam, w));
  return 0;
}

struct RecoverArgs {
  std::string target;
  std::vector<std::string> sources;
  std::string poses;
  std::string out;
  std::string trace;
  std::vector<double> displacements;
  int max_iters = 2000;
  double step = 0.1;
  double tol = 1e-7;
  int levels = 4;
  double beta = 0.001;
  double init_depth = 10.0;
};

int cmd_recover_depth(const std::string& calib, const RecoverArgs& a) {
  const CameraModel cam = load_calibration(calib);
  const ImageBuffer target = read_image(a.target);
  std::vector<ImageBuffer> sources;
  for (const auto& s : a.sources) sources.push_back(read_image(s));
  auto poses = read_poses(a.poses, sources.size());
  if (!a.displacements.empty()) {
    if (a.displacements.size() != poses.size()) throw Error(ErrorCode::DimensionMismatch, "displacements");
    for (size_t k = 0; k < poses.size(); ++k) poses[k] = scale_pose(poses[k], a.displacements[k]);
  }
  OptimizationConfig cfg;
  cfg.max_iters = a.max_iters;
  cfg.step_size = a.step;
  cfg.convergence_tol = a.tol;
  cfg.pyramid_levels = a.levels;
  cfg.weights.beta_smooth = a.beta;
  cfg.validate();
  if (!(a.init_depth > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "init-depth");
  const DepthMap init(cam.width(), cam.height(), a.init_depth, cam.distance_kind());
  const DepthRecovery r = recover_depth(target, sources, poses, cam, cfg, init);
  write_depth(a.out, r.depth);
  if (!a.trace.empty()) write_text_file(a.trace, r.trace.to_csv());
  double sum = 0.0;
  for (size_t i = 0; i < r.depth.values.size(); ++i) sum += r.depth.values[i];
  std::ostringstream out;
  out << "iterations=" << r.trace.rows.size() << "\n";
  out << "final_loss=" << fmt(r.trace.rows.empty() ? 0.0 : r.trace.rows.back().total) << "\n";
  out << "mean_depth=" << fmt(sum / static_cast<double>(r.depth.values.size())) << "\n";
  out << "low_texture=" << (r.trace.low_texture ? 1 : 0) << "\n";
  std::cout << out.str();
  return 0;
}

int cmd_evaluate(const std::string& pred, const std::string& gt, double cap, bool median_scale, double min_depth) {
  MetricsOptions opt;
  opt.cap = cap;
  opt.min_depth = min_depth;
  opt.median_scale = median_scale;
  const DepthMetrics m =
      depth_metrics(read_depth(pred, DistanceKind::PlanarDepth), read_depth(gt, DistanceKind::PlanarDepth), opt);
  std::cout << metrics_csv_header() << "\n" << metrics_csv_row(m) << "\n";
  return 0;
}

int cmd_selftest(const std::string& suite) {
  std::vector<selftest::Check> checks;
  if (suite == "roundtrip") checks = selftest::roundtrip_suite();
  else if (suite == "gradients") checks = selftest::gradient_suite();
  else throw Error(ErrorCode::InvalidParameter, "suite");
  bool ok = true;
  std::ostringstream out;
  for (const auto& c : checks) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << fmt(c.value) << " limit=" << fmt(c.limit) << "\n";
    ok = ok && c.pass;
  }
  std::cout << out.str();
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rawdepth: distortion-aware geometry, view synthesis and depth tools"};
  app.require_subcommand(1);
  int rc = 0;
  std::function<int()> action;

  auto* calib = app.add_subcommand("calib", "calibration utilities");
  calib->require_subcommand(1);
  std::string calib_file;
  auto* validate = calib->add_subcommand("validate", "parse a calibration and report its invariants");
  validate->add_option("file", calib_file)->required();
  validate->callback([&] { action = [&] { return cmd_calib_validate(calib_file); }; });

  std::string cal, points, pixels, kind = "depth";
  double range = 1.0;
  auto* project_cmd = app.add_subcommand("project", "project 3D points (x,y,z CSV) to pixels");
  project_cmd->add_option("calib", cal)->required();
  project_cmd->add_option("--points", points)->required();
  project_cmd->callback([&] { action = [&] { return cmd_project(cal, points); }; });

  auto* unproject_cmd = app.add_subcommand("unproject", "unproject pixels (u,v CSV) at a fixed range");
  unproject_cmd->add_option("calib", cal)->required();
  unproject_cmd->add_option("--pixels", pixels)->required();
  unproject_cmd->add_option("--range", range)->required();
  unproject_cmd->add_option("--kind", kind, "depth or distance")->capture_default_str();
  unproject_cmd->callback([&] { action = [&] { return cmd_unproject(cal, pixels, range, kind); }; });

  double fov = 0.0;
  std::string out_path;
  auto* rect = app.add_subcommand("rectify-maps", "export the rectification remap grid as PFM (x, y, valid)");
  rect->add_option("calib", cal)->required();
  rect->add_option("--target-fov", fov, "horizontal FOV in degrees; 0 keeps the native canvas");
  rect->add_option("--out", out_path)->required();
  rect->callback([&] { action = [&] { return cmd_rectify_maps(cal, fov, out_path); }; });

  std::string raw_size;
  std::uint64_t seed = 1;
  auto* fovr = app.add_subcommand("fov-report", "field-of-view and resampling loss of rectification");
  fovr->add_option("calib", cal)->required();
  fovr->add_option("--raw-size", raw_size, "WxH")->required();
  fovr->add_option("--target-fov", fov, "horizontal FOV in degrees; 0 keeps the native canvas");
  fovr->add_option("--seed", seed)->capture_default_str();
  fovr->callback([&] { action = [&] { return cmd_fov_report(cal, raw_size, fov, seed); }; });

  std::string src, depth, pose, mask_out;
  auto* warp = app.add_subcommand("warp", "synthesize the target view from src, target depth and pose");
  warp->add_option("calib", cal)->required();
  warp->add_option("--src", src)->required();
  warp->add_option("--depth", depth)->required();
  warp->add_option("--pose", pose, "rx,ry,rz,tx,ty,tz (target -> source)")->required();
  warp->add_option("--out", out_path)->required();
  warp->add_option("--mask-out", mask_out);
  warp->callback([&] { action = [&] { return cmd_warp(cal, src, depth, pose, out_path, mask_out); }; });

  std::vector<std::string> seq, depths;
  std::string poses;
  WeightArgs wa;
  auto* loss = app.add_subcommand("loss", "evaluate the training objective on a 3-frame snippet");
  loss->add_option("calib", cal)->required();
  loss->add_option("--seq", seq, "t-1,t,t+1 images")->required()->expected(3)->delimiter(',');
  loss->add_option("--depths", depths, "t-1,t,t+1 depth PFMs")->required()->expected(3)->delimiter(',');
  loss->add_option("--poses", poses, "CSV rows T(t->t-1), T(t->t+1)")->required();
  loss->add_option("--omega", wa.omega)->capture_default_str();
  loss->add_option("--beta", wa.beta)->capture_default_str();
  loss->add_option("--gamma", wa.gamma)->capture_default_str();
  loss->add_option("--clip", wa.clip)->capture_default_str();
  loss->add_option("--scales", wa.scales)->capture_default_str();
  loss->add_option("--disable", wa.disable, "forward,backward,consistency,smoothness,static-mask")->delimiter(',');
  loss->callback([&] { action = [&] { return cmd_loss(cal, seq, depths, poses, wa); }; });

  RecoverArgs ra;
  auto* rec = app.add_subcommand("recover-depth", "optimize a depth map against posed source views");
  rec->add_option("calib", cal)->required();
  rec->add_option("--target", ra.target)->required();
  rec->add_option("--sources", ra.sources)->required()->delimiter(',');
  rec->add_option("--poses", ra.poses, "one CSV row per source, target -> source")->required();
  rec->add_option("--out", ra.out)->required();
  rec->add_option("--trace", ra.trace, "loss trace CSV");
  rec->add_option("--displacements", ra.displacements, "rescale each pose translation to these norms (m)")
      ->delimiter(',');
  rec->add_option("--max-iters", ra.max_iters)->capture_default_str();
  rec->add_option("--step", ra.step)->capture_default_str();
  rec->add_option("--tol", ra.tol)->capture_default_str();
  rec->add_option("--levels", ra.levels)->capture_default_str();
  rec->add_option("--beta", ra.beta)->capture_default_str();
  rec->add_option("--init-depth", ra.init_depth)->capture_default_str();
  rec->callback([&] { action = [&] { return cmd_recover_depth(cal, ra); }; });

  std::string pred, gt;
  double cap = 80.0, min_depth = 0.1;
  bool median = false;
  auto* eval = app.add_subcommand("evaluate", "depth metrics of a prediction against ground truth");
  eval->add_option("--pred", pred)->required();
  eval->add_option("--gt", gt)->required();
  eval->add_option("--cap", cap)->capture_default_str();
  eval->add_option("--min-depth", min_depth)->capture_default_str();
  eval->add_flag("--median-scale", median);
  eval->callback([&] { action = [&] { return cmd_evaluate(pred, gt, cap, median, min_depth); }; });

  std::string suite;
  auto* st = app.add_subcommand("selftest", "invariant suites");
  st->add_option("suite", suite, "gradients or roundtrip")->required()->check(CLI::IsMember({"gradients", "roundtrip"}));
  st->callback([&] { action = [&] { return cmd_selftest(suite); }; });

  std::string scene, depth_out;
  std::optional<std::uint64_t> render_seed;
  auto* rnd = app.add_subcommand("render", "ray cast a synthetic scene");
  rnd->add_option("calib", cal)->required();
  rnd->add_option("--scene", scene)->required();
  rnd->add_option("--pose", pose, "camera -> world, rx,ry,rz,tx,ty,tz");
  rnd->add_option("--seed", render_seed, "reseed the textures (primitive i gets seed + i)");
  rnd->add_option("--out", out_path)->required();
  rnd->add_option("--depth-out", depth_out);
  rnd->callback([&] { action = [&] { return cmd_render(cal, scene, pose, render_seed, out_path, depth_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    rc = action ? action() : 1;
  } catch (const Error& e) {
    std::cerr << "rawdepth: " << to_string(e.code()) << ": " << e.detail() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "rawdepth: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
