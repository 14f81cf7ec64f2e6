#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.

#include "srisck/overlay.hpp"
#include "srisck/png_io.hpp"
#include "srisck/srisck.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace srisck::cli {

struct DetectorFlags {
  std::string preset = "sri-sck-1";
  std::optional<std::size_t> block_size, max_keypoints, nms_radius, cm_lower, cm_upper;
  std::optional<double> lambda1, lambda2, scale_factor, overlap_threshold;
  std::optional<std::string> sm_normalization, size_rule;
  std::vector<std::size_t> atom;
  bool smooth_sm = false;

  void add_to(CLI::App &cmd) {
    cmd.add_option("--preset", preset, "Parameter preset")
        ->check(CLI::IsMember({"sri-sck-1", "sri-sck-2"}));
    cmd.add_option("--block-size", block_size, "Block side n (odd, >= 5)");
    cmd.add_option("--lambda1", lambda1, "L1 penalty weight");
    cmd.add_option("--lambda2", lambda2, "L2 penalty weight");
    cmd.add_option("--scale-factor", scale_factor, "Pyramid scale factor in (0,1)");
    cmd.add_option("--max-keypoints", max_keypoints, "Cap on returned key-points");
    cmd.add_option("--nms-radius", nms_radius, "Non-max suppression radius (px)");
    cmd.add_option("--overlap-threshold", overlap_threshold,
                   "Cross-scale overlap fraction that triggers suppression");
    cmd.add_option("--sm-normalization", sm_normalization,
                   "Cross-scale strength normalisation")
        ->check(CLI::IsMember({"identity", "size"}));
    cmd.add_option("--size-rule", size_rule, "Base key-point size rule")
        ->check(CLI::IsMember({"eq3", "sqrt2over4"}));
    cmd.add_option("--cm-lower", cm_lower, "Lower complexity limit");
    cmd.add_option("--cm-upper", cm_upper, "Upper complexity limit");
    cmd.add_option("--atom", atom, "DCT-2 seed atom frequency P Q")->expected(2);
    cmd.add_flag("--smooth-sm", smooth_sm, "Smooth strength maps before NMS");
  }

  DetectorConfig config() const {
    DetectorConfig cfg = *preset_by_name(preset);
    if (block_size) cfg.block_size = *block_size;
    if (lambda1) cfg.lambda1 = *lambda1;
    if (lambda2) cfg.lambda2 = *lambda2;
    if (scale_factor) cfg.scale_factor = *scale_factor;
    if (max_keypoints) cfg.max_keypoints = *max_keypoints;
    if (nms_radius) cfg.nms_radius = *nms_radius;
    if (overlap_threshold) cfg.overlap_suppress_threshold = *overlap_threshold;
    if (sm_normalization)
      cfg.sm_normalization = *sm_normalization == "size" ? SmNormalization::multiply_by_size
                                                         : SmNormalization::identity;
    if (size_rule)
      cfg.size_rule = *size_rule == "eq3" ? SizeRule::eq3 : SizeRule::sqrt2_over_4;
    cfg.cm_lower = cm_lower;
    cfg.cm_upper = cm_upper;
    if (atom.size() == 2) {
      cfg.dictionary.p = atom[0];
      cfg.dictionary.q = atom[1];
    }
    cfg.smooth_sm_map = smooth_sm;
    cfg.validate();
    return cfg;
  }
};

inline bool has_png_extension(const std::string &path) {
  auto ext = std::filesystem::path(path).extension().string();
  for (auto &ch : ext)
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext == ".png";
}

inline void write_rgb(const std::string &path, const RgbImage &img) {
  if (has_png_extension(path))
    write_png(path, img);
  else
    write_ppm(path, img);
}

inline std::optional<ImageSize> parse_size(const std::string &s) {
  std::size_t w = 0, h = 0;
  char x = 0;
  std::istringstream in(s);
  if (in >> w >> x >> h && (x == 'x' || x == 'X') && w > 0 && h > 0)
    return ImageSize{w, h};
  return std::nullopt;
}

inline std::string format_score(const RepeatabilityResult &r) {
  char buf[160];
  if (r.score)
    std::snprintf(buf, sizeof buf, "repeatability=%.6f matches=%zu regions_a=%zu regions_b=%zu",
                  *r.score, r.matches.size(), r.regions_a, r.regions_b);
  else
    std::snprintf(buf, sizeof buf, "repeatability=undefined matches=0 regions_a=%zu regions_b=%zu",
                  r.regions_a, r.regions_b);
  return buf;
}

inline int run_detect(const std::string &image_path, const std::string &out_path,
                      const DetectorFlags &flags, std::size_t max_pixels,
                      const std::string &overlay_path,
                      const std::vector<std::size_t> &dump_alpha, std::size_t threads,
                      std::ostream &out) {
  const DetectorConfig cfg = flags.config();
  const GrayImage img = as_gray(read_image(image_path, max_pixels));
  if (std::min(img.width(), img.height()) < cfg.block_size)
    throw std::invalid_argument("image is smaller than the block size");
  const Detector detector(cfg);

  if (dump_alpha.size() == 2) {
    const auto level = gaussian_blur(img, cfg.blur_sigma);
    const CircularMask mask(cfg.block_size);
    const auto code = code_block_at(level, detector.solver(), mask, dump_alpha[1], dump_alpha[0]);
    out << "alpha";
    if (code) {
      char buf[48];
      for (double a : code->alpha) {
        std::snprintf(buf, sizeof buf, " %.9g", a);
        out << buf;
      }
      out << " cm=" << complexity_measure(*code) << " sm=" << strength_measure(*code) << '\n';
    } else {
      out << " flat cm=0 sm=0\n";
    }
  }

  KeyPointFile file;
  file.block_size = cfg.block_size;
  file.scale_factor = cfg.scale_factor;
  file.image_width = img.width();
  file.image_height = img.height();
  file.keypoints = detector.detect(img, threads ? threads : default_worker_count());
  write_keypoints(out_path, file);
  if (!overlay_path.empty())
    write_rgb(overlay_path, render_overlay(img, file.keypoints));
  return 0;
}

inline int run_eval(const std::string &a_path, const std::string &b_path,
                    const std::string &h_path, double threshold, const std::string &size_a,
                    const std::string &size_b, const std::string &matches_path,
                    std::ostream &out) {
  const auto fa = read_keypoints(a_path);
  const auto fb = read_keypoints(b_path);
  const auto h = read_homography(h_path);
  auto resolve = [](const std::string &flag, const KeyPointFile &f,
                    const char *which) -> ImageSize {
    if (!flag.empty()) {
      if (auto s = parse_size(flag))
        return *s;
      throw std::invalid_argument(std::string("bad --size-") + which + " (want WxH)");
    }
    if (f.image_width && f.image_height)
      return {*f.image_width, *f.image_height};
    throw std::invalid_argument(std::string("image size of ") + which +
                                " unknown; pass --size-" + which);
  };
  const auto res = repeatability(fa.keypoints, fb.keypoints, h, resolve(size_a, fa, "a"),
                                 resolve(size_b, fb, "b"), threshold);
  out << format_score(res) << '\n';
  if (!matches_path.empty()) {
    std::ofstream m(matches_path);
    if (!m)
      throw std::runtime_error("cannot write " + matches_path);
    char buf[96];
    for (const auto &match : res.matches) {
      std::snprintf(buf, sizeof buf, "%zu %zu %.6f\n", match.index_a, match.index_b,
                    match.overlap_error);
      m << buf;
    }
  }
  return 0;
}

inline int run_dict(const DetectorFlags &flags, const std::string &out_path,
                    const std::string &pgm_dir) {
  const DetectorConfig cfg = flags.config();
  const auto ed = make_ext_dct2(cfg.block_size, cfg.dictionary);
  std::ofstream out(out_path);
  if (!out)
    throw std::runtime_error("cannot write " + out_path);
  char buf[40];
  for (std::size_t j = 0; j < ed.cols(); ++j) {
    const auto col = ed.column(j);
    for (std::size_t r = 0; r < col.size(); ++r) {
      std::snprintf(buf, sizeof buf, "%.17g", col[r]);
      out << (r ? " " : "") << buf;
    }
    out << '\n';
  }
  if (!pgm_dir.empty()) {
    std::filesystem::create_directories(pgm_dir);
    const CircularMask mask(cfg.block_size);
    for (std::size_t j = 0; j < ed.cols(); ++j) {
      // Masked column painted back into the block, rescaled to [0,1].
      const auto col = ed.column(j);
      double lo = col[0], hi = col[0];
      for (double v : col) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      GrayImage g(cfg.block_size, cfg.block_size, 0.0);
      std::size_t i = 0;
      for (auto [r, c] : mask.index_map())
        g(r, c) = hi > lo ? (col[i++] - lo) / (hi - lo) : 0.5;
      std::snprintf(buf, sizeof buf, "atom_%03zu.pgm", j);
      write_pgm((std::filesystem::path(pgm_dir) / buf).string(), g);
    }
  }
  return 0;
}

inline int run_synth(std::uint64_t seed, const std::string &kind, const std::string &prefix) {
  const TransformKind k = kind == "rotation90" ? TransformKind::rotation90
                          : kind == "scale"    ? TransformKind::scale
                                               : TransformKind::gain_offset;
  const auto pair = synth_pair(seed, k);
  write_pgm(prefix + "_a.pgm", pair.a);
  write_pgm(prefix + "_b.pgm", pair.b);
  std::ofstream h(prefix + "_H.txt");
  if (!h)
    throw std::runtime_error("cannot write " + prefix + "_H.txt");
  write_homography(h, pair.h);
  return 0;
}

//! Parses argv and runs one subcommand. Returns the process exit code.
inline int run_cli(int argc, const char *const *argv, std::ostream &out = std::cout,
                   std::ostream &err = std::cerr) {
  CLI::App app{"Sparse-coding scale and rotation invariant key-point detector"};
  app.require_subcommand(1);

  DetectorFlags det_flags;
  std::string image_path, out_path, overlay_path;
  std::size_t max_pixels = 64'000'000;
  std::vector<std::size_t> dump_alpha;
  std::size_t threads = 0;
  auto *detect = app.add_subcommand("detect", "Detect key-points in an image");
  detect->add_option("image", image_path, "Input PNG/PGM/PPM")->required();
  detect->add_option("-o,--output", out_path, "Key-point file")->required();
  detect->add_option("--overlay", overlay_path, "Also write an overlay image");
  detect->add_option("--max-pixels", max_pixels, "Reject larger images (0 = no limit)");
  detect->add_option("--dump-alpha", dump_alpha, "Print the code of base-level pixel COL ROW")
      ->expected(2);
  detect->add_option("--threads", threads, "Worker threads (0 = SRISCK_THREADS or all cores)");
  det_flags.add_to(*detect);

  std::string kp_a, kp_b, h_path, size_a, size_b, matches_path;
  double threshold = 0.4;
  auto *eval = app.add_subcommand("eval", "Repeatability of two key-point files");
  eval->add_option("keypoints_a", kp_a)->required();
  eval->add_option("keypoints_b", kp_b)->required();
  eval->add_option("homography", h_path, "3x3 matrix mapping A to B")->required();
  eval->add_option("--threshold", threshold, "Overlap error threshold");
  eval->add_option("--size-a", size_a, "Image A size WxH (default: from file)");
  eval->add_option("--size-b", size_b, "Image B size WxH (default: from file)");
  eval->add_option("--matches", matches_path, "Write accepted matches");

  DetectorFlags dict_flags;
  std::string dict_out, pgm_dir;
  auto *dict = app.add_subcommand("dict", "Dump the extended dictionary");
  dict->add_option("-o,--output", dict_out, "Text matrix, one column per line")->required();
  dict->add_option("--pgm-dir", pgm_dir, "Directory for per-atom PGM images");
  dict_flags.add_to(*dict);

  std::string ov_image, ov_kp, ov_out;
  auto *overlay = app.add_subcommand("overlay", "Draw key-points over an image");
  overlay->add_option("image", ov_image)->required();
  overlay->add_option("keypoints", ov_kp)->required();
  overlay->add_option("-o,--output", ov_out, "PNG or PPM output")->required();

  std::uint64_t seed = 1;
  std::string kind = "scale", prefix;
  auto *synth = app.add_subcommand("synth", "Write a synthetic image pair with ground truth");
  synth->add_option("--seed", seed, "Fixture seed");
  synth->add_option("--kind", kind, "Transform")
      ->check(CLI::IsMember({"rotation90", "scale", "gain_offset"}));
  synth->add_option("-o,--output", prefix, "Output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err);
  }

  try {
    if (*detect)
      return run_detect(image_path, out_path, det_flags, max_pixels, overlay_path,
                        dump_alpha, threads, out);
    if (*eval)
      return run_eval(kp_a, kp_b, h_path, threshold, size_a, size_b, matches_path, out);
    if (*dict)
      return run_dict(dict_flags, dict_out, pgm_dir);
    if (*overlay) {
      const auto img = as_gray(read_image(ov_image));
      write_rgb(ov_out, render_overlay(img, read_keypoints(ov_kp).keypoints));
      return 0;
    }
    if (*synth)
      return run_synth(seed, kind, prefix);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

} // namespace srisck::cli
