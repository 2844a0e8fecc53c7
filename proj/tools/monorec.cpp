// monorec command-line front end: synthetic bundles, cost volumes, depth,
// auxiliary masks, losses, gradient checks and evaluation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "monorec/config.hpp"
#include "monorec/costvolume.hpp"
#include "monorec/depth.hpp"
#include "monorec/eval.hpp"
#include "monorec/io/bundle.hpp"
#include "monorec/io/pfm.hpp"
#include "monorec/io/ply.hpp"
#include "monorec/io/png.hpp"
#include "monorec/io/scene_file.hpp"
#include "monorec/io/text.hpp"
#include "monorec/io/volume.hpp"
#include "monorec/losses.hpp"
#include "monorec/maskgen.hpp"
#include "monorec/parallel.hpp"
#include "monorec/synth.hpp"

namespace fs = std::filesystem;
using namespace monorec;

namespace {

// Failure with enough context for the machine-readable error line.
struct CliError : std::runtime_error {
  CliError(std::string kind, std::string file, std::string field, const std::string& message)
      : std::runtime_error(message), kind(std::move(kind)), file(std::move(file)), field(std::move(field)) {}
  std::string kind;
  std::string file;
  std::string field;
};

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

int report_error(const std::string& kind, const std::string& file, const std::string& field,
                 const std::string& message) {
  std::fprintf(stderr, "ERROR kind=%s file=%s field=%s message=%s\n", kind.c_str(), quoted(file).c_str(),
               quoted(field).c_str(), quoted(message).c_str());
  return 1;
}

void require_file(const std::string& path, const std::string& field) {
  if (path.empty()) throw CliError("missing_input", "", field, "no path given");
  if (!fs::exists(path)) throw CliError("missing_input", path, field, "file or directory does not exist");
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  io::write_text(path, text);
}

int frame_or_key(int frame, const synth::GroundTruthBundle& b, const std::string& bundle) {
  const int k = frame < 0 ? b.keyframe() : frame;
  if (k < 0 || k >= b.frame_count()) throw CliError("invalid_input", bundle, "frame", "frame index out of range");
  return k;
}

synth::GroundTruthBundle load_bundle(const std::string& path) {
  require_file(path, "bundle");
  return io::read_bundle(path);
}

Grid<double> load_depth(const std::string& path, const synth::GroundTruthBundle& b, const std::string& field) {
  require_file(path, field);
  Grid<double> d = io::read_pfm(path);
  if (d.channels() != 1 || d.width() != b.spec.intrinsics.width || d.height() != b.spec.intrinsics.height) {
    throw CliError("invalid_input", path, field, "depth map does not match bundle resolution");
  }
  for (double v : d.data()) {
    if (!(v > 0.0)) throw CliError("invalid_input", path, field, "inverse depth must be positive everywhere");
  }
  return d;
}

// "zero", "one", or a PNG whose first channel is read as probability.
MovingMask load_mask(const std::string& spec, int width, int height, const std::string& field) {
  if (spec == "zero") return MovingMask(width, height, 1, 0.0);
  if (spec == "one") return MovingMask(width, height, 1, 1.0);
  require_file(spec, field);
  const Image img = io::read_png(spec);
  if (img.width() != width || img.height() != height) {
    throw CliError("invalid_input", spec, field, "mask does not match bundle resolution");
  }
  MovingMask m(width, height, 1, 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) m(x, y) = img(x, y, 0);
  }
  return m;
}

struct Options {
  std::string config_path;
  int threads = 0;
  bool print_defaults = false;
};

int run_synth(const PipelineConfig& cfg, const std::string& spec_path, const std::string& preset, bool frozen,
              const std::string& out) {
  synth::SceneSpec spec;
  if (!spec_path.empty()) {
    require_file(spec_path, "spec");
    spec = io::parse_scene(io::read_text(spec_path), spec_path);
  } else if (preset == "standard") {
    spec = synth::standard_scene(cfg.seed);
  } else {
    throw CliError("invalid_input", "", "preset", "unknown preset '" + preset + "'");
  }
  if (frozen) spec.freeze_movers = true;
  const std::string dir = out.empty() ? cfg.output : out;
  if (dir.empty()) throw CliError("missing_input", "", "out", "no output directory given");
  io::write_bundle(dir, synth::render(spec));
  return 0;
}

int run_costvol(const PipelineConfig& cfg, const std::string& bundle_path, int frame, const std::string& kind_name,
                int source, const std::string& mask_path, const std::string& out) {
  const std::string bundle_dir = bundle_path.empty() ? cfg.bundle : bundle_path;
  const auto b = load_bundle(bundle_dir);
  const int k = frame_or_key(frame, b, bundle_dir);
  const VolumeKind kind = kind_name == "stereo" ? VolumeKind::static_stereo : volume_kind_from_string(kind_name);
  const Frame key = b.key_frame(k);
  CostVolume volume;
  switch (kind) {
    case VolumeKind::aggregated: {
      const auto neighbors = b.temporal_neighbors(k);
      volume = build_cost_volume(key, b.temporal_frames(k), cfg.depth, cfg.alpha_w, neighbors);
      break;
    }
    case VolumeKind::per_pair: {
      if (source < 0 || source >= b.frame_count() || source == k) {
        throw CliError("invalid_input", bundle_dir, "source", "per_pair needs --source, a frame other than the key");
      }
      volume = single_frame_volume(pair_pe_stack(key, b.frames[source], cfg.depth, source), cfg.depth);
      break;
    }
    case VolumeKind::static_stereo:
      volume = single_frame_volume(pair_pe_stack(key, b.stereo[k], cfg.depth, -1), cfg.depth,
                                   VolumeKind::static_stereo);
      break;
  }
  if (!mask_path.empty()) {
    volume = apply_mask(std::move(volume), load_mask(mask_path, volume.width(), volume.height(), "mask"));
  }
  const std::string dir = out.empty() ? cfg.output : out;
  if (dir.empty()) throw CliError("missing_input", "", "out", "no output directory given");
  io::write_volume(dir, volume);
  return 0;
}

int run_depth(const std::string& volume_dir, const std::string& out, const std::string& confidence_out,
              const std::string& ply, const std::string& bundle_path, int frame, double min_confidence) {
  require_file(volume_dir, "volume");
  const CostVolume volume = io::read_volume(volume_dir);
  const InverseDepthMap depth = wta_depth(volume);
  if (out.empty() && confidence_out.empty() && ply.empty()) {
    throw CliError("missing_input", "", "out", "nothing to write: give --out, --confidence or --ply");
  }
  auto ensure_parent = [](const std::string& p) {
    if (const auto parent = fs::path(p).parent_path(); !parent.empty()) fs::create_directories(parent);
  };
  if (!out.empty()) {
    ensure_parent(out);
    io::write_pfm(out, depth.values);
  }
  if (!confidence_out.empty()) {
    ensure_parent(confidence_out);
    io::write_pfm(confidence_out, depth.confidence);
  }
  if (!ply.empty()) {
    const auto b = load_bundle(bundle_path);
    const int k = frame_or_key(frame, b, bundle_path);
    ensure_parent(ply);
    io::write_ply(ply, depth_to_pointcloud(depth, b.key_frame(k), min_confidence));
  }
  return 0;
}

int run_masks(const PipelineConfig& cfg, const std::string& bundle_path, const std::string& depths, int frame,
              const std::string& out) {
  const std::string bundle_dir = bundle_path.empty() ? cfg.bundle : bundle_path;
  const auto b = load_bundle(bundle_dir);
  const int k = frame_or_key(frame, b, bundle_dir);
  require_file(depths, "depths");
  const std::string dir = out.empty() ? cfg.output : out;
  if (dir.empty()) throw CliError("missing_input", "", "out", "no output directory given");
  fs::create_directories(dir);

  std::vector<std::optional<Mask>> moving(3);
  for (int i = 0; i < 3; ++i) {
    const int f = k - 1 + i;
    if (f < 0 || f >= b.frame_count()) continue;
    const std::string dt = depths + "/" + io::frame_name("temporal", f, "pfm");
    const std::string ds = depths + "/" + io::frame_name("stereo", f, "pfm");
    if (f != k && (!fs::exists(dt) || !fs::exists(ds))) continue;
    const PixelMetrics metrics =
        pixel_metrics(b.maskgen_frames(f), load_depth(dt, b, "depths"), load_depth(ds, b, "depths"));
    moving[i] = classify_moving_pixels(metrics, cfg.thresholds);
    io::write_mask_png(dir + "/" + io::frame_name("moving", f, "png"), *moving[i]);
  }
  auto instances = [&](int i) -> FrameInstances {
    const int f = k - 1 + i;
    if (f < 0 || f >= b.frame_count()) return {};
    return {b.instances[f], moving[i] ? &*moving[i] : nullptr};
  };
  const Mask aux = compose_aux_mask(instances(0), instances(1), instances(2), cfg.aux_settings(),
                                    b.spec.intrinsics.width, b.spec.intrinsics.height);
  io::write_mask_png(dir + "/" + io::frame_name("aux", k, "png"), aux);
  return 0;
}

int run_losses(const PipelineConfig& cfg, const std::string& bundle_path, int frame, const std::string& variant,
               const std::string& depth_path, const std::string& stereo_path, const std::string& mask_spec,
               const std::string& aux_path, const std::string& out) {
  const std::string bundle_dir = bundle_path.empty() ? cfg.bundle : bundle_path;
  const auto b = load_bundle(bundle_dir);
  const int k = frame_or_key(frame, b, bundle_dir);
  const int w = b.spec.intrinsics.width;
  const int h = b.spec.intrinsics.height;
  const auto levels = build_pyramid(b.loss_level(k), cfg.scales);
  const auto depth = depth_pyramid(load_depth(depth_path, b, "depth"), cfg.scales);
  LossReport report;
  if (variant == "depth") {
    report = l_depth(levels, depth, cfg.loss);
  } else if (variant == "dref" || variant == "mref") {
    if (stereo_path.empty()) throw CliError("missing_input", "", "stereo-depth", variant + " needs --stereo-depth");
    const auto stereo = depth_pyramid(load_depth(stereo_path, b, "stereo-depth"), cfg.scales);
    const MovingMask mask = load_mask(mask_spec, w, h, "mask");
    if (variant == "dref") {
      report = l_d_ref(levels, depth, stereo, mask, cfg.loss);
    } else {
      if (aux_path.empty()) throw CliError("missing_input", "", "aux", "mref needs --aux");
      require_file(aux_path, "aux");
      const Mask aux = io::read_mask_png(aux_path);
      if (aux.width() != w || aux.height() != h) {
        throw CliError("invalid_input", aux_path, "aux", "mask does not match bundle resolution");
      }
      report = l_m_ref(mask, refinement_maps(levels, depth, stereo, cfg.loss.lambda), aux);
    }
  } else {
    throw CliError("invalid_input", "", "variant", "variant must be depth, mref or dref");
  }
  if (report.sparse_empty) std::fprintf(stderr, "WARNING kind=sparse_empty message=\"no sparse samples\"\n");
  write_output(out, report.to_csv());
  return 0;
}

int run_gradcheck(const PipelineConfig& cfg, const std::string& loss, int points, std::uint64_t seed,
                  const std::string& out) {
  const auto scene = synth::make_gradcheck_scene(seed);
  const auto& level = scene.level;
  const double lambda = cfg.loss.lambda;
  std::mt19937_64 rng(synth::mix_seed(seed, synth::kGradStream, 1));
  std::vector<PixelIndex> pts;
  if (loss == "sparse") {
    std::uniform_int_distribution<std::size_t> pick(0, level.sparse.samples.size() - 1);
    for (int i = 0; i < points; ++i) {
      const auto& s = level.sparse.samples[pick(rng)];
      pts.push_back({s.u, s.v});
    }
  } else {
    std::uniform_int_distribution<int> px(0, scene.inv_depth.width() - 1);
    std::uniform_int_distribution<int> py(0, scene.inv_depth.height() - 1);
    for (int i = 0; i < points; ++i) pts.push_back({px(rng), py(rng)});
  }
  GradCheckResult r;
  if (loss == "self") {
    r = grad_check([&](const auto& d) { return l_self(level, d, lambda).value; }, scene.inv_depth, pts);
  } else if (loss == "smooth") {
    r = grad_check([&](const auto& d) { return l_smooth(d, level.key.image); }, scene.inv_depth, pts);
  } else if (loss == "sparse") {
    r = grad_check([&](const auto& d) { return l_sparse(d, level.sparse).value; }, scene.inv_depth, pts);
  } else if (loss == "dref") {
    r = grad_check(
        [&](const auto& d) {
          return l_d_ref_scale(level, d, scene.stereo_inv_depth, scene.mask, cfg.loss).total(cfg.loss, 0);
        },
        scene.inv_depth, pts);
  } else {
    throw CliError("invalid_input", "", "loss", "loss must be self, smooth, sparse or dref");
  }
  std::string text = "loss,step,max_rel_error,checked,excluded\n";
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    text += loss + "," + format_number(r.steps[i]) + "," + format_number(r.max_rel_error[i]) + "," +
            std::to_string(r.checked) + "," + std::to_string(r.excluded) + "\n";
  }
  write_output(out, text);
  return 0;
}

int run_eval(const PipelineConfig& cfg, const std::string& bundle_path, int frame, const std::string& pred,
             const std::string& scene, const std::string& variant, const std::string& out,
             const std::string& mask_path, const std::string& mask_out) {
  const std::string bundle_dir = bundle_path.empty() ? cfg.bundle : bundle_path;
  const auto b = load_bundle(bundle_dir);
  const int k = frame_or_key(frame, b, bundle_dir);
  const Grid<double> p = load_depth(pred, b, "pred");
  const DepthMetrics m = depth_metrics(p, inverse_to_depth(b.inv_depth[k]), cfg.depth_cap);
  write_output(out, depth_metrics_csv_header() + "\n" + depth_metrics_csv_row(scene, variant, m) + "\n");
  if (!mask_path.empty()) {
    const MovingMask pm = load_mask(mask_path, p.width(), p.height(), "mask");
    const MaskPR pr = mask_pr(pm, b.moving[k], cfg.probability_threshold);
    write_output(mask_out, mask_pr_csv_header() + "\n" + mask_pr_csv_row(scene, variant, pr) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"monorec: plane-sweep depth, moving-object masks and training losses on synthetic scenes"};
  Options opt;
  app.add_option("--config", opt.config_path, "Pipeline config file (section.key = value)");
  app.add_option("--threads", opt.threads, "Worker thread cap (default: MONOREC_THREADS or hardware)")
      ->check(CLI::Range(1, 1024));
  app.add_flag("--print-defaults", opt.print_defaults, "Print the default config and exit");
  app.require_subcommand(0, 1);

  std::string bundle, out, spec, preset = "standard", kind = "aggregated", mask, volume, confidence, ply, depths,
                              variant, depth, stereo_depth, aux, loss = "self", pred, scene = "standard",
                              method = "wta", mask_out;
  int frame = -1, source = -1, points = 200;
  bool frozen = false;
  double min_confidence = 0.0;
  std::optional<std::uint64_t> seed;

  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic bundle");
  synth_cmd->add_option("--spec", spec, "Scene description file");
  synth_cmd->add_option("--preset", preset, "Built-in scene when --spec is absent")->check(CLI::IsMember({"standard"}));
  synth_cmd->add_flag("--static", frozen, "Freeze every mover");
  synth_cmd->add_option("--out", out, "Output bundle directory");

  auto* costvol_cmd = app.add_subcommand("costvol", "Build a cost volume for one keyframe");
  costvol_cmd->add_option("--bundle", bundle, "Bundle directory");
  costvol_cmd->add_option("--frame", frame, "Keyframe index (default: bundle keyframe)");
  costvol_cmd->add_option("--kind", kind, "aggregated, per_pair or static_stereo")
      ->check(CLI::IsMember({"aggregated", "per_pair", "static_stereo", "stereo"}));
  costvol_cmd->add_option("--source", source, "Source frame for per_pair");
  costvol_cmd->add_option("--mask", mask, "Moving-probability PNG applied as (1 - M)");
  costvol_cmd->add_option("--out", out, "Output volume directory");

  auto* depth_cmd = app.add_subcommand("depth", "Winner-take-all depth from a cost volume");
  depth_cmd->add_option("--volume", volume, "Volume directory")->required();
  depth_cmd->add_option("--out", out, "Inverse depth PFM");
  depth_cmd->add_option("--confidence", confidence, "Confidence PFM");
  depth_cmd->add_option("--ply", ply, "Colored point cloud (needs --bundle)");
  depth_cmd->add_option("--bundle", bundle, "Bundle directory for --ply");
  depth_cmd->add_option("--frame", frame, "Keyframe index for --ply");
  depth_cmd->add_option("--min-confidence", min_confidence, "Point cloud confidence cut")->check(CLI::Range(0.0, 2.0));

  auto* masks_cmd = app.add_subcommand("masks", "Auxiliary moving-object masks");
  masks_cmd->add_option("--bundle", bundle, "Bundle directory");
  masks_cmd->add_option("--depths", depths, "Directory with temporal_NNNNNN.pfm and stereo_NNNNNN.pfm")->required();
  masks_cmd->add_option("--frame", frame, "Keyframe index (default: bundle keyframe)");
  masks_cmd->add_option("--out", out, "Output directory");

  auto* losses_cmd = app.add_subcommand("losses", "Loss report as CSV");
  losses_cmd->add_option("--bundle", bundle, "Bundle directory");
  losses_cmd->add_option("--frame", frame, "Keyframe index (default: bundle keyframe)");
  losses_cmd->add_option("--variant", variant, "depth, mref or dref")->required();
  losses_cmd->add_option("--depth", depth, "Inverse depth PFM (temporal depth for mref)")->required();
  losses_cmd->add_option("--stereo-depth", stereo_depth, "Static-stereo inverse depth PFM");
  losses_cmd->add_option("--mask", mask, "zero, one or a probability PNG")->default_val("zero");
  losses_cmd->add_option("--aux", aux, "Auxiliary mask PNG (mref)");
  losses_cmd->add_option("--out", out, "CSV path (default: stdout)");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
  grad_cmd->add_option("--loss", loss, "self, smooth, sparse or dref");
  grad_cmd->add_option("--points", points, "Number of random points")->check(CLI::Range(1, 100000));
  grad_cmd->add_option("--seed", seed, "Random configuration seed (default: run.seed)");
  grad_cmd->add_option("--out", out, "CSV path (default: stdout)");

  auto* eval_cmd = app.add_subcommand("eval", "Depth metrics against ground truth");
  eval_cmd->add_option("--bundle", bundle, "Bundle directory");
  eval_cmd->add_option("--frame", frame, "Keyframe index (default: bundle keyframe)");
  eval_cmd->add_option("--pred", pred, "Predicted inverse depth PFM")->required();
  eval_cmd->add_option("--scene", scene, "Scene name for the CSV row");
  eval_cmd->add_option("--variant", method, "Method variant for the CSV row");
  eval_cmd->add_option("--out", out, "CSV path (default: stdout)");
  eval_cmd->add_option("--mask", mask, "Predicted moving-probability PNG");
  eval_cmd->add_option("--mask-out", mask_out, "Mask precision/recall CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", "", "", e.what());
  }

  try {
    if (opt.print_defaults) {
      std::fputs(PipelineConfig{}.serialize().c_str(), stdout);
      return 0;
    }
    if (opt.threads > 0) set_thread_count(opt.threads);
    PipelineConfig cfg;
    if (!opt.config_path.empty()) {
      require_file(opt.config_path, "config");
      cfg = PipelineConfig::load(opt.config_path);
    }
    if (*synth_cmd) return run_synth(cfg, spec, preset, frozen, out);
    if (*costvol_cmd) return run_costvol(cfg, bundle, frame, kind, source, mask, out);
    if (*depth_cmd) return run_depth(volume, out, confidence, ply, bundle, frame, min_confidence);
    if (*masks_cmd) return run_masks(cfg, bundle, depths, frame, out);
    if (*losses_cmd) return run_losses(cfg, bundle, frame, variant, depth, stereo_depth, mask, aux, out);
    if (*grad_cmd) return run_gradcheck(cfg, loss, points, seed.value_or(cfg.seed), out);
    if (*eval_cmd) return run_eval(cfg, bundle, frame, pred, scene, method, out, mask, mask_out);
    std::fputs(app.help().c_str(), stdout);
    return 0;
  } catch (const CliError& e) {
    return report_error(e.kind, e.file, e.field, e.what());
  } catch (const ConfigError& e) {
    return report_error("config", e.file(), e.field(), e.what());
  } catch (const io::IoError& e) {
    return report_error("io", e.file(), e.field(), e.what());
  } catch (const DimensionError& e) {
    return report_error("dimension", "", "", e.what());
  } catch (const std::exception& e) {
    return report_error("runtime", "", "", e.what());
  }
}
