#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lensless/config.hpp"
#include "lensless/errors.hpp"
#include "lensless/fusion.hpp"
#include "lensless/parallel.hpp"
#include "lensless/png_io.hpp"
#include "lensless/rng.hpp"

namespace fs = std::filesystem;
using namespace lensless;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kNumerical = 3, kIo = 4 };

// Depth PNGs store millimeters times this factor.
constexpr double kDepthPngPerMm = 100.0;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw IoError("missing input file " + p.string());
}

Manifest base_manifest(const RunConfig& cfg, const std::string& command) {
  Manifest m;
  m.set("command", command);
  const CameraGeometry g = cfg.geometry();
  const DepthSampling d = cfg.depths();
  m.set("mask_distance_mm", g.mask_distance_mm);
  m.set("sensor_pitch_mm", g.sensor_pitch_mm);
  m.set("mask_pitch_mm", g.mask_pitch_mm);
  m.set("sensor_dims", std::vector<double>{double(g.sensor.rows), double(g.sensor.cols)});
  m.set("mask_dims", std::vector<double>{double(g.mask.rows), double(g.mask.cols)});
  m.set("z_min_mm", d.z_min_mm);
  m.set("z_max_mm", d.z_max_mm);
  m.set("depths_mm", d.depths_mm);
  m.set("alphas", d.alphas);
  m.set("seed", std::to_string(cfg.seed));
  std::ostringstream h;
  h << std::hex << std::setw(16) << std::setfill('0') << cfg.hash();
  m.set("config_hash", h.str());
  return m;
}

void write_config_copy(const RunConfig& cfg, const fs::path& out) {
  std::ofstream f(out / "config.cfg", std::ios::trunc);
  if (!f) throw IoError("cannot write " + (out / "config.cfg").string());
  f << cfg.source_text;
}

MaskSet make_masks(const RunConfig& cfg) {
  switch (cfg.mask_kind) {
    case MaskKind::random:
      return random_masks(cfg.mask_count, cfg.mask, cfg.seed);
    case MaskKind::mls:
      return mls_masks(cfg.mask_count, cfg.mask, cfg.seed);
    case MaskKind::shifted_mls:
      return shifted_mls_masks(cfg.mask, even_shifts(cfg.mask_count, cfg.max_shift), cfg.seed);
    case MaskKind::learned: {
      MaskSet m = masks_from_tensor(read_stack(cfg.mask_file));
      if (m.size() != cfg.mask_count) throw ConfigError("mask_file holds " + std::to_string(m.size()) + " masks, K = " + std::to_string(cfg.mask_count));
      return m;
    }
  }
  throw ConfigError("unhandled mask kind");
}

PlaneStack make_scene(const RunConfig& cfg) {
  const DepthSampling depths = cfg.depths();
  if (!cfg.scene_color.empty()) {
    if (cfg.scene_depth.empty()) throw ConfigError("missing required key 'scene_depth' when scene_color is set");
    return quantize_to_planes(read_rgbd(cfg.scene_color, cfg.scene_depth, cfg.depth_scale_mm), depths, cfg.binning);
  }
  TextureParams tp;
  tp.channels = cfg.channels;
  return generate_procedural_scene(derive_seed(cfg.seed, "cli.scene"), depths, cfg.sensor, tp);
}

void write_previews(const fs::path& dir, const std::string& prefix, const std::vector<Image>& images) {
  for (std::size_t n = 0; n < images.size(); ++n)
    write_png(dir / (prefix + std::to_string(n) + ".png"), {normalize_for_display(images[n])});
}

struct Simulation {
  MaskSet masks;
  PsfStack psfs;
  PlaneStack truth;
  MeasurementSet meas;
};

Simulation run_simulation(const RunConfig& cfg) {
  Simulation s;
  const CameraGeometry geom = cfg.geometry();
  const DepthSampling depths = cfg.depths();
  s.masks = make_masks(cfg);
  if (!(s.masks.dims() == geom.mask)) throw ConfigError("mask dimensions do not match mask_rows x mask_cols");
  s.psfs = synthesize_stack(s.masks, geom, depths, cfg.workers);
  s.truth = make_scene(cfg);
  SimulateOptions opts;
  opts.mode = cfg.mode;
  opts.workers = cfg.workers;
  const std::uint64_t noise_seed = derive_seed(cfg.seed, "cli.noise");
  if (cfg.split_capture)
    s.meas = simulate_split_capture(s.truth, s.masks, geom, depths, cfg.snr_db, noise_seed, opts);
  else
    s.meas = add_noise(simulate(s.truth, s.psfs, opts), cfg.snr_db, noise_seed);
  return s;
}

void save_simulation(const Simulation& s, const RunConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  write_stack(out / "measurements.l3d", to_tensor(s.meas));
  write_stack(out / "psfs.l3d", to_tensor(s.psfs));
  write_stack(out / "truth.l3d", to_tensor(s.truth));
  write_stack(out / "masks.l3d", to_tensor(s.masks));
  write_previews(out, "frame_", s.meas.frames);
  Manifest m = base_manifest(cfg, "simulate");
  m.set("K", s.meas.masks);
  m.set("channels", s.meas.channels);
  m.set("snr_db", cfg.snr_db);
  m.set("mode", to_string(cfg.mode));
  m.set("mask_kind", to_string(cfg.mask_kind));
  m.set("split_capture", cfg.split_capture ? "true" : "false");
  m.write(out / "manifest.txt");
  write_config_copy(cfg, out);
}

struct LoadedSimulation {
  PsfStack psfs;
  MeasurementSet meas;
};

LoadedSimulation load_simulation(const RunConfig& cfg, const fs::path& dir) {
  require_file(dir / "measurements.l3d");
  require_file(dir / "psfs.l3d");
  LoadedSimulation l;
  l.meas = measurements_from_tensor(read_stack(dir / "measurements.l3d"));
  l.meas.mode = cfg.mode;
  l.psfs = psfs_from_tensor(read_stack(dir / "psfs.l3d"), cfg.geometry(), cfg.depths());
  return l;
}

void save_planes(const PlaneStack& planes, const RunConfig& cfg, const fs::path& out, const std::string& command) {
  ensure_dir(out);
  write_stack(out / "planes.l3d", to_tensor(planes));
  std::vector<Image> gray;
  for (int i = 0; i < planes.depths; ++i) {
    std::vector<Image> ch;
    for (int c = 0; c < planes.channels; ++c) ch.push_back(planes.at(i, c));
    gray.push_back(grayscale(ch));
  }
  write_previews(out, "plane_", gray);
  Manifest m = base_manifest(cfg, command);
  m.set("tau0", cfg.tau0);
  m.set("tau_rule", to_string(cfg.tau_rule));
  m.write(out / "manifest.txt");
  write_config_copy(cfg, out);
}

PlaneStack load_planes(const RunConfig& cfg, const fs::path& dir) {
  require_file(dir / "planes.l3d");
  return planes_from_tensor(read_stack(dir / "planes.l3d"), cfg.depths());
}

PlaneStack sweepcam_all(const LoadedSimulation& l, const RunConfig& cfg) {
  const int D = l.psfs.depths;
  PlaneStack out;
  for (int i = 0; i < D; ++i) {
    const PlaneStack one = reconstruct_sweepcam(l.meas, l.psfs, i, cfg.tau0);
    if (i == 0) out = PlaneStack::zeros(D, one.channels, one.grid(), cfg.depths());
    for (int c = 0; c < one.channels; ++c) out.at(i, c) = one.at(0, c);
  }
  return out;
}

std::optional<Denoiser> denoiser_of(const RunConfig& cfg) {
  if (cfg.denoise_sigma > 0.0) return gaussian_denoiser(cfg.denoise_sigma);
  return std::nullopt;
}

void save_fusion(const FusionResult& f, const RunConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  write_stack(out / "all_in_focus.l3d", to_tensor(f.all_in_focus));
  write_stack(out / "depth_mm.l3d", to_tensor(std::vector<Image>{f.depth_map}));
  write_stack(out / "plane_index.l3d", to_tensor(std::vector<Image>{f.plane_index.cast<double>()}));
  write_stack(out / "confidence.l3d", to_tensor(std::vector<Image>{f.confidence}));
  std::vector<Image> display;
  const double peak = std::max(1e-300, [&] {
    double p = 0.0;
    for (const auto& c : f.all_in_focus) p = std::max(p, c.maxCoeff());
    return p;
  }());
  for (const auto& c : f.all_in_focus) display.push_back(c / peak);
  write_png(out / "all_in_focus.png", display);
  write_png16_raw(out / "depth.png", (f.depth_map * kDepthPngPerMm).round());
  Manifest m = base_manifest(cfg, "fuse");
  m.set("window", cfg.window);
  m.set("support_fraction", cfg.support_fraction);
  m.set("depth_png_units_per_mm", kDepthPngPerMm);
  m.write(out / "manifest.txt");
}

FusionResult load_fusion(const RunConfig& cfg, const fs::path& dir) {
  require_file(dir / "all_in_focus.l3d");
  require_file(dir / "plane_index.l3d");
  FusionResult f;
  f.all_in_focus = channels_from_tensor(read_stack(dir / "all_in_focus.l3d"));
  const Image idx = channels_from_tensor(read_stack(dir / "plane_index.l3d")).front();
  f.plane_index = idx.round().cast<int>();
  const DepthSampling d = cfg.depths();
  f.depth_map = Image(idx.rows(), idx.cols());
  for (Eigen::Index j = 0; j < idx.size(); ++j) f.depth_map.data()[j] = d.depths_mm.at(f.plane_index.data()[j]);
  f.confidence = Image::Zero(idx.rows(), idx.cols());
  return f;
}

Manifest report_of(const EvalReport& r, const RunConfig& cfg, const std::string& method) {
  Manifest m;
  m.set("method", method);
  m.set("config_hash", base_manifest(cfg, "evaluate").get("config_hash"));
  m.set("seed", std::to_string(cfg.seed));
  m.set("ssim", r.ssim);
  m.set("depth_accuracy", r.depth_accuracy);
  m.set("depth_odds_ratio", r.depth_odds_ratio);
  m.set("per_plane_mse", r.per_plane_mse);
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Best-of-`repeats` wall time of a full separable reconstruction.
double time_separable(const MeasurementSet& meas, const PsfStack& psfs, const ReconConfig& rc, int repeats) {
  double best = INFINITY;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const PlaneStack p = reconstruct_separable(meas, psfs, rc);
    best = std::min(best, seconds_since(t0));
    if (!p.planes.front().allFinite()) throw NumericalError("non-finite benchmark reconstruction");
  }
  return best;
}

struct BenchCase {
  PsfStack psfs;
  MeasurementSet meas;
};

BenchCase bench_case(const RunConfig& cfg, int side) {
  RunConfig c = cfg;
  c.sensor = {side, side};
  const CameraGeometry g = c.geometry();
  const DepthSampling d = c.depths();
  BenchCase b;
  b.psfs = synthesize_stack(random_masks(c.mask_count, c.mask, c.seed), g, d);
  TextureParams tp;
  const PlaneStack scene = generate_procedural_scene(derive_seed(c.seed, "cli.bench"), d, c.sensor, tp);
  b.meas = add_noise(simulate(scene, b.psfs), 40.0, c.seed);
  return b;
}

void run_benchmark(const RunConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  std::ofstream csv(out / "benchmark.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write benchmark.csv");
  csv << "section,rows,cols,K,D,workers,seconds\n";
  ReconConfig rc = cfg.recon();
  std::vector<double> logm, logt;
  for (int side : cfg.bench_sizes) {
    const BenchCase b = bench_case(cfg, side);
    rc.workers = 1;
    const double t = time_separable(b.meas, b.psfs, rc, cfg.bench_repeats);
    csv << "size," << side << "," << side << "," << cfg.mask_count << "," << cfg.depth_count << ",1," << t << "\n";
    std::cout << "separable " << side << "x" << side << ": " << t << " s\n";
    logm.push_back(std::log(double(side) * side));
    logt.push_back(std::log(t));
  }
  if (logm.size() >= 2) {
    const double n = double(logm.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < logm.size(); ++i) {
      sx += logm[i];
      sy += logt[i];
      sxx += logm[i] * logm[i];
      sxy += logm[i] * logt[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    csv << "exponent,,,,,," << slope << "\n";
    std::cout << "log-log exponent in M: " << slope << "\n";
  }
  const int largest = cfg.bench_sizes.empty() ? 64 : cfg.bench_sizes.back();
  const BenchCase big = bench_case(cfg, largest);
  for (int w = 1; w <= default_workers(); w *= 2) {
    rc.workers = w;
    const double t = time_separable(big.meas, big.psfs, rc, cfg.bench_repeats);
    csv << "workers," << largest << "," << largest << "," << cfg.mask_count << "," << cfg.depth_count << "," << w << ","
        << t << "\n";
  }
  // Dense oracle comparison at 8x8, where the cap allows it.
  RunConfig small = cfg;
  small.mask_count = std::min(cfg.mask_count, 4);
  small.depth_count = std::min(cfg.depth_count, 4);
  const BenchCase tiny = bench_case(small, 8);
  rc.workers = 1;
  rc.tau_rule = TauRule::constant;
  const double t_fast = time_separable(tiny.meas, tiny.psfs, rc, cfg.bench_repeats);
  double t_dense = INFINITY;
  for (int r = 0; r < cfg.bench_repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    reconstruct_dense_oracle(tiny.meas, tiny.psfs, rc.tau0);
    t_dense = std::min(t_dense, seconds_since(t0));
  }
  csv << "separable_small,8,8," << small.mask_count << "," << small.depth_count << ",1," << t_fast << "\n";
  csv << "dense_oracle,8,8," << small.mask_count << "," << small.depth_count << ",1," << t_dense << "\n";
  Manifest m = base_manifest(cfg, "benchmark");
  m.set("bench_repeats", cfg.bench_repeats);
  m.write(out / "manifest.txt");
}

void run_optimize(const RunConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  const CameraGeometry geom = cfg.geometry();
  const DepthSampling depths = cfg.depths();
  OptimConfig oc = cfg.optim();
  TextureParams tp;
  for (int s = 0; s < cfg.train_scenes; ++s)
    oc.scenes.push_back(generate_procedural_scene(derive_seed(cfg.seed, "cli.train", s), depths, cfg.sensor, tp));
  const RelaxedMasks init = RelaxedMasks::random(cfg.mask_count, cfg.mask, derive_seed(cfg.seed, "cli.init"), cfg.init_scale);
  const OptimResult r = optimize_masks(init, oc, geom, depths, cfg.seed);
  write_stack(out / "masks.l3d", to_tensor(r.masks));
  std::vector<Image> previews;
  for (const auto& p : r.masks.patterns) previews.push_back((p.values + 1.0) / 2.0);
  for (std::size_t k = 0; k < previews.size(); ++k) write_png(out / ("mask_" + std::to_string(k) + ".png"), {previews[k]});
  std::ofstream csv(out / "loss_curve.csv", std::ios::trunc);
  csv << "epoch,loss\n";
  for (std::size_t e = 0; e < r.loss_curve.size(); ++e) csv << e << "," << format_double(r.loss_curve[e]) << "\n";
  Manifest m = base_manifest(cfg, "optimize-masks");
  m.set("epochs", cfg.epochs);
  m.set("train_scenes", cfg.train_scenes);
  m.set("learning_rate", cfg.learning_rate);
  if (!r.loss_curve.empty()) {
    m.set("initial_loss", r.loss_curve.front());
    m.set("final_loss", r.loss_curve.back());
  }
  m.write(out / "manifest.txt");
  write_config_copy(cfg, out);
}

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const StackFormatError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-plane lensless 3D imaging: simulation, reconstruction, fusion and mask learning"};
  app.require_subcommand(1);

  std::string config_path, out_dir, in_dir, planes_dir, pred_dir, truth_dir, fused_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers, window;
  bool use_sweepcam = false;

  auto add_common = [&](CLI::App* sub, bool needs_out = true) {
    sub->add_option("--config", config_path, "run configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--workers", workers, "worker threads (0 = all cores)");
    if (needs_out) sub->add_option("--out", out_dir, "output directory")->required();
  };

  auto* simulate_cmd = app.add_subcommand("simulate", "synthesize PSFs and simulate noisy measurements");
  add_common(simulate_cmd);
  auto* recon_cmd = app.add_subcommand("reconstruct", "joint multi-plane reconstruction");
  add_common(recon_cmd);
  recon_cmd->add_option("--in", in_dir, "simulation directory")->required();
  auto* sweep_cmd = app.add_subcommand("sweepcam", "independent single-plane focusing per depth");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--in", in_dir, "simulation directory")->required();
  auto* fuse_cmd = app.add_subcommand("fuse", "all-in-focus image and depth map by local contrast");
  add_common(fuse_cmd);
  fuse_cmd->add_option("--planes", planes_dir, "reconstruction directory")->required();
  fuse_cmd->add_option("--window", window, "odd contrast window");
  auto* eval_cmd = app.add_subcommand("evaluate", "SSIM, depth accuracy and per-plane error");
  add_common(eval_cmd);
  eval_cmd->add_option("--pred", pred_dir, "reconstruction directory")->required();
  eval_cmd->add_option("--truth", truth_dir, "simulation directory holding truth.l3d")->required();
  eval_cmd->add_option("--fused", fused_dir, "fusion directory (fused on the fly when omitted)");
  auto* opt_cmd = app.add_subcommand("optimize-masks", "learn binary masks by gradient descent");
  add_common(opt_cmd);
  auto* masks_cmd = app.add_subcommand("masks", "generate a mask set");
  add_common(masks_cmd);
  auto* bench_cmd = app.add_subcommand("benchmark", "solver timing versus sensor size and workers");
  add_common(bench_cmd);
  auto* pipe_cmd = app.add_subcommand("pipeline", "simulate, reconstruct, fuse and evaluate");
  add_common(pipe_cmd);
  pipe_cmd->add_flag("--sweepcam", use_sweepcam, "also run the single-plane baseline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  return run_guarded([&] {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (window) cfg.window = *window;
    const fs::path out = out_dir;

    if (simulate_cmd->parsed()) {
      save_simulation(run_simulation(cfg), cfg, out);
    } else if (recon_cmd->parsed()) {
      const auto l = load_simulation(cfg, in_dir);
      save_planes(reconstruct_separable(l.meas, l.psfs, cfg.recon()), cfg, out, "reconstruct");
    } else if (sweep_cmd->parsed()) {
      save_planes(sweepcam_all(load_simulation(cfg, in_dir), cfg), cfg, out, "sweepcam");
    } else if (fuse_cmd->parsed()) {
      save_fusion(local_contrast_fuse(load_planes(cfg, planes_dir), cfg.window, denoiser_of(cfg), cfg.support_fraction), cfg, out);
    } else if (eval_cmd->parsed()) {
      const PlaneStack pred = load_planes(cfg, pred_dir);
      require_file(fs::path(truth_dir) / "truth.l3d");
      const PlaneStack truth = planes_from_tensor(read_stack(fs::path(truth_dir) / "truth.l3d"), cfg.depths());
      const FusionResult f =
          fused_dir.empty() ? local_contrast_fuse(pred, cfg.window, denoiser_of(cfg), cfg.support_fraction) : load_fusion(cfg, fused_dir);
      ensure_dir(out);
      report_of(evaluate(pred, f, truth), cfg, "separable").write(out / "report.txt");
    } else if (opt_cmd->parsed()) {
      run_optimize(cfg, out);
    } else if (masks_cmd->parsed()) {
      ensure_dir(out);
      const MaskSet m = make_masks(cfg);
      write_stack(out / "masks.l3d", to_tensor(m));
      for (int k = 0; k < m.size(); ++k)
        write_png(out / ("mask_" + std::to_string(k) + ".png"), {(m.patterns[k].values + 1.0) / 2.0});
      Manifest man = base_manifest(cfg, "masks");
      man.set("mask_kind", to_string(cfg.mask_kind));
      man.set("K", m.size());
      if (cfg.mask_kind == MaskKind::shifted_mls) {
        std::vector<double> shifts;
        for (int s : even_shifts(cfg.mask_count, cfg.max_shift)) shifts.push_back(s);
        man.set("shifts", shifts);
      }
      man.write(out / "manifest.txt");
    } else if (bench_cmd->parsed()) {
      run_benchmark(cfg, out);
    } else if (pipe_cmd->parsed()) {
      const Simulation sim = run_simulation(cfg);
      save_simulation(sim, cfg, out / "simulation");
      const PlaneStack rec = reconstruct_separable(sim.meas, sim.psfs, cfg.recon());
      save_planes(rec, cfg, out / "reconstruction", "reconstruct");
      const FusionResult f = local_contrast_fuse(rec, cfg.window, denoiser_of(cfg), cfg.support_fraction);
      save_fusion(f, cfg, out / "fusion");
      const EvalReport rep = evaluate(rec, f, sim.truth);
      report_of(rep, cfg, "separable").write(out / "report.txt");
      std::cout << "ssim = " << format_double(rep.ssim) << "\ndepth_accuracy = " << format_double(rep.depth_accuracy)
                << "\n";
      if (use_sweepcam) {
        const PlaneStack sw = sweepcam_all({sim.psfs, sim.meas}, cfg);
        save_planes(sw, cfg, out / "sweepcam", "sweepcam");
        const FusionResult fs2 = local_contrast_fuse(sw, cfg.window, denoiser_of(cfg), cfg.support_fraction);
        report_of(evaluate(sw, fs2, sim.truth), cfg, "sweepcam").write(out / "report_sweepcam.txt");
      }
      Manifest m = base_manifest(cfg, "pipeline");
      m.write(out / "manifest.txt");
    }
  });
}
