// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero on
// any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lensless/fft.hpp"
#include "lensless/fusion.hpp"
#include "lensless/maskopt.hpp"
#include "lensless/masks.hpp"
#include "lensless/recon.hpp"
#include "lensless/rng.hpp"
#include "lensless/scene_io.hpp"

using namespace lensless;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel_err(const std::vector<Image>& a, const std::vector<Image>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    num += (a[n] - b[n]).square().sum();
    den += b[n].square().sum();
  }
  return std::sqrt(num / den);
}

PlaneStack iid_scene(int D, int C, GridSize g, std::uint64_t seed, const DepthSampling& s) {
  Rng rng = make_rng(seed, "acceptance.scene");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PlaneStack out = PlaneStack::zeros(D, C, g, s);
  for (auto& p : out.planes)
    for (Eigen::Index j = 0; j < p.size(); ++j) p.data()[j] = u(rng);
  return out;
}

// Reduced-resolution version of the 256x256 / 63x63 setup: same distances and pitches.
CameraGeometry paper_geometry(GridSize sensor, GridSize mask) {
  return CameraGeometry::from_microns(10.51, 38.4, 36.0, sensor, mask);
}

ReconConfig constant_tau(double tau) {
  ReconConfig c;
  c.tau0 = tau;
  c.tau_rule = TauRule::constant;
  return c;
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void guarded(int id, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

void oracle_equivalence() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int instances = 0;
  std::uint64_t seed = 0;
  for (int side : {4, 8})
    for (int K = 1; K <= 4; ++K)
      for (int D = 1; D <= 3; ++D)
        for (double tau : {1e-6, 1e-2}) {
          ++seed;
          const GridSize mask = side == 4 ? GridSize{3, 3} : GridSize{5, 5};
          const auto g = CameraGeometry::from_microns(10.0, 10.0, 10.0, {side, side}, mask);
          const auto depths = sample_depths(g, 15.0, 60.0, D);
          const PsfStack psfs = synthesize_stack(random_masks(K, mask, seed), g, depths);
          const PlaneStack scene = iid_scene(D, 1, {side, side}, seed, depths);
          const MeasurementSet meas = add_noise(simulate(scene, psfs), 30.0, seed);
          const PlaneStack fast = reconstruct_separable(meas, psfs, constant_tau(tau));
          const PlaneStack dense = reconstruct_dense_oracle(meas, psfs, tau);
          worst = std::max(worst, rel_err(fast.planes, dense.planes));
          ++instances;
        }
  const double t = seconds_since(t0);
  report(1, "oracle equivalence", worst <= 1e-8 && t < 30.0 && instances >= 20,
         fmt("max relative error %.3g over %d instances (limit 1e-8), %.2f s", worst, instances, t));
}

void wiener_equivalence() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto g = paper_geometry({48, 40}, {15, 15});
    const auto depths = sample_depths(g, 35.0, 35.0, 1);
    const PsfStack psfs = synthesize_stack(random_masks(1, {15, 15}, seed), g, depths);
    const PlaneStack scene = iid_scene(1, 1, {48, 40}, seed, depths);
    const MeasurementSet meas = add_noise(simulate(scene, psfs), 30.0, seed);
    const double tau = 1e-2 * seed;
    const PlaneStack rec = reconstruct_separable(meas, psfs, constant_tau(tau));
    const ComplexImage h = transfer_function(psfs.at(0, 0));
    const ComplexImage w = h.conjugate() * fft2(meas.at(0, 0)) / (h.abs2() + tau).cast<std::complex<double>>();
    worst = std::max(worst, rel_err(rec.planes, {ifft2_real(w)}));
  }
  report(2, "Wiener equivalence", worst <= 1e-10, fmt("max relative error %.3g (limit 1e-10)", worst));
}

void sweepcam_equivalence() {
  double worst = 0.0;
  const auto g = paper_geometry({64, 64}, {31, 31});
  const auto depths = sample_depths(g, 35.0, 380.0, 4);
  const PsfStack psfs = synthesize_stack(random_masks(6, {31, 31}, 3), g, depths);
  const PlaneStack scene = generate_procedural_scene(3, depths, {64, 64});
  const MeasurementSet meas = add_noise(simulate(scene, psfs), 40.0, 3);
  for (int z = 0; z < 4; ++z)
    for (double tau : {1e-4, 1e-1}) {
      const PlaneStack a = reconstruct_sweepcam(meas, psfs, z, tau);
      const PlaneStack b = reconstruct_separable(meas, slice_depth(psfs, z), constant_tau(tau));
      worst = std::max(worst, rel_err(a.planes, b.planes));
    }
  report(3, "SweepCam equivalence", worst <= 1e-10, fmt("max relative error %.3g (limit 1e-10)", worst));
}

// Noise tau0 for the frobenius rule at 40 dB. Swept 1e-6..1e-1 on scene and mask seeds
// disjoint from the checked ones: within 0.01 SSIM of best at D=4, best at every K on three of four D=8 mask draws.
constexpr double kNoisyTau0 = 1e-3;

void round_trip() {
  const GridSize sensor{64, 64}, mask{31, 31};
  const auto g = paper_geometry(sensor, mask);
  const auto depths = sample_depths(g, 35.0, 380.0, 4);
  const PsfStack psfs = synthesize_stack(random_masks(6, mask, 41), g, depths);
  ReconConfig exact;
  exact.tau0 = 1e-10;
  const PlaneStack iid = iid_scene(4, 1, sensor, 41, depths);
  const double e_iid = rel_err(reconstruct_separable(simulate(iid, psfs), psfs, exact).planes, iid.planes);
  const PlaneStack proc = generate_procedural_scene(41, depths, sensor);
  const double e_proc = rel_err(reconstruct_separable(simulate(proc, psfs), psfs, exact).planes, proc.planes);

  ReconConfig noisy;
  noisy.tau0 = kNoisyTau0;
  const MeasurementSet meas = add_noise(simulate(proc, psfs), 40.0, 41);
  const PlaneStack rec = reconstruct_separable(meas, psfs, noisy);
  const FusionResult fused = local_contrast_fuse(rec);
  const double s = ssim(fused.all_in_focus, flatten_planes(proc));
  const bool pass = e_iid <= 1e-4 && e_proc <= 1e-4 && s >= 0.8;
  report(4, "round-trip recovery", pass,
         fmt("noise-free relative error %.3g (iid planes) / %.3g (procedural), limit 1e-4; 40 dB fused SSIM %.4f "
             "(limit 0.8)",
             e_iid, e_proc, s));
}

void monotone_in_k() {
  const auto t0 = Clock::now();
  const GridSize sensor{128, 128}, mask{63, 63};
  const auto g = paper_geometry(sensor, mask);
  const auto depths = sample_depths(g, 35.0, 380.0, 8);
  const MaskSet all_masks = random_masks(10, mask, 500);
  TextureParams tp;
  tp.channels = 3;
  std::vector<PlaneStack> scenes;
  for (int s = 0; s < 5; ++s) scenes.push_back(generate_procedural_scene(derive_seed(500, "acceptance.k", s), depths, sensor, tp));
  ReconConfig rc;
  rc.tau0 = kNoisyTau0;
  std::vector<double> ssims, accs;
  const std::vector<int> ks{4, 6, 8, 10};
  for (int K : ks) {
    MaskSet m;
    m.patterns.assign(all_masks.patterns.begin(), all_masks.patterns.begin() + K);
    const PsfStack psfs = synthesize_stack(m, g, depths);
    double s_sum = 0.0, a_sum = 0.0;
    for (int s = 0; s < 5; ++s) {
      const MeasurementSet meas = add_noise(simulate(scenes[s], psfs), 40.0, derive_seed(500, "acceptance.k.noise", s));
      const PlaneStack rec = reconstruct_separable(meas, psfs, rc);
      const EvalReport rep = evaluate(rec, local_contrast_fuse(rec), scenes[s]);
      s_sum += rep.ssim;
      a_sum += rep.depth_accuracy;
    }
    ssims.push_back(s_sum / 5);
    accs.push_back(a_sum / 5);
  }
  auto check = [](const std::vector<double>& v) {
    int inversions = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      const double drop = v[i - 1] - v[i];
      if (drop > 0.01) return false;
      if (drop > 0.0) ++inversions;
    }
    return inversions <= 1;
  };
  const double t = seconds_since(t0);
  const bool pass = check(ssims) && check(accs) && t < 600.0;
  report(5, "monotone in K", pass,
         fmt("K=4/6/8/10 SSIM %.4f %.4f %.4f %.4f, depth accuracy %.4f %.4f %.4f %.4f, %.1f s", ssims[0], ssims[1],
             ssims[2], ssims[3], accs[0], accs[1], accs[2], accs[3], t));
}

void mask_learning() {
  const auto t0 = Clock::now();
  const GridSize sensor{32, 32}, mask{15, 15};
  const auto g = CameraGeometry::from_microns(10.0, 10.0, 10.0, sensor, mask);
  const auto depths = sample_depths(g, 20.0, 100.0, 3);
  OptimConfig cfg;
  cfg.epochs = 50;
  cfg.snr_db = 40.0;
  cfg.recon.tau0 = kNoisyTau0;
  for (int s = 0; s < 20; ++s) cfg.scenes.push_back(generate_procedural_scene(derive_seed(600, "acceptance.train", s), depths, sensor));
  const OptimResult learned = optimize_masks(RelaxedMasks::random(4, mask, 601), cfg, g, depths, 602);
  const double loss_ratio = learned.loss_curve.back() / learned.loss_curve.front();

  const MaskSet random = random_masks(4, mask, 603);
  double mse_l = 0.0, mse_r = 0.0, acc_l = 0.0, acc_r = 0.0;
  for (int s = 0; s < 5; ++s) {
    const PlaneStack scene = generate_procedural_scene(derive_seed(600, "acceptance.heldout", s), depths, sensor);
    const std::uint64_t noise = derive_seed(600, "acceptance.heldout.noise", s);
    for (int which = 0; which < 2; ++which) {
      const PsfStack psfs = synthesize_stack(which == 0 ? learned.masks : random, g, depths);
      const PlaneStack rec = reconstruct_separable(add_noise(simulate(scene, psfs), 40.0, noise), psfs, cfg.recon);
      const EvalReport rep = evaluate(rec, local_contrast_fuse(rec), scene);
      double mse = 0.0;
      for (double v : rep.per_plane_mse) mse += v / rep.per_plane_mse.size();
      (which == 0 ? mse_l : mse_r) += mse / 5;
      (which == 0 ? acc_l : acc_r) += rep.depth_accuracy / 5;
    }
  }
  const bool pass = mse_l < mse_r && acc_l > acc_r && loss_ratio <= 0.5;
  report(6, "mask-learning benefit", pass,
         fmt("held-out MSE learned %.4g vs random %.4g, depth accuracy %.4f vs %.4f, training loss ratio %.3f "
             "(limit 0.5), %.1f s",
             mse_l, mse_r, acc_l, acc_r, loss_ratio, seconds_since(t0)));
}

void gradient_check() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int coords = 0;
  for (std::uint64_t inst = 0; inst < 5; ++inst) {
    const auto g = CameraGeometry::from_microns(10.0, 10.0, 10.0, {8, 8}, {5, 5});
    const auto depths = sample_depths(g, 15.0, 60.0, 2);
    Rng rng = make_rng(700, "acceptance.grad", inst);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PlaneStack scene = PlaneStack::zeros(2, 1, {8, 8}, depths);
    for (auto& p : scene.planes)
      for (Eigen::Index j = 0; j < p.size(); ++j) p.data()[j] = u(rng);
    RelaxedMasks var = RelaxedMasks::random(2, {5, 5}, derive_seed(700, "acceptance.grad.w", inst));
    var.slope = 1.0 + inst;
    ReconConfig rc;
    rc.tau0 = 1e-2;
    const std::uint64_t noise = derive_seed(700, "acceptance.grad.noise", inst);
    const LossGradient lg = loss_and_gradient(var, scene, g, depths, rc, 30.0, noise);
    std::uniform_int_distribution<int> pick_k(0, 1), pick_j(0, 24);
    for (int c = 0; c < 5; ++c) {
      const int k = pick_k(rng), j = pick_j(rng);
      const double h = 1e-4;
      RelaxedMasks p = var, m = var;
      p.logits[k].data()[j] += h;
      m.logits[k].data()[j] -= h;
      const double fd = (loss_and_gradient(p, scene, g, depths, rc, 30.0, noise).loss -
                         loss_and_gradient(m, scene, g, depths, rc, 30.0, noise).loss) /
                        (2 * h);
      const double an = lg.gradient[k].data()[j];
      worst = std::max(worst, std::abs(an - fd) / std::max(std::abs(fd), 1e-300));
      ++coords;
    }
  }
  const double t = seconds_since(t0);
  report(7, "gradient correctness", worst < 1e-4 && t < 120.0,
         fmt("max relative error %.3g over %d coordinates in 5 instances (limit 1e-4), %.2f s", worst, coords, t));
}

double best_time(const MeasurementSet& meas, const PsfStack& psfs, const ReconConfig& rc, int repeats) {
  double best = INFINITY;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    const PlaneStack p = reconstruct_separable(meas, psfs, rc);
    best = std::min(best, seconds_since(t0));
    if (!p.planes[0].allFinite()) throw std::runtime_error("non-finite reconstruction");
  }
  return best;
}

void performance() {
  ReconConfig rc;
  rc.workers = 1;
  std::vector<double> lx, ly;
  std::string times;
  for (int side : {16, 32, 64, 128}) {
    const GridSize sensor{side, side}, mask{15, 15};
    const auto g = paper_geometry(sensor, mask);
    const auto depths = sample_depths(g, 35.0, 380.0, 8);
    const PsfStack psfs = synthesize_stack(random_masks(8, mask, side), g, depths);
    const MeasurementSet meas = add_noise(simulate(iid_scene(8, 1, sensor, side, depths), psfs), 40.0, side);
    best_time(meas, psfs, rc, 1);
    const double t = best_time(meas, psfs, rc, side <= 32 ? 20 : 5);
    lx.push_back(std::log(double(side) * side));
    ly.push_back(std::log(t));
    times += fmt("%dx%d %.4g s; ", side, side, t);
  }
  const double n = double(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

  const GridSize big{148, 274}, mask{63, 63};
  const auto g = paper_geometry(big, mask);
  const auto depths = sample_depths(g, 35.0, 380.0, 8);
  const PsfStack psfs = synthesize_stack(random_masks(8, mask, 9), g, depths);
  const MeasurementSet meas = add_noise(simulate(generate_procedural_scene(9, depths, big), psfs), 40.0, 9);
  ReconConfig all;
  const auto t0 = Clock::now();
  reconstruct_separable(meas, psfs, all);
  const double t_big = seconds_since(t0);
  report(8, "performance scaling", slope >= 0.9 && slope <= 1.3 && t_big <= 3.0,
         fmt("%sfit exponent %.3f (range 0.9 to 1.3); 148x274, K=D=8 in %.3f s (limit 3 s)", times.c_str(), slope, t_big));
}

void determinism() {
  auto run = [](int workers) {
    const GridSize sensor{48, 40}, mask{15, 15};
    const auto g = paper_geometry(sensor, mask);
    const auto depths = sample_depths(g, 35.0, 380.0, 3);
    TextureParams tp;
    tp.channels = 3;
    const PlaneStack scene = generate_procedural_scene(77, depths, sensor, tp);
    const PsfStack psfs = synthesize_stack(mls_masks(4, mask, 77), g, depths, workers);
    SimulateOptions so;
    so.workers = workers;
    const MeasurementSet meas = add_noise(simulate(scene, psfs, so), 40.0, 77);
    ReconConfig rc;
    rc.workers = workers;
    const PlaneStack rec = reconstruct_separable(meas, psfs, rc);
    const FusionResult f = local_contrast_fuse(rec);
    const EvalReport rep = evaluate(rec, f, scene);
    std::string blob = encode_stack(to_tensor(meas)) + encode_stack(to_tensor(rec)) +
                       encode_stack(to_tensor(f.all_in_focus)) + format_double(rep.ssim) +
                       format_double(rep.depth_accuracy);
    const auto g2 = CameraGeometry::from_microns(10.0, 10.0, 10.0, {8, 8}, {5, 5});
    const auto d2 = sample_depths(g2, 15.0, 60.0, 2);
    OptimConfig oc;
    oc.epochs = 3;
    oc.recon.workers = workers;
    oc.scenes = {generate_procedural_scene(5, d2, {8, 8}), generate_procedural_scene(6, d2, {8, 8})};
    const OptimResult opt = optimize_masks(RelaxedMasks::random(2, {5, 5}, 8), oc, g2, d2, 9);
    blob += encode_stack(to_tensor(opt.masks));
    for (double l : opt.loss_curve) blob += format_double(l);
    return blob;
  };
  const std::string a = run(1), b = run(1), c = run(3), d = run(0);
  report(9, "determinism", a == b && a == c && a == d,
         fmt("repeat %s, workers 1 vs 3 %s, workers 1 vs all %s", a == b ? "identical" : "DIFFERS",
             a == c ? "identical" : "DIFFERS", a == d ? "identical" : "DIFFERS"));
}

}  // namespace

int main() {
  guarded(1, "oracle equivalence", oracle_equivalence);
  guarded(2, "Wiener equivalence", wiener_equivalence);
  guarded(3, "SweepCam equivalence", sweepcam_equivalence);
  guarded(4, "round-trip recovery", round_trip);
  guarded(5, "monotone in K", monotone_in_k);
  guarded(6, "mask-learning benefit", mask_learning);
  guarded(7, "gradient correctness", gradient_check);
  guarded(8, "performance scaling", performance);
  guarded(9, "determinism", determinism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
