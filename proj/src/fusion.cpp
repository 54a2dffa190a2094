#include "lensless/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lensless/errors.hpp"

namespace lensless {

namespace {

int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

// Correlates rows then columns with a symmetric 1D kernel.
Image separable_filter(const Image& in, const Eigen::VectorXd& taps) {
  const int rows = static_cast<int>(in.rows()), cols = static_cast<int>(in.cols());
  const int radius = static_cast<int>(taps.size() / 2);
  Image tmp(rows, cols), out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) acc += taps(t + radius) * in(r, mirror(c + t, cols));
      tmp(r, c) = acc;
    }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) acc += taps(t + radius) * tmp(mirror(r + t, rows), c);
      out(r, c) = acc;
    }
  return out;
}

Eigen::VectorXd gaussian_taps(double sigma, int radius) {
  Eigen::VectorXd taps(2 * radius + 1);
  for (int t = -radius; t <= radius; ++t) taps(t + radius) = std::exp(-0.5 * t * t / (sigma * sigma));
  return taps / taps.sum();
}

void check_same_shape(const std::vector<Image>& a, const std::vector<Image>& b) {
  if (a.size() != b.size() || a.empty()) throw DimensionError("channel counts differ");
  for (std::size_t c = 0; c < a.size(); ++c)
    if (!(grid_of(a[c]) == grid_of(b[c]))) throw DimensionError("image shapes differ");
}

}  // namespace

Image gaussian_blur(const Image& in, double sigma, int radius) {
  if (!(sigma > 0.0)) return in;
  if (radius < 0) radius = static_cast<int>(std::ceil(3.0 * sigma));
  return separable_filter(in, gaussian_taps(sigma, radius));
}

Denoiser gaussian_denoiser(double sigma) {
  return [sigma](const Image& in) { return gaussian_blur(in, sigma); };
}

Image box_mean(const Image& in, int window) {
  return separable_filter(in, Eigen::VectorXd::Constant(window, 1.0 / window));
}

Image laplacian(const Image& in) {
  const int rows = static_cast<int>(in.rows()), cols = static_cast<int>(in.cols());
  Image out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      // Paired sums keep a constant image exactly at zero.
      const double vertical = in(mirror(r - 1, rows), c) + in(mirror(r + 1, rows), c);
      const double horizontal = in(r, mirror(c - 1, cols)) + in(r, mirror(c + 1, cols));
      out(r, c) = (vertical + horizontal) - 4.0 * in(r, c);
    }
  return out;
}

Image focus_measure(const Image& gray, int window) {
  const Image lap = laplacian(gray);
  const Image mean = box_mean(lap, window);
  return (box_mean(lap.square(), window) - mean.square()).max(0.0);
}

Image grayscale(const std::vector<Image>& channels) {
  if (channels.empty()) throw DimensionError("no channels");
  Image acc = channels.front();
  for (std::size_t c = 1; c < channels.size(); ++c) acc += channels[c];
  return channels.size() == 1 ? acc : Image(acc / static_cast<double>(channels.size()));
}

FusionResult local_contrast_fuse(const PlaneStack& planes, int window, const std::optional<Denoiser>& denoiser,
                                 double support_fraction) {
  if (window < 3 || window % 2 == 0) throw DomainError("fusion window must be odd and >= 3");
  if (!(support_fraction >= 0.0 && support_fraction <= 1.0)) throw DomainError("support fraction must lie in [0, 1]");
  if (planes.depths < 1 || planes.channels < 1 ||
      planes.planes.size() != static_cast<std::size_t>(planes.depths) * planes.channels)
    throw DimensionError("malformed plane stack");
  const GridSize g = planes.grid();
  const int D = planes.depths, C = planes.channels;

  std::vector<Image> source = planes.planes;
  if (denoiser)
    for (auto& p : source) p = (*denoiser)(p);

  std::vector<Image> gray;
  Image brightest = Image::Constant(g.rows, g.cols, -INFINITY);
  for (int i = 0; i < D; ++i) {
    std::vector<Image> channels(source.begin() + static_cast<std::ptrdiff_t>(i) * C,
                                source.begin() + static_cast<std::ptrdiff_t>(i + 1) * C);
    gray.push_back(grayscale(channels));
    brightest = brightest.max(gray.back());
  }

  // A plane that is dark at a pixel cannot be the one in focus there, however much texture
  // its window picks up from across an occlusion edge.
  FusionResult out;
  out.plane_index = IndexMap::Zero(g.rows, g.cols);
  out.confidence = Image::Constant(g.rows, g.cols, -1.0);
  for (int i = 0; i < D; ++i) {
    const Image contrast = focus_measure(gray[i], window);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) {
        const bool dark = brightest(r, c) > 0.0 && gray[i](r, c) < support_fraction * brightest(r, c);
        if (!dark && contrast(r, c) > out.confidence(r, c)) {
          out.confidence(r, c) = contrast(r, c);
          out.plane_index(r, c) = i;
        }
      }
  }

  out.all_in_focus.assign(C, Image(g.rows, g.cols));
  out.depth_map.resize(g.rows, g.cols);
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) {
      const int i = out.plane_index(r, c);
      for (int ch = 0; ch < C; ++ch)
        out.all_in_focus[ch](r, c) = source[static_cast<std::size_t>(i) * C + ch](r, c);
      out.depth_map(r, c) = planes.sampling.count() == D ? planes.sampling.depths_mm[i] : static_cast<double>(i);
    }
  return out;
}

double ssim(const std::vector<Image>& image, const std::vector<Image>& reference) {
  double range = 0.0;
  for (const auto& r : reference) range = std::max(range, r.maxCoeff());
  return ssim(image, reference, range > 0.0 ? range : 1.0);
}

double ssim(const std::vector<Image>& image, const std::vector<Image>& reference, double dynamic_range) {
  check_same_shape(image, reference);
  const double c1 = std::pow(0.01 * dynamic_range, 2);
  const double c2 = std::pow(0.03 * dynamic_range, 2);
  const Eigen::VectorXd taps = gaussian_taps(1.5, 5);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t ch = 0; ch < image.size(); ++ch) {
    const Image& x = image[ch];
    const Image& y = reference[ch];
    const Image mx = separable_filter(x, taps);
    const Image my = separable_filter(y, taps);
    const Image sxx = separable_filter(x * x, taps) - mx * mx;
    const Image syy = separable_filter(y * y, taps) - my * my;
    const Image sxy = separable_filter(x * y, taps) - mx * my;
    const Image map = ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
    acc += map.sum();
    count += static_cast<std::size_t>(map.size());
  }
  return acc / static_cast<double>(count);
}

DepthScore depth_score(const IndexMap& predicted, const IndexMap& truth, const BoolMap& valid) {
  if (!(grid_of(predicted) == grid_of(truth)) || !(grid_of(valid) == grid_of(truth)))
    throw DimensionError("depth maps differ in shape");
  const auto total = valid.count();
  if (total == 0) throw DomainError("no valid pixels for depth accuracy");
  const auto correct = (valid && (predicted == truth)).count();
  DepthScore s;
  s.fraction_correct = static_cast<double>(correct) / static_cast<double>(total);
  const auto wrong = total - correct;
  s.odds_ratio = wrong == 0 ? std::numeric_limits<double>::infinity()
                            : static_cast<double>(correct) / static_cast<double>(wrong);
  return s;
}

BoolMap intensity_valid_mask(const std::vector<Image>& image, double fraction) {
  const Image gray = grayscale(image);
  const double peak = gray.maxCoeff();
  return gray >= fraction * peak;
}

IndexMap truth_plane_index(const PlaneStack& scene) {
  const GridSize g = scene.grid();
  IndexMap index = IndexMap::Zero(g.rows, g.cols);
  Image best = Image::Constant(g.rows, g.cols, -std::numeric_limits<double>::infinity());
  for (int i = 0; i < scene.depths; ++i) {
    Image gray = Image::Zero(g.rows, g.cols);
    for (int c = 0; c < scene.channels; ++c) gray += scene.at(i, c);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c)
        if (gray(r, c) > best(r, c)) {
          best(r, c) = gray(r, c);
          index(r, c) = i;
        }
  }
  return index;
}

std::vector<Image> flatten_planes(const PlaneStack& scene) {
  std::vector<Image> out(scene.channels, Image::Zero(scene.grid().rows, scene.grid().cols));
  for (int i = 0; i < scene.depths; ++i)
    for (int c = 0; c < scene.channels; ++c) out[c] += scene.at(i, c);
  return out;
}

EvalReport evaluate(const PlaneStack& reconstruction, const FusionResult& fused, const PlaneStack& truth) {
  if (reconstruction.depths != truth.depths || reconstruction.channels != truth.channels ||
      !(reconstruction.grid() == truth.grid()))
    throw DimensionError("reconstruction and ground truth differ in shape");
  EvalReport report;
  report.ssim = ssim(fused.all_in_focus, flatten_planes(truth));
  const DepthScore d = depth_score(fused.plane_index, truth_plane_index(truth), intensity_valid_mask(fused.all_in_focus));
  report.depth_accuracy = d.fraction_correct;
  report.depth_odds_ratio = d.odds_ratio;
  for (int i = 0; i < truth.depths; ++i) {
    double acc = 0.0;
    for (int c = 0; c < truth.channels; ++c) acc += (reconstruction.at(i, c) - truth.at(i, c)).square().mean();
    report.per_plane_mse.push_back(acc / truth.channels);
  }
  return report;
}

}  // namespace lensless
