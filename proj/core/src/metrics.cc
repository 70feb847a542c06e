// Copyright 2026 The UMedKit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>

#include "umed/eval.h"
#include "umed/perturb.h"

namespace umed {

Confusion confusion(const BinaryMap& pred, const BinaryMap& gt) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw DimensionError("prediction and ground truth differ in size");
  }
  Confusion c;
  const auto& p = pred.grid().data();
  const auto& g = gt.grid().data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool a = p[i] != 0, b = g[i] != 0;
    if (a && b) ++c.tp;
    else if (a) ++c.fp;
    else if (b) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double dsc(const Confusion& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 1.0 : 2.0 * c.tp / static_cast<double>(denom);
}

double jaccard(const Confusion& c) {
  const std::size_t denom = c.tp + c.fp + c.fn;
  return denom == 0 ? 1.0 : c.tp / static_cast<double>(denom);
}

double dsc(const BinaryMap& pred, const BinaryMap& gt) {
  return dsc(confusion(pred, gt));
}

double jaccard(const BinaryMap& pred, const BinaryMap& gt) {
  return jaccard(confusion(pred, gt));
}

namespace {

void require_same_shape(const ImagePlane& a, const ImagePlane& b) {
  if (!a.field().same_shape(b.field())) {
    throw DimensionError("images differ in shape");
  }
}

double psnr_from_mse(double mse) {
  return mse == 0.0 ? kInfinitePsnr : -10.0 * std::log10(mse);
}

}  // namespace

double psnr(const ImagePlane& a, const ImagePlane& b) {
  require_same_shape(a, b);
  const auto& x = a.field().data();
  const auto& y = b.field().data();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - y[i];
    sum += d * d;
  }
  return psnr_from_mse(x.empty() ? 0.0 : sum / x.size());
}

double psnr(const ImagePlane& a, const ImagePlane& b, const BinaryMap& region) {
  require_same_shape(a, b);
  if (region.height() != a.height() || region.width() != a.width()) {
    throw DimensionError("region differs in size from the images");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int y = 0; y < a.height(); ++y) {
      for (int x = 0; x < a.width(); ++x) {
        if (!region(y, x)) continue;
        const double d = static_cast<double>(a(y, x, c)) - b(y, x, c);
        sum += d * d;
        ++n;
      }
    }
  }
  return psnr_from_mse(n == 0 ? 0.0 : sum / n);
}

nlohmann::json psnr_json(double value) {
  if (std::isinf(value)) return {{"psnr", nullptr}, {"psnr_infinite", true}};
  return {{"psnr", value}, {"psnr_infinite", false}};
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw ConfigError("kernel size must be odd");
  if (!(sigma > 0)) throw ConfigError("sigma must be > 0");
  std::vector<double> k(size);
  const int r = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - r;
    k[i] = std::exp(-d * d / (2 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace {

// Valid-mode separable filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int oh = h - n + 1, ow = w - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * src[y * w + x + i];
      tmp[y * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * tmp[(y + i) * ow + x];
      out[y * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const ImagePlane& a, const ImagePlane& b, const SsimOptions& opt) {
  require_same_shape(a, b);
  const int h = a.height(), w = a.width();
  if (h < opt.window || w < opt.window) {
    throw ConfigError("image smaller than the SSIM window");
  }
  const std::vector<double> k = gaussian_kernel(opt.window, opt.sigma);
  const double c1 = std::pow(opt.k1 * opt.dynamic_range, 2);
  const double c2 = std::pow(opt.k2 * opt.dynamic_range, 2);
  const std::size_t n = static_cast<std::size_t>(h) * w;
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    auto pa = a.field().plane(c);
    auto pb = b.field().plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = pa[i];
      y[i] = pb[i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    auto mx = filter_valid(x, h, w, k), my = filter_valid(y, h, w, k);
    auto sxx = filter_valid(xx, h, w, k), syy = filter_valid(yy, h, w, k);
    auto sxy = filter_valid(xy, h, w, k);
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      sum += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += sum / mx.size();
  }
  return total / a.channels();
}

// ---- model evaluation ----

std::vector<BinaryMap> predict_masks(const ModelParams<float>& params,
                                     const NetSpec& spec,
                                     std::span<const Sample> samples,
                                     int batch_size) {
  Network<float> net(spec, params);
  net.set_trainable(false);
  std::vector<BinaryMap> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    std::vector<const ImagePlane*> images;
    for (std::size_t i = start; i < end; ++i) images.push_back(&samples[i].image);
    nn::Tensor<float> logits =
        net.forward(nn::Var<float>::constant(stack_images(images))).value();
    for (int n = 0; n < logits.n(); ++n) {
      BinaryMap m(logits.h(), logits.w());
      const float* p = logits.channel(n, 0);
      for (int y = 0; y < logits.h(); ++y) {
        for (int x = 0; x < logits.w(); ++x) m.set(y, x, p[y * logits.w() + x] > 0);
      }
      out.push_back(std::move(m));
    }
  }
  return out;
}

namespace {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

}  // namespace

SegmentationScores score_segmentation(std::span<const BinaryMap> pred,
                                      std::span<const Sample> truth) {
  if (pred.size() != truth.size()) {
    throw DimensionError("prediction count differs from sample count");
  }
  SegmentationScores s;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Confusion c = confusion(pred[i], truth[i].mask);
    s.dsc.push_back(dsc(c));
    s.jaccard.push_back(jaccard(c));
  }
  s.mean_dsc = mean(s.dsc);
  s.mean_jaccard = mean(s.jaccard);
  return s;
}

SegmentationScores evaluate_segmentation(const ModelParams<float>& params,
                                         const NetSpec& spec,
                                         std::span<const Sample> test) {
  std::vector<BinaryMap> pred = predict_masks(params, spec, test);
  return score_segmentation(pred, test);
}

nlohmann::json SegmentationScores::to_json(bool per_sample) const {
  nlohmann::json j = {{"dsc", mean_dsc},
                      {"jaccard", mean_jaccard},
                      {"count", dsc.size()}};
  if (per_sample) {
    j["per_sample"] = {{"dsc", dsc}, {"jaccard", jaccard}};
  }
  return j;
}

InvisibilityScores evaluate_invisibility(std::span<const ImagePlane> clean,
                                         std::span<const ImagePlane> protected_) {
  if (clean.size() != protected_.size()) {
    throw DimensionError("clean and protected sets differ in size");
  }
  InvisibilityScores s;
  double finite_sum = 0.0;
  std::size_t finite = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double p = psnr(protected_[i], clean[i]);
    s.psnr.push_back(p);
    if (std::isinf(p)) {
      ++s.infinite_psnr;
    } else {
      finite_sum += p;
      ++finite;
    }
    s.ssim.push_back(ssim(protected_[i], clean[i]));
  }
  s.mean_psnr = finite > 0 ? finite_sum / finite
                           : (clean.empty() ? 0.0 : kInfinitePsnr);
  s.mean_ssim = mean(s.ssim);
  return s;
}

nlohmann::json InvisibilityScores::to_json(bool per_sample) const {
  nlohmann::json j = psnr_json(mean_psnr);
  j["infinite_psnr_count"] = infinite_psnr;
  j["ssim"] = mean_ssim;
  if (per_sample) {
    nlohmann::json ps = nlohmann::json::array();
    for (double p : psnr) ps.push_back(std::isinf(p) ? nlohmann::json() : nlohmann::json(p));
    j["per_sample"] = {{"psnr", ps}, {"ssim", ssim}};
  }
  return j;
}

}  // namespace umed
