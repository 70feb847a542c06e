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

#include "umed/perturb.h"

#include <algorithm>
#include <cmath>

#include "umed/layers.h"
#include "umed/losses.h"

namespace umed {

using nn::Tensor;
using nn::Var;

std::string_view protector_kind_name(ProtectorKind kind) {
  switch (kind) {
    case ProtectorKind::kNone: return "none";
    case ProtectorKind::kUmed: return "umed";
    case ProtectorKind::kEm: return "em";
  }
  return "?";
}

ProtectorKind parse_protector_kind(std::string_view name) {
  if (name == "none") return ProtectorKind::kNone;
  if (name == "umed") return ProtectorKind::kUmed;
  if (name == "em") return ProtectorKind::kEm;
  throw ConfigError("unknown protector '" + std::string(name) + "'");
}

std::string_view em_region_name(EmRegion region) {
  switch (region) {
    case EmRegion::kFull: return "full";
    case EmRegion::kContour: return "contour";
    case EmRegion::kRoi: return "roi";
  }
  return "?";
}

EmRegion parse_em_region(std::string_view name) {
  if (name == "full") return EmRegion::kFull;
  if (name == "contour") return EmRegion::kContour;
  if (name == "roi") return EmRegion::kRoi;
  throw ConfigError("unknown EM region '" + std::string(name) + "'");
}

GeneratorSpecs default_generator_specs(int channels, int depth, int base_channels,
                                       bool vanilla_contour) {
  GeneratorSpecs g;
  g.contour.arch = vanilla_contour ? Arch::kUnet : Arch::kUnetCdcEncoder;
  g.texture.arch = Arch::kUnet;
  for (NetSpec* s : {&g.contour, &g.texture}) {
    s->depth = depth;
    s->base_channels = base_channels;
    s->in_channels = channels;
    s->out_channels = channels;
    s->zero_head = true;
    s->validate();
  }
  return g;
}

ProtectorState make_umed_state(const GeneratorSpecs& specs, Epsilon epsilon,
                               RngSeed seed, ContourBandSpec band, LbpConfig lbp,
                               float texture_floor, UmedOptions options) {
  ProtectorState s;
  s.kind = ProtectorKind::kUmed;
  s.epsilon = epsilon;
  s.band = band;
  s.lbp = lbp;
  s.texture_floor = texture_floor;
  s.umed = options;
  s.contour_spec = specs.contour;
  s.texture_spec = specs.texture;
  s.contour_params = init_params(specs.contour, derive_seed(seed, "contour_gen"));
  s.texture_params = init_params(specs.texture, derive_seed(seed, "texture_gen"));
  return s;
}

ProtectorState make_em_state(Epsilon epsilon, EmRegion region,
                             ContourBandSpec band) {
  ProtectorState s;
  s.kind = ProtectorKind::kEm;
  s.epsilon = epsilon;
  s.em_region = region;
  s.band = band;
  return s;
}

SampleGeometry sample_geometry(const ImagePlane& image, const BinaryMap& mask,
                               const ProtectorState& state) {
  if (image.height() != mask.height() || image.width() != mask.width()) {
    throw DimensionError("image and mask sizes differ");
  }
  SampleGeometry g;
  g.contour = extract_contour_band(mask, state.band);
  g.interior = interior_map(mask, g.contour);
  g.texture = texture_intensity_map(image, g.interior, state.lbp,
                                    state.texture_floor);
  return g;
}

RealField contour_budget(const SampleGeometry& geo, const ProtectorState& state) {
  RealField b(geo.contour.height(), geo.contour.width(), 1, 0.0f);
  if (!state.umed.contour_enabled) return b;
  const float eps = static_cast<float>(state.epsilon.value());
  for (int y = 0; y < b.height(); ++y) {
    for (int x = 0; x < b.width(); ++x) {
      if (geo.contour(y, x)) b(y, x) = eps;
    }
  }
  return b;
}

RealField texture_budget(const SampleGeometry& geo, const ProtectorState& state) {
  RealField b(geo.interior.height(), geo.interior.width(), 1, 0.0f);
  if (!state.umed.texture_enabled) return b;
  const float eps = static_cast<float>(state.epsilon.value());
  for (int y = 0; y < b.height(); ++y) {
    for (int x = 0; x < b.width(); ++x) {
      if (!geo.interior(y, x)) continue;
      b(y, x) = state.umed.lbp_guided ? eps * geo.texture.values(y, x) : eps;
    }
  }
  return b;
}

// ---- stacking ----

Tensor<float> stack_images(std::span<const ImagePlane* const> images) {
  if (images.empty()) throw DimensionError("empty batch");
  const ImagePlane& f = *images.front();
  Tensor<float> t({static_cast<int>(images.size()), f.channels(), f.height(),
                   f.width()});
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ImagePlane& im = *images[i];
    if (!im.field().same_shape(f.field())) {
      throw DimensionError("images in a batch must share a shape");
    }
    std::copy(im.field().data().begin(), im.field().data().end(),
              t.sample(static_cast<int>(i)));
  }
  return t;
}

Tensor<float> stack_masks(std::span<const BinaryMap* const> masks) {
  if (masks.empty()) throw DimensionError("empty batch");
  const BinaryMap& f = *masks.front();
  Tensor<float> t({static_cast<int>(masks.size()), 1, f.height(), f.width()});
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const auto& g = masks[i]->grid();
    if (!g.same_spatial(f.grid())) {
      throw DimensionError("masks in a batch must share a shape");
    }
    float* dst = t.sample(static_cast<int>(i));
    for (std::size_t k = 0; k < g.size(); ++k) dst[k] = g.data()[k] ? 1.0f : 0.0f;
  }
  return t;
}

Tensor<float> stack_fields(std::span<const RealField* const> fields) {
  if (fields.empty()) throw DimensionError("empty batch");
  const RealField& f = *fields.front();
  Tensor<float> t({static_cast<int>(fields.size()), f.channels(), f.height(),
                   f.width()});
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (!fields[i]->same_shape(f)) {
      throw DimensionError("fields in a batch must share a shape");
    }
    std::copy(fields[i]->data().begin(), fields[i]->data().end(),
              t.sample(static_cast<int>(i)));
  }
  return t;
}

RealField unstack_field(const Tensor<float>& batch, int index) {
  RealField f(batch.h(), batch.w(), batch.c());
  std::copy(batch.sample(index), batch.sample(index) + batch.sample_size(),
            f.data().begin());
  return f;
}

namespace {

// Repeats an N x 1 x H x W tensor across `channels`.
Tensor<float> broadcast_channels(const Tensor<float>& t, int channels) {
  Tensor<float> out({t.n(), channels, t.h(), t.w()});
  for (int n = 0; n < t.n(); ++n) {
    for (int c = 0; c < channels; ++c) {
      std::copy(t.channel(n, 0), t.channel(n, 0) + t.plane_size(),
                out.channel(n, c));
    }
  }
  return out;
}

Tensor<float> negated(const Tensor<float>& t) {
  Tensor<float> out = t;
  for (float& v : out.values()) v = -v;
  return out;
}

}  // namespace

UmedBatch make_umed_batch(std::span<const Sample* const> samples,
                          std::span<const SampleGeometry* const> geometry,
                          const ProtectorState& state) {
  if (samples.size() != geometry.size()) {
    throw DimensionError("samples and geometry differ in count");
  }
  std::vector<const ImagePlane*> images;
  std::vector<RealField> cb, tb;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    images.push_back(&samples[i]->image);
    RealField c = contour_budget(*geometry[i], state);
    for (float& v : c.values()) v = v > 0.0f ? 1.0f : 0.0f;
    cb.push_back(std::move(c));
    tb.push_back(texture_budget(*geometry[i], state));
  }
  std::vector<const RealField*> cp, tp;
  for (std::size_t i = 0; i < cb.size(); ++i) {
    cp.push_back(&cb[i]);
    tp.push_back(&tb[i]);
  }
  UmedBatch b;
  b.images = stack_images(images);
  b.contour_mask = stack_fields(cp);
  b.texture_bound = stack_fields(tp);
  return b;
}

UmedGraph umed_forward(const Network<float>& contour_gen,
                       const Network<float>& texture_gen, const UmedBatch& batch,
                       const ProtectorState& state) {
  const float eps = static_cast<float>(state.epsilon.value());
  const int channels = batch.images.c();
  Var<float> x = Var<float>::constant(batch.images);
  UmedGraph g;
  Var<float> total = x;
  if (state.umed.contour_enabled) {
    Var<float> raw = nn::scale(nn::tanh(contour_gen.forward(x)), eps);
    g.delta_c = nn::clip(nn::mul_constant(raw, batch.contour_mask), -eps, eps);
    total = nn::add(total, g.delta_c);
  }
  if (state.umed.texture_enabled) {
    Tensor<float> hi = broadcast_channels(batch.texture_bound, channels);
    Tensor<float> support = hi;
    for (float& v : support.values()) v = v > 0.0f ? 1.0f : 0.0f;
    Var<float> raw = nn::scale(nn::tanh(texture_gen.forward(x)), eps);
    // Zero the raw output outside the interior before clipping so that no
    // gradient reaches pixels whose bound is zero.
    g.delta_t = nn::clip(nn::mul_constant(raw, support), negated(hi), hi);
    total = nn::add(total, g.delta_t);
  }
  g.protected_images = nn::clip(total, 0.0f, 1.0f);
  return g;
}

// ---- inference ----

namespace {

Perturbation zero_perturbation(int h, int w, int c) {
  return Perturbation{RealField(h, w, c, 0.0f), RealField(h, w, 1, 0.0f)};
}

struct UmedOutputs {
  RealField delta_c, delta_t;
};

UmedOutputs run_generators(const ImagePlane& x, const BinaryMap& y,
                           const ProtectorState& state,
                           const SampleGeometry& geo) {
  Network<float> gc(state.contour_spec, state.contour_params);
  Network<float> gt(state.texture_spec, state.texture_params);
  gc.set_trainable(false);
  gt.set_trainable(false);
  Sample s{"", x, y};
  const Sample* sp = &s;
  const SampleGeometry* gp = &geo;
  UmedBatch batch = make_umed_batch({&sp, 1}, {&gp, 1}, state);
  UmedGraph g = umed_forward(gc, gt, batch, state);
  UmedOutputs out;
  out.delta_c = g.delta_c ? unstack_field(g.delta_c.value(), 0)
                          : RealField(x.height(), x.width(), x.channels(), 0.0f);
  out.delta_t = g.delta_t ? unstack_field(g.delta_t.value(), 0)
                          : RealField(x.height(), x.width(), x.channels(), 0.0f);
  return out;
}

void require_umed(const ProtectorState& state) {
  if (state.kind != ProtectorKind::kUmed) {
    throw ConfigError("protector state is not a UMed state");
  }
}

}  // namespace

Perturbation contour_perturbation(const ImagePlane& x, const BinaryMap& y,
                                  const ProtectorState& state) {
  require_umed(state);
  SampleGeometry geo = sample_geometry(x, y, state);
  UmedOutputs o = run_generators(x, y, state, geo);
  return Perturbation{std::move(o.delta_c), contour_budget(geo, state)};
}

Perturbation texture_perturbation(const ImagePlane& x, const BinaryMap& y,
                                  const ProtectorState& state, bool* warning) {
  require_umed(state);
  SampleGeometry geo = sample_geometry(x, y, state);
  if (warning) *warning = geo.texture.empty_interior;
  UmedOutputs o = run_generators(x, y, state, geo);
  return Perturbation{std::move(o.delta_t), texture_budget(geo, state)};
}

RealField ProtectedSample::total_delta() const {
  RealField out(image.height(), image.width(), image.channels(), 0.0f);
  for (const Perturbation* p : {&delta_c, &delta_t, &delta_em}) {
    if (p->delta.empty()) continue;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out.data()[i] += p->delta.data()[i];
    }
  }
  return out;
}

namespace {

ImagePlane apply_deltas(const ImagePlane& x,
                        std::initializer_list<const RealField*> deltas) {
  RealField f = x.field();
  for (const RealField* d : deltas) {
    if (d->empty()) continue;
    if (!d->same_shape(f)) throw DimensionError("perturbation shape mismatch");
    for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] += d->data()[i];
  }
  return ImagePlane::from_field(clip_interval(f, 0.0f, 1.0f));
}

}  // namespace

ProtectedSample protect_image(const Sample& sample, const ProtectorState& state) {
  const ImagePlane& x = sample.image;
  ProtectedSample out;
  out.id = sample.id;
  out.mask = sample.mask;
  out.kind = state.kind;
  const int h = x.height(), w = x.width(), c = x.channels();
  out.delta_c = zero_perturbation(h, w, c);
  out.delta_t = zero_perturbation(h, w, c);
  out.delta_em = zero_perturbation(h, w, c);
  switch (state.kind) {
    case ProtectorKind::kNone:
      out.image = x;
      break;
    case ProtectorKind::kUmed: {
      SampleGeometry geo = sample_geometry(x, sample.mask, state);
      out.warning = geo.texture.empty_interior && state.umed.texture_enabled;
      UmedOutputs o = run_generators(x, sample.mask, state, geo);
      out.delta_c = Perturbation{std::move(o.delta_c), contour_budget(geo, state)};
      out.delta_t = Perturbation{std::move(o.delta_t), texture_budget(geo, state)};
      out.image = apply_deltas(x, {&out.delta_c.delta, &out.delta_t.delta});
      break;
    }
    case ProtectorKind::kEm: {
      auto it = state.em_deltas.find(sample.id);
      if (it == state.em_deltas.end()) {
        throw MissingPerturbationError("no EM perturbation for sample '" +
                                       sample.id + "'");
      }
      if (!it->second.same_shape(x.field())) {
        throw DimensionError("EM perturbation shape mismatch for '" + sample.id +
                             "'");
      }
      RealField budget = em_region_map(sample.mask, state);
      const float eps = static_cast<float>(state.epsilon.value());
      for (float& v : budget.values()) v *= eps;
      out.delta_em = Perturbation{it->second, std::move(budget)};
      out.image = apply_deltas(x, {&out.delta_em.delta});
      break;
    }
  }
  return out;
}

std::vector<ProtectedSample> protect_dataset(std::span<const Sample> samples,
                                             const ProtectorState& state) {
  std::vector<ProtectedSample> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(protect_image(s, state));
  return out;
}

// ---- EM ----

RealField em_region_map(const BinaryMap& mask, const ProtectorState& state) {
  RealField r(mask.height(), mask.width(), 1, 1.0f);
  if (state.em_region == EmRegion::kFull) return r;
  BinaryMap region = state.em_region == EmRegion::kContour
                         ? extract_contour_band(mask, state.band)
                         : mask;
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) r(y, x) = region(y, x) ? 1.0f : 0.0f;
  }
  return r;
}

float em_update(std::span<const Sample> batch, const Segmenter& surrogate,
                ProtectorState& state, int steps, float step_size) {
  if (batch.empty()) return 0.0f;
  if (steps < 0) throw ConfigError("EM steps must be >= 0");
  const float eps = static_cast<float>(state.epsilon.value());
  std::vector<const ImagePlane*> images;
  std::vector<const BinaryMap*> masks;
  std::vector<RealField> bounds, deltas;
  const int channels = batch.front().image.channels();
  for (const Sample& s : batch) {
    images.push_back(&s.image);
    masks.push_back(&s.mask);
    RealField b = em_region_map(s.mask, state);
    for (float& v : b.values()) v *= eps;
    bounds.push_back(std::move(b));
    auto it = state.em_deltas.find(s.id);
    deltas.push_back(it != state.em_deltas.end()
                         ? it->second
                         : RealField(s.image.height(), s.image.width(),
                                     s.image.channels(), 0.0f));
  }
  std::vector<const RealField*> bp, dp;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    bp.push_back(&bounds[i]);
    dp.push_back(&deltas[i]);
  }
  const Tensor<float> x = stack_images(images);
  const Tensor<float> y = stack_masks(masks);
  const Tensor<float> hi = broadcast_channels(stack_fields(bp), channels);
  const Tensor<float> lo = negated(hi);
  Tensor<float> delta = stack_fields(dp);

  float last_loss = 0.0f;
  for (int k = 0; k < steps; ++k) {
    Var<float> d = Var<float>::parameter(delta);
    Var<float> xp = nn::clip(nn::add(Var<float>::constant(x), d), 0.0f, 1.0f);
    Var<float> loss = seg_loss(surrogate(xp), y);
    last_loss = loss.value().item();
    if (!std::isfinite(last_loss)) {
      throw NumericalError("non-finite loss during EM update");
    }
    nn::backward(loss);
    const Tensor<float>& g = d.grad();
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const float gi = g.empty() ? 0.0f : g.data()[i];
      const float sign = gi > 0.0f ? 1.0f : (gi < 0.0f ? -1.0f : 0.0f);
      delta.data()[i] = std::clamp(delta.data()[i] - step_size * sign,
                                   lo.data()[i], hi.data()[i]);
    }
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    state.em_deltas[batch[i].id] = unstack_field(delta, static_cast<int>(i));
  }
  return last_loss;
}

}  // namespace umed
