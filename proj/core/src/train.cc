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

#include "umed/train.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "umed/losses.h"
#include "umed/optim.h"

namespace umed {

using nn::Tensor;
using nn::Var;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr_surrogate > 0) || !(lr_generator > 0) || !(lr_exploiter > 0)) {
    throw ConfigError("learning rates must be > 0");
  }
  if (schedule_modulus < 1) throw ConfigError("schedule_modulus must be >= 1");
}

nlohmann::json LogRecord::to_json() const {
  return {{"epoch", epoch},
          {"split", split},
          {"loss", loss},
          {"updated_component", updated_component}};
}

void TrainLog::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << r.to_json().dump() << '\n';
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count,
                                                    int batch_size, RngSeed seed,
                                                    int epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(derive_seed(seed, "shuffle"),
                      static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = count; i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < count; i += batch_size) {
    batches.emplace_back(order.begin() + i,
                         order.begin() + std::min(count, i + batch_size));
  }
  return batches;
}

namespace {

struct BatchData {
  Tensor<float> images;
  Tensor<float> masks;
  std::vector<std::string> ids;
};

BatchData gather(std::span<const Sample> data,
                 const std::vector<std::size_t>& idx) {
  std::vector<const ImagePlane*> images;
  std::vector<const BinaryMap*> masks;
  BatchData b;
  for (std::size_t i : idx) {
    images.push_back(&data[i].image);
    masks.push_back(&data[i].mask);
    b.ids.push_back(data[i].id);
  }
  b.images = stack_images(images);
  b.masks = stack_masks(masks);
  return b;
}

void check_finite(float loss, const TrainConfig& cfg, const char* component,
                  int epoch, std::size_t batch,
                  const std::vector<std::string>& ids) {
  if (std::isfinite(loss)) return;
  nlohmann::json dump = {{"component", component},
                         {"epoch", epoch},
                         {"batch", batch},
                         {"loss", std::isnan(loss) ? "nan" : "inf"},
                         {"sample_ids", ids}};
  if (!cfg.failure_dump_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.failure_dump_dir, ec);
    std::ofstream(cfg.failure_dump_dir / "failure.json") << dump.dump(2) << '\n';
  }
  throw NumericalError("non-finite loss: " + dump.dump());
}

template <typename Net>
std::vector<Var<float>> joint_parameters(std::initializer_list<Net*> nets) {
  std::vector<Var<float>> out;
  for (Net* n : nets) {
    out.insert(out.end(), n->parameters().begin(), n->parameters().end());
  }
  return out;
}

void clip_if_enabled(std::vector<Var<float>>& params, const TrainConfig& cfg) {
  if (cfg.grad_clip > 0) clip_grad_norm(params, cfg.grad_clip);
}

void emit(TrainLog& log, const LogSink& sink, LogRecord rec) {
  if (sink) sink(rec);
  log.records.push_back(std::move(rec));
}

void require_data(std::span<const Sample> data) {
  if (data.empty()) throw ConfigError("training set is empty");
}

}  // namespace

UmedTrainResult train_umed(std::span<const Sample> data, const TrainConfig& cfg,
                           const NetSpec& surrogate_spec, ProtectorState initial,
                           const LogSink& sink) {
  cfg.validate();
  require_data(data);
  if (initial.kind != ProtectorKind::kUmed) {
    throw ConfigError("train_umed needs a UMed protector state");
  }
  std::vector<SampleGeometry> geometry;
  geometry.reserve(data.size());
  for (const Sample& s : data) {
    geometry.push_back(sample_geometry(s.image, s.mask, initial));
  }

  Network<float> surrogate(surrogate_spec,
                           init_params(surrogate_spec,
                                       derive_seed(cfg.seed, "surrogate")));
  Network<float> gc(initial.contour_spec, initial.contour_params);
  Network<float> gt(initial.texture_spec, initial.texture_params);
  Adam<float> opt_s(surrogate.parameters(), {.lr = cfg.lr_surrogate});
  Adam<float> opt_c(gc.parameters(), {.lr = cfg.lr_generator});
  Adam<float> opt_t(gt.parameters(), {.lr = cfg.lr_generator});
  std::vector<Var<float>> gen_params = joint_parameters({&gc, &gt});

  UmedTrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const bool surrogate_turn = epoch % cfg.schedule_modulus == 0;
    surrogate.set_trainable(surrogate_turn);
    gc.set_trainable(!surrogate_turn);
    gt.set_trainable(!surrogate_turn);
    double loss_sum = 0.0;
    auto batches = epoch_batches(data.size(), cfg.batch_size, cfg.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<const Sample*> sp;
      std::vector<const SampleGeometry*> gp;
      std::vector<const BinaryMap*> mp;
      std::vector<std::string> ids;
      for (std::size_t i : batches[b]) {
        sp.push_back(&data[i]);
        gp.push_back(&geometry[i]);
        mp.push_back(&data[i].mask);
        ids.push_back(data[i].id);
      }
      UmedBatch batch = make_umed_batch(sp, gp, initial);
      UmedGraph graph = umed_forward(gc, gt, batch, initial);
      Var<float> loss =
          seg_loss(surrogate.forward(graph.protected_images), stack_masks(mp));
      const float value = loss.value().item();
      check_finite(value, cfg, surrogate_turn ? "surrogate" : "generators", epoch,
                   b, ids);
      loss_sum += value;
      nn::backward(loss);
      if (surrogate_turn) {
        clip_if_enabled(surrogate.parameters(), cfg);
        opt_s.step();
        surrogate.zero_grad();
        ++result.log.surrogate_steps;
      } else {
        clip_if_enabled(gen_params, cfg);
        opt_c.step();
        opt_t.step();
        gc.zero_grad();
        gt.zero_grad();
        ++result.log.generator_steps;
      }
    }
    emit(result.log, sink,
         {epoch, "train", loss_sum / batches.size(),
          surrogate_turn ? "surrogate" : "generators"});
  }
  result.state = std::move(initial);
  result.state.contour_params = gc.params();
  result.state.texture_params = gt.params();
  result.surrogate_spec = surrogate_spec;
  result.surrogate = surrogate.params();
  return result;
}

EmTrainResult train_em(std::span<const Sample> data, const TrainConfig& cfg,
                       const NetSpec& surrogate_spec, Epsilon epsilon,
                       const EmConfig& em, ContourBandSpec band,
                       const LogSink& sink) {
  cfg.validate();
  require_data(data);
  if (em.rounds < 1) throw ConfigError("EM rounds must be >= 1");
  if (em.steps < 0) throw ConfigError("EM steps must be >= 0");
  EmTrainResult result;
  result.state = make_em_state(epsilon, em.region, band);
  for (const Sample& s : data) {
    result.state.em_deltas[s.id] = RealField(s.image.height(), s.image.width(),
                                             s.image.channels(), 0.0f);
  }
  Network<float> surrogate(surrogate_spec,
                           init_params(surrogate_spec,
                                       derive_seed(cfg.seed, "surrogate")));
  Adam<float> opt(surrogate.parameters(), {.lr = cfg.lr_surrogate});
  const float alpha = static_cast<float>(em.step_fraction * epsilon.value());

  for (int round = 1; round <= em.rounds; ++round) {
    surrogate.set_trainable(true);
    double loss_sum = 0.0;
    auto batches = epoch_batches(data.size(), cfg.batch_size, cfg.seed, round);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      BatchData bd = gather(data, batches[b]);
      std::vector<const RealField*> dp;
      for (const auto& id : bd.ids) dp.push_back(&result.state.em_deltas.at(id));
      Tensor<float> x = bd.images;
      x += stack_fields(dp);
      for (float& v : x.values()) v = std::clamp(v, 0.0f, 1.0f);
      Var<float> loss =
          seg_loss(surrogate.forward(Var<float>::constant(x)), bd.masks);
      check_finite(loss.value().item(), cfg, "surrogate", round, b, bd.ids);
      loss_sum += loss.value().item();
      nn::backward(loss);
      clip_if_enabled(surrogate.parameters(), cfg);
      opt.step();
      surrogate.zero_grad();
      ++result.log.surrogate_steps;
    }
    emit(result.log, sink,
         {round, "train", loss_sum / batches.size(), "surrogate"});

    surrogate.set_trainable(false);
    Segmenter seg = [&surrogate](const Var<float>& v) {
      return surrogate.forward(v);
    };
    double noise_loss = 0.0;
    for (const auto& idx : batches) {
      std::vector<Sample> part;
      for (std::size_t i : idx) part.push_back(data[i]);
      noise_loss += em_update(part, seg, result.state, em.steps, alpha);
      ++result.log.generator_steps;
    }
    emit(result.log, sink, {round, "train", noise_loss / batches.size(), "noise"});
  }
  result.surrogate = surrogate.params();
  return result;
}

namespace {

ExploiterResult train_supervised(std::span<const Sample> data,
                                 const NetSpec& spec, const TrainConfig& cfg,
                                 const AdversarialConfig* adv,
                                 const LogSink& sink) {
  cfg.validate();
  require_data(data);
  Network<float> net(spec, init_params(spec, derive_seed(cfg.seed, "exploiter")));
  Adam<float> opt(net.parameters(), {.lr = cfg.lr_exploiter});
  Rng adv_rng(derive_seed(cfg.seed, "adversarial"));
  ExploiterResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    auto batches = epoch_batches(data.size(), cfg.batch_size, cfg.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      BatchData bd = gather(data, batches[b]);
      if (adv) bd.images = pgd_attack(net, bd.images, bd.masks, *adv, adv_rng);
      Var<float> loss =
          seg_loss(net.forward(Var<float>::constant(bd.images)), bd.masks);
      check_finite(loss.value().item(), cfg, "exploiter", epoch, b, bd.ids);
      loss_sum += loss.value().item();
      nn::backward(loss);
      clip_if_enabled(net.parameters(), cfg);
      opt.step();
      net.zero_grad();
      ++result.log.exploiter_steps;
    }
    emit(result.log, sink, {epoch, "train", loss_sum / batches.size(), "exploiter"});
  }
  result.params = net.params();
  return result;
}

}  // namespace

ExploiterResult train_exploiter(std::span<const Sample> data, const NetSpec& spec,
                                const TrainConfig& cfg, const LogSink& sink) {
  return train_supervised(data, spec, cfg, nullptr, sink);
}

ExploiterResult train_exploiter_adversarial(std::span<const Sample> data,
                                            const NetSpec& spec,
                                            const TrainConfig& cfg,
                                            const AdversarialConfig& adv,
                                            const LogSink& sink) {
  if (adv.steps < 0) throw ConfigError("adversarial steps must be >= 0");
  if (!(adv.step_size > 0)) throw ConfigError("adversarial step size must be > 0");
  return train_supervised(data, spec, cfg, &adv, sink);
}

Tensor<float> pgd_attack(Network<float>& net, const Tensor<float>& images,
                         const Tensor<float>& masks, const AdversarialConfig& adv,
                         Rng& rng) {
  if (adv.steps == 0) return images;
  const float eps = static_cast<float>(adv.epsilon.value());
  const float step = static_cast<float>(adv.step_size);
  const bool was_trainable =
      !net.parameters().empty() && net.parameters().front().requires_grad();
  net.set_trainable(false);

  Tensor<float> lo = images, hi = images;
  for (std::size_t i = 0; i < images.size(); ++i) {
    lo.data()[i] = std::max(0.0f, images.data()[i] - eps);
    hi.data()[i] = std::min(1.0f, images.data()[i] + eps);
  }
  Tensor<float> x = images;
  if (adv.random_start) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      x.data()[i] = std::clamp(
          x.data()[i] + static_cast<float>(rng.uniform(-eps, eps)), lo.data()[i],
          hi.data()[i]);
    }
  }
  for (int k = 0; k < adv.steps; ++k) {
    Var<float> v = Var<float>::parameter(x);
    Var<float> loss = seg_loss(net.forward(v), masks);
    nn::backward(loss);
    const Tensor<float>& g = v.grad();
    if (g.empty()) break;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const float gi = g.data()[i];
      const float sign = gi > 0.0f ? 1.0f : (gi < 0.0f ? -1.0f : 0.0f);
      x.data()[i] = std::clamp(x.data()[i] + step * sign, lo.data()[i],
                               hi.data()[i]);
    }
  }
  net.set_trainable(was_trainable);
  return x;
}

}  // namespace umed
