#include "mb2d/training/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "mb2d/errors.hpp"
#include "mb2d/training/data.hpp"
#include "mb2d/training/losses.hpp"
#include "mb2d/training/pipeline.hpp"

namespace mb2d::training {

namespace fs = std::filesystem;

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::mbrnn: return "mbrnn";
    case Stage::msdr: return "msdr";
    case Stage::onestage: return "onestage";
  }
  return "unknown";
}

Stage parse_stage(const std::string& s) {
  if (s == "mbrnn") return Stage::mbrnn;
  if (s == "msdr") return Stage::msdr;
  if (s == "onestage") return Stage::onestage;
  throw ConfigError("unknown stage '" + s + "' (expected mbrnn, msdr or onestage)");
}

int TrainConfig::spatial_multiple() const {
  switch (stage) {
    case Stage::mbrnn: return mbrnn.backbone().spatial_multiple();
    case Stage::msdr: {
      const int m = msdr.spatial_multiple();
      return needs_mbrnn(msdr) ? std::max(m, mbrnn.backbone().spatial_multiple()) : m;
    }
    case Stage::onestage: return onestage.backbone().spatial_multiple();
  }
  return 1;
}

void TrainConfig::validate(double max_displacement) const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (iterations < 1) throw ConfigError("train.iterations must be >= 1");
  if (!(adam.lr > 0.0)) throw ConfigError("train.adam.lr must be positive");
  if (adam.beta1 < 0.0 || adam.beta1 >= 1.0 || adam.beta2 < 0.0 || adam.beta2 >= 1.0)
    throw ConfigError("train.adam betas must lie in [0, 1)");
  if (checkpoint_every < 0 || validate_every < 0) throw ConfigError("train intervals must be >= 0");
  if (val_samples < 0) throw ConfigError("train.val_samples must be >= 0");
  mbrnn.validate();
  if (stage == Stage::msdr) msdr.validate();
  if (stage == Stage::onestage) onestage.backbone().validate();
  const int mult = spatial_multiple();
  if (crop_size < mult || crop_size % mult != 0)
    throw ConfigError("train.crop_size " + std::to_string(crop_size) + " must be a positive multiple of " +
                      std::to_string(mult));
  if (max_displacement > 0.0 && crop_size < 2.0 * max_displacement)
    throw ConfigError("train.crop_size " + std::to_string(crop_size) + " is below twice the maximum blur extent (" +
                      std::to_string(max_displacement) + " px)");
}

models::ModelState initial_state(const TrainConfig& c) {
  switch (c.stage) {
    case Stage::mbrnn: {
      models::Mbrnn<float> net(c.mbrnn, c.seed);
      const auto p = net.parameters();
      return models::capture(models::Role::mbrnn, c.mbrnn, c.mbrnn.backbone(), p);
    }
    case Stage::msdr: {
      models::Msdr<float> net(c.msdr, c.seed + 1);
      const auto p = net.parameters();
      return models::capture(models::Role::msdr, c.msdr, c.msdr.backbone(), p);
    }
    case Stage::onestage: {
      models::OneStage<float> net(c.onestage, c.seed + 2);
      const auto p = net.parameters();
      return models::capture(models::Role::onestage, c.onestage, c.onestage.backbone(), p);
    }
  }
  throw ConfigError("unknown stage");
}

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ",") + id;
  return out;
}

/// Stage-specific forward pass producing the training loss.
class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual std::vector<nn::Var<float>> parameters() const = 0;
  virtual nn::Var<float> loss(nn::Graph<float>& g, const Batch& b) const = 0;
  virtual ValPoint validate(const std::vector<BlurSample>& samples, std::size_t limit) const = 0;
  virtual models::ModelState state() const = 0;
  virtual std::optional<models::ModelState> mbrnn_state() const { return std::nullopt; }
};

ValPoint mean_point(const metrics::MetricsReport& r) { return {0, r.mean_psnr(), r.mean_ssim()}; }

class MbrnnTrainer final : public Trainer {
 public:
  explicit MbrnnTrainer(const TrainConfig& c) : net_(c.mbrnn, c.seed) {}
  std::vector<nn::Var<float>> parameters() const override { return net_.parameters(); }
  nn::Var<float> loss(nn::Graph<float>& g, const Batch& b) const override {
    const auto out = net_.unroll(g, mbrnn_frames(g, b, net_.config().input_frames));
    return mbrnn_loss<float>(g, out.blurs, targets(g, b));
  }
  ValPoint validate(const std::vector<BlurSample>& samples, std::size_t limit) const override {
    const auto reports = evaluate_more_blur(net_, samples, limit);
    ValPoint p;
    for (const auto& r : reports) {
      p.psnr += r.mean_psnr() / static_cast<double>(reports.size());
      p.ssim += r.mean_ssim() / static_cast<double>(reports.size());
    }
    return p;
  }
  models::ModelState state() const override {
    const auto p = net_.parameters();
    return models::capture(models::Role::mbrnn, net_.config(), net_.config().backbone(), p);
  }

 private:
  std::vector<nn::Var<float>> targets(nn::Graph<float>& g, const Batch& b) const {
    const auto k = static_cast<std::size_t>(net_.config().iterations);
    if (b.targets.size() < k)
      throw DataError("dataset provides " + std::to_string(b.targets.size()) + " more-blurred targets, MBRNN unrolls " +
                      std::to_string(k));
    std::vector<nn::Var<float>> t;
    for (std::size_t i = 0; i < k; ++i) t.push_back(g.constant(b.targets[i]));
    return t;
  }
  models::Mbrnn<float> net_;
};

class MsdrTrainer final : public Trainer {
 public:
  MsdrTrainer(const TrainConfig& c, const models::ModelState* mbrnn)
      : net_(c.msdr, c.seed + 1), frozen_(c.freeze_mbrnn) {
    if (needs_mbrnn(c.msdr)) {
      if (!mbrnn) throw ConfigError("stage msdr requires a trained MBRNN checkpoint");
      mbrnn_ = make_mbrnn(*mbrnn);
      seed_ = mbrnn->seed;
    }
  }
  std::vector<nn::Var<float>> parameters() const override {
    auto p = net_.parameters();
    if (mbrnn_ && !frozen_) {
      const auto extra = mbrnn_->parameters();
      p.insert(p.end(), extra.begin(), extra.end());
    }
    return p;
  }
  nn::Var<float> loss(nn::Graph<float>& g, const Batch& b) const override {
    std::unique_ptr<models::MbrnnUnroll<float>> mb;
    if (mbrnn_) {
      if (frozen_) {
        // Evaluated off-tape; its outputs enter the graph as constants.
        nn::Graph<float> off(false);
        auto u = mbrnn_->unroll(off, mbrnn_frames(off, b, mbrnn_->config().input_frames));
        mb = std::make_unique<models::MbrnnUnroll<float>>();
        for (const auto& v : u.blurs) mb->blurs.push_back(g.constant(v->value));
        for (const auto& v : u.features) mb->features.push_back(g.constant(v->value));
        mb->crfm = g.constant(u.crfm->value);
      } else {
        mb = std::make_unique<models::MbrnnUnroll<float>>(
            mbrnn_->unroll(g, mbrnn_frames(g, b, mbrnn_->config().input_frames)));
      }
    }
    const auto out = net_.run(g, msdr_inputs(g, b, net_.config(), mb.get()));
    auto l = msdr_loss<float>(g, out.by_scale, g.constant(b.sharp));
    if (mb && !frozen_) {
      std::vector<nn::Var<float>> t;
      for (std::size_t i = 0; i < mb->blurs.size(); ++i) t.push_back(g.constant(b.targets.at(i)));
      l = g.add(l, mbrnn_loss<float>(g, mb->blurs, t));
    }
    return l;
  }
  ValPoint validate(const std::vector<BlurSample>& samples, std::size_t limit) const override {
    return mean_point(evaluate_deblur(mbrnn_.get(), net_, samples, limit));
  }
  models::ModelState state() const override {
    const auto p = net_.parameters();
    return models::capture(models::Role::msdr, net_.config(), net_.config().backbone(), p);
  }
  std::optional<models::ModelState> mbrnn_state() const override {
    if (!mbrnn_) return std::nullopt;
    const auto p = mbrnn_->parameters();
    auto s = models::capture(models::Role::mbrnn, mbrnn_->config(), mbrnn_->config().backbone(), p);
    s.seed = seed_;
    return s;
  }

 private:
  models::Msdr<float> net_;
  std::unique_ptr<models::Mbrnn<float>> mbrnn_;
  bool frozen_;
  std::uint64_t seed_ = 0;
};

class OneStageTrainer final : public Trainer {
 public:
  explicit OneStageTrainer(const TrainConfig& c) : net_(c.onestage, c.seed + 2) {}
  std::vector<nn::Var<float>> parameters() const override { return net_.parameters(); }
  nn::Var<float> loss(nn::Graph<float>& g, const Batch& b) const override {
    const auto out = net_.forward(g, onestage_inputs(g, b, net_.config().inputs - 1));
    return g.l1_mean(out, g.constant(b.sharp));
  }
  ValPoint validate(const std::vector<BlurSample>& samples, std::size_t limit) const override {
    return mean_point(evaluate_onestage(net_, samples, limit));
  }
  models::ModelState state() const override {
    const auto p = net_.parameters();
    return models::capture(models::Role::onestage, net_.config(), net_.config().backbone(), p);
  }

 private:
  models::OneStage<float> net_;
};

std::unique_ptr<Trainer> make_trainer(const TrainConfig& c, const models::ModelState* mbrnn) {
  switch (c.stage) {
    case Stage::mbrnn: return std::make_unique<MbrnnTrainer>(c);
    case Stage::msdr: return std::make_unique<MsdrTrainer>(c, mbrnn);
    case Stage::onestage: return std::make_unique<OneStageTrainer>(c);
  }
  throw ConfigError("unknown stage");
}

std::uint64_t stage_seed(const TrainConfig& c) {
  switch (c.stage) {
    case Stage::mbrnn: return c.seed;
    case Stage::msdr: return c.seed + 1;
    case Stage::onestage: return c.seed + 2;
  }
  return c.seed;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(9) << v;
  return os.str();
}

nlohmann::json history_json(const std::vector<ValPoint>& pts) {
  auto j = nlohmann::json::array();
  for (const auto& p : pts) j.push_back({{"step", p.step}, {"psnr", p.psnr}, {"ssim", p.ssim}});
  return j;
}

}  // namespace

TrainRun train_stage(const TrainConfig& config, const Dataset& data, const fs::path& out_dir,
                     const models::ModelState* mbrnn) {
  config.validate();
  if (config.stage == Stage::mbrnn && static_cast<int>(data.blur.offsets.size()) < config.mbrnn.iterations)
    throw DataError("dataset has " + std::to_string(data.blur.offsets.size()) + " more-blur offsets, MBRNN needs " +
                    std::to_string(config.mbrnn.iterations));
  auto trainer = make_trainer(config, mbrnn);
  Adam opt(trainer->parameters(), config.adam);
  BatchSampler sampler(data.train, {config.batch_size, config.crop_size, config.flip_h, config.flip_v, config.rot90,
                                    config.seed});

  std::ofstream metrics_csv, timing_csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream(out_dir / "config.json") << nlohmann::json(config).dump(2) << "\n";
    metrics_csv.open(out_dir / "metrics.csv");
    timing_csv.open(out_dir / "timing.csv");
    if (!metrics_csv || !timing_csv) throw DataError("cannot write training logs under " + out_dir.string());
    metrics_csv << "step,loss,val_psnr,val_ssim\n";
    timing_csv << "step,seconds\n";
  }

  TrainRun run;
  const auto val_limit = static_cast<std::size_t>(config.val_samples);
  auto snapshot = [&](std::int64_t step) {
    auto s = trainer->state();
    s.seed = stage_seed(config);
    s.step = step;
    s.metric_history = history_json(run.validation);
    return s;
  };

  for (std::int64_t step = 1; step <= config.iterations; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    const Batch batch = sampler.next();
    nn::Graph<float> g(true);
    const auto loss = trainer->loss(g, batch);
    const double value = loss->value.span()[0];
    if (!std::isfinite(value))
      throw DivergenceError("non-finite loss " + fmt(value) + " at step " + std::to_string(step) + " (batch " +
                            join_ids(batch.ids) + ")");
    opt.zero_grad();
    g.backward(loss);
    opt.step();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.losses.push_back(value);
    run.step_seconds.push_back(secs);

    const bool last = step == config.iterations;
    const bool val_now = last || (config.validate_every > 0 && step % config.validate_every == 0);
    std::optional<ValPoint> vp;
    if (val_now && !data.test.empty() && config.val_samples > 0) {
      vp = trainer->validate(data.test, val_limit);
      vp->step = step;
      run.validation.push_back(*vp);
    }
    if (metrics_csv.is_open()) {
      metrics_csv << step << "," << fmt(value) << ",";
      if (vp) metrics_csv << fmt(vp->psnr) << "," << fmt(vp->ssim);
      else metrics_csv << ",";
      metrics_csv << "\n";
      timing_csv << step << "," << fmt(secs) << "\n";
    }
    if (!out_dir.empty() && config.checkpoint_every > 0 && step % config.checkpoint_every == 0 && !last)
      models::save_checkpoint(out_dir / "checkpoints" / ("step_" + std::to_string(step)), snapshot(step));
  }

  run.model = snapshot(config.iterations);
  if (auto m = trainer->mbrnn_state()) {
    m->step = config.freeze_mbrnn ? mbrnn->step : mbrnn->step + config.iterations;
    run.mbrnn = std::move(m);
  }
  if (!out_dir.empty()) {
    metrics_csv.close();
    timing_csv.close();
    models::save_checkpoint(out_dir / "model", run.model);
    if (run.mbrnn && !config.freeze_mbrnn) models::save_checkpoint(out_dir / "mbrnn", *run.mbrnn);
  }
  return run;
}

void to_json(nlohmann::json& j, const AdamParams& a) {
  j = nlohmann::json{{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

void from_json(const nlohmann::json& j, AdamParams& a) {
  a.lr = j.at("lr").get<double>();
  a.beta1 = j.at("beta1").get<double>();
  a.beta2 = j.at("beta2").get<double>();
  a.eps = j.at("eps").get<double>();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"stage", stage_name(c.stage)},
                     {"adam", c.adam},
                     {"batch_size", c.batch_size},
                     {"iterations", c.iterations},
                     {"crop_size", c.crop_size},
                     {"flip_h", c.flip_h},
                     {"flip_v", c.flip_v},
                     {"rot90", c.rot90},
                     {"seed", c.seed},
                     {"freeze_mbrnn", c.freeze_mbrnn},
                     {"checkpoint_every", c.checkpoint_every},
                     {"validate_every", c.validate_every},
                     {"val_samples", c.val_samples},
                     {"mbrnn", c.mbrnn},
                     {"msdr", c.msdr},
                     {"onestage", c.onestage}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.stage = parse_stage(j.at("stage").get<std::string>());
  c.adam = j.at("adam").get<AdamParams>();
  c.batch_size = j.at("batch_size").get<int>();
  c.iterations = j.at("iterations").get<std::int64_t>();
  c.crop_size = j.at("crop_size").get<int>();
  c.flip_h = j.at("flip_h").get<bool>();
  c.flip_v = j.at("flip_v").get<bool>();
  c.rot90 = j.at("rot90").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.freeze_mbrnn = j.at("freeze_mbrnn").get<bool>();
  c.checkpoint_every = j.at("checkpoint_every").get<std::int64_t>();
  c.validate_every = j.at("validate_every").get<std::int64_t>();
  c.val_samples = j.at("val_samples").get<int>();
  c.mbrnn = j.at("mbrnn").get<models::MbrnnConfig>();
  c.msdr = j.at("msdr").get<models::MsdrConfig>();
  c.onestage = j.at("onestage").get<models::OneStageConfig>();
}

}  // namespace mb2d::training
