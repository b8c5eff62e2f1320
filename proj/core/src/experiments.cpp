#include "mb2d/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "mb2d/errors.hpp"
#include "mb2d/json_path.hpp"
#include "mb2d/metrics.hpp"
#include "mb2d/training/pipeline.hpp"

namespace mb2d::experiments {

namespace fs = std::filesystem;
using training::Stage;
using training::TrainConfig;

std::string experiment_name(ExperimentId id) {
  switch (id) {
    case ExperimentId::ideal_multiblur: return "ideal_multiblur";
    case ExperimentId::ablation_nif_crfm: return "ablation_nif_crfm";
    case ExperimentId::mbrnn_frames: return "mbrnn_frames";
    case ExperimentId::spectral: return "spectral";
  }
  return "unknown";
}

ExperimentId parse_experiment(const std::string& s) {
  for (auto id : {ExperimentId::ideal_multiblur, ExperimentId::ablation_nif_crfm, ExperimentId::mbrnn_frames,
                  ExperimentId::spectral})
    if (experiment_name(id) == s) return id;
  throw ConfigError("unknown experiment '" + s +
                    "' (expected ideal_multiblur, ablation_nif_crfm, mbrnn_frames or spectral)");
}

TrainConfig ExperimentPlan::arm_config(const Arm& arm, std::uint64_t seed) const {
  nlohmann::json j = train;
  for (const auto& [k, v] : arm.delta.items()) set_path(j, k, v);
  auto c = j.get<TrainConfig>();
  c.seed = seed;
  return c;
}

std::vector<std::string> ExperimentPlan::delta_keys() const {
  std::set<std::string> keys;
  for (const auto& a : arms)
    for (const auto& [k, v] : a.delta.items()) keys.insert(k);
  return {keys.begin(), keys.end()};
}

void ExperimentPlan::validate() const {
  if (id != ExperimentId::spectral && seeds.size() < 3)
    throw ConfigError("experiment.seeds must list at least 3 seeds, got " + std::to_string(seeds.size()));
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("experiment.seeds must be distinct");
  if (eval_samples < 0) throw ConfigError("experiment.eval_samples must be >= 0");
  std::set<std::string> names;
  for (const auto& a : arms)
    if (!names.insert(a.name).second) throw ConfigError("duplicate arm '" + a.name + "'");
  check_arm_isolation(*this);
  const double displacement = dataset.scene.max_speed * (dataset.blur.max_exposure() - 1);
  for (const auto& a : arms) arm_config(a, seeds.empty() ? 0 : seeds.front()).validate(displacement);
}

ExperimentPlan make_plan(ExperimentId id, const DatasetSpec& dataset, const TrainConfig& train,
                         const ExperimentSettings& settings) {
  ExperimentPlan p;
  p.id = id;
  p.dataset = dataset;
  p.train = train;
  p.seeds = settings.seeds;
  p.eval_samples = settings.eval_samples;
  switch (id) {
    case ExperimentId::ideal_multiblur: {
      const int available = static_cast<int>(dataset.blur.offsets.size()) + 1;
      if (settings.max_ideal_set < 2) throw ConfigError("experiment.max_ideal_set must be >= 2");
      if (settings.max_ideal_set > available)
        throw DataError("ideal input Set" + std::to_string(settings.max_ideal_set) + " needs " +
                        std::to_string(settings.max_ideal_set - 1) + " more-blurred targets, dataset blur.offsets has " +
                        std::to_string(available - 1));
      p.train.stage = Stage::onestage;
      for (int k = 1; k <= settings.max_ideal_set; ++k)
        p.arms.push_back({"set" + std::to_string(k), {{"onestage.inputs", k}}});
      p.varied_keys = {"onestage.inputs"};
      break;
    }
    case ExperimentId::ablation_nif_crfm: {
      p.train.stage = Stage::msdr;
      p.train.mbrnn.input_frames = 3;
      // The ablation deblurrer is a single-scale U-Net.
      p.train.msdr.scales = 1;
      const int mb = p.train.mbrnn.iterations;
      const int crfm = p.train.mbrnn.crfm_channels();
      auto arm = [](bool nb, int m, int c) {
        return nlohmann::json{{"msdr.neighbor_frames", nb}, {"msdr.more_blur_inputs", m}, {"msdr.crfm_channels", c}};
      };
      p.arms = {{"a_1frame", arm(false, 0, 0)},
                {"b_3frame", arm(true, 0, 0)},
                {"d_mb_no_crfm", arm(true, mb, 0)},
                {"e_mb_crfm", arm(true, mb, crfm)}};
      p.varied_keys = {"msdr.crfm_channels", "msdr.more_blur_inputs", "msdr.neighbor_frames"};
      break;
    }
    case ExperimentId::mbrnn_frames:
      p.train.stage = Stage::mbrnn;
      p.arms = {{"1frame", {{"mbrnn.input_frames", 1}}}, {"3frame", {{"mbrnn.input_frames", 3}}}};
      p.varied_keys = {"mbrnn.input_frames"};
      break;
    case ExperimentId::spectral:
      p.seeds = {dataset.seed};
      break;
  }
  return p;
}

void check_arm_isolation(const ExperimentPlan& plan) {
  const auto& declared = plan.varied_keys;
  for (const auto& a : plan.arms)
    for (const auto& [k, v] : a.delta.items())
      if (std::find(declared.begin(), declared.end(), k) == declared.end())
        throw ConfigError("arm '" + a.name + "' sets '" + k + "', which this experiment does not vary");
  const std::uint64_t seed = plan.seeds.empty() ? 0 : plan.seeds.front();
  std::vector<nlohmann::json> configs;
  for (const auto& a : plan.arms) configs.push_back(plan.arm_config(a, seed));
  for (std::size_t i = 0; i < configs.size(); ++i)
    for (std::size_t j = i + 1; j < configs.size(); ++j)
      for (const auto& k : diff_paths(configs[i], configs[j]))
        if (std::find(declared.begin(), declared.end(), k) == declared.end())
          throw ConfigError("arms '" + plan.arms[i].name + "' and '" + plan.arms[j].name + "' differ in undeclared key '" +
                            k + "'");
}

std::vector<double> ExperimentResult::values(const std::string& arm, const std::string& metric) const {
  std::vector<double> out;
  for (const auto& r : runs)
    if (r.arm == arm) {
      const auto it = r.values.find(metric);
      if (it != r.values.end()) out.push_back(it->second);
    }
  return out;
}

double ExperimentResult::mean(const std::string& arm, const std::string& metric) const {
  const auto v = values(arm, metric);
  if (v.empty()) throw ValidationError("no values for " + arm + "/" + metric);
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

namespace {

fs::path run_dir(const fs::path& out, const std::string& arm, std::uint64_t seed) {
  return out.empty() ? fs::path() : out / arm / ("seed_" + std::to_string(seed));
}

void finish_report(metrics::MetricsReport& r, const std::string& name, const TrainConfig& c, double params,
                   const fs::path& dir) {
  r.name = name;
  r.params_millions = params;
  r.config_fingerprint = metrics::fingerprint(nlohmann::json(c).dump());
  r.validate();
  if (!dir.empty()) metrics::write_report(dir, r);
}

std::size_t limit(const ExperimentPlan& p) { return static_cast<std::size_t>(p.eval_samples); }

}  // namespace

ExperimentResult run_ideal_multiblur(const ExperimentPlan& plan, const Dataset& data, const fs::path& out) {
  ExperimentResult res;
  res.id = plan.id;
  res.metrics = {"psnr", "ssim", "params_m"};
  for (const auto& arm : plan.arms) {
    res.arms.push_back(arm.name);
    for (auto seed : plan.seeds) {
      const auto cfg = plan.arm_config(arm, seed);
      if (cfg.onestage.inputs - 1 > static_cast<int>(data.blur.offsets.size()))
        throw DataError("arm " + arm.name + " needs " + std::to_string(cfg.onestage.inputs - 1) +
                        " more-blurred targets, dataset provides " + std::to_string(data.blur.offsets.size()));
      const fs::path dir = run_dir(out, arm.name, seed);
      const auto run = training::train_stage(cfg, data, dir);
      const auto net = training::make_onestage(run.model);
      auto report = training::evaluate_onestage(*net, data.test, limit(plan));
      finish_report(report, arm.name, cfg, models::count_params(run.model), dir);
      res.runs.push_back({arm.name, seed, {{"psnr", report.mean_psnr()}, {"ssim", report.mean_ssim()},
                                           {"params_m", report.params_millions}}});
    }
  }
  return res;
}

ExperimentResult run_ablation_nif_crfm(const ExperimentPlan& plan, const Dataset& data, const fs::path& out) {
  ExperimentResult res;
  res.id = plan.id;
  res.metrics = {"psnr", "ssim", "params_m"};
  for (const auto& arm : plan.arms) res.arms.push_back(arm.name);
  for (auto seed : plan.seeds) {
    auto mcfg = plan.train;
    mcfg.stage = Stage::mbrnn;
    mcfg.seed = seed;
    const auto mb = training::train_stage(mcfg, data, run_dir(out, "mbrnn", seed));
    for (const auto& arm : plan.arms) {
      const auto cfg = plan.arm_config(arm, seed);
      const bool uses_mb = training::needs_mbrnn(cfg.msdr);
      const fs::path dir = run_dir(out, arm.name, seed);
      const auto run = training::train_stage(cfg, data, dir, uses_mb ? &mb.model : nullptr);
      const auto net = training::make_msdr(run.model);
      std::unique_ptr<models::Mbrnn<float>> mbrnn;
      if (uses_mb) mbrnn = training::make_mbrnn(run.mbrnn ? *run.mbrnn : mb.model);
      auto report = training::evaluate_deblur(mbrnn.get(), *net, data.test, limit(plan));
      const double params = models::count_params(run.model) + (uses_mb ? models::count_params(mb.model) : 0.0);
      finish_report(report, arm.name, cfg, params, dir);
      res.runs.push_back({arm.name, seed, {{"psnr", report.mean_psnr()}, {"ssim", report.mean_ssim()},
                                           {"params_m", params}}});
    }
  }
  return res;
}

ExperimentResult run_mbrnn_frames(const ExperimentPlan& plan, const Dataset& data, const fs::path& out) {
  ExperimentResult res;
  res.id = plan.id;
  const int iters = plan.train.mbrnn.iterations;
  for (int k = 1; k <= iters; ++k) res.metrics.push_back("psnr_k" + std::to_string(k));
  for (int k = 1; k <= iters; ++k) res.metrics.push_back("ssim_k" + std::to_string(k));
  res.metrics.push_back("params_m");
  for (const auto& arm : plan.arms) {
    res.arms.push_back(arm.name);
    for (auto seed : plan.seeds) {
      const auto cfg = plan.arm_config(arm, seed);
      const fs::path dir = run_dir(out, arm.name, seed);
      const auto run = training::train_stage(cfg, data, dir);
      const auto net = training::make_mbrnn(run.model);
      auto reports = training::evaluate_more_blur(*net, data.test, limit(plan));
      ArmRun r{arm.name, seed, {{"params_m", models::count_params(run.model)}}};
      for (std::size_t k = 0; k < reports.size(); ++k) {
        const std::string sfx = "_k" + std::to_string(k + 1);
        r.values["psnr" + sfx] = reports[k].mean_psnr();
        r.values["ssim" + sfx] = reports[k].mean_ssim();
        finish_report(reports[k], arm.name + sfx, cfg, models::count_params(run.model),
                      dir.empty() ? dir : dir / ("k" + std::to_string(k + 1)));
      }
      res.runs.push_back(std::move(r));
    }
  }
  return res;
}

ExperimentResult run_spectral(const ExperimentPlan& plan, const Dataset& data, const fs::path& out) {
  ExperimentResult res;
  res.id = plan.id;
  res.metrics = {"high_band", "log10_high_band"};
  const std::size_t levels = data.blur.offsets.size() + 1;
  std::vector<std::string> names{"B" + std::to_string(data.blur.n)};
  for (int o : data.blur.offsets) names.push_back("B" + std::to_string(data.blur.n + o));
  res.arms = names;

  std::vector<const BlurSample*> samples;
  for (const auto& s : data.train) samples.push_back(&s);
  for (const auto& s : data.test) samples.push_back(&s);
  if (samples.empty()) throw DataError("spectral analysis needs at least one sample");

  std::vector<std::vector<double>> mean_log(levels);
  std::vector<double> band_sum(levels, 0.0);
  std::size_t monotone = 0;
  for (const auto* s : samples) {
    double prev = 0.0;
    bool mono = true;
    for (std::size_t k = 0; k < levels; ++k) {
      const Image& img = k == 0 ? s->center() : s->more_blur_targets[k - 1];
      const auto curve = metrics::spectral_density(img);
      const double band = curve.high_band();
      if (k > 0 && band > prev) mono = false;
      prev = band;
      band_sum[k] += band;
      if (mean_log[k].empty()) mean_log[k].assign(curve.log_power.size(), 0.0);
      for (std::size_t b = 0; b < curve.log_power.size(); ++b)
        mean_log[k][b] += curve.log_power[b] / static_cast<double>(samples.size());
    }
    monotone += mono ? 1 : 0;
  }
  for (std::size_t k = 0; k < levels; ++k) {
    const double band = band_sum[k] / static_cast<double>(samples.size());
    res.runs.push_back({names[k], plan.dataset.seed, {{"high_band", band}, {"log10_high_band", std::log10(band)}}});
    if (!out.empty()) {
      fs::create_directories(out);
      std::ofstream csv(out / ("spectrum_" + names[k] + ".csv"));
      csv << "radius_bin,log_power\n" << std::setprecision(10);
      for (std::size_t b = 0; b < mean_log[k].size(); ++b) csv << b << "," << mean_log[k][b] << "\n";
    }
  }
  res.notes["samples"] = samples.size();
  res.notes["monotone_samples"] = monotone;
  res.notes["monotone_fraction"] = static_cast<double>(monotone) / static_cast<double>(samples.size());
  return res;
}

ExperimentResult run_experiment(const ExperimentPlan& plan, const fs::path& out) {
  plan.validate();
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream(out / "plan.json") << nlohmann::json(plan).dump(2) << "\n";
  }
  const Dataset data = synthesize_dataset(plan.dataset);
  ExperimentResult res;
  switch (plan.id) {
    case ExperimentId::ideal_multiblur: res = run_ideal_multiblur(plan, data, out); break;
    case ExperimentId::ablation_nif_crfm: res = run_ablation_nif_crfm(plan, data, out); break;
    case ExperimentId::mbrnn_frames: res = run_mbrnn_frames(plan, data, out); break;
    case ExperimentId::spectral: res = run_spectral(plan, data, out); break;
  }
  if (!out.empty()) write_summary(out, res);
  return res;
}

namespace {

std::string num(double v, int prec) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

int precision_for(const std::string& metric) {
  if (metric.rfind("ssim", 0) == 0 || metric == "params_m") return 4;
  if (metric == "high_band") return 6;
  return 3;
}

}  // namespace

std::string summary_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << "arm,seed";
  for (const auto& m : r.metrics) os << "," << m;
  os << "\n" << std::setprecision(10);
  for (const auto& run : r.runs) {
    os << run.arm << "," << run.seed;
    for (const auto& m : r.metrics) {
      const auto it = run.values.find(m);
      os << ",";
      if (it != run.values.end()) os << it->second;
    }
    os << "\n";
  }
  for (const auto& arm : r.arms) {
    os << arm << ",mean";
    for (const auto& m : r.metrics) os << "," << r.mean(arm, m);
    os << "\n";
  }
  return os.str();
}

std::string summary_table(const ExperimentResult& r) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"arm", "seeds"};
  head.insert(head.end(), r.metrics.begin(), r.metrics.end());
  rows.push_back(head);
  for (const auto& arm : r.arms) {
    std::vector<std::string> row{arm, std::to_string(r.values(arm, r.metrics.front()).size())};
    for (const auto& m : r.metrics) row.push_back(num(r.mean(arm, m), precision_for(m)));
    rows.push_back(row);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::ostringstream os;
  os << experiment_name(r.id) << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i == 0)
        os << std::left << std::setw(static_cast<int>(width[i])) << row[i];
      else
        os << "  " << std::right << std::setw(static_cast<int>(width[i])) << row[i];
    }
    os << "\n";
  }
  for (const auto& [k, v] : r.notes.items()) os << k << ": " << v.dump() << "\n";
  return os.str();
}

void write_summary(const fs::path& dir, const ExperimentResult& r) {
  fs::create_directories(dir);
  std::ofstream(dir / "summary.csv") << summary_csv(r);
  std::ofstream(dir / "summary.txt") << summary_table(r);
  std::ofstream(dir / "result.json") << nlohmann::json(r).dump(2) << "\n";
}

void to_json(nlohmann::json& j, const ExperimentSettings& s) {
  j = nlohmann::json{{"seeds", s.seeds}, {"eval_samples", s.eval_samples}, {"max_ideal_set", s.max_ideal_set}};
}

void from_json(const nlohmann::json& j, ExperimentSettings& s) {
  s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  s.eval_samples = j.at("eval_samples").get<int>();
  s.max_ideal_set = j.at("max_ideal_set").get<int>();
}

void to_json(nlohmann::json& j, const ExperimentPlan& p) {
  auto arms = nlohmann::json::array();
  for (const auto& a : p.arms) arms.push_back({{"name", a.name}, {"delta", a.delta}});
  j = nlohmann::json{{"id", experiment_name(p.id)}, {"dataset", p.dataset},         {"train", p.train},
                     {"arms", arms},                 {"varied_keys", p.varied_keys}, {"seeds", p.seeds},
                     {"eval_samples", p.eval_samples}};
}

void to_json(nlohmann::json& j, const ExperimentResult& r) {
  auto runs = nlohmann::json::array();
  for (const auto& run : r.runs) runs.push_back({{"arm", run.arm}, {"seed", run.seed}, {"values", run.values}});
  auto means = nlohmann::json::object();
  for (const auto& arm : r.arms)
    for (const auto& m : r.metrics) means[arm][m] = r.mean(arm, m);
  j = nlohmann::json{{"id", experiment_name(r.id)}, {"arms", r.arms}, {"metrics", r.metrics},
                     {"runs", runs},                 {"means", means}, {"notes", r.notes}};
}

}  // namespace mb2d::experiments
