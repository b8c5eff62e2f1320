#include "mb2d/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "mb2d/config.hpp"
#include "mb2d/errors.hpp"
#include "mb2d/experiments.hpp"
#include "mb2d/metrics.hpp"
#include "mb2d/scene.hpp"
#include "mb2d/training/pipeline.hpp"
#include "mb2d/training/train.hpp"

namespace mb2d::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> set;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file (defaults apply to missing keys)");
  cmd->add_option("--set", c.set, "Override one config value, e.g. --set train.iterations=500")->take_all();
  cmd->add_option("--out", c.out, "Output directory")->required();
}

RunConfig resolve(const Common& c) {
  auto cfg = load_config(c.config, c.set);
  cfg.validate();
  return cfg;
}

fs::path or_default(const std::string& given, const fs::path& fallback) {
  return given.empty() ? fallback : fs::path(given);
}

models::ModelState require_checkpoint(const fs::path& dir, const std::string& what, const std::string& hint) {
  if (!fs::exists(dir / "model.json"))
    throw ConfigError(what + " checkpoint not found at " + dir.string() + "; " + hint);
  return models::load_checkpoint(dir);
}

Dataset require_dataset(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json"))
    throw DataError("dataset not found at " + dir.string() + "; run synth-data first or pass --data");
  return read_dataset(dir);
}

std::string fixed(double v, int p) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(p) << v;
  return os.str();
}

int cmd_gen_scenes(const Common& c, std::ostream& out) {
  const auto cfg = resolve(c);
  const fs::path root(c.out);
  write_resolved(root, cfg);
  const auto seqs = render_dataset_sequences(cfg.dataset);
  for (const auto& s : seqs) write_sequence(root / "scenes" / s.id, s.frames);
  out << "wrote " << seqs.size() << " sequences to " << (root / "scenes").string() << "\n";
  return ok;
}

int cmd_synth_data(const Common& c, const std::string& scenes_dir, std::ostream& out) {
  const auto cfg = resolve(c);
  const fs::path root(c.out);
  write_resolved(root, cfg);
  Dataset data;
  if (scenes_dir.empty()) {
    data = synthesize_dataset(cfg.dataset);
  } else {
    data.blur = cfg.dataset.blur;
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(scenes_dir))
      if (e.is_directory()) dirs.push_back(e.path());
    if (dirs.empty()) throw DataError("no sequence directories under " + scenes_dir);
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
      const std::string id = d.filename().string();
      auto samples = make_samples(read_sequence(d), data.blur, id);
      auto& dst = id.rfind("test", 0) == 0 ? data.test : data.train;
      std::move(samples.begin(), samples.end(), std::back_inserter(dst));
    }
  }
  write_dataset(root / "data", data);
  out << "wrote " << data.train.size() << " train and " << data.test.size() << " test samples to "
      << (root / "data").string() << "\n";
  return ok;
}

int cmd_train(const Common& c, const std::string& stage, const std::string& data_dir, const std::string& mbrnn_dir,
              std::ostream& out) {
  auto cfg = load_config(c.config, c.set);
  cfg.train.stage = training::parse_stage(stage);
  cfg.validate();
  const fs::path root(c.out);
  const Dataset data = require_dataset(or_default(data_dir, root / "data"));
  const fs::path run_dir = root / "train" / stage;
  write_resolved(run_dir, cfg);
  std::optional<models::ModelState> mb;
  if (cfg.train.stage == training::Stage::msdr && training::needs_mbrnn(cfg.train.msdr))
    mb = require_checkpoint(or_default(mbrnn_dir, root / "train" / "mbrnn" / "model"), "MBRNN",
                            "run `train --stage mbrnn` first or pass --mbrnn");
  const auto run = training::train_stage(cfg.train, data, run_dir, mb ? &*mb : nullptr);
  out << "trained " << stage << " for " << run.losses.size() << " steps; final loss " << fixed(run.losses.back(), 6);
  if (!run.validation.empty())
    out << "; val PSNR " << fixed(run.validation.back().psnr, 3) << " dB, SSIM " << fixed(run.validation.back().ssim, 4);
  out << "\n";
  return ok;
}

struct Models {
  std::unique_ptr<models::Mbrnn<float>> mbrnn;
  std::unique_ptr<models::Msdr<float>> msdr;
  double params_millions = 0.0;
};

Models load_models(const fs::path& root, const std::string& mbrnn_dir, const std::string& msdr_dir) {
  Models m;
  const auto msdr = require_checkpoint(or_default(msdr_dir, root / "train" / "msdr" / "model"), "MSDR",
                                       "run `train --stage msdr` first or pass --msdr");
  m.msdr = training::make_msdr(msdr);
  m.params_millions = models::count_params(msdr);
  if (training::needs_mbrnn(m.msdr->config())) {
    const auto mb = require_checkpoint(or_default(mbrnn_dir, root / "train" / "mbrnn" / "model"), "MBRNN",
                                       "run `train --stage mbrnn` first or pass --mbrnn");
    m.mbrnn = training::make_mbrnn(mb);
    m.params_millions += models::count_params(mb);
  }
  return m;
}

int cmd_infer(const Common& c, const std::string& data_dir, const std::string& mbrnn_dir, const std::string& msdr_dir,
              const std::string& sample, int index, std::ostream& out) {
  const auto cfg = load_config(c.config, c.set);
  const fs::path root(c.out);
  const Dataset data = require_dataset(or_default(data_dir, root / "data"));
  const auto m = load_models(root, mbrnn_dir, msdr_dir);
  const std::vector<BlurSample>& pool = data.test.empty() ? data.train : data.test;
  const BlurSample* s = nullptr;
  if (!sample.empty()) {
    for (const auto* split : {&data.test, &data.train})
      for (const auto& x : *split)
        if (!s && training::sample_id(x) == sample) s = &x;
    if (!s) throw DataError("sample '" + sample + "' not in dataset (ids look like test_0000/t2)");
  } else {
    if (index < 0 || static_cast<std::size_t>(index) >= pool.size())
      throw DataError("sample index " + std::to_string(index) + " out of range [0, " + std::to_string(pool.size()) + ")");
    s = &pool[static_cast<std::size_t>(index)];
  }
  const auto p = training::predict(m.mbrnn.get(), *m.msdr, *s);
  std::string id = training::sample_id(*s);
  std::replace(id.begin(), id.end(), '/', '_');
  const fs::path dir = root / "infer" / id;
  write_resolved(dir, cfg);
  write_png16(dir / "input.png", s->center());
  write_png16(dir / "sharp_gt.png", s->sharp_gt);
  write_png16(dir / "restored.png", p.restored());
  for (std::size_t i = 1; i < p.by_scale.size(); ++i)
    write_png16(dir / ("restored_scale" + std::to_string(i + 1) + ".png"), p.by_scale[i]);
  nlohmann::json more = nlohmann::json::array();
  for (std::size_t k = 0; k < p.more_blur.size(); ++k) {
    const std::string name = "more_blur_k" + std::to_string(k + 1) + ".png";
    write_png16(dir / name, p.more_blur[k]);
    nlohmann::json e{{"image", name}};
    if (k < s->more_blur_targets.size()) {
      e["psnr"] = metrics::psnr(p.more_blur[k], s->more_blur_targets[k]);
      e["ssim"] = metrics::ssim(p.more_blur[k], s->more_blur_targets[k]);
    }
    more.push_back(e);
  }
  const double ps = metrics::psnr(p.restored(), s->sharp_gt);
  const double ss = metrics::ssim(p.restored(), s->sharp_gt);
  const nlohmann::json report{{"sample", training::sample_id(*s)},
                              {"psnr", ps},
                              {"ssim", ss},
                              {"input_psnr", metrics::psnr(s->center(), s->sharp_gt)},
                              {"more_blur", more}};
  std::ofstream(dir / "metrics.json") << report.dump(2) << "\n";
  out << training::sample_id(*s) << ": PSNR " << fixed(ps, 3) << " dB, SSIM " << fixed(ss, 4) << " -> "
      << dir.string() << "\n";
  return ok;
}

int cmd_eval(const Common& c, const std::string& data_dir, const std::string& mbrnn_dir, const std::string& msdr_dir,
             const std::string& split, std::ostream& out) {
  const auto cfg = load_config(c.config, c.set);
  const fs::path root(c.out);
  const Dataset data = require_dataset(or_default(data_dir, root / "data"));
  if (split != "test" && split != "train") throw ConfigError("--split must be test or train");
  const auto& samples = split == "test" ? data.test : data.train;
  if (samples.empty()) throw DataError("dataset has no " + split + " samples");
  const auto m = load_models(root, mbrnn_dir, msdr_dir);
  auto report = training::evaluate_deblur(m.mbrnn.get(), *m.msdr, samples);
  report.name = "mb2d_" + split;
  report.params_millions = m.params_millions;
  report.seconds_per_frame = metrics::time_median([&] { training::predict(m.mbrnn.get(), *m.msdr, samples.front()); }, 3);
  report.config_fingerprint = metrics::fingerprint(nlohmann::json(cfg).dump());
  double input_psnr = 0.0;
  for (const auto& s : samples) input_psnr += metrics::psnr(s.center(), s.sharp_gt) / static_cast<double>(samples.size());
  report.extra["input_psnr"] = input_psnr;
  report.validate();
  const fs::path dir = root / "eval";
  write_resolved(dir, cfg);
  metrics::write_report(dir, report);
  out << split << " (" << samples.size() << " samples): PSNR " << fixed(report.mean_psnr(), 3) << " dB (input "
      << fixed(input_psnr, 3) << "), SSIM " << fixed(report.mean_ssim(), 4) << "\n";
  return ok;
}

int cmd_spectrum(const Common& c, const std::vector<std::string>& images, std::ostream& out) {
  if (images.empty()) throw ConfigError("analyze-spectrum needs at least one image");
  const fs::path dir = fs::path(c.out) / "spectrum";
  fs::create_directories(dir);
  std::ofstream summary(dir / "summary.csv");
  summary << "image,total_energy,high_band_energy\n" << std::setprecision(10);
  for (const auto& path : images) {
    const auto curve = metrics::spectral_density(read_image(path));
    metrics::write_spectrum_csv(dir / (fs::path(path).stem().string() + ".csv"), curve);
    summary << path << "," << curve.total() << "," << curve.high_band() << "\n";
    out << path << ": high-band energy " << curve.high_band() << " (" << fixed(100.0 * curve.high_band() / curve.total(), 4)
        << "% of total)\n";
  }
  return ok;
}

int cmd_diff_map(const Common& c, const std::string& a, const std::string& b, const std::string& name,
                 std::ostream& out) {
  const Image ia = read_image(a);
  const Image ib = read_image(b);
  const fs::path path = fs::path(c.out) / name;
  fs::create_directories(path.parent_path());
  write_png16(path, metrics::diff_map(ia, ib));
  out << "PSNR " << fixed(metrics::psnr(ia, ib), 3) << " dB; diff map -> " << path.string() << "\n";
  return ok;
}

int cmd_experiment(const Common& c, const std::string& id, std::ostream& out) {
  const auto cfg = load_config(c.config, c.set);
  const auto plan = experiments::make_plan(experiments::parse_experiment(id), cfg.dataset, cfg.train, cfg.experiment);
  const fs::path root(c.out);
  write_resolved(root, cfg);
  const auto res = experiments::run_experiment(plan, root);
  out << experiments::summary_table(res);
  return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-blur-then-deblur video deblurring toolkit", "mb2d"};
  app.require_subcommand(1);
  Common c;

  auto* gen = app.add_subcommand("gen-scenes", "Render random moving-object sequences");
  add_common(gen, c);

  std::string scenes;
  auto* synth = app.add_subcommand("synth-data", "Synthesize blurred/sharp/more-blurred training samples");
  add_common(synth, c);
  synth->add_option("--scenes", scenes, "Read sequences from this directory instead of rendering random scenes");

  std::string stage, data, mbrnn, msdr;
  auto* train = app.add_subcommand("train", "Train one stage");
  add_common(train, c);
  train->add_option("--stage", stage, "mbrnn, msdr or onestage")->required();
  train->add_option("--data", data, "Dataset directory (default: <out>/data)");
  train->add_option("--mbrnn", mbrnn, "MBRNN checkpoint for --stage msdr (default: <out>/train/mbrnn/model)");

  std::string sample;
  int index = 0;
  auto* infer = app.add_subcommand("infer", "Deblur one sample and write intermediate images");
  add_common(infer, c);
  infer->add_option("--data", data, "Dataset directory (default: <out>/data)");
  infer->add_option("--mbrnn", mbrnn, "MBRNN checkpoint (default: <out>/train/mbrnn/model)");
  infer->add_option("--msdr", msdr, "MSDR checkpoint (default: <out>/train/msdr/model)");
  infer->add_option("--sample", sample, "Sample id such as test_0000/t2");
  infer->add_option("--index", index, "Index into the test split when --sample is absent");

  std::string split = "test";
  auto* eval = app.add_subcommand("eval", "PSNR/SSIM report over a dataset split");
  add_common(eval, c);
  eval->add_option("--data", data, "Dataset directory (default: <out>/data)");
  eval->add_option("--mbrnn", mbrnn, "MBRNN checkpoint (default: <out>/train/mbrnn/model)");
  eval->add_option("--msdr", msdr, "MSDR checkpoint (default: <out>/train/msdr/model)");
  eval->add_option("--split", split, "test or train");

  std::vector<std::string> images;
  auto* spectrum = app.add_subcommand("analyze-spectrum", "Radial power spectra of images");
  add_common(spectrum, c);
  spectrum->add_option("images", images, "Image files")->required();

  std::string a, b, name = "diff.png";
  auto* diff = app.add_subcommand("diff-map", "Absolute difference image");
  add_common(diff, c);
  diff->add_option("--a", a, "First image")->required();
  diff->add_option("--b", b, "Second image")->required();
  diff->add_option("--name", name, "Output file name under --out");

  std::string exp_id;
  auto* exps = app.add_subcommand("experiments", "Ablation experiments");
  exps->require_subcommand(1);
  auto* exp_run = exps->add_subcommand("run", "Run one experiment");
  exp_run->add_option("id", exp_id, "ideal_multiblur, ablation_nif_crfm, mbrnn_frames or spectral")->required();
  add_common(exp_run, c);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return config_error;
  }

  try {
    if (gen->parsed()) return cmd_gen_scenes(c, out);
    if (synth->parsed()) return cmd_synth_data(c, scenes, out);
    if (train->parsed()) return cmd_train(c, stage, data, mbrnn, out);
    if (infer->parsed()) return cmd_infer(c, data, mbrnn, msdr, sample, index, out);
    if (eval->parsed()) return cmd_eval(c, data, mbrnn, msdr, split, out);
    if (spectrum->parsed()) return cmd_spectrum(c, images, out);
    if (diff->parsed()) return cmd_diff_map(c, a, b, name, out);
    if (exp_run->parsed()) return cmd_experiment(c, exp_id, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const DivergenceError& e) {
    err << "training diverged: " << e.what() << "\n";
    return divergence;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return data_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return failure;
  }
  return failure;
}

}  // namespace mb2d::cli
