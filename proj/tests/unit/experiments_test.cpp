#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mb2d/config.hpp"
#include "mb2d/errors.hpp"
#include "mb2d/experiments.hpp"

namespace mb2d::experiments {
namespace {

using training::Stage;

RunConfig micro() {
  return load_config(std::filesystem::path(MB2D_SOURCE_DIR) / "configs" / "micro.json",
                     {"train.iterations=3", "train.validate_every=0", "experiment.eval_samples=2"});
}

ExperimentPlan plan_for(ExperimentId id, const RunConfig& c) {
  return make_plan(id, c.dataset, c.train, c.experiment);
}

TEST(Plan, NamesRoundTrip) {
  for (auto id : {ExperimentId::ideal_multiblur, ExperimentId::ablation_nif_crfm, ExperimentId::mbrnn_frames,
                  ExperimentId::spectral})
    EXPECT_EQ(parse_experiment(experiment_name(id)), id);
  EXPECT_THROW(parse_experiment("table9"), ConfigError);
}

TEST(Plan, AblationArms) {
  const auto p = plan_for(ExperimentId::ablation_nif_crfm, micro());
  ASSERT_EQ(p.arms.size(), 4u);
  EXPECT_EQ(p.train.stage, Stage::msdr);
  const auto a = p.arm_config(p.arms[0], 1), b = p.arm_config(p.arms[1], 1);
  const auto d = p.arm_config(p.arms[2], 1), e = p.arm_config(p.arms[3], 1);
  EXPECT_FALSE(a.msdr.neighbor_frames);
  EXPECT_TRUE(b.msdr.neighbor_frames);
  EXPECT_EQ(b.msdr.more_blur_inputs, 0);
  EXPECT_EQ(d.msdr.more_blur_inputs, p.train.mbrnn.iterations);
  EXPECT_EQ(d.msdr.crfm_channels, 0);
  EXPECT_EQ(e.msdr.crfm_channels, p.train.mbrnn.crfm_channels());
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p.delta_keys(), p.varied_keys);
}

TEST(Plan, MbrnnFramesAndIdealArms) {
  const auto c = micro();
  const auto f = plan_for(ExperimentId::mbrnn_frames, c);
  ASSERT_EQ(f.arms.size(), 2u);
  EXPECT_EQ(f.arm_config(f.arms[0], 1).mbrnn.input_frames, 1);
  EXPECT_EQ(f.arm_config(f.arms[1], 1).mbrnn.input_frames, 3);
  EXPECT_EQ(f.arm_config(f.arms[1], 9).seed, 9u);

  auto settings = c.experiment;
  settings.max_ideal_set = 4;
  const auto ideal = make_plan(ExperimentId::ideal_multiblur, c.dataset, c.train, settings);
  ASSERT_EQ(ideal.arms.size(), 4u);
  EXPECT_EQ(ideal.arm_config(ideal.arms[3], 1).onestage.inputs, 4);
  settings.max_ideal_set = 5;  // micro has three offsets
  EXPECT_THROW(make_plan(ExperimentId::ideal_multiblur, c.dataset, c.train, settings), DataError);
}

TEST(Plan, IsolationViolationDetected) {
  auto p = plan_for(ExperimentId::mbrnn_frames, micro());
  EXPECT_NO_THROW(check_arm_isolation(p));
  p.arms[1].delta["adam.lr"] = 1e-3;
  EXPECT_THROW(check_arm_isolation(p), ConfigError);
  p.arms[0].delta["adam.lr"] = 1e-3;  // equal across arms but still undeclared
  EXPECT_THROW(check_arm_isolation(p), ConfigError);
  p.varied_keys.push_back("adam.lr");
  EXPECT_NO_THROW(check_arm_isolation(p));
}

TEST(Plan, RequiresThreeSeeds) {
  auto c = micro();
  c.experiment.seeds = {1, 2};
  EXPECT_THROW(plan_for(ExperimentId::mbrnn_frames, c).validate(), ConfigError);
  c.experiment.seeds = {1, 1, 2};
  EXPECT_THROW(plan_for(ExperimentId::mbrnn_frames, c).validate(), ConfigError);
}

TEST(Run, IdealArmMissingTargetsIsDataError) {
  const auto c = micro();
  auto settings = c.experiment;
  settings.max_ideal_set = 3;
  const auto p = make_plan(ExperimentId::ideal_multiblur, c.dataset, c.train, settings);
  auto spec = c.dataset;
  spec.blur.offsets = {2};
  spec.train_sequences = 1;
  spec.test_sequences = 1;
  const Dataset data = synthesize_dataset(spec);
  EXPECT_THROW(run_ideal_multiblur(p, data, {}), DataError);
}

TEST(Run, StaticScenesGiveEqualArms) {
  // Static scenes: every blur equals the sharp frame, residuals start at zero
  // and the L1 gradient vanishes, so every arm restores the input exactly.
  auto c = micro();
  c.dataset.scene.static_scene = true;
  c.dataset.train_sequences = 2;
  c.dataset.test_sequences = 1;
  c.train.iterations = 2;
  const auto p = plan_for(ExperimentId::ablation_nif_crfm, c);
  testing::TempDir dir("static");
  const auto r = run_experiment(p, dir.path());
  ASSERT_EQ(r.runs.size(), 12u);
  for (const auto& arm : r.arms) EXPECT_DOUBLE_EQ(r.mean(arm, "psnr"), r.mean(r.arms[0], "psnr")) << arm;
  EXPECT_DOUBLE_EQ(r.mean("a_1frame", "psnr"), 100.0);
  for (const char* f : {"plan.json", "result.json", "summary.csv", "summary.txt"})
    EXPECT_TRUE(std::filesystem::exists(dir.path() / f)) << f;
  // Params grow with the input set.
  EXPECT_LT(r.mean("a_1frame", "params_m"), r.mean("b_3frame", "params_m"));
  EXPECT_LT(r.mean("d_mb_no_crfm", "params_m"), r.mean("e_mb_crfm", "params_m"));
}

TEST(Run, SpectralCurvesPerSample) {
  auto c = micro();
  c.dataset.train_sequences = 0;
  const auto p = plan_for(ExperimentId::spectral, c);
  testing::TempDir dir("spectral");
  const auto r = run_experiment(p, dir.path());
  EXPECT_TRUE(r.notes.contains("monotone_fraction"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "summary.txt"));
}

TEST(Summary, TableHasOneRowPerArm) {
  ExperimentResult r;
  r.arms = {"x", "y"};
  r.metrics = {"psnr"};
  r.runs = {{"x", 1, {{"psnr", 30.0}}}, {"x", 2, {{"psnr", 32.0}}}, {"y", 1, {{"psnr", 20.0}}}};
  EXPECT_DOUBLE_EQ(r.mean("x", "psnr"), 31.0);
  EXPECT_EQ(r.values("x", "psnr").size(), 2u);
  EXPECT_THROW(r.mean("z", "psnr"), ValidationError);
  const auto t = summary_table(r);
  EXPECT_NE(t.find("31.0"), std::string::npos) << t;
  const auto csv = summary_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6) << csv;
}

}  // namespace
}  // namespace mb2d::experiments
