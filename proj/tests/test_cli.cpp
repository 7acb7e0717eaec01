#include "cli_run.hpp"
#include "common.hpp"

using namespace rawdepth;
using namespace rawdepth::test;

namespace {

const std::filesystem::path kDir = std::filesystem::temp_directory_path() / "rawdepth_cli_test";

std::string calib(const std::string& name) { return "'" + data_path("calib/" + name) + "'"; }

}  // namespace

TEST(Cli, ErrorsExitNonZeroWithMessage) {
  CliResult r = run_cli("calib validate /nonexistent.json", kDir);
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(r.err.empty());

  std::filesystem::create_directories(kDir);
  { std::ofstream(kDir / "bad.json") << R"({"model":"kannala","width":4,"height":4})"; }
  r = run_cli("calib validate bad.json", kDir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("UnknownModel"), std::string::npos) << r.err;

  r = run_cli("frobnicate", kDir);
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(r.err.empty());

  r = run_cli("fov-report " + calib("kitti_raw_cam02.json") + " --raw-size 100x100", kDir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("DimensionMismatch"), std::string::npos) << r.err;
}

TEST(Cli, CalibValidate) {
  const CliResult r = run_cli("calib validate " + calib("fisheye_190.json"), kDir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(report_value(r.out, "model"), "polynomial");
  EXPECT_EQ(report_value(r.out, "monotone"), "1");
  EXPECT_LT(std::stod(report_value(r.out, "roundtrip_max_px")), 1e-5);
}

TEST(Cli, KittiFovReport) {
  const CliResult r = run_cli("fov-report " + calib("kitti_raw_cam02.json") + " --raw-size 1392x512", kDir);
  ASSERT_EQ(r.code, 0) << r.err;
  const double loss = std::stod(report_value(r.out, "info_loss_fraction"));
  EXPECT_GE(loss, 0.07);
  EXPECT_LE(loss, 0.13);
}

TEST(Cli, ProjectUnproject) {
  std::filesystem::create_directories(kDir);
  { std::ofstream(kDir / "pts.csv") << "x,y,z\n0,0,5\n1,0,5\n0,0,-1\n"; }
  CliResult r = run_cli("project " + calib("pinhole_128x96.json") + " --points pts.csv", kDir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("63.5,47.5,1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("75.5,47.5,1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("nan,nan,0"), std::string::npos) << r.out;

  { std::ofstream(kDir / "px.csv") << "u,v\n63.5,47.5\n"; }
  r = run_cli("unproject " + calib("pinhole_128x96.json") + " --pixels px.csv --range 5 --kind depth", kDir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("0,0,5,1"), std::string::npos) << r.out;
}

TEST(Cli, RenderWarpIdentityAndEvaluate) {
  const std::string scene = "'" + data_path("scenes/plane_sphere.json") + "'";
  CliResult r = run_cli("render " + calib("pinhole_128x96.json") + " --scene " + scene +
                            " --out img.pfm --depth-out depth.pfm",
                        kDir);
  ASSERT_EQ(r.code, 0) << r.err;
  r = run_cli("warp " + calib("pinhole_128x96.json") + " --src img.pfm --depth depth.pfm --pose 0,0,0,0,0,0 --out w.pfm",
              kDir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(kDir / "w.pfm"), slurp(kDir / "img.pfm"));

  r = run_cli("evaluate --pred depth.pfm --gt depth.pfm", kDir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3\n0,0,0,0,1,1,1"), std::string::npos)
      << r.out;
}

TEST(Cli, SelftestRoundtripPasses) {
  const CliResult r = run_cli("selftest roundtrip", kDir);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}
