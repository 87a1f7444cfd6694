#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "carrierseg/pgm_io.hpp"
#include "carrierseg/pipeline.hpp"

using namespace carrierseg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("carrierseg_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig generated(TestImageKind kind, std::size_t w, std::size_t h, const fs::path& out) {
  RunConfig cfg;
  cfg.generate = GeneratedSource{kind, w, h};
  cfg.out_dir = out;
  return cfg;
}

std::map<std::string, std::string> read_manifest(const fs::path& path) {
  std::map<std::string, std::string> kv;
  std::istringstream in(std::string(reinterpret_cast<const char*>(read_file(path).data()), fs::file_size(path)));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::string text_of(const fs::path& path) {
  const Bytes b = read_file(path);
  return {b.begin(), b.end()};
}

}  // namespace

TEST_CASE("cmd_gen writes quantized test images") {
  const fs::path dir = scratch("gen");
  std::ostringstream err;
  REQUIRE(cmd_gen(TestImageKind::TwoHalves, 64, 64, dir / "halves.pgm", err) == 0);
  const Bytes halves = read_file(dir / "halves.pgm");
  const std::size_t header = std::string("P5\n64 64\n255\n").size();
  REQUIRE(halves.size() == header + 64 * 64);
  CHECK(std::set<std::uint8_t>(halves.begin() + header, halves.end()) == std::set<std::uint8_t>{77, 179});

  REQUIRE(cmd_gen(TestImageKind::ThreeShapes, 96, 96, dir / "shapes.pgm", err) == 0);
  const GrayImage shapes = read_pgm(read_file(dir / "shapes.pgm"));
  CHECK(std::set<double>(shapes.intensities.begin(), shapes.intensities.end()).size() == 4);
}

TEST_CASE("cmd_gen failure leaves no file behind") {
  const fs::path dir = scratch("gen_fail");
  const fs::path target = dir / "missing_dir" / "x.pgm";
  std::ostringstream err;
  CHECK(cmd_gen(TestImageKind::TwoHalves, 16, 16, target, err) == kExitIoFailure);
  CHECK_FALSE(err.str().empty());
  CHECK_FALSE(fs::exists(target));
  CHECK(fs::is_empty(dir));

  CHECK(cmd_gen(TestImageKind::ThreeShapes, 9, 9, dir / "tiny.pgm", err) == kExitInvalidConfig);
  CHECK_FALSE(fs::exists(dir / "tiny.pgm"));
}

TEST_CASE("cmd_segment on TwoHalves") {
  const fs::path dir = scratch("segment_halves");
  RunConfig cfg = generated(TestImageKind::TwoHalves, 64, 64, dir);
  cfg.sim.snapshot_iters = {1, 5, 10};
  cfg.target_regions = 1;
  std::ostringstream out, err;
  RunOutcome outcome;
  REQUIRE(cmd_segment(cfg, out, err, &outcome) == kExitConverged);
  CHECK(outcome.regions_grouped == 2);
  CHECK(outcome.regions_merged == 1);
  CHECK(out.str().find("regions after grouping: 2") != std::string::npos);
  CHECK(out.str().find("regions after merging: 1") != std::string::npos);

  for (const char* name : {"sign_final.pgm", "sign_iter_1.pgm", "sign_iter_5.pgm", "sign_iter_10.pgm", "labels.pgm",
                           "labels_view.pgm", "regions.csv", "trace.csv", "merged_labels.pgm", "merged_view.pgm",
                           "merged_regions.csv", "manifest.txt"})
    CHECK_MESSAGE(fs::exists(dir / name), name);

  const GrayImage signs = read_pgm(read_file(dir / "sign_final.pgm"));
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) CHECK(signs.at(x, y) == (x < 32 ? 1.0 : 0.0));

  const LabelMap labels = read_labels16(read_file(dir / "labels.pgm"));
  CHECK(labels.region_count() == 2);

  const auto manifest = read_manifest(dir / "manifest.txt");
  CHECK(manifest.at("source") == "gen:TwoHalves:64x64");
  CHECK(manifest.at("converged") == "true");
  CHECK(manifest.at("regions_grouped") == "2");
  CHECK(manifest.at("regions_merged") == "1");
  CHECK(manifest.at("snapshots") == "1,5,10");
  CHECK(std::stod(manifest.at("k1")) == cfg.sim.k1);
  CHECK(std::stoull(manifest.at("iterations")) == outcome.sim.iterations());

  CHECK(text_of(dir / "merged_regions.csv").rfind("region_id,pixel_count,mean_gray\n0,4096,0.5", 0) == 0);
}

TEST_CASE("cmd_segment on ThreeShapes: shapes positive, background negative") {
  const fs::path dir = scratch("segment_shapes");
  std::ostringstream out, err;
  RunOutcome outcome;
  REQUIRE(cmd_segment(generated(TestImageKind::ThreeShapes, 96, 96, dir), out, err, &outcome) == kExitConverged);
  CHECK(outcome.regions_grouped == 4);
  CHECK_FALSE(outcome.regions_merged.has_value());
  CHECK_FALSE(fs::exists(dir / "merged_labels.pgm"));
  const GrayImage img = make_test_image(TestImageKind::ThreeShapes, 96, 96);
  const GrayImage signs = read_pgm(read_file(dir / "sign_final.pgm"));
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(signs.intensities[i] == (img.intensities[i] < 0.8 ? 1.0 : 0.0));
  CHECK(read_manifest(dir / "manifest.txt").at("regions_merged") == "none");
}

TEST_CASE("cmd_segment output is reproducible byte for byte") {
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  auto run = [](const fs::path& dir) {
    RunConfig cfg = generated(TestImageKind::Rectangle, 40, 30, dir);
    cfg.sim.snapshot_iters = {3};
    cfg.target_regions = 1;
    std::ostringstream out, err;
    return cmd_segment(cfg, out, err);
  };
  REQUIRE(run(a) == 0);
  REQUIRE(run(b) == 0);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    CHECK_MESSAGE(read_file(entry.path()) == read_file(b / entry.path().filename()), entry.path().filename());
  }
  CHECK(files == 10);
}

TEST_CASE("cmd_segment rejects invalid configs") {
  const fs::path dir = scratch("invalid");
  std::ostringstream out, err;
  RunConfig unstable = generated(TestImageKind::TwoHalves, 16, 16, dir);
  unstable.sim.k2 = 0.3;
  CHECK(cmd_segment(unstable, out, err) == kExitInvalidConfig);
  CHECK(err.str().find("stability bound") != std::string::npos);

  RunConfig both = unstable;
  both.sim.k2 = 0.2;
  both.input = dir / "whatever.pgm";
  CHECK(cmd_segment(both, out, err) == kExitInvalidConfig);

  RunConfig neither;
  neither.out_dir = dir;
  CHECK(cmd_segment(neither, out, err) == kExitInvalidConfig);

  RunConfig zero_target = generated(TestImageKind::TwoHalves, 16, 16, dir);
  zero_target.target_regions = 0;
  CHECK(cmd_segment(zero_target, out, err) == kExitInvalidConfig);

  RunConfig missing;
  missing.input = dir / "nope.pgm";
  missing.out_dir = dir;
  CHECK(cmd_segment(missing, out, err) == kExitIoFailure);

  write_file_atomic(dir / "bad.pgm", std::string("P3\n1 1\n255\n0 0 0\n"));
  RunConfig malformed;
  malformed.input = dir / "bad.pgm";
  malformed.out_dir = dir / "out";
  CHECK(cmd_segment(malformed, out, err) == kExitInvalidConfig);
  CHECK(err.str().find("unsupported magic") != std::string::npos);
}

TEST_CASE("cmd_segment signals non-convergence but still writes outputs") {
  const fs::path dir = scratch("capped");
  RunConfig cfg = generated(TestImageKind::TwoHalves, 32, 32, dir);
  cfg.sim.max_iters = 10;
  std::ostringstream out, err;
  CHECK(cmd_segment(cfg, out, err) == kExitNotConverged);
  CHECK(fs::exists(dir / "sign_final.pgm"));
  CHECK(read_manifest(dir / "manifest.txt").at("converged") == "false");
  CHECK(read_manifest(dir / "manifest.txt").at("iterations") == "10");
  // Zero pixels remain far from the border after 10 steps.
  const GrayImage signs = read_pgm(read_file(dir / "sign_final.pgm"));
  CHECK(signs.at(0, 0) == 128.0 / 255.0);
}

TEST_CASE("cmd_trace") {
  const fs::path dir = scratch("trace");
  std::ostringstream out, err;

  write_file_atomic(dir / "flat.pgm", std::string("P2\n3 3\n255\n9 9 9 9 9 9 9 9 9\n"));
  RunConfig flat;
  flat.input = dir / "flat.pgm";
  flat.out_dir = dir / "flat";
  REQUIRE(cmd_trace(flat, out, err) == 0);
  CHECK(text_of(dir / "flat" / "trace.csv") == "iteration,mean_abs_change\n1,0.000000000000\n");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "flat")) ++files;
  CHECK(files == 1);

  write_file_atomic(dir / "pair.pgm", std::string("P2\n2 1\n255\n0 255\n"));
  RunConfig pair;
  pair.input = dir / "pair.pgm";
  pair.out_dir = dir / "pair";
  RunOutcome outcome;
  REQUIRE(cmd_trace(pair, out, err, &outcome) == 0);
  std::istringstream csv(text_of(dir / "pair" / "trace.csv"));
  std::string header, row1, row2;
  std::getline(csv, header);
  std::getline(csv, row1);
  std::getline(csv, row2);
  CHECK(std::stod(row1.substr(2)) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(std::stod(row2.substr(2)) == doctest::Approx(0.03).epsilon(1e-12));

  RunConfig halves = generated(TestImageKind::TwoHalves, 32, 32, dir / "halves");
  REQUIRE(cmd_trace(halves, out, err, &outcome) == 0);
  CHECK(outcome.sim.trace.entries.back().mean_abs_change < outcome.sim.trace.entries.front().mean_abs_change);
}

TEST_CASE("parse_size") {
  CHECK(parse_size("64x48") == std::pair<std::size_t, std::size_t>{64, 48});
  CHECK_THROWS_AS(parse_size("64"), std::invalid_argument);
  CHECK_THROWS_AS(parse_size("x4"), std::invalid_argument);
  CHECK_THROWS_AS(parse_size("4x4x"), std::invalid_argument);
}

TEST_CASE("cmd_segment beyond the 16-bit label capacity still writes the other outputs") {
  const fs::path dir = scratch("capacity");
  // A 300x300 checkerboard groups into 90000 single-pixel regions.
  GrayImage board(300, 300);
  for (std::size_t y = 0; y < 300; ++y)
    for (std::size_t x = 0; x < 300; ++x) board.at(x, y) = (x + y) % 2 ? 1.0 : 0.0;
  write_file_atomic(dir / "board.pgm", write_pgm8(board));
  RunConfig cfg;
  cfg.input = dir / "board.pgm";
  cfg.out_dir = dir / "out";
  cfg.target_regions = 2;
  std::ostringstream out, err;
  RunOutcome outcome;
  CHECK(cmd_segment(cfg, out, err, &outcome) == kExitIoFailure);
  CHECK(outcome.regions_grouped == 90000);
  CHECK(err.str().find("labels.pgm not written") != std::string::npos);
  CHECK_FALSE(fs::exists(cfg.out_dir / "labels.pgm"));
  CHECK(fs::exists(cfg.out_dir / "labels_view.pgm"));
  CHECK(fs::exists(cfg.out_dir / "merged_labels.pgm"));
  CHECK(fs::exists(cfg.out_dir / "manifest.txt"));
}
