#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "carrierseg/carrier_sim.hpp"
#include "carrierseg/region_ops.hpp"
#include "carrierseg/test_images.hpp"

namespace carrierseg {

enum ExitCode : int {
  kExitConverged = 0,
  kExitNotConverged = 2,
  kExitInvalidConfig = 3,
  kExitIoFailure = 4,
};

struct GeneratedSource {
  TestImageKind kind = TestImageKind::TwoHalves;
  std::size_t width = 0;
  std::size_t height = 0;
};

struct RunConfig {
  std::optional<std::filesystem::path> input;
  std::optional<GeneratedSource> generate;
  std::filesystem::path out_dir;
  SimParams sim;
  std::optional<std::size_t> target_regions;
};

/// Throws std::invalid_argument when the config breaks its invariants.
void validate(const RunConfig& cfg);

/// "WxH" -> (W, H); throws std::invalid_argument.
std::pair<std::size_t, std::size_t> parse_size(const std::string& text);

struct RunOutcome {
  SimResult sim;
  std::size_t regions_grouped = 0;
  std::optional<std::size_t> regions_merged;
};

/// Writes the synthetic image as an 8-bit PGM.
int cmd_gen(TestImageKind kind, std::size_t width, std::size_t height, const std::filesystem::path& out_path,
            std::ostream& err);

/// Full pipeline: simulate, render signs, group, optionally merge, and write
/// every artifact plus manifest.txt into cfg.out_dir. `observer` sees every
/// simulation iteration.
int cmd_segment(const RunConfig& cfg, std::ostream& out, std::ostream& err, RunOutcome* outcome = nullptr,
                const StepObserver& observer = {});

/// Simulation only; writes trace.csv into cfg.out_dir.
int cmd_trace(const RunConfig& cfg, std::ostream& out, std::ostream& err, RunOutcome* outcome = nullptr);

/// key=value lines describing a finished run.
std::string manifest_text(const RunConfig& cfg, const GrayImage& img, const RunOutcome& outcome);

}  // namespace carrierseg
