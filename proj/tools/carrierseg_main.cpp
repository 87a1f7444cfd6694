// Command-line driver: gen | segment | trace.

#include <charconv>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "carrierseg/pipeline.hpp"

namespace {

using namespace carrierseg;

std::vector<std::uint64_t> parse_snapshots(const std::string& text) {
  std::vector<std::uint64_t> iters;
  std::size_t pos = 0;
  while (pos <= text.size() && !text.empty()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::uint64_t v = 0;
    const char* first = text.data() + pos;
    const char* last = text.data() + comma;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last)
      throw std::invalid_argument("--snapshots expects comma-separated iteration numbers, got '" + text + "'");
    iters.push_back(v);
    pos = comma + 1;
  }
  return iters;
}

struct RunFlags {
  std::string input;
  std::vector<std::string> gen;
  std::string out;
  std::string snapshots;
  std::size_t target = 0;
  SimParams sim;
};

void add_run_flags(CLI::App& cmd, RunFlags& f, bool with_target) {
  auto* input = cmd.add_option("--input", f.input, "8-bit PGM (P2/P5) to segment");
  auto* gen = cmd.add_option("--gen", f.gen, "synthetic source: KIND WxH (TwoHalves|Rectangle|ThreeShapes)")
                  ->expected(2);
  input->excludes(gen);
  cmd.add_option("--out", f.out, "output directory")->required();
  cmd.add_option("--k1", f.sim.k1, "drift coefficient")->capture_default_str();
  cmd.add_option("--k2", f.sim.k2, "diffusion coefficient (< 0.25)")->capture_default_str();
  cmd.add_option("--epsilon", f.sim.epsilon, "stop when mean |change| drops below this")->capture_default_str();
  cmd.add_option("--max-iters", f.sim.max_iters, "iteration cap")->capture_default_str();
  cmd.add_option("--zero-tol", f.sim.zero_tol, "|c| <= zero-tol counts as zero sign")->capture_default_str();
  cmd.add_option("--snapshots", f.snapshots, "iterations to capture sign maps at, e.g. 1,10,100");
  cmd.add_option("--threads", f.sim.threads, "worker threads for the relaxation")->capture_default_str();
  if (with_target) cmd.add_option("--target-regions", f.target, "merge down to this many regions");
}

RunConfig to_config(const RunFlags& f) {
  RunConfig cfg;
  if (!f.input.empty()) cfg.input = f.input;
  if (!f.gen.empty()) {
    auto kind = parse_test_image_kind(f.gen[0]);
    if (!kind) throw std::invalid_argument("unknown test image kind '" + f.gen[0] + "'");
    auto [w, h] = parse_size(f.gen[1]);
    cfg.generate = GeneratedSource{*kind, w, h};
  }
  cfg.out_dir = f.out;
  cfg.sim = f.sim;
  cfg.sim.snapshot_iters = parse_snapshots(f.snapshots);
  if (f.target > 0) cfg.target_regions = f.target;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual-carrier drift/diffusion image segmentation"};
  app.require_subcommand(1);

  std::string gen_kind, gen_out;
  std::size_t gen_w = 0, gen_h = 0;
  auto* gen = app.add_subcommand("gen", "write a synthetic test image");
  gen->add_option("kind", gen_kind, "TwoHalves | Rectangle | ThreeShapes")->required();
  gen->add_option("width", gen_w)->required();
  gen->add_option("height", gen_h)->required();
  gen->add_option("out", gen_out, "output PGM path")->required();

  RunFlags seg_flags, trace_flags;
  auto* segment = app.add_subcommand("segment", "simulate, group and optionally merge regions");
  add_run_flags(*segment, seg_flags, true);
  auto* trace = app.add_subcommand("trace", "simulate and write only the convergence trace");
  add_run_flags(*trace, trace_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalidConfig;
  }

  try {
    if (*gen) {
      auto kind = parse_test_image_kind(gen_kind);
      if (!kind) throw std::invalid_argument("unknown test image kind '" + gen_kind + "'");
      return cmd_gen(*kind, gen_w, gen_h, gen_out, std::cerr);
    }
    if (*segment) return cmd_segment(to_config(seg_flags), std::cout, std::cerr);
    return cmd_trace(to_config(trace_flags), std::cout, std::cerr);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalidConfig;
  }
}
