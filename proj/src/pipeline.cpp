#include "carrierseg/pipeline.hpp"

#include <charconv>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <system_error>

#include "carrierseg/pgm_io.hpp"

namespace carrierseg {

namespace {

namespace fs = std::filesystem;

// Thrown for failures while reading inputs or writing outputs.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

GrayImage load_source(const RunConfig& cfg) {
  if (cfg.generate) return make_test_image(cfg.generate->kind, cfg.generate->width, cfg.generate->height);
  Bytes bytes;
  try {
    bytes = read_file(*cfg.input);
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
  return read_pgm(bytes);
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

template <typename Data>
void emit(const fs::path& path, const Data& data) {
  try {
    write_file_atomic(path, data);
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
}

std::string exact(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Runs `body`, translating exceptions into the CLI exit-code contract.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIoFailure;
  } catch (const PgmError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIoFailure;
  }
}

}  // namespace

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  const auto x = text.find_first_of("xX");
  auto number = [&](std::string_view part) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size() || part.empty())
      throw std::invalid_argument("size must look like WxH, got '" + text + "'");
    return v;
  };
  if (x == std::string::npos) throw std::invalid_argument("size must look like WxH, got '" + text + "'");
  const std::string_view sv(text);
  return {number(sv.substr(0, x)), number(sv.substr(x + 1))};
}

void validate(const RunConfig& cfg) {
  if (cfg.input.has_value() == cfg.generate.has_value())
    throw std::invalid_argument("exactly one of --input or --gen is required");
  if (cfg.out_dir.empty()) throw std::invalid_argument("--out is required");
  if (cfg.target_regions && *cfg.target_regions == 0) throw std::invalid_argument("--target-regions must be >= 1");
  validate(cfg.sim);
}

int cmd_gen(TestImageKind kind, std::size_t width, std::size_t height, const fs::path& out_path, std::ostream& err) {
  return guarded(err, [&] {
    const GrayImage img = make_test_image(kind, width, height);
    emit(out_path, write_pgm8(img));
    return int{kExitConverged};
  });
}

std::string manifest_text(const RunConfig& cfg, const GrayImage& img, const RunOutcome& outcome) {
  std::ostringstream m;
  if (cfg.generate)
    m << "source=gen:" << to_string(cfg.generate->kind) << ':' << cfg.generate->width << 'x' << cfg.generate->height
      << '\n';
  else
    m << "source=input:" << cfg.input->string() << '\n';
  m << "width=" << img.width << '\n' << "height=" << img.height << '\n';
  m << "k1=" << exact(cfg.sim.k1) << '\n';
  m << "k2=" << exact(cfg.sim.k2) << '\n';
  m << "epsilon=" << exact(cfg.sim.epsilon) << '\n';
  m << "max_iters=" << cfg.sim.max_iters << '\n';
  m << "zero_tol=" << exact(cfg.sim.zero_tol) << '\n';
  m << "snapshots=";
  for (std::size_t i = 0; i < cfg.sim.snapshot_iters.size(); ++i) m << (i ? "," : "") << cfg.sim.snapshot_iters[i];
  m << '\n';
  m << "target_regions=" << (cfg.target_regions ? std::to_string(*cfg.target_regions) : "none") << '\n';
  m << "iterations=" << outcome.sim.iterations() << '\n';
  m << "converged=" << (outcome.sim.converged ? "true" : "false") << '\n';
  const double last = outcome.sim.trace.entries.empty() ? 0.0 : outcome.sim.trace.entries.back().mean_abs_change;
  m << "final_mean_abs_change=" << exact(last) << '\n';
  m << "regions_grouped=" << outcome.regions_grouped << '\n';
  m << "regions_merged="
    << (outcome.regions_merged ? std::to_string(*outcome.regions_merged) : "none") << '\n';
  return m.str();
}

int cmd_segment(const RunConfig& cfg, std::ostream& out, std::ostream& err, RunOutcome* outcome,
                const StepObserver& observer) {
  return guarded(err, [&] {
    validate(cfg);
    const GrayImage img = load_source(cfg);
    prepare_out_dir(cfg.out_dir);

    RunOutcome run;
    run.sim = simulate(img, cfg.sim, observer);
    const fs::path& dir = cfg.out_dir;

    const SignMap signs = sign_map(run.sim.final, cfg.sim.zero_tol);
    emit(dir / "sign_final.pgm", write_pgm8(render_sign_map(signs)));
    for (const auto& snap : run.sim.snapshots)
      emit(dir / ("sign_iter_" + std::to_string(snap.iteration) + ".pgm"), write_pgm8(render_sign_map(snap.signs)));
    emit(dir / "trace.csv", trace_to_csv(run.sim.trace));

    // Label maps beyond the 16-bit capacity are skipped; the remaining
    // artifacts are still written and the run reports an output failure.
    bool capacity_exceeded = false;
    auto emit_labels = [&](const fs::path& path, const LabelMap& lm) {
      try {
        emit(path, write_labels16(lm));
      } catch (const std::length_error& e) {
        err << "error: " << e.what() << "; " << path.filename().string() << " not written\n";
        capacity_exceeded = true;
      }
    };

    const Partition grouped = group_regions(signs, img);
    run.regions_grouped = grouped.region_count();
    emit_labels(dir / "labels.pgm", grouped.label_map);
    emit(dir / "labels_view.pgm", write_pgm8(render_label_map(grouped.label_map)));
    emit(dir / "regions.csv", regions_to_csv(grouped));
    out << "regions after grouping: " << run.regions_grouped << '\n';

    if (cfg.target_regions) {
      const Partition merged = merge_to_target(grouped, *cfg.target_regions);
      run.regions_merged = merged.region_count();
      emit_labels(dir / "merged_labels.pgm", merged.label_map);
      emit(dir / "merged_view.pgm", write_pgm8(render_label_map(merged.label_map)));
      emit(dir / "merged_regions.csv", regions_to_csv(merged));
      out << "regions after merging: " << *run.regions_merged << '\n';
    }

    emit(dir / "manifest.txt", manifest_text(cfg, img, run));
    out << "iterations: " << run.sim.iterations() << (run.sim.converged ? " (converged)" : " (max_iters reached)")
        << '\n';
    int code = run.sim.converged ? kExitConverged : kExitNotConverged;
    if (!run.sim.converged) err << "warning: simulation did not converge within " << cfg.sim.max_iters << " iterations\n";
    if (capacity_exceeded) code = kExitIoFailure;
    if (outcome) *outcome = std::move(run);
    return code;
  });
}

int cmd_trace(const RunConfig& cfg, std::ostream& out, std::ostream& err, RunOutcome* outcome) {
  return guarded(err, [&] {
    validate(cfg);
    const GrayImage img = load_source(cfg);
    prepare_out_dir(cfg.out_dir);
    RunOutcome run;
    run.sim = simulate(img, cfg.sim);
    emit(cfg.out_dir / "trace.csv", trace_to_csv(run.sim.trace));
    out << "iterations: " << run.sim.iterations() << (run.sim.converged ? " (converged)" : " (max_iters reached)")
        << '\n';
    const int code = run.sim.converged ? kExitConverged : kExitNotConverged;
    if (!run.sim.converged) err << "warning: simulation did not converge within " << cfg.sim.max_iters << " iterations\n";
    if (outcome) *outcome = std::move(run);
    return code;
  });
}

}  // namespace carrierseg
