#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "carrierseg/image.hpp"

namespace carrierseg {

/// Net carrier (positive minus negative) held by each pixel's container.
struct CarrierGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> net_carrier;

  CarrierGrid() = default;
  CarrierGrid(std::size_t w, std::size_t h) : width(w), height(h), net_carrier(w * h, 0.0) {}

  std::size_t size() const { return net_carrier.size(); }
  double at(std::size_t x, std::size_t y) const { return net_carrier[y * width + x]; }

  friend bool operator==(const CarrierGrid&, const CarrierGrid&) = default;
};

struct SimParams {
  double k1 = 0.05;  // drift coefficient
  double k2 = 0.2;   // diffusion coefficient, must stay below kStabilityBound
  double epsilon = 1e-6;
  std::uint64_t max_iters = 100000;
  std::vector<std::uint64_t> snapshot_iters;
  double zero_tol = 0.0;
  // Worker threads for the relaxation loop; results do not depend on it.
  unsigned threads = 1;

  static constexpr double kStabilityBound = 0.25;
};

/// k2 at or above the 4-neighbor stability bound.
class UnstableConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws std::invalid_argument (UnstableConfigError for k2) on bad parameters.
void validate(const SimParams& p);

struct TraceEntry {
  std::uint64_t iteration = 0;
  double mean_abs_change = 0.0;
};

struct ConvergenceTrace {
  std::vector<TraceEntry> entries;
};

/// "iteration,mean_abs_change" with at least 12 significant digits per value.
std::string trace_to_csv(const ConvergenceTrace& trace);
std::string format_significant(double value);

struct Snapshot {
  std::uint64_t iteration = 0;
  SignMap signs;
};

struct SimResult {
  CarrierGrid final;
  ConvergenceTrace trace;
  std::vector<Snapshot> snapshots;
  bool converged = false;

  std::uint64_t iterations() const { return trace.entries.empty() ? 0 : trace.entries.back().iteration; }
};

/// Field across the interface between a pixel of intensity g and its
/// neighbor g_a: k * (g - g_a).
constexpr double interface_field(double g, double g_a, double k) { return k * (g - g_a); }

/// Per-step change of the pixel's net carrier due to drift over one
/// interface. The brighter side attracts negative carrier, so the pixel
/// gains k1 * (g_a - g).
constexpr double drift_flux(double g, double g_a, double k1) { return k1 * (g_a - g); }

/// Per-step change of the pixel's net carrier due to diffusion over one
/// interface: k2 * (c_a - c).
constexpr double diffuse_flux(double c, double c_a, double k2) { return k2 * (c_a - c); }

struct StepResult {
  CarrierGrid grid;
  double mean_abs_change = 0.0;
};

/// One synchronous update over all 4-neighbor interfaces.
StepResult step(const CarrierGrid& grid, const GrayImage& img, const SimParams& p);

/// Called after every iteration with the freshly updated grid.
using StepObserver = std::function<void(std::uint64_t iteration, const CarrierGrid& grid)>;

/// Relaxes from the all-zero grid until the mean absolute change drops
/// below epsilon or max_iters is reached.
SimResult simulate(const GrayImage& img, const SimParams& p, const StepObserver& observer = {});

SignMap sign_map(const CarrierGrid& grid, double zero_tol);

/// Analytic balance state: -(k1/k2) * (g - mean(g)).
CarrierGrid closed_form_balance(const GrayImage& img, const SimParams& p);

}  // namespace carrierseg
