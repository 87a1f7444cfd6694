#include "carrierseg/carrier_sim.hpp"

#include <algorithm>
#include <barrier>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

namespace carrierseg {

namespace {

// Double-buffered relaxation state. Interface fluxes live in their own
// buffers: hflux[y*(w-1)+x] is the change of pixel (x,y) across its interface
// with (x+1,y), vflux[y*w+x] the change of (x,y) across its interface with
// (x,y+1). The partner pixel receives the exact negation.
class Relaxation {
 public:
  Relaxation(const GrayImage& img, const CarrierGrid& start, const SimParams& p)
      : w_(img.width), h_(img.height), k2_(p.k2), cur_(start), next_(start) {
    hdrift_.resize(w_ > 1 ? h_ * (w_ - 1) : 0);
    vdrift_.resize(h_ > 1 ? (h_ - 1) * w_ : 0);
    for (std::size_t y = 0; y < h_; ++y) {
      for (std::size_t x = 0; x + 1 < w_; ++x)
        hdrift_[y * (w_ - 1) + x] = drift_flux(img.at(x, y), img.at(x + 1, y), p.k1);
      if (y + 1 < h_)
        for (std::size_t x = 0; x < w_; ++x) vdrift_[y * w_ + x] = drift_flux(img.at(x, y), img.at(x, y + 1), p.k1);
    }
    hflux_.resize(hdrift_.size());
    vflux_.resize(vdrift_.size());
    row_change_.assign(h_, 0.0);
  }

  std::size_t height() const { return h_; }

  void compute_fluxes(std::size_t y0, std::size_t y1) {
    const double* c = cur_.net_carrier.data();
    for (std::size_t y = y0; y < y1; ++y) {
      const double* row = c + y * w_;
      if (w_ > 1) {
        double* hf = hflux_.data() + y * (w_ - 1);
        const double* hd = hdrift_.data() + y * (w_ - 1);
        for (std::size_t x = 0; x + 1 < w_; ++x) hf[x] = hd[x] + diffuse_flux(row[x], row[x + 1], k2_);
      }
      if (y + 1 < h_) {
        const double* below = row + w_;
        double* vf = vflux_.data() + y * w_;
        const double* vd = vdrift_.data() + y * w_;
        for (std::size_t x = 0; x < w_; ++x) vf[x] = vd[x] + diffuse_flux(row[x], below[x], k2_);
      }
    }
  }

  void apply_fluxes(std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      const double* c = cur_.net_carrier.data() + y * w_;
      double* out = next_.net_carrier.data() + y * w_;
      const double* hf = w_ > 1 ? hflux_.data() + y * (w_ - 1) : nullptr;
      const double* vdown = y + 1 < h_ ? vflux_.data() + y * w_ : nullptr;
      const double* vup = y > 0 ? vflux_.data() + (y - 1) * w_ : nullptr;
      double change = 0.0;
      for (std::size_t x = 0; x < w_; ++x) {
        double delta = 0.0;
        if (x + 1 < w_) delta += hf[x];
        if (x > 0) delta -= hf[x - 1];
        if (vdown) delta += vdown[x];
        if (vup) delta -= vup[x];
        out[x] = c[x] + delta;
        change += std::abs(out[x] - c[x]);
      }
      row_change_[y] = change;
    }
  }

  // Swaps buffers and returns the mean absolute change. Row sums are reduced
  // in row order so the value is independent of how rows were distributed.
  double finish() {
    std::swap(cur_, next_);
    const double total = std::accumulate(row_change_.begin(), row_change_.end(), 0.0);
    return total / static_cast<double>(w_ * h_);
  }

  const CarrierGrid& current() const { return cur_; }

 private:
  std::size_t w_, h_;
  double k2_;
  CarrierGrid cur_, next_;
  std::vector<double> hdrift_, vdrift_, hflux_, vflux_;
  std::vector<double> row_change_;
};

std::size_t band_start(std::size_t rows, unsigned bands, unsigned band) {
  return rows * band / bands;
}

}  // namespace

void validate(const SimParams& p) {
  if (!(p.k1 > 0.0) || !std::isfinite(p.k1)) throw std::invalid_argument("k1 must be a positive finite number");
  if (!(p.k2 > 0.0)) throw std::invalid_argument("k2 must be positive");
  if (!(p.k2 < SimParams::kStabilityBound))
    throw UnstableConfigError("k2 = " + format_significant(p.k2) +
                              " violates the stability bound k2 < 0.25 for the 4-neighbor update");
  if (!(p.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (p.max_iters == 0) throw std::invalid_argument("max_iters must be at least 1");
  if (!(p.zero_tol >= 0.0)) throw std::invalid_argument("zero_tol must be non-negative");
  if (p.threads == 0) throw std::invalid_argument("threads must be at least 1");
  for (std::size_t i = 0; i < p.snapshot_iters.size(); ++i) {
    if (p.snapshot_iters[i] == 0) throw std::invalid_argument("snapshot iterations start at 1");
    if (i > 0 && p.snapshot_iters[i] <= p.snapshot_iters[i - 1])
      throw std::invalid_argument("snapshot iterations must be strictly ascending");
  }
}

std::string format_significant(double value) {
  // Fixed notation with enough decimals for >= 12 significant digits.
  int decimals = 12;
  if (value != 0.0 && std::isfinite(value)) {
    const int magnitude = static_cast<int>(std::floor(std::log10(std::abs(value))));
    if (magnitude < 0) decimals -= magnitude;
  }
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << value;
  return os.str();
}

std::string trace_to_csv(const ConvergenceTrace& trace) {
  std::string out = "iteration,mean_abs_change\n";
  for (const auto& e : trace.entries) {
    out += std::to_string(e.iteration);
    out += ',';
    out += format_significant(e.mean_abs_change);
    out += '\n';
  }
  return out;
}

StepResult step(const CarrierGrid& grid, const GrayImage& img, const SimParams& p) {
  require_same_dims(grid, img, "step");
  if (grid.net_carrier.size() != grid.width * grid.height)
    throw DimensionError("step: carrier buffer does not match width*height");
  validate(img);
  Relaxation relax(img, grid, p);
  relax.compute_fluxes(0, relax.height());
  relax.apply_fluxes(0, relax.height());
  const double change = relax.finish();
  return {relax.current(), change};
}

SimResult simulate(const GrayImage& img, const SimParams& p, const StepObserver& observer) {
  validate(img);
  validate(p);

  SimResult result;
  Relaxation relax(img, CarrierGrid(img.width, img.height), p);
  std::size_t next_snapshot = 0;
  bool stop = false;
  std::exception_ptr failure;

  // Runs once per iteration, after every row of the new buffer is written.
  auto finish_iteration = [&]() noexcept {
    try {
      const double change = relax.finish();
      const std::uint64_t iteration = result.trace.entries.size() + 1;
      result.trace.entries.push_back({iteration, change});
      if (observer) observer(iteration, relax.current());
      while (next_snapshot < p.snapshot_iters.size() && p.snapshot_iters[next_snapshot] == iteration) {
        result.snapshots.push_back({iteration, sign_map(relax.current(), p.zero_tol)});
        ++next_snapshot;
      }
      if (change < p.epsilon) {
        result.converged = true;
        stop = true;
      } else if (iteration >= p.max_iters) {
        stop = true;
      }
    } catch (...) {
      failure = std::current_exception();
      stop = true;
    }
  };

  const unsigned workers = static_cast<unsigned>(std::clamp<std::size_t>(p.threads, 1, img.height));
  if (workers == 1) {
    while (!stop) {
      relax.compute_fluxes(0, relax.height());
      relax.apply_fluxes(0, relax.height());
      finish_iteration();
    }
  } else {
    std::barrier fluxes_ready(workers);
    std::barrier iteration_done(workers, finish_iteration);
    auto work = [&](unsigned band) {
      const std::size_t y0 = band_start(relax.height(), workers, band);
      const std::size_t y1 = band_start(relax.height(), workers, band + 1);
      while (!stop) {
        relax.compute_fluxes(y0, y1);
        fluxes_ready.arrive_and_wait();
        relax.apply_fluxes(y0, y1);
        iteration_done.arrive_and_wait();
      }
    };
    std::vector<std::jthread> pool;
    for (unsigned b = 1; b < workers; ++b) pool.emplace_back(work, b);
    work(0);
  }

  if (failure) std::rethrow_exception(failure);
  result.final = relax.current();
  return result;
}

SignMap sign_map(const CarrierGrid& grid, double zero_tol) {
  SignMap sm{grid.width, grid.height, std::vector<Sign>(grid.size(), Sign::Zero)};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double c = grid.net_carrier[i];
    if (c > zero_tol)
      sm.signs[i] = Sign::Positive;
    else if (c < -zero_tol)
      sm.signs[i] = Sign::Negative;
  }
  return sm;
}

CarrierGrid closed_form_balance(const GrayImage& img, const SimParams& p) {
  validate(img);
  // Mean taken as an offset from the first pixel so uniform images yield
  // exactly zero deviations.
  const double origin = img.intensities.front();
  double offset = 0.0;
  for (double g : img.intensities) offset += g - origin;
  const double mean = origin + offset / static_cast<double>(img.size());
  const double ratio = p.k1 / p.k2;
  CarrierGrid grid(img.width, img.height);
  for (std::size_t i = 0; i < img.size(); ++i) grid.net_carrier[i] = -ratio * (img.intensities[i] - mean);
  return grid;
}

}  // namespace carrierseg
