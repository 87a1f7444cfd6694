#include "carrierseg/region_ops.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <iterator>

namespace carrierseg {

namespace {

constexpr Label kUnlabeled = std::numeric_limits<Label>::max();

// Mean differences this close count as equal; the smaller id pair wins.
constexpr double kTieTolerance = 1e-12;

constexpr double kNoNeighbor = std::numeric_limits<double>::infinity();

template <typename Visit>
void for_each_interface(std::size_t w, std::size_t h, Visit&& visit) {
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      if (x + 1 < w) visit(i, i + 1);
      if (y + 1 < h) visit(i, i + w);
    }
  }
}

std::vector<RegionStats> compute_stats(const LabelMap& lm, const GrayImage& img, std::size_t regions) {
  std::vector<RegionStats> stats(regions);
  for (std::size_t r = 0; r < regions; ++r) stats[r].region_id = static_cast<Label>(r);
  for (std::size_t i = 0; i < lm.size(); ++i) {
    auto& s = stats[lm.labels[i]];
    ++s.pixel_count;
    s.gray_sum += img.intensities[i];
  }
  for (auto& s : stats) s.mean_gray = s.pixel_count ? s.gray_sum / static_cast<double>(s.pixel_count) : 0.0;
  for_each_interface(lm.width, lm.height, [&](std::size_t i, std::size_t j) {
    const Label a = lm.labels[i], b = lm.labels[j];
    if (a != b) {
      stats[a].neighbors.insert(b);
      stats[b].neighbors.insert(a);
    }
  });
  return stats;
}

double mean_difference(const RegionStats& a, const RegionStats& b) { return std::abs(a.mean_gray - b.mean_gray); }

// Fenwick tree over original region ids counting the ones still alive, used
// to translate a surviving region back to its compacted id.
class AliveIndex {
 public:
  explicit AliveIndex(std::size_t n) : tree_(n + 1, 0) {
    for (std::size_t i = 0; i < n; ++i) add(i, 1);
  }
  void add(std::size_t i, int delta) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
  }
  // Live entries strictly below i.
  Label rank(std::size_t i) const {
    long sum = 0;
    for (; i > 0; i -= i & (~i + 1)) sum += tree_[i];
    return static_cast<Label>(sum);
  }

 private:
  std::vector<long> tree_;
};

}  // namespace

Partition group_regions(const SignMap& sm, const GrayImage& img) {
  require_same_dims(sm, img, "group_regions");
  validate(img);
  const std::size_t w = sm.width, h = sm.height;
  LabelMap lm{w, h, std::vector<Label>(sm.size(), kUnlabeled)};
  Label next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < sm.size(); ++seed) {
    if (lm.labels[seed] != kUnlabeled) continue;
    const Sign cls = sm.signs[seed];
    lm.labels[seed] = next;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const std::size_t x = i % w, y = i / w;
      auto visit = [&](std::size_t j) {
        if (lm.labels[j] == kUnlabeled && sm.signs[j] == cls) {
          lm.labels[j] = next;
          stack.push_back(j);
        }
      };
      if (x > 0) visit(i - 1);
      if (x + 1 < w) visit(i + 1);
      if (y > 0) visit(i - w);
      if (y + 1 < h) visit(i + w);
    }
    ++next;
  }
  Partition p;
  p.regions = compute_stats(lm, img, next);
  p.label_map = std::move(lm);
  return p;
}

Partition partition_from_labels(const LabelMap& lm, const GrayImage& img) {
  require_same_dims(lm, img, "partition_from_labels");
  validate(img);
  if (lm.labels.size() != lm.width * lm.height) throw DimensionError("partition_from_labels: label buffer size");
  Partition p;
  p.regions = compute_stats(lm, img, lm.region_count());
  for (const auto& r : p.regions)
    if (r.pixel_count == 0)
      throw std::invalid_argument("partition_from_labels: label " + std::to_string(r.region_id) + " is unused");
  p.label_map = lm;
  return p;
}

std::set<RegionPair> build_rag(const Partition& p) {
  std::set<RegionPair> rag;
  for (const auto& r : p.regions)
    for (Label n : r.neighbors)
      if (r.region_id < n) rag.emplace(r.region_id, n);
  return rag;
}

Partition merge_once(const Partition& p, MergeRecord* record) {
  if (p.region_count() < 2) throw std::invalid_argument("merge_once: need at least two regions");

  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& r : p.regions)
    for (Label n : r.neighbors)
      if (n > r.region_id) lowest = std::min(lowest, mean_difference(r, p.regions[n]));
  if (lowest == std::numeric_limits<double>::infinity())
    throw std::invalid_argument("merge_once: no adjacent region pair");

  // First pair in (min id, max id) order that ties with the minimum.
  bool found = false;
  Label keep = 0, drop = 0;
  double best = 0.0;
  for (const auto& r : p.regions) {
    for (Label n : r.neighbors) {
      if (n <= r.region_id) continue;
      const double d = mean_difference(r, p.regions[n]);
      if (d <= lowest + kTieTolerance) {
        found = true;
        best = d;
        keep = r.region_id;
        drop = n;
        break;
      }
    }
    if (found) break;
  }

  auto remap = [&](Label id) -> Label { return id == drop ? keep : (id > drop ? id - 1 : id); };

  Partition out;
  out.label_map = p.label_map;
  for (auto& l : out.label_map.labels) l = remap(l);

  out.regions.reserve(p.region_count() - 1);
  for (const auto& r : p.regions) {
    if (r.region_id == drop) continue;
    RegionStats s;
    s.region_id = remap(r.region_id);
    s.pixel_count = r.pixel_count;
    s.gray_sum = r.gray_sum;
    s.mean_gray = r.mean_gray;
    for (Label n : r.neighbors) s.neighbors.insert(remap(n));
    if (r.region_id == keep) {
      const auto& other = p.regions[drop];
      s.pixel_count += other.pixel_count;
      s.gray_sum += other.gray_sum;
      s.mean_gray = s.gray_sum / static_cast<double>(s.pixel_count);
      for (Label n : other.neighbors) s.neighbors.insert(remap(n));
      s.neighbors.erase(keep);
    }
    out.regions.push_back(std::move(s));
  }
  if (record) *record = {keep, drop, best};
  return out;
}

Partition merge_to_target(const Partition& p, std::size_t target, std::vector<MergeRecord>* history) {
  if (target == 0) throw std::invalid_argument("merge_to_target: target must be at least 1");
  const std::size_t initial = p.region_count();
  if (initial <= target) return p;

  // Regions are tracked by their original id. Compaction preserves order, so
  // comparing original ids gives the same tie-break as comparing the ids
  // merge_once would see at each step.
  struct Node {
    std::size_t count;
    double sum;
    double mean;
    std::vector<Label> neighbors;  // sorted
    double best = kNoNeighbor;     // smallest mean difference to any neighbor
    bool alive = true;
  };
  std::vector<Node> nodes;
  nodes.reserve(initial);
  for (const auto& r : p.regions)
    nodes.push_back({r.pixel_count, r.gray_sum, r.mean_gray, {r.neighbors.begin(), r.neighbors.end()}});

  auto diff = [&](Label a, Label b) { return std::abs(nodes[a].mean - nodes[b].mean); };
  auto scan_best = [&](Label r) {
    double best = kNoNeighbor;
    for (Label n : nodes[r].neighbors) best = std::min(best, diff(r, n));
    return best;
  };

  // Regions ordered by their best difference; the front is the global minimum.
  std::set<std::pair<double, Label>> order;
  auto set_best = [&](Label r, double best) {
    if (nodes[r].best == best) return;
    if (nodes[r].best != kNoNeighbor) order.erase({nodes[r].best, r});
    nodes[r].best = best;
    if (best != kNoNeighbor) order.emplace(best, r);
  };
  for (Label r = 0; r < initial; ++r) set_best(r, scan_best(r));

  std::vector<Label> parent(initial);
  std::iota(parent.begin(), parent.end(), Label{0});
  AliveIndex alive(initial);
  std::size_t remaining = initial;
  std::vector<Label> joined;

  while (remaining > target) {
    if (order.empty()) throw std::invalid_argument("merge_once: no adjacent region pair");

    // Every region owning a pair within the tie band appears in `order`
    // under the threshold. The smallest such id is the lower end of the
    // winning pair; its smallest qualifying neighbor is the upper end.
    const double threshold = order.begin()->first + kTieTolerance;
    // Within one difference value the set is sorted by id, so only the first
    // entry of each distinct value in the band matters.
    Label a = std::numeric_limits<Label>::max();
    for (auto it = order.begin(); it != order.end() && it->first <= threshold;
         it = order.upper_bound({it->first, std::numeric_limits<Label>::max()}))
      a = std::min(a, it->second);
    Label b = 0;
    for (Label n : nodes[a].neighbors) {
      if (diff(a, n) <= threshold) {
        b = n;
        break;
      }
    }
    const double merged_diff = diff(a, b);
    if (history) history->push_back({alive.rank(a), alive.rank(b), merged_diff});

    Node& keep = nodes[a];
    Node& drop = nodes[b];
    const double old_keep_mean = keep.mean;
    const double drop_mean = drop.mean;
    keep.count += drop.count;
    keep.sum += drop.sum;
    keep.mean = keep.sum / static_cast<double>(keep.count);

    joined.clear();
    std::set_union(keep.neighbors.begin(), keep.neighbors.end(), drop.neighbors.begin(), drop.neighbors.end(),
                   std::back_inserter(joined));
    std::erase_if(joined, [&](Label n) { return n == a || n == b; });
    for (Label n : drop.neighbors) {
      if (n == a) continue;
      auto& list = nodes[n].neighbors;
      list.erase(std::lower_bound(list.begin(), list.end(), b));
      auto pos = std::lower_bound(list.begin(), list.end(), a);
      if (pos == list.end() || *pos != a) list.insert(pos, a);
    }
    keep.neighbors.swap(joined);

    set_best(b, kNoNeighbor);
    drop.alive = false;
    drop.neighbors.clear();
    drop.neighbors.shrink_to_fit();
    parent[b] = a;
    alive.add(b, -1);
    --remaining;

    set_best(a, scan_best(a));
    for (Label n : keep.neighbors) {
      Node& node = nodes[n];
      const double fresh = diff(n, a);
      // The old best may have come from the edge to a or b, both now gone.
      const bool stale = std::abs(node.mean - old_keep_mean) == node.best || std::abs(node.mean - drop_mean) == node.best;
      if (fresh < node.best || (stale && fresh == node.best))
        set_best(n, fresh);
      else if (stale)
        set_best(n, scan_best(n));
    }
  }

  // Compact surviving original ids to 0..remaining-1.
  std::vector<Label> compact(initial, kUnlabeled);
  Label next = 0;
  for (Label id = 0; id < initial; ++id)
    if (nodes[id].alive) compact[id] = next++;
  auto root = [&](Label id) {
    Label r = id;
    while (parent[r] != r) r = parent[r];
    while (parent[id] != r) id = std::exchange(parent[id], r);
    return r;
  };

  Partition out;
  out.label_map = p.label_map;
  for (auto& l : out.label_map.labels) l = compact[root(l)];
  out.regions.reserve(remaining);
  for (Label id = 0; id < initial; ++id) {
    const Node& n = nodes[id];
    if (!n.alive) continue;
    RegionStats s{compact[id], n.count, n.sum, n.mean, {}};
    for (Label m : n.neighbors) s.neighbors.insert(compact[m]);
    out.regions.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> check_partition(const Partition& p, const GrayImage& img) {
  std::vector<std::string> problems;
  const LabelMap& lm = p.label_map;
  if (lm.width != img.width || lm.height != img.height || lm.labels.size() != img.size()) {
    problems.push_back("label map does not match image dimensions");
    return problems;
  }
  const std::size_t regions = p.region_count();
  for (Label l : lm.labels) {
    if (l >= regions) {
      problems.push_back("label " + std::to_string(l) + " has no region entry");
      return problems;
    }
  }
  const Partition fresh{lm, compute_stats(lm, img, regions)};
  std::size_t total = 0;
  for (std::size_t r = 0; r < regions; ++r) {
    const auto& got = p.regions[r];
    const auto& want = fresh.regions[r];
    const std::string tag = "region " + std::to_string(r) + ": ";
    if (got.region_id != r) problems.push_back(tag + "region_id out of place");
    if (want.pixel_count == 0) problems.push_back(tag + "no pixels");
    if (got.pixel_count != want.pixel_count) problems.push_back(tag + "pixel_count mismatch");
    if (want.pixel_count && std::abs(got.mean_gray - want.mean_gray) > 1e-12) problems.push_back(tag + "mean_gray drifted");
    if (got.neighbors != want.neighbors) problems.push_back(tag + "neighbor set mismatch");
    if (got.neighbors.count(static_cast<Label>(r))) problems.push_back(tag + "listed as its own neighbor");
    for (Label n : got.neighbors)
      if (n >= regions || !p.regions[n].neighbors.count(static_cast<Label>(r)))
        problems.push_back(tag + "asymmetric neighbor " + std::to_string(n));
    total += got.pixel_count;
  }
  if (total != img.size()) problems.push_back("pixel counts do not sum to the image size");

  // Connectivity: flood each region from its first pixel and compare sizes.
  std::vector<std::uint8_t> seen(lm.size(), 0);
  std::vector<std::uint8_t> started(regions, 0);
  std::vector<std::size_t> stack;
  const std::size_t w = lm.width, h = lm.height;
  for (std::size_t seed = 0; seed < lm.size(); ++seed) {
    if (seen[seed]) continue;
    const Label l = lm.labels[seed];
    if (started[l] == 1) problems.push_back("region " + std::to_string(l) + " is not 4-connected");
    started[l] = started[l] ? 2 : 1;
    seen[seed] = 1;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const std::size_t x = i % w, y = i / w;
      for (std::size_t j : {x > 0 ? i - 1 : i, x + 1 < w ? i + 1 : i, y > 0 ? i - w : i, y + 1 < h ? i + w : i}) {
        if (!seen[j] && lm.labels[j] == l) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
  }
  return problems;
}

std::string regions_to_csv(const Partition& p) {
  std::ostringstream os;
  os << "region_id,pixel_count,mean_gray\n" << std::setprecision(17);
  for (const auto& r : p.regions) os << r.region_id << ',' << r.pixel_count << ',' << r.mean_gray << '\n';
  return os.str();
}

}  // namespace carrierseg
