#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "carrierseg/image.hpp"

namespace carrierseg {

struct RegionStats {
  Label region_id = 0;
  std::size_t pixel_count = 0;
  double gray_sum = 0.0;   // sum of member intensities; mean_gray = gray_sum / pixel_count
  double mean_gray = 0.0;
  std::set<Label> neighbors;

  friend bool operator==(const RegionStats&, const RegionStats&) = default;
};

struct Partition {
  LabelMap label_map;
  std::vector<RegionStats> regions;  // indexed by region_id

  std::size_t region_count() const { return regions.size(); }

  friend bool operator==(const Partition&, const Partition&) = default;
};

using RegionPair = std::pair<Label, Label>;  // first < second

/// One merge as seen at the time it happened: `removed` was folded into
/// `kept` (kept < removed), ids refer to the partition before the merge.
struct MergeRecord {
  Label kept = 0;
  Label removed = 0;
  double difference = 0.0;

  friend bool operator==(const MergeRecord&, const MergeRecord&) = default;
};

/// 4-connected components of equal sign class. Ids follow raster order of
/// each component's first pixel.
Partition group_regions(const SignMap& sm, const GrayImage& img);

/// Statistics for an existing contiguous labelling.
Partition partition_from_labels(const LabelMap& lm, const GrayImage& img);

std::set<RegionPair> build_rag(const Partition& p);

/// Merges the adjacent pair with the smallest mean-gray difference. Pairs
/// within 1e-12 of the minimum tie and the smallest (min id, max id) wins. The merged region keeps the smaller id and
/// higher ids shift down by one. Throws std::invalid_argument with fewer than
/// two regions or no adjacent pair.
Partition merge_once(const Partition& p, MergeRecord* record = nullptr);

/// Repeats merge_once until at most `target` regions remain.
Partition merge_to_target(const Partition& p, std::size_t target, std::vector<MergeRecord>* history = nullptr);

/// Every violated partition invariant, recomputed from pixels; empty when valid.
std::vector<std::string> check_partition(const Partition& p, const GrayImage& img);

/// "region_id,pixel_count,mean_gray".
std::string regions_to_csv(const Partition& p);

}  // namespace carrierseg
