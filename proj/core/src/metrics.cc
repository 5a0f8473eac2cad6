#include <algorithm>
#include <limits>

#include "svo/errors.h"
#include "svo/simulation.h"

namespace svo {

TrafficMetrics ComputeMetrics(const EpisodeTrace& trace) {
  if (trace.size() == 0) throw InvalidParameter("cannot summarize empty trace");
  TrafficMetrics m;
  double gap_total = 0.0;
  double headway_total = 0.0;
  int headway_pairs = 0;
  for (int f = kAv; f < kNumVehicles; ++f) {
    const std::vector<VehicleSample>& s = trace.samples[f];
    PairMetrics p;
    p.follower = kVehicleNames[f];
    p.leader = kVehicleNames[f - 1];
    p.samples = s.size();
    p.min_gap = std::numeric_limits<double>::infinity();
    p.max_gap = -std::numeric_limits<double>::infinity();
    double gap_sum = 0.0, headway_sum = 0.0;
    std::size_t headway_n = 0;
    for (const VehicleSample& x : s) {
      gap_sum += x.gap;
      p.min_gap = std::min(p.min_gap, x.gap);
      p.max_gap = std::max(p.max_gap, x.gap);
      if (x.speed > TrafficMetrics::kHeadwaySpeedEps) {
        headway_sum += x.gap / x.speed;
        ++headway_n;
      } else {
        ++p.headway_excluded;
      }
    }
    p.avg_gap = gap_sum / static_cast<double>(s.size());
    if (headway_n > 0) {
      p.avg_headway = headway_sum / static_cast<double>(headway_n);
      headway_total += *p.avg_headway;
      ++headway_pairs;
    }
    gap_total += p.avg_gap;
    m.pairs.push_back(std::move(p));
  }
  m.avg_gap = gap_total / static_cast<double>(m.pairs.size());
  if (headway_pairs > 0) m.avg_headway = headway_total / headway_pairs;
  return m;
}

}  // namespace svo
