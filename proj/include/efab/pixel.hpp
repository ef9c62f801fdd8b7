// SPDX-License-Identifier: Apache-2.0
//
// Smart-pixel tracks: storage, feature extraction, synthetic generation and datasets.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "efab/error.hpp"

namespace efab {

inline constexpr int kTimeSlices = 8;
inline constexpr int kPixelsX = 21;
inline constexpr int kPixelsY = 13;
inline constexpr int kChargeValues = kTimeSlices * kPixelsX * kPixelsY;
inline constexpr int kNumFeatures = kPixelsY + 1;
/// Tracks below this transverse momentum (GeV) are background (pileup).
inline constexpr double kPtCut = 2.0;

struct Track {
  std::vector<double> charge = std::vector<double>(kChargeValues, 0.0);  // t-major, then x, then y
  double y0 = 0.0;
  double pt = 0.0;

  double& at(int t, int x, int y) { return charge[static_cast<std::size_t>((t * kPixelsX + x) * kPixelsY + y)]; }
  double at(int t, int x, int y) const { return charge[static_cast<std::size_t>((t * kPixelsX + x) * kPixelsY + y)]; }
  bool is_background() const { return pt < kPtCut; }
};

/// Indices 0..12: charge summed over time and x per y pixel; index 13: y0.
using FeatureVector = std::array<double, kNumFeatures>;

FeatureVector extract_features(const Track& track);

enum class TrackClass { Signal, Background };

/// Deterministic synthetic track: pT uniform in (2,10) for signal and (0.2,2) for background,
/// a y-segment of round(1 + 8/pT) pixels (clipped to the sensor) around 6 + round(y0) with
/// y0 uniform in (-6,6), uniform charge per covered pixel and slice plus 5% Gaussian noise.
Track synth_track(TrackClass cls, std::uint64_t seed);
/// Number of y pixels a track of this momentum covers before clipping.
int synth_segment_length(double pt);
/// Alternating signal/background tracks with per-track seeds derived from `seed`.
std::vector<Track> synth_dataset(std::size_t n, std::uint64_t seed);

/// Seeded shuffle into (train, test) with |train| = round(fraction * n). Throws EmptyDataset.
template <class T>
std::pair<std::vector<T>, std::vector<T>> split_dataset(const std::vector<T>& items, double fraction,
                                                        std::uint64_t seed);
std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed);
std::size_t split_point(std::size_t n, double fraction);

template <class T>
std::pair<std::vector<T>, std::vector<T>> split_dataset(const std::vector<T>& items, double fraction,
                                                        std::uint64_t seed) {
  const std::size_t cut = split_point(items.size(), fraction);
  const std::vector<std::size_t> perm = split_permutation(items.size(), seed);
  std::pair<std::vector<T>, std::vector<T>> out;
  out.first.reserve(cut);
  out.second.reserve(items.size() - cut);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    (i < cut ? out.first : out.second).push_back(items[perm[i]]);
  }
  return out;
}

/// One track per line: 2184 charges, y0, pT. Reads plain or gzip files transparently.
std::vector<Track> read_tracks(const std::string& path);
/// Writes gzip when the path ends in ".gz".
void write_tracks(const std::string& path, const std::vector<Track>& tracks);

struct LabeledFeatures {
  std::vector<FeatureVector> x;
  std::vector<std::uint8_t> y;  // 1 = background
};
LabeledFeatures featurize(const std::vector<Track>& tracks);

}  // namespace efab
