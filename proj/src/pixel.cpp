// SPDX-License-Identifier: Apache-2.0
#include "efab/pixel.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numeric>
#include <random>

namespace efab {
namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Box-Muller; kept local so generated datasets do not depend on the standard library.
double gaussian(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit(rng);
  const double u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr double kDepositCharge = 100.0;
constexpr int kDepositColumn = kPixelsX / 2;

}  // namespace

FeatureVector extract_features(const Track& track) {
  FeatureVector f{};
  for (int t = 0; t < kTimeSlices; ++t) {
    for (int x = 0; x < kPixelsX; ++x) {
      for (int y = 0; y < kPixelsY; ++y) {
        f[static_cast<std::size_t>(y)] += track.at(t, x, y);
      }
    }
  }
  f[kPixelsY] = track.y0;
  return f;
}

int synth_segment_length(double pt) { return static_cast<int>(std::lround(1.0 + 8.0 / pt)); }

Track synth_track(TrackClass cls, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Track tr;
  tr.pt = cls == TrackClass::Signal ? 2.0 + 8.0 * unit(rng) : 0.2 + 1.8 * unit(rng);
  if (cls == TrackClass::Signal && tr.pt <= kPtCut) {
    tr.pt = std::nextafter(kPtCut, 3.0);
  }
  tr.y0 = -6.0 + 12.0 * unit(rng);
  const int len = std::min(kPixelsY, synth_segment_length(tr.pt));
  const int center = kPixelsY / 2 + static_cast<int>(std::lround(tr.y0));
  const int first = center - (len - 1) / 2;
  for (int y = std::max(0, first); y < std::min(kPixelsY, first + len); ++y) {
    for (int t = 0; t < kTimeSlices; ++t) {
      tr.at(t, kDepositColumn, y) = std::max(0.0, kDepositCharge * (1.0 + 0.05 * gaussian(rng)));
    }
  }
  return tr;
}

std::vector<Track> synth_dataset(std::size_t n, std::uint64_t seed) {
  std::vector<Track> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(synth_track(i % 2 == 0 ? TrackClass::Signal : TrackClass::Background, mix(seed ^ mix(i))));
  }
  return out;
}

std::size_t split_point(std::size_t n, double fraction) {
  if (n == 0) {
    throw Error(Errc::EmptyDataset, "cannot split an empty dataset");
  }
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(Errc::InvalidArgument, "split fraction must lie strictly between 0 and 1");
  }
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng() % i]);
  }
  return perm;
}

std::vector<Track> read_tracks(const std::string& path) {
  const std::unique_ptr<gzFile_s, int (*)(gzFile)> gz(gzopen(path.c_str(), "rb"), gzclose);
  if (!gz) {
    throw Error(Errc::IoError, "cannot open track file '" + path + "'");
  }
  std::string text;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(gz.get(), buf, sizeof buf)) > 0) {
    text.append(buf, static_cast<std::size_t>(n));
  }
  if (n < 0) {
    throw Error(Errc::IoError, "read error in '" + path + "'");
  }
  std::vector<Track> tracks;
  std::vector<double> values;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) {
      end = text.size();
    }
    ++line_no;
    values.clear();
    const char* p = text.data() + pos;
    const char* e = text.data() + end;
    while (p < e) {
      while (p < e && (*p == ' ' || *p == '\t' || *p == '\r' || *p == ',')) {
        ++p;
      }
      if (p >= e) {
        break;
      }
      char* next = nullptr;
      const double v = std::strtod(p, &next);
      if (next == p || next > e) {
        throw Error(Errc::ParseError, path + ":" + std::to_string(line_no) + ": not a number");
      }
      values.push_back(v);
      p = next;
    }
    pos = end + 1;
    if (values.empty()) {
      continue;
    }
    if (values.size() != static_cast<std::size_t>(kChargeValues + 2)) {
      throw Error(Errc::ParseError, path + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(kChargeValues + 2) + " values, found " +
                                        std::to_string(values.size()));
    }
    Track t;
    std::copy_n(values.begin(), kChargeValues, t.charge.begin());
    for (double q : t.charge) {
      if (q < 0.0) {
        throw Error(Errc::ParseError, path + ":" + std::to_string(line_no) + ": negative charge");
      }
    }
    t.y0 = values[kChargeValues];
    t.pt = values[kChargeValues + 1];
    tracks.push_back(std::move(t));
  }
  return tracks;
}

void write_tracks(const std::string& path, const std::vector<Track>& tracks) {
  const bool gzip = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  const std::unique_ptr<gzFile_s, int (*)(gzFile)> gz(gzopen(path.c_str(), gzip ? "wb6" : "wbT"), gzclose);
  if (!gz) {
    throw Error(Errc::IoError, "cannot create track file '" + path + "'");
  }
  std::string line;
  char num[32];
  auto put = [&](double v, char sep) {
    const auto r = std::to_chars(num, num + sizeof num, v);
    line.append(num, r.ptr);
    line.push_back(sep);
  };
  for (const Track& t : tracks) {
    line.clear();
    for (double q : t.charge) {
      put(q, ' ');
    }
    put(t.y0, ' ');
    put(t.pt, '\n');
    if (gzwrite(gz.get(), line.data(), static_cast<unsigned>(line.size())) != static_cast<int>(line.size())) {
      throw Error(Errc::IoError, "write error in '" + path + "'");
    }
  }
}

LabeledFeatures featurize(const std::vector<Track>& tracks) {
  LabeledFeatures d;
  d.x.reserve(tracks.size());
  d.y.reserve(tracks.size());
  for (const Track& t : tracks) {
    d.x.push_back(extract_features(t));
    d.y.push_back(t.is_background() ? 1 : 0);
  }
  return d;
}

}  // namespace efab
