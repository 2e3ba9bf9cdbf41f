#pragma once

// Reference implementations written for clarity rather than speed. They share no
// code with the library so that agreement between the two means something.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace oracle {

inline std::vector<double> naive_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    double below = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (x[j] < x[i]) below += 1.0;
      else if (x[j] == x[i]) equal += 1.0;
    }
    r[i] = below + (equal + 1.0) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

/// Rank the values, then Pearson against positions 1..N.
inline double spearman(const std::vector<double>& x) {
  std::vector<double> pos(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) pos[i] = static_cast<double>(i + 1);
  return pearson(pos, naive_ranks(x));
}

/// Two passes: mean, then variance and successive differences.
inline double von_neumann(const std::vector<double>& x, double eps) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  if (var == 0.0) return 0.0;
  double msd = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) msd += (x[i] - x[i - 1]) * (x[i] - x[i - 1]);
  msd /= (n - 1.0);
  return msd / (var + eps);
}

inline double sum(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

/// Nonnegative sequences of mixed shape. About a third are quantised so that ties occur.
inline std::vector<double> random_sequence(std::mt19937_64& eng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int shape = static_cast<int>(eng() % 3);
  const double slope = u(eng) * 2.0 - 1.0;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 3.0 * u(eng);
    if (shape == 1) v += slope * 4.0 * static_cast<double>(i) / static_cast<double>(n);
    if (shape == 2) v = std::round(v * 2.0) / 2.0;
    x[i] = std::abs(v);
  }
  return x;
}

struct Point {
  double x, y, gain;
};

struct Cell {
  std::size_t count = 0;
  double mean = 0.0;
};

/// Membership test for cell (ix, iy): [lo, hi) except the last bin, which is closed.
inline bool inside(const std::vector<double>& edges, std::size_t i, double v) {
  const bool last = i + 2 == edges.size();
  return v >= edges[i] && (v < edges[i + 1] || (last && v == edges[i + 1]));
}

/// Visits every cell and scans every point. Cells are y-major.
inline std::vector<Cell> rebin(const std::vector<Point>& points, const std::vector<double>& xe,
                               const std::vector<double>& ye) {
  std::vector<Cell> cells;
  for (std::size_t iy = 0; iy + 1 < ye.size(); ++iy) {
    for (std::size_t ix = 0; ix + 1 < xe.size(); ++ix) {
      Cell c;
      double total = 0.0;
      for (const auto& p : points) {
        if (inside(xe, ix, p.x) && inside(ye, iy, p.y)) {
          ++c.count;
          total += p.gain;
        }
      }
      if (c.count > 0) c.mean = total / static_cast<double>(c.count);
      cells.push_back(c);
    }
  }
  return cells;
}

}  // namespace oracle
