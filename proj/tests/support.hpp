#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "neuroid/bundle_io.hpp"
#include "neuroid/evaluation.hpp"
#include "neuroid/rng.hpp"

namespace testing_support {

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("neuroid_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<double> sinusoid(std::size_t n, double freq_hz, double rate_hz, double amp = 1.0,
                                    double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t)
    x[t] = amp * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(t) / rate_hz + phase);
  return x;
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  auto rng = neuroid::make_rng(seed, {neuroid::fnv1a("white")});
  std::vector<double> x(n);
  for (auto& v : x) v = sd * neuroid::standard_normal(rng);
  return x;
}

// x_t = sum_k a_k x_{t-k} + e_t, with a burn-in discarded.
inline std::vector<double> simulate_ar(const std::vector<double>& a, std::size_t n,
                                       std::uint64_t seed) {
  const std::size_t burn = 1000;
  auto e = white_noise(n + burn, seed);
  std::vector<double> x(n + burn, 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    double v = e[t];
    for (std::size_t k = 0; k < a.size(); ++k)
      if (t > k) v += a[k] * x[t - k - 1];
    x[t] = v;
  }
  return {x.begin() + static_cast<std::ptrdiff_t>(burn), x.end()};
}

inline double rms(const std::vector<double>& x, std::size_t from = 0, std::size_t to = 0) {
  if (to == 0) to = x.size();
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += x[i] * x[i];
  return std::sqrt(s / static_cast<double>(to - from));
}

inline double variance(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

// |X(f)|^2 by direct summation at an arbitrary frequency.
inline double direct_power(const std::vector<double>& x, double freq_hz, double rate_hz) {
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t t = 0; t < x.size(); ++t)
    acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * freq_hz * static_cast<double>(t) / rate_hz);
  return std::norm(acc);
}

inline neuroid::RawRecording make_recording(const std::string& subject, const std::string& session,
                                            double rate, const std::vector<std::vector<double>>& channels,
                                            std::vector<neuroid::EventMarker> events = {}) {
  neuroid::RawRecording r;
  r.subject_id = subject;
  r.session_id = session;
  r.sampling_rate_hz = rate;
  r.signal.resize(static_cast<Eigen::Index>(channels.size()),
                  static_cast<Eigen::Index>(channels.empty() ? 0 : channels[0].size()));
  for (std::size_t c = 0; c < channels.size(); ++c)
    for (std::size_t t = 0; t < channels[c].size(); ++t)
      r.signal(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = channels[c][t];
  r.events = std::move(events);
  return r;
}

// Exhaustive ROC oracle. Candidate thresholds: -inf, every score, +inf,
// visited in ascending order; rates are recounted from scratch at each one.
struct OraclePoint {
  double threshold, fmr, fnmr;
};

inline std::vector<OraclePoint> oracle_sweep(const std::vector<double>& genuine,
                                             const std::vector<double>& impostor) {
  std::set<double> cand{-std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity()};
  cand.insert(genuine.begin(), genuine.end());
  cand.insert(impostor.begin(), impostor.end());
  std::vector<OraclePoint> out;
  for (double t : cand) {
    std::size_t fa = 0, fr = 0;
    for (double s : impostor) fa += s >= t;
    for (double s : genuine) fr += s < t;
    out.push_back({t, static_cast<double>(fa) / static_cast<double>(impostor.size()),
                   static_cast<double>(fr) / static_cast<double>(genuine.size())});
  }
  return out;
}

// Crossing of fmr - fnmr, interpolated along the fnmr coordinate. At the
// lowest threshold where fmr <= fnmr: exact tie returns that rate, otherwise
// the segment to the previous (lower) threshold is interpolated.
inline double oracle_eer(const std::vector<double>& genuine, const std::vector<double>& impostor) {
  const auto pts = oracle_sweep(genuine, impostor);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double d = pts[k].fmr - pts[k].fnmr;
    if (d > 0.0) continue;
    if (d == 0.0) return pts[k].fnmr;
    const auto& p = pts[k - 1];
    const double dp = p.fmr - p.fnmr;
    const double lambda = dp / (dp - d);
    return p.fnmr + lambda * (pts[k].fnmr - p.fnmr);
  }
  return pts.back().fnmr;
}

// FNMR at the lowest threshold whose FMR does not exceed `level`.
inline double oracle_fnmr_at_fmr(const std::vector<double>& genuine,
                                 const std::vector<double>& impostor, double level) {
  for (const auto& p : oracle_sweep(genuine, impostor))
    if (p.fmr <= level) return p.fnmr;
  return 1.0;
}

// Yule-Walker by a dense solve of the p x p Toeplitz system R a = r.
inline Eigen::VectorXd dense_yule_walker(const std::vector<double>& r, int p) {
  Eigen::MatrixXd R(p, p);
  Eigen::VectorXd rhs(p);
  for (int i = 0; i < p; ++i) {
    rhs(i) = r[static_cast<std::size_t>(i + 1)];
    for (int j = 0; j < p; ++j) R(i, j) = r[static_cast<std::size_t>(std::abs(i - j))];
  }
  return R.fullPivLu().solve(rhs);
}

// Random labelled rows: `n_subjects` subjects, each with a random number of
// rows in [lo, hi], shuffled.
inline std::vector<std::string> random_subject_column(neuroid::Rng& rng, int n_subjects, int lo,
                                                      int hi) {
  std::vector<std::string> ids;
  for (int s = 0; s < n_subjects; ++s) {
    const auto n = lo + static_cast<int>(neuroid::uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
    for (int i = 0; i < n; ++i) ids.push_back("s" + std::to_string(s));
  }
  neuroid::shuffle(ids.begin(), ids.end(), rng);
  return ids;
}

// Brute-force checks on a set of folds for `user`. Returns an empty string
// when every property holds, otherwise a description of the first failure.
inline std::string check_unknown_folds(const std::vector<std::string>& ids, const std::string& user,
                                       const std::vector<neuroid::Fold>& folds) {
  std::vector<int> tested(ids.size(), 0);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::set<std::string> train_subjects, test_subjects;
    for (auto r : folds[f].train)
      if (ids[r] != user) train_subjects.insert(ids[r]);
    for (auto r : folds[f].test) {
      ++tested[r];
      if (ids[r] != user) test_subjects.insert(ids[r]);
    }
    for (const auto& s : test_subjects)
      if (train_subjects.count(s)) return "fold " + std::to_string(f) + ": subject " + s + " on both sides";
    for (auto r : folds[f].train)
      for (auto q : folds[f].test)
        if (r == q) return "fold " + std::to_string(f) + ": row in train and test";
  }
  for (std::size_t r = 0; r < ids.size(); ++r)
    if (tested[r] != 1) return "row " + std::to_string(r) + " tested " + std::to_string(tested[r]) + " times";
  return {};
}

inline std::string check_known_folds(std::size_t n_rows, const std::vector<neuroid::Fold>& folds) {
  std::vector<int> tested(n_rows, 0);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<int> seen(n_rows, 0);
    for (auto r : folds[f].train) ++seen[r];
    for (auto r : folds[f].test) {
      ++seen[r];
      ++tested[r];
    }
    for (std::size_t r = 0; r < n_rows; ++r)
      if (seen[r] != 1) return "fold " + std::to_string(f) + ": row " + std::to_string(r) + " seen " + std::to_string(seen[r]) + " times";
  }
  for (std::size_t r = 0; r < n_rows; ++r)
    if (tested[r] != 1) return "row " + std::to_string(r) + " tested " + std::to_string(tested[r]) + " times";
  return {};
}

}  // namespace testing_support
