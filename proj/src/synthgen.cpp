#include "neuroid/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "neuroid/dsp.hpp"
#include "neuroid/error.hpp"
#include "neuroid/rng.hpp"

namespace neuroid {
namespace {

constexpr double kErpAmplitudeUv = 10.0;
constexpr double kSubjectLatencySdS = 0.060;
constexpr double kEpochLatencySdS = 0.010;
constexpr double kAmplitudeLogSd = 0.5;
constexpr double kBandCommonWeight = 0.6;
constexpr double kBandChannelWeight = 0.4;
constexpr double kArtifactUv = 500.0;
constexpr double kArtifactWidthS = 0.020;
constexpr double kFirstEventS = 1.0;
constexpr double kMinGapS = 2.0;
constexpr double kGapJitterS = 0.5;
constexpr double kTailS = 2.5;

// Population AR(2) colouring; subjects move away from it with separability.
constexpr double kBaseA1 = 0.4;
constexpr double kBaseA2 = -0.2;

struct NoiseBand {
  double low_hz;
  double high_hz;
  double relative_rms;
};
constexpr std::array<NoiseBand, 4> kBands{{{1.0, 10.0, 0.8},
                                           {10.0, 13.0, 0.6},
                                           {13.0, 30.0, 0.4},
                                           {30.0, 50.0, 0.3}}};

const std::array<const char*, 8> kChannelNames{"Fz", "Cz", "Pz", "Oz", "P3", "P4", "PO7", "PO8"};
constexpr std::array<double, 8> kSpatialWeights{0.6, 0.8, 1.0, 0.7, 0.8, 0.8, 0.6, 0.6};

struct Profile {
  double latency_s = 0.0;
  std::vector<double> amplitude;               // per channel
  std::vector<std::array<double, 4>> log_gain;  // per channel, per band
  double a1 = kBaseA1;
  double a2 = kBaseA2;
};

// Uniform point inside the AR(2) stationarity triangle, kept off its edges.
std::pair<double, double> random_stationary(Rng& rng) {
  const double a2 = -0.8 + 1.6 * uniform01(rng);
  const double reach = 0.9 * (1.0 - a2);
  const double a1 = -reach + 2.0 * reach * uniform01(rng);
  return {a1, a2};
}

// Perturbs `p` in place. Used with the subject separability around the
// population profile and again with the session drift around the subject.
void perturb(Profile& p, double strength, Rng& rng) {
  p.latency_s += strength * kSubjectLatencySdS * standard_normal(rng);
  for (auto& a : p.amplitude) a *= std::exp(strength * kAmplitudeLogSd * standard_normal(rng));
  std::array<double, 4> common{};
  for (auto& z : common) z = standard_normal(rng);
  for (auto& gains : p.log_gain)
    for (std::size_t b = 0; b < gains.size(); ++b)
      gains[b] += strength * (kBandCommonWeight * common[b] +
                              kBandChannelWeight * standard_normal(rng));
  const auto [t1, t2] = random_stationary(rng);
  p.a1 += strength * (t1 - p.a1);
  p.a2 += strength * (t2 - p.a2);
}

// Variance of an AR(2) process driven by unit-variance innovations.
double ar2_variance(double a1, double a2) {
  return (1.0 - a2) / ((1.0 + a2) * ((1.0 - a2) * (1.0 - a2) - a1 * a1));
}

std::string subject_name(int s, int n_subjects) {
  const auto width = std::max<std::size_t>(2, std::to_string(n_subjects).size());
  auto digits = std::to_string(s + 1);
  return "sub-" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

std::vector<std::string> channel_names(int n) {
  std::vector<std::string> names;
  for (int c = 0; c < n; ++c)
    names.push_back(c < 8 ? std::string(kChannelNames[static_cast<std::size_t>(c)])
                          : "Ch" + std::to_string(c + 1));
  return names;
}

void add_bump(double* row, std::int64_t n, double rate, std::int64_t centre_sample_base,
              double centre_offset_s, double width_s, double amplitude) {
  const double centre = static_cast<double>(centre_sample_base) + centre_offset_s * rate;
  const double half_span = 4.0 * width_s * rate;
  const auto first = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(centre - half_span)));
  const auto last = std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::ceil(centre + half_span)));
  const double inv = 1.0 / (2.0 * width_s * width_s * rate * rate);
  for (auto t = first; t <= last; ++t) {
    const double d = static_cast<double>(t) - centre;
    row[t] += amplitude * std::exp(-d * d * inv);
  }
}

RawRecording render(const SynthConfig& cfg, const Profile& p, const std::string& subject,
                    const std::string& session, int s, int t) {
  const double rate = cfg.sampling_rate_hz;
  const auto n_ch = static_cast<std::size_t>(cfg.n_channels);

  auto ev_rng = make_rng(cfg.seed, {fnv1a("events"), static_cast<std::uint64_t>(s),
                                    static_cast<std::uint64_t>(t)});
  std::vector<double> onsets;
  double time = kFirstEventS;
  for (int e = 0; e < cfg.epochs_per_session; ++e) {
    onsets.push_back(time);
    time += kMinGapS + kGapJitterS * uniform01(ev_rng);
  }
  const auto n = static_cast<std::int64_t>(std::ceil((onsets.back() + kTailS) * rate));

  RawRecording rec;
  rec.subject_id = subject;
  rec.session_id = session;
  rec.sampling_rate_hz = rate;
  rec.signal = SignalMatrix::Zero(static_cast<Eigen::Index>(n_ch), n);
  for (double onset : onsets)
    rec.events.push_back({static_cast<std::int64_t>(std::llround(onset * rate)), kSynthEventCode});

  auto noise_rng = make_rng(cfg.seed, {fnv1a("noise"), static_cast<std::uint64_t>(s),
                                       static_cast<std::uint64_t>(t)});
  const double innovation_sd = cfg.noise_std_uv / std::sqrt(ar2_variance(p.a1, p.a2));
  std::vector<dsp::SosFilter> band_filters;
  std::vector<double> band_rms;
  for (const auto& b : kBands) {
    const double hi = std::min(b.high_hz, 0.45 * rate);
    if (b.low_hz >= hi) continue;
    band_filters.push_back(dsp::butterworth_bandpass(2, b.low_hz, hi, rate));
    band_rms.push_back(b.relative_rms);
  }
  std::vector<double> white(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < n_ch; ++c) {
    double* row = rec.signal.data() + static_cast<std::int64_t>(c) * n;
    // AR(2) background.
    double x1 = 0.0, x2 = 0.0;
    for (std::int64_t i = -200; i < n; ++i) {
      const double x = p.a1 * x1 + p.a2 * x2 + innovation_sd * standard_normal(noise_rng);
      x2 = x1;
      x1 = x;
      if (i >= 0) row[i] = x;
    }
    // Band-limited components with subject-specific gains.
    for (std::size_t b = 0; b < band_filters.size(); ++b) {
      for (auto& w : white) w = standard_normal(noise_rng);
      const auto y = dsp::sosfilt(band_filters[b], white);
      double ss = 0.0;
      for (double v : y) ss += v * v;
      const double rms = std::sqrt(ss / static_cast<double>(y.size()));
      const double scale =
          rms > 0.0 ? cfg.noise_std_uv * band_rms[b] * std::exp(p.log_gain[c][b]) / rms : 0.0;
      for (std::int64_t i = 0; i < n; ++i) row[i] += scale * y[static_cast<std::size_t>(i)];
    }
  }

  // ERP per event with small trial-to-trial latency jitter.
  auto erp_rng = make_rng(cfg.seed, {fnv1a("erp"), static_cast<std::uint64_t>(s),
                                     static_cast<std::uint64_t>(t)});
  const double width_s = cfg.erp_width_ms / 1000.0;
  for (const auto& ev : rec.events) {
    const double latency = p.latency_s + kEpochLatencySdS * standard_normal(erp_rng);
    for (std::size_t c = 0; c < n_ch; ++c)
      add_bump(rec.signal.data() + static_cast<std::int64_t>(c) * n, n, rate, ev.sample_index,
               latency, width_s, p.amplitude[c]);
  }

  if (cfg.artifact_rate > 0.0) {
    auto art_rng = make_rng(cfg.seed, {fnv1a("artifact"), static_cast<std::uint64_t>(s),
                                       static_cast<std::uint64_t>(t)});
    for (const auto& ev : rec.events) {
      const bool hit = uniform01(art_rng) < cfg.artifact_rate;
      const auto c = uniform_index(art_rng, n_ch);
      const double offset = 0.05 + 0.55 * uniform01(art_rng);
      if (hit)
        add_bump(rec.signal.data() + static_cast<std::int64_t>(c) * n, n, rate, ev.sample_index,
                 offset, kArtifactWidthS, kArtifactUv);
    }
  }

  for (Eigen::Index i = 0; i < rec.signal.size(); ++i)
    rec.signal.data()[i] = static_cast<double>(static_cast<float>(rec.signal.data()[i]));
  return rec;
}

}  // namespace

void validate(const SynthConfig& c) {
  if (c.n_subjects < 1 || c.n_sessions < 1 || c.epochs_per_session < 1 || c.n_channels < 1)
    throw ParamError("synthetic counts must be >= 1");
  if (!(c.sampling_rate_hz > 0.0)) throw ParamError("synthetic sampling rate must be > 0");
  if (!(c.subject_separability >= 0.0 && c.subject_separability <= 1.0))
    throw ParamError("subject_separability must lie in [0, 1]");
  if (!(c.session_drift >= 0.0 && c.session_drift <= 1.0))
    throw ParamError("session_drift must lie in [0, 1]");
  if (!(c.noise_std_uv >= 0.0)) throw ParamError("noise_std_uv must be >= 0");
  if (!(c.erp_width_ms > 0.0)) throw ParamError("erp_width_ms must be > 0");
  if (!(c.artifact_rate >= 0.0 && c.artifact_rate <= 1.0))
    throw ParamError("artifact_rate must lie in [0, 1]");
}

SynthDataset generate(const SynthConfig& cfg) {
  validate(cfg);
  const auto n_ch = static_cast<std::size_t>(cfg.n_channels);
  Profile population;
  population.latency_s = cfg.erp_latency_ms / 1000.0;
  for (std::size_t c = 0; c < n_ch; ++c)
    population.amplitude.push_back(kErpAmplitudeUv * (c < 8 ? kSpatialWeights[c] : 0.5));
  population.log_gain.assign(n_ch, {0.0, 0.0, 0.0, 0.0});

  std::vector<std::string> sessions;
  for (int t = 0; t < cfg.n_sessions; ++t) sessions.push_back("S" + std::to_string(t + 1));

  SynthDataset out;
  for (int s = 0; s < cfg.n_subjects; ++s) {
    Profile subject = population;
    auto subject_rng = make_rng(cfg.seed, {fnv1a("subject"), static_cast<std::uint64_t>(s)});
    perturb(subject, cfg.subject_separability, subject_rng);
    const auto name = subject_name(s, cfg.n_subjects);
    for (int t = 0; t < cfg.n_sessions; ++t) {
      Profile session = subject;
      auto drift_rng = make_rng(cfg.seed, {fnv1a("drift"), static_cast<std::uint64_t>(s),
                                           static_cast<std::uint64_t>(t)});
      perturb(session, cfg.session_drift, drift_rng);
      out.recordings.push_back(render(cfg, session, name, sessions[static_cast<std::size_t>(t)], s, t));
    }
  }
  out.manifest = make_manifest("Synthetic", Paradigm::Synthetic, cfg.sampling_rate_hz,
                               channel_names(cfg.n_channels), sessions, out.recordings);
  return out;
}

}  // namespace neuroid
