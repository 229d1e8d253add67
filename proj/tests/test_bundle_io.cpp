#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "neuroid/bundle_io.hpp"
#include "neuroid/error.hpp"
#include "neuroid/rng.hpp"
#include "support.hpp"

using namespace neuroid;
namespace fs = std::filesystem;
namespace ts = testing_support;

namespace {

RawRecording random_recording(Rng& rng, const std::string& subject, const std::string& session,
                              int n_channels, int n_samples, double rate) {
  RawRecording r;
  r.subject_id = subject;
  r.session_id = session;
  r.sampling_rate_hz = rate;
  r.signal.resize(n_channels, n_samples);
  for (Eigen::Index i = 0; i < r.signal.size(); ++i)
    r.signal.data()[i] = static_cast<float>(20.0 * standard_normal(rng));
  const auto n_events = uniform_index(rng, 6);
  std::int64_t t = 0;
  for (std::uint64_t e = 0; e < n_events; ++e) {
    t += 1 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(n_samples / 8)));
    if (t >= n_samples) break;
    r.events.push_back({t, 1 + static_cast<int>(uniform_index(rng, 3))});
  }
  return r;
}

// Random multi-subject bundle; some subjects skip some sessions.
std::pair<DatasetManifest, std::vector<RawRecording>> random_bundle(std::uint64_t seed, int n_subjects) {
  auto rng = make_rng(seed, {});
  const int n_channels = 1 + static_cast<int>(uniform_index(rng, 4));
  std::vector<std::string> channels;
  for (int c = 0; c < n_channels; ++c) channels.push_back("E" + std::to_string(c));
  const std::vector<std::string> order{"day1", "day2", "day3"};
  std::vector<RawRecording> recs;
  for (int s = 0; s < n_subjects; ++s)
    for (const auto& ses : order)
      if (ses == "day1" || uniform01(rng) < 0.6)
        recs.push_back(random_recording(rng, "subj" + std::to_string(s), ses, n_channels,
                                        50 + static_cast<int>(uniform_index(rng, 200)), 128.0));
  auto m = make_manifest("random", Paradigm::P300, 128.0, channels, order, recs);
  return {m, recs};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST(BundleIo, MinimalBundleRoundTrip) {
  ts::TempDir dir("bundle_min");
  std::vector<double> c0(100), c1(100);
  for (int t = 0; t < 100; ++t) c0[t] = t * 0.5, c1[t] = -t;
  const auto rec = ts::make_recording("s1", "ses1", 100.0, {c0, c1}, {{10, 7}});
  const auto m = make_manifest("mini", Paradigm::Synthetic, 100.0, {"Cz", "Pz"}, {"ses1"}, {rec});
  write_bundle(m, {rec}, dir.path());

  const auto b = read_bundle(dir.path());
  ASSERT_EQ(b.manifest().subjects.size(), 1u);
  EXPECT_EQ(b.manifest().subjects[0].sessions[0].n_samples, 100);
  EXPECT_EQ(b.manifest().unit, "microvolt");
  EXPECT_EQ(b.recording(0, 0), rec);
  EXPECT_EQ(fs::file_size(dir / "data.f32"), 2u * 100u * 4u);
  EXPECT_EQ(ts::slurp(dir / events_file_name("s1", "ses1")), "sample_index,code\n10,7\n");
}

TEST(BundleIo, DataFileIsLittleEndianChannelMajorFloat32) {
  ts::TempDir dir("bundle_layout");
  const auto rec = ts::make_recording("s", "a", 10.0, {{1.0, 2.0, 3.0}, {-1.5, 0.25, 8.0}});
  write_bundle(make_manifest("x", Paradigm::N400, 10.0, {"a", "b"}, {"a"}, {rec}), {rec}, dir.path());
  const auto bytes = ts::slurp(dir / "data.f32");
  ASSERT_EQ(bytes.size(), 24u);
  const float expected[] = {1.0f, 2.0f, 3.0f, -1.5f, 0.25f, 8.0f};
  for (int k = 0; k < 6; ++k) {
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(bytes[4 * k + b]);
    float f;
    std::memcpy(&f, &bits, 4);
    EXPECT_EQ(f, expected[k]) << k;
  }
}

TEST(BundleIo, TwoSessionsSizeArithmetic) {
  ts::TempDir dir("bundle_size");
  std::vector<double> z(10, 1.0);
  const auto a = ts::make_recording("s", "one", 50.0, {z, z});
  const auto b = ts::make_recording("s", "two", 50.0, {z, z});
  const auto m = make_manifest("x", Paradigm::P300, 50.0, {"c1", "c2"}, {"one", "two"}, {a, b});
  write_bundle(m, {a, b}, dir.path());
  EXPECT_EQ(fs::file_size(dir / "data.f32"), 2u * 10u * 2u * 4u);
  EXPECT_EQ(m.subjects[0].sessions[1].data_offset_bytes, 80);
}

TEST(BundleIo, EmptySubjectListWritesEmptyDataFile) {
  ts::TempDir dir("bundle_empty");
  const auto m = make_manifest("none", Paradigm::P300, 256.0, {"Fz"}, {}, {});
  write_bundle(m, {}, dir.path());
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_EQ(fs::file_size(dir / "data.f32"), 0u);
  EXPECT_TRUE(read_bundle(dir.path()).manifest().subjects.empty());
}

TEST(BundleIo, RandomBundlesRoundTripBitIdentically) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ts::TempDir a("bundle_rt_a"), b("bundle_rt_b");
    const auto [m, recs] = random_bundle(seed, 5);
    write_bundle(m, recs, a.path());
    const auto loaded = read_bundle(a.path());
    EXPECT_EQ(loaded.manifest(), m);
    const auto all = loaded.read_all();
    ASSERT_EQ(all.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(all[i], recs[i]);

    write_bundle(loaded.manifest(), all, b.path());
    std::vector<std::string> names_a, names_b;
    for (const auto& e : fs::directory_iterator(a.path())) names_a.push_back(e.path().filename());
    for (const auto& e : fs::directory_iterator(b.path())) names_b.push_back(e.path().filename());
    std::sort(names_a.begin(), names_a.end());
    std::sort(names_b.begin(), names_b.end());
    ASSERT_EQ(names_a, names_b);
    for (const auto& n : names_a) EXPECT_EQ(ts::slurp(a / n), ts::slurp(b / n)) << n;
  }
}

TEST(BundleIo, OffsetsSumToFileSizeAndLazyEqualsEager) {
  ts::TempDir dir("bundle_offsets");
  const auto [m, recs] = random_bundle(17, 4);
  write_bundle(m, recs, dir.path());
  const auto b = read_bundle(dir.path());
  std::int64_t total = 0;
  for (const auto& s : b.manifest().subjects)
    for (const auto& e : s.sessions)
      total += e.n_samples * static_cast<std::int64_t>(b.manifest().channel_names.size()) * 4;
  EXPECT_EQ(total, static_cast<std::int64_t>(fs::file_size(dir / "data.f32")));
  const auto eager = b.read_all();
  std::size_t k = 0;
  for (std::size_t s = 0; s < b.manifest().subjects.size(); ++s)
    for (std::size_t t = 0; t < b.manifest().subjects[s].sessions.size(); ++t)
      EXPECT_EQ(b.recording(s, t), eager[k++]);
}

TEST(BundleIo, TruncatedDataFile) {
  ts::TempDir dir("bundle_trunc");
  std::vector<double> z(40, 2.0);
  const auto rec = ts::make_recording("s", "a", 100.0, {z, z, z});
  write_bundle(make_manifest("x", Paradigm::P300, 100.0, {"a", "b", "c"}, {"a"}, {rec}), {rec}, dir.path());
  fs::resize_file(dir / "data.f32", 2 * 40 * 4);
  EXPECT_THROW(read_bundle(dir.path()), TruncationError);
}

TEST(BundleIo, MissingFilesAreFormatErrors) {
  ts::TempDir dir("bundle_missing");
  EXPECT_THROW(read_bundle(dir.path()), FormatError);
  const auto rec = ts::make_recording("s", "a", 100.0, {std::vector<double>(20, 0.0)}, {{3, 1}});
  write_bundle(make_manifest("x", Paradigm::P300, 100.0, {"a"}, {"a"}, {rec}), {rec}, dir.path());
  fs::remove(dir / events_file_name("s", "a"));
  EXPECT_THROW(read_bundle(dir.path()), FormatError);
  write_bundle(make_manifest("x", Paradigm::P300, 100.0, {"a"}, {"a"}, {rec}), {rec}, dir.path());
  fs::remove(dir / "data.f32");
  EXPECT_THROW(read_bundle(dir.path()), FormatError);
}

TEST(BundleIo, ValidationErrorsNameTheField) {
  const auto rec = ts::make_recording("s", "a", 100.0, {std::vector<double>(20, 0.0)});
  auto m = make_manifest("x", Paradigm::P300, 100.0, {"a"}, {"a"}, {rec});

  auto bad = m;
  bad.sampling_rate_hz = 0.0;
  try {
    validate_manifest(bad);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.path(), "sampling_rate_hz");
  }

  bad = m;
  bad.channel_names = {"a", "a"};
  EXPECT_THROW(validate_manifest(bad), ValidationError);

  bad = m;
  bad.unit = "volt";
  EXPECT_THROW(validate_manifest(bad), ValidationError);

  bad = m;
  bad.subjects.push_back(bad.subjects[0]);
  EXPECT_THROW(validate_manifest(bad), ValidationError);

  bad = m;
  bad.subjects[0].sessions[0].session_id = "zzz";
  try {
    validate_manifest(bad);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.path(), "subjects[0].sessions[0].session_id");
  }
}

TEST(BundleIo, SessionsMustFollowDeclaredOrder) {
  std::vector<double> z(20, 0.0);
  const auto a = ts::make_recording("s", "late", 100.0, {z});
  const auto b = ts::make_recording("s", "early", 100.0, {z});
  const auto m = make_manifest("x", Paradigm::P300, 100.0, {"c"}, {"early", "late"}, {a, b});
  EXPECT_THROW(validate_manifest(m), ValidationError);
}

TEST(BundleIo, EventOutsideRecordingIsRejected) {
  ts::TempDir dir("bundle_event");
  const auto rec = ts::make_recording("s", "a", 100.0, {std::vector<double>(20, 0.0)}, {{20, 1}});
  EXPECT_THROW(write_bundle(make_manifest("x", Paradigm::P300, 100.0, {"c"}, {"a"}, {rec}), {rec}, dir.path()),
               ValidationError);
}

TEST(BundleIo, TamperedManifestOverlapDetected) {
  ts::TempDir dir("bundle_overlap");
  std::vector<double> z(10, 1.0);
  const auto a = ts::make_recording("s", "one", 50.0, {z});
  const auto b = ts::make_recording("t", "one", 50.0, {z});
  auto m = make_manifest("x", Paradigm::P300, 50.0, {"c"}, {"one"}, {a, b});
  m.subjects[1].sessions[0].data_offset_bytes = 20;
  EXPECT_THROW(validate_manifest(m), ValidationError);
}

TEST(BundleIo, InconsistentChannelCountOnWrite) {
  ts::TempDir dir("bundle_channels");
  std::vector<double> z(10, 1.0);
  const auto rec = ts::make_recording("s", "a", 50.0, {z, z});
  const auto m = make_manifest("x", Paradigm::P300, 50.0, {"c"}, {"a"}, {rec});
  EXPECT_THROW(write_bundle(m, {rec}, dir.path()), ValidationError);
}

TEST(BundleIo, UnwritableDirectoryIsIoError) {
  ts::TempDir dir("bundle_unwritable");
  write_text(dir / "blocker", "x");
  const auto rec = ts::make_recording("s", "a", 50.0, {std::vector<double>(4, 0.0)});
  const auto m = make_manifest("x", Paradigm::P300, 50.0, {"c"}, {"a"}, {rec});
  EXPECT_THROW(write_bundle(m, {rec}, dir / "blocker" / "sub"), IoError);
}

TEST(BundleIo, MalformedEventsCsv) {
  ts::TempDir dir("bundle_csv");
  const auto rec = ts::make_recording("s", "a", 100.0, {std::vector<double>(20, 0.0)}, {{3, 1}});
  write_bundle(make_manifest("x", Paradigm::P300, 100.0, {"c"}, {"a"}, {rec}), {rec}, dir.path());
  write_text(dir / events_file_name("s", "a"), "onset,code\n3,1\n");
  EXPECT_THROW(read_bundle(dir.path()), ValidationError);
  write_text(dir / events_file_name("s", "a"), "sample_index,code\n3,1\n5,2\n");
  EXPECT_THROW(read_bundle(dir.path()), ValidationError);
}

TEST(BundleIo, ParadigmNames) {
  for (auto p : {Paradigm::P300, Paradigm::N400, Paradigm::Synthetic})
    EXPECT_EQ(paradigm_from_string(to_string(p)), p);
  EXPECT_THROW(paradigm_from_string("SSVEP"), ParamError);
}
