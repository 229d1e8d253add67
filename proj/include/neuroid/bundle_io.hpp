#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace neuroid {

/// [n_channels x n_samples], channel-major, microvolts.
using SignalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Paradigm { P300, N400, Synthetic };

std::string to_string(Paradigm p);
Paradigm paradigm_from_string(const std::string& text);

struct EventMarker {
  std::int64_t sample_index = 0;
  int code = 0;

  bool operator==(const EventMarker&) const = default;
};

struct SessionEntry {
  std::string session_id;
  std::int64_t n_samples = 0;
  std::int64_t n_events = 0;
  std::int64_t data_offset_bytes = 0;
  std::string events_file;

  bool operator==(const SessionEntry&) const = default;
};

struct SubjectEntry {
  std::string subject_id;
  std::vector<SessionEntry> sessions;

  bool operator==(const SubjectEntry&) const = default;
};

/// Contents of manifest.json.
///
/// `session_order` lists every session id used in the bundle in chronological
/// order; each subject's `sessions` must follow that order. Multi-session
/// evaluation pairs sessions by their position in this list.
struct DatasetManifest {
  std::string dataset_name;
  Paradigm paradigm = Paradigm::Synthetic;
  double sampling_rate_hz = 0.0;
  std::vector<std::string> channel_names;
  std::string unit = "microvolt";
  std::vector<std::string> session_order;
  std::vector<SubjectEntry> subjects;

  bool operator==(const DatasetManifest&) const = default;
};

struct RawRecording {
  std::string subject_id;
  std::string session_id;
  double sampling_rate_hz = 0.0;
  SignalMatrix signal;
  std::vector<EventMarker> events;

  std::int64_t n_channels() const { return signal.rows(); }
  std::int64_t n_samples() const { return signal.cols(); }

  bool operator==(const RawRecording& other) const {
    return subject_id == other.subject_id && session_id == other.session_id &&
           sampling_rate_hz == other.sampling_rate_hz && events == other.events &&
           signal.rows() == other.signal.rows() && signal.cols() == other.signal.cols() &&
           signal == other.signal;
  }
};

/// Checks every manifest invariant that does not need the data file.
/// Throws ValidationError naming the offending field.
void validate_manifest(const DatasetManifest& manifest);

/// Builds a manifest whose session layout (sizes, offsets, event file names)
/// matches `recordings`, packed in the given order.
DatasetManifest make_manifest(std::string dataset_name, Paradigm paradigm, double sampling_rate_hz,
                              std::vector<std::string> channel_names,
                              std::vector<std::string> session_order,
                              const std::vector<RawRecording>& recordings);

/// A bundle opened for reading. Recordings are decoded on demand; the object
/// is immutable after construction and may be shared between threads.
class Bundle {
 public:
  explicit Bundle(std::filesystem::path dir);

  const DatasetManifest& manifest() const noexcept { return manifest_; }
  const std::filesystem::path& path() const noexcept { return dir_; }

  RawRecording recording(std::size_t subject_index, std::size_t session_index) const;
  std::vector<RawRecording> read_all() const;

 private:
  std::filesystem::path dir_;
  DatasetManifest manifest_;
};

/// Opens and validates a bundle directory.
Bundle read_bundle(const std::filesystem::path& dir);

/// Writes manifest.json, data.f32 and one events CSV per session. Output bytes
/// are a pure function of the inputs. Signals are stored as binary32, so values
/// not representable in single precision are rounded.
void write_bundle(const DatasetManifest& manifest, const std::vector<RawRecording>& recordings,
                  const std::filesystem::path& dir);

/// File name of the event table for a subject-session.
std::string events_file_name(const std::string& subject_id, const std::string& session_id);

}  // namespace neuroid
