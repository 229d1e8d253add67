#include "neuroid/bundle_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neuroid/error.hpp"

namespace neuroid {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kDataFile = "data.f32";
constexpr const char* kEventsHeader = "sample_index,code";

std::string session_path(std::size_t s, std::size_t t) {
  return "subjects[" + std::to_string(s) + "].sessions[" + std::to_string(t) + "]";
}

std::int64_t session_bytes(const DatasetManifest& m, const SessionEntry& e) {
  return static_cast<std::int64_t>(m.channel_names.size()) * e.n_samples * 4;
}

// --- JSON <-> manifest -------------------------------------------------------

template <class T>
T get_field(const json& obj, const char* key, const std::string& path) {
  const std::string field = path.empty() ? key : path + "." + key;
  if (!obj.is_object() || !obj.contains(key)) throw ValidationError(field, "missing field");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(field, "wrong type");
  }
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  m.dataset_name = get_field<std::string>(j, "dataset_name", "");
  try {
    m.paradigm = paradigm_from_string(get_field<std::string>(j, "paradigm", ""));
  } catch (const ParamError& e) {
    throw ValidationError("paradigm", e.what());
  }
  m.sampling_rate_hz = get_field<double>(j, "sampling_rate_hz", "");
  m.channel_names = get_field<std::vector<std::string>>(j, "channel_names", "");
  m.unit = get_field<std::string>(j, "unit", "");
  m.session_order = get_field<std::vector<std::string>>(j, "session_order", "");

  const auto& subjects = j.contains("subjects") ? j.at("subjects") : json();
  if (!subjects.is_array()) throw ValidationError("subjects", "missing or not a list");
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    const std::string spath = "subjects[" + std::to_string(s) + "]";
    SubjectEntry subject;
    subject.subject_id = get_field<std::string>(subjects[s], "subject_id", spath);
    const auto& sessions = subjects[s].contains("sessions") ? subjects[s].at("sessions") : json();
    if (!sessions.is_array()) throw ValidationError(spath + ".sessions", "missing or not a list");
    for (std::size_t t = 0; t < sessions.size(); ++t) {
      const auto path = session_path(s, t);
      SessionEntry e;
      e.session_id = get_field<std::string>(sessions[t], "session_id", path);
      e.n_samples = get_field<std::int64_t>(sessions[t], "n_samples", path);
      e.n_events = get_field<std::int64_t>(sessions[t], "n_events", path);
      e.data_offset_bytes = get_field<std::int64_t>(sessions[t], "data_offset_bytes", path);
      e.events_file = get_field<std::string>(sessions[t], "events_file", path);
      subject.sessions.push_back(std::move(e));
    }
    m.subjects.push_back(std::move(subject));
  }
  return m;
}

json manifest_to_json(const DatasetManifest& m) {
  json j;
  j["dataset_name"] = m.dataset_name;
  j["paradigm"] = to_string(m.paradigm);
  j["sampling_rate_hz"] = m.sampling_rate_hz;
  j["channel_names"] = m.channel_names;
  j["unit"] = m.unit;
  j["session_order"] = m.session_order;
  j["subjects"] = json::array();
  for (const auto& subject : m.subjects) {
    json sj;
    sj["subject_id"] = subject.subject_id;
    sj["sessions"] = json::array();
    for (const auto& e : subject.sessions) {
      json ej;
      ej["session_id"] = e.session_id;
      ej["n_samples"] = e.n_samples;
      ej["n_events"] = e.n_events;
      ej["data_offset_bytes"] = e.data_offset_bytes;
      ej["events_file"] = e.events_file;
      sj["sessions"].push_back(std::move(ej));
    }
    j["subjects"].push_back(std::move(sj));
  }
  return j;
}

// --- binary32 little-endian --------------------------------------------------

void put_f32(std::vector<char>& out, float value) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  char bytes[4];
  std::memcpy(bytes, &bits, 4);
  out.insert(out.end(), bytes, bytes + 4);
}

float get_f32(const char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  return std::bit_cast<float>(bits);
}

// --- events CSV ----------------------------------------------------------------

std::vector<EventMarker> read_events(const fs::path& file, const std::string& path) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("missing events file " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != kEventsHeader)
    throw ValidationError(path + ".events_file", "bad header, expected '" +
                                                     std::string(kEventsHeader) + "'");
  std::vector<EventMarker> events;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    EventMarker ev;
    try {
      if (comma == std::string::npos) throw std::invalid_argument("no comma");
      std::size_t used = 0;
      ev.sample_index = std::stoll(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("trailing");
      const auto rest = line.substr(comma + 1);
      ev.code = std::stoi(rest, &used);
      if (used != rest.size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw ValidationError(path + ".events_file", "malformed row " + std::to_string(row));
    }
    events.push_back(ev);
  }
  return events;
}

std::string render_events(const std::vector<EventMarker>& events) {
  std::string out = kEventsHeader;
  out += '\n';
  for (const auto& ev : events) {
    out += std::to_string(ev.sample_index);
    out += ',';
    out += std::to_string(ev.code);
    out += '\n';
  }
  return out;
}

void check_events(const std::vector<EventMarker>& events, const SessionEntry& e,
                  const std::string& path) {
  if (static_cast<std::int64_t>(events.size()) != e.n_events)
    throw ValidationError(path + ".n_events", "declares " + std::to_string(e.n_events) +
                                                  " events, table has " +
                                                  std::to_string(events.size()));
  for (std::size_t k = 0; k < events.size(); ++k) {
    if (events[k].sample_index < 0 || events[k].sample_index >= e.n_samples)
      throw ValidationError(path + ".events[" + std::to_string(k) + "].sample_index",
                            "outside [0, n_samples)");
  }
}

void write_file(const fs::path& file, const char* data, std::size_t size) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out.write(data, static_cast<std::streamsize>(size));
  if (!out) throw IoError("write failed for " + file.string());
}

}  // namespace

std::string to_string(Paradigm p) {
  switch (p) {
    case Paradigm::P300: return "P300";
    case Paradigm::N400: return "N400";
    case Paradigm::Synthetic: return "synthetic";
  }
  return "synthetic";
}

Paradigm paradigm_from_string(const std::string& text) {
  if (text == "P300") return Paradigm::P300;
  if (text == "N400") return Paradigm::N400;
  if (text == "synthetic") return Paradigm::Synthetic;
  throw ParamError("unknown paradigm '" + text + "'");
}

std::string events_file_name(const std::string& subject_id, const std::string& session_id) {
  return "events_" + subject_id + "_" + session_id + ".csv";
}

void validate_manifest(const DatasetManifest& m) {
  if (m.dataset_name.empty()) throw ValidationError("dataset_name", "empty");
  if (!(m.sampling_rate_hz > 0.0) || !std::isfinite(m.sampling_rate_hz))
    throw ValidationError("sampling_rate_hz", "must be a positive finite number");
  if (m.channel_names.empty()) throw ValidationError("channel_names", "empty");
  {
    std::set<std::string> seen;
    for (std::size_t c = 0; c < m.channel_names.size(); ++c) {
      if (m.channel_names[c].empty())
        throw ValidationError("channel_names[" + std::to_string(c) + "]", "empty name");
      if (!seen.insert(m.channel_names[c]).second)
        throw ValidationError("channel_names[" + std::to_string(c) + "]",
                              "duplicate channel '" + m.channel_names[c] + "'");
    }
  }
  if (m.unit != "microvolt") throw ValidationError("unit", "must be \"microvolt\"");

  std::map<std::string, std::size_t> rank;
  for (std::size_t k = 0; k < m.session_order.size(); ++k) {
    if (!rank.emplace(m.session_order[k], k).second)
      throw ValidationError("session_order[" + std::to_string(k) + "]", "duplicate session id");
  }

  std::set<std::string> subject_ids;
  std::set<std::string> event_files;
  std::vector<std::pair<std::int64_t, std::int64_t>> extents;  // (offset, end)
  for (std::size_t s = 0; s < m.subjects.size(); ++s) {
    const auto& subject = m.subjects[s];
    const std::string spath = "subjects[" + std::to_string(s) + "]";
    if (subject.subject_id.empty()) throw ValidationError(spath + ".subject_id", "empty");
    if (!subject_ids.insert(subject.subject_id).second)
      throw ValidationError(spath + ".subject_id", "duplicate subject '" + subject.subject_id + "'");
    std::set<std::string> session_ids;
    std::size_t last_rank = 0;
    for (std::size_t t = 0; t < subject.sessions.size(); ++t) {
      const auto& e = subject.sessions[t];
      const auto path = session_path(s, t);
      if (!session_ids.insert(e.session_id).second)
        throw ValidationError(path + ".session_id", "duplicate session '" + e.session_id + "'");
      const auto r = rank.find(e.session_id);
      if (r == rank.end())
        throw ValidationError(path + ".session_id", "'" + e.session_id + "' not in session_order");
      if (t > 0 && r->second <= last_rank)
        throw ValidationError(path + ".session_id", "sessions not in chronological order");
      last_rank = r->second;
      if (e.n_samples <= 0) throw ValidationError(path + ".n_samples", "must be positive");
      if (e.n_events < 0) throw ValidationError(path + ".n_events", "must be non-negative");
      if (e.data_offset_bytes < 0)
        throw ValidationError(path + ".data_offset_bytes", "must be non-negative");
      if (e.events_file.empty() || e.events_file.find('/') != std::string::npos ||
          e.events_file.find('\\') != std::string::npos || e.events_file == "." ||
          e.events_file == "..")
        throw ValidationError(path + ".events_file", "must be a plain file name");
      if (!event_files.insert(e.events_file).second)
        throw ValidationError(path + ".events_file", "shared with another session");
      extents.emplace_back(e.data_offset_bytes, e.data_offset_bytes + session_bytes(m, e));
    }
  }

  std::sort(extents.begin(), extents.end());
  for (std::size_t k = 1; k < extents.size(); ++k) {
    if (extents[k].first < extents[k - 1].second)
      throw ValidationError("subjects", "session data ranges overlap at offset " +
                                            std::to_string(extents[k].first));
  }
}

DatasetManifest make_manifest(std::string dataset_name, Paradigm paradigm, double sampling_rate_hz,
                              std::vector<std::string> channel_names,
                              std::vector<std::string> session_order,
                              const std::vector<RawRecording>& recordings) {
  DatasetManifest m;
  m.dataset_name = std::move(dataset_name);
  m.paradigm = paradigm;
  m.sampling_rate_hz = sampling_rate_hz;
  m.channel_names = std::move(channel_names);
  m.session_order = std::move(session_order);

  std::int64_t offset = 0;
  for (const auto& rec : recordings) {
    auto it = std::find_if(m.subjects.begin(), m.subjects.end(),
                           [&](const SubjectEntry& s) { return s.subject_id == rec.subject_id; });
    if (it == m.subjects.end()) {
      m.subjects.push_back(SubjectEntry{rec.subject_id, {}});
      it = std::prev(m.subjects.end());
    }
    SessionEntry e;
    e.session_id = rec.session_id;
    e.n_samples = rec.n_samples();
    e.n_events = static_cast<std::int64_t>(rec.events.size());
    e.data_offset_bytes = offset;
    e.events_file = events_file_name(rec.subject_id, rec.session_id);
    offset += rec.n_channels() * rec.n_samples() * 4;
    it->sessions.push_back(std::move(e));
  }
  return m;
}

Bundle::Bundle(fs::path dir) : dir_(std::move(dir)) {
  const auto manifest_path = dir_ / kManifestFile;
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw FormatError("missing " + manifest_path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  manifest_ = manifest_from_json(j);
  validate_manifest(manifest_);

  const auto data_path = dir_ / kDataFile;
  std::error_code ec;
  if (!fs::is_regular_file(data_path, ec)) throw FormatError("missing " + data_path.string());
  const auto file_size = static_cast<std::int64_t>(fs::file_size(data_path));

  std::int64_t declared = 0;
  for (std::size_t s = 0; s < manifest_.subjects.size(); ++s) {
    for (std::size_t t = 0; t < manifest_.subjects[s].sessions.size(); ++t) {
      const auto& e = manifest_.subjects[s].sessions[t];
      const auto end = e.data_offset_bytes + session_bytes(manifest_, e);
      if (end > file_size)
        throw TruncationError(session_path(s, t) + ": needs bytes up to " + std::to_string(end) +
                              " but data.f32 holds " + std::to_string(file_size));
      declared += session_bytes(manifest_, e);
      check_events(read_events(dir_ / e.events_file, session_path(s, t)), e, session_path(s, t));
    }
  }
  if (declared != file_size)
    throw ValidationError("data.f32", "file holds " + std::to_string(file_size) +
                                          " bytes, sessions declare " + std::to_string(declared));
}

RawRecording Bundle::recording(std::size_t subject_index, std::size_t session_index) const {
  const auto& subject = manifest_.subjects.at(subject_index);
  const auto& e = subject.sessions.at(session_index);
  const auto n_channels = static_cast<std::int64_t>(manifest_.channel_names.size());

  RawRecording rec;
  rec.subject_id = subject.subject_id;
  rec.session_id = e.session_id;
  rec.sampling_rate_hz = manifest_.sampling_rate_hz;
  rec.events = read_events(dir_ / e.events_file, session_path(subject_index, session_index));

  std::ifstream in(dir_ / kDataFile, std::ios::binary);
  if (!in) throw FormatError("missing " + (dir_ / kDataFile).string());
  std::vector<char> bytes(static_cast<std::size_t>(session_bytes(manifest_, e)));
  in.seekg(e.data_offset_bytes);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw TruncationError(session_path(subject_index, session_index) + ": short read");

  rec.signal.resize(n_channels, e.n_samples);
  double* dst = rec.signal.data();
  for (std::size_t k = 0; k < bytes.size() / 4; ++k) dst[k] = get_f32(bytes.data() + 4 * k);
  return rec;
}

std::vector<RawRecording> Bundle::read_all() const {
  std::vector<RawRecording> out;
  for (std::size_t s = 0; s < manifest_.subjects.size(); ++s)
    for (std::size_t t = 0; t < manifest_.subjects[s].sessions.size(); ++t)
      out.push_back(recording(s, t));
  return out;
}

Bundle read_bundle(const fs::path& dir) { return Bundle(dir); }

void write_bundle(const DatasetManifest& manifest, const std::vector<RawRecording>& recordings,
                  const fs::path& dir) {
  validate_manifest(manifest);

  // Match every manifest session to exactly one recording.
  std::map<std::pair<std::string, std::string>, const RawRecording*> by_key;
  for (const auto& rec : recordings) {
    if (!by_key.emplace(std::pair{rec.subject_id, rec.session_id}, &rec).second)
      throw ValidationError("recordings", "duplicate recording " + rec.subject_id + "/" +
                                              rec.session_id);
  }
  std::size_t n_sessions = 0;
  struct Slot {
    std::int64_t offset;
    const RawRecording* rec;
  };
  std::vector<Slot> slots;
  for (std::size_t s = 0; s < manifest.subjects.size(); ++s) {
    const auto& subject = manifest.subjects[s];
    for (std::size_t t = 0; t < subject.sessions.size(); ++t) {
      const auto& e = subject.sessions[t];
      const auto path = session_path(s, t);
      const auto it = by_key.find({subject.subject_id, e.session_id});
      if (it == by_key.end()) throw ValidationError(path, "no matching recording");
      const auto& rec = *it->second;
      if (rec.n_channels() != static_cast<std::int64_t>(manifest.channel_names.size()))
        throw ValidationError(path, "recording has " + std::to_string(rec.n_channels()) +
                                        " channels, manifest declares " +
                                        std::to_string(manifest.channel_names.size()));
      if (rec.n_samples() != e.n_samples)
        throw ValidationError(path + ".n_samples", "does not match the recording");
      if (rec.sampling_rate_hz != manifest.sampling_rate_hz)
        throw ValidationError(path, "recording sampling rate differs from the manifest");
      check_events(rec.events, e, path);
      slots.push_back({e.data_offset_bytes, &rec});
      ++n_sessions;
    }
  }
  if (n_sessions != recordings.size())
    throw ValidationError("recordings", "recordings not declared in the manifest");

  std::sort(slots.begin(), slots.end(),
            [](const Slot& a, const Slot& b) { return a.offset < b.offset; });
  std::vector<char> data;
  for (const auto& slot : slots) {
    if (slot.offset != static_cast<std::int64_t>(data.size()))
      throw ValidationError("subjects", "session offsets must tile data.f32 without gaps");
    const double* src = slot.rec->signal.data();
    const auto count = slot.rec->signal.size();
    data.reserve(data.size() + 4 * static_cast<std::size_t>(count));
    for (Eigen::Index k = 0; k < count; ++k) put_f32(data, static_cast<float>(src[k]));
  }

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());

  const auto text = manifest_to_json(manifest).dump(2) + "\n";
  write_file(dir / kManifestFile, text.data(), text.size());
  write_file(dir / kDataFile, data.data(), data.size());
  for (const auto& subject : manifest.subjects) {
    for (const auto& e : subject.sessions) {
      const auto& rec = *by_key.at({subject.subject_id, e.session_id});
      const auto csv = render_events(rec.events);
      write_file(dir / e.events_file, csv.data(), csv.size());
    }
  }
}

}  // namespace neuroid
