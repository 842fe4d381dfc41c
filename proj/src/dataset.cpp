#include "bbnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "bbnet/binary_io.hpp"

namespace bbnet {

namespace {

constexpr std::string_view kMagic = "EEGDS1";
constexpr std::uint8_t kVersion = 1;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back(t.subject_id);
  return out;
}

std::vector<std::vector<std::size_t>> Dataset::by_subject() const {
  std::vector<std::vector<std::size_t>> out(subject_count);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const int s = trials[i].subject_id;
    if (s < 0 || static_cast<std::size_t>(s) >= subject_count) {
      throw ParameterError("trial " + std::to_string(i) + " has subject id " + std::to_string(s) + " outside [0, " +
                           std::to_string(subject_count) + ")");
    }
    out[static_cast<std::size_t>(s)].push_back(i);
  }
  return out;
}

void validate_dataset(const Dataset& dataset) {
  validate_layout(dataset.layout);
  if (dataset.subject_count < 1) throw ParameterError("dataset has no subjects");
  if (!(dataset.sample_rate_hz > 0.0)) throw ParameterError("sample rate must be positive");
  const std::size_t n = dataset.channels();
  const std::size_t t = dataset.samples();
  for (std::size_t i = 0; i < dataset.trials.size(); ++i) {
    const Trial& tr = dataset.trials[i];
    if (tr.channels() != n || tr.samples() != t) {
      throw ShapeError("trial " + std::to_string(i) + " is " + std::to_string(tr.channels()) + "x" +
                       std::to_string(tr.samples()) + ", dataset is " + std::to_string(n) + "x" + std::to_string(t));
    }
    if (tr.subject_id < 0 || static_cast<std::size_t>(tr.subject_id) >= dataset.subject_count) {
      throw ParameterError("trial " + std::to_string(i) + " has subject id " + std::to_string(tr.subject_id) +
                           " outside [0, " + std::to_string(dataset.subject_count) + ")");
    }
    if (!tr.data.allFinite()) throw InputError("trial " + std::to_string(i) + " contains non-finite samples");
  }
}

std::vector<char> encode_dataset(const Dataset& dataset) {
  validate_dataset(dataset);
  io::Writer w;
  w.bytes(kMagic);
  w.put<std::uint8_t>(kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.channels()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.samples()));
  w.put<double>(dataset.sample_rate_hz);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.subject_count));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.trials.size()));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(dataset.task));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(dataset.session));
  for (std::size_t c = 0; c < dataset.channels(); ++c) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.layout.names[c].size()));
    w.bytes(dataset.layout.names[c]);
    w.put<double>(dataset.layout.positions[c].x);
    w.put<double>(dataset.layout.positions[c].y);
  }
  for (const Trial& tr : dataset.trials) {
    w.put<std::int32_t>(tr.subject_id);
    for (Eigen::Index i = 0; i < tr.data.size(); ++i) w.put<float>(static_cast<float>(tr.data.data()[i]));
  }
  return std::move(w.buffer());
}

Dataset decode_dataset(const std::vector<char>& bytes) {
  io::Reader r(bytes);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size(), "magic") != kMagic) {
    throw FormatError("not a dataset container: bad magic", 0);
  }
  const std::size_t version_at = r.offset();
  const auto version = r.get<std::uint8_t>("version");
  if (version != kVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version) + " (expected " +
                          std::to_string(kVersion) + ")",
                      version_at);
  }
  Dataset ds;
  const std::size_t header_at = r.offset();
  const std::size_t n = r.get<std::uint32_t>("channel count");
  const std::size_t t = r.get<std::uint32_t>("sample count");
  ds.sample_rate_hz = r.get<double>("sample rate");
  ds.subject_count = r.get<std::uint32_t>("subject count");
  const std::size_t count = r.get<std::uint32_t>("trial count");
  const std::size_t task_at = r.offset();
  const auto task = r.get<std::uint8_t>("task");
  const auto session = r.get<std::uint8_t>("session");
  if (n == 0 || t == 0) throw FormatError("empty trial shape " + std::to_string(n) + "x" + std::to_string(t), header_at);
  if (!(ds.sample_rate_hz > 0.0) || !std::isfinite(ds.sample_rate_hz)) {
    throw FormatError("invalid sample rate", header_at + 8);
  }
  if (ds.subject_count == 0) throw FormatError("subject count is zero", header_at + 16);
  if (task > static_cast<std::uint8_t>(Task::SYNTH)) throw FormatError("invalid task code " + std::to_string(task), task_at);
  if (session != 1 && session != 2) {
    throw FormatError("invalid session code " + std::to_string(session), task_at + 1);
  }
  ds.task = static_cast<Task>(task);
  ds.session = static_cast<Session>(session);

  const std::size_t layout_at = r.offset();
  for (std::size_t c = 0; c < n; ++c) {
    const auto len = r.get<std::uint32_t>("channel name length");
    ds.layout.names.push_back(r.bytes(len, "channel name"));
    Position2D p;
    p.x = r.get<double>("channel x");
    p.y = r.get<double>("channel y");
    ds.layout.positions.push_back(p);
  }

  const std::size_t record_bytes = 4 + n * t * 4;
  if (count > 0 && r.remaining() / record_bytes < count) {
    throw FormatError("truncated trial records: " + std::to_string(count) + " trials need " +
                          std::to_string(count * record_bytes) + " bytes, " + std::to_string(r.remaining()) +
                          " remain",
                      r.offset());
  }
  ds.trials.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Trial tr;
    const std::size_t id_at = r.offset();
    tr.subject_id = r.get<std::int32_t>("subject id");
    if (tr.subject_id < 0 || static_cast<std::size_t>(tr.subject_id) >= ds.subject_count) {
      throw FormatError("trial " + std::to_string(i) + " subject id " + std::to_string(tr.subject_id) +
                            " outside [0, " + std::to_string(ds.subject_count) + ")",
                        id_at);
    }
    tr.session = ds.session;
    tr.task = ds.task;
    tr.sample_rate_hz = ds.sample_rate_hz;
    tr.data.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t));
    for (std::size_t k = 0; k < n * t; ++k) {
      const std::size_t at = r.offset();
      const float v = r.get<float>("sample");
      if (!std::isfinite(v)) {
        throw FormatError("non-finite sample in trial " + std::to_string(i), at);
      }
      tr.data.data()[k] = v;
    }
    ds.trials.push_back(std::move(tr));
  }
  if (!r.at_end()) throw FormatError(std::to_string(r.remaining()) + " trailing bytes after last trial", r.offset());
  try {
    validate_layout(ds.layout);
  } catch (const Error& e) {
    throw FormatError(std::string("invalid layout block: ") + e.what(), layout_at);
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  io::write_file(path, encode_dataset(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) { return decode_dataset(io::read_file(path)); }

Dataset restrict_channels(const Dataset& dataset, const std::vector<std::size_t>& channels) {
  if (channels.empty()) throw ParameterError("channel subset is empty");
  Dataset out;
  out.layout = dataset.layout.subset(channels);
  validate_layout(out.layout);
  out.subject_count = dataset.subject_count;
  out.task = dataset.task;
  out.session = dataset.session;
  out.sample_rate_hz = dataset.sample_rate_hz;
  out.trials.reserve(dataset.trials.size());
  for (const Trial& tr : dataset.trials) {
    Trial r = tr;
    r.data.resize(static_cast<Eigen::Index>(channels.size()), tr.data.cols());
    for (std::size_t i = 0; i < channels.size(); ++i) {
      r.data.row(static_cast<Eigen::Index>(i)) = tr.data.row(static_cast<Eigen::Index>(channels[i]));
    }
    out.trials.push_back(std::move(r));
  }
  return out;
}

Dataset pool_datasets(const std::vector<Dataset>& parts) {
  if (parts.empty()) throw ParameterError("nothing to pool");
  Dataset out = parts.front();
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const Dataset& d = parts[p];
    if (d.layout.names != out.layout.names || d.samples() != out.samples() || d.sample_rate_hz != out.sample_rate_hz) {
      throw ParameterError("pooled datasets must share layout, length and sample rate");
    }
    if (d.subject_count != out.subject_count) throw ParameterError("pooled datasets must share the subject roster");
    out.trials.insert(out.trials.end(), d.trials.begin(), d.trials.end());
  }
  return out;
}

Dataset preprocess_dataset(const Dataset& dataset, const PreprocessConfig& config) {
  Dataset out;
  out.layout = dataset.layout;
  out.subject_count = dataset.subject_count;
  out.task = dataset.task;
  out.session = dataset.session;
  out.sample_rate_hz = dataset.sample_rate_hz;
  out.trials.reserve(dataset.trials.size());
  for (const Trial& tr : dataset.trials) out.trials.push_back(preprocess(tr, config));
  if (!out.trials.empty()) out.sample_rate_hz = out.trials.front().sample_rate_hz;
  return out;
}

ElectrodeGroups load_electrode_groups(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open electrode group file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("electrode group file " + path.string() + ": " + e.what(), e.byte);
  }
  if (!doc.is_object()) throw FormatError("electrode group file must hold a JSON object", 0);
  ElectrodeGroups groups;
  for (const auto& [name, members] : doc.items()) {
    if (!members.is_array()) throw FormatError("group '" + name + "' must be an array of channel names", 0);
    auto& list = groups[name];
    for (const auto& m : members) {
      if (!m.is_string()) throw FormatError("group '" + name + "' holds a non-string entry", 0);
      list.push_back(m.get<std::string>());
    }
  }
  return groups;
}

std::vector<std::size_t> resolve_channels(const ElectrodeLayout& layout, const ElectrodeGroups& groups,
                                          const std::string& selection) {
  std::vector<std::string> names;
  if (const auto it = groups.find(selection); it != groups.end()) {
    names = it->second;
  } else {
    std::stringstream ss(selection);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) names.push_back(item);
    }
    if (names.size() == 1 && layout.names.end() == std::find(layout.names.begin(), layout.names.end(), names[0])) {
      throw ParameterError("unknown electrode group or channel '" + selection + "'");
    }
  }
  if (names.empty()) throw ParameterError("empty electrode selection");
  std::vector<std::size_t> out;
  std::set<std::size_t> seen;
  for (const auto& n : names) {
    const std::size_t idx = layout.index_of(n);
    if (!seen.insert(idx).second) throw ParameterError("channel '" + n + "' selected twice");
    out.push_back(idx);
  }
  return out;
}

}  // namespace bbnet
