#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bbnet/connectivity.hpp"
#include "bbnet/error.hpp"
#include "bbnet/signal.hpp"

namespace bbnet {

/// Trials of one task and session with a shared electrode layout. Subject ids are 0..subject_count-1.
struct Dataset {
  ElectrodeLayout layout;
  std::vector<Trial> trials;
  std::size_t subject_count = 0;
  Task task = Task::SYNTH;
  Session session = Session::I;
  double sample_rate_hz = 250.0;

  std::size_t channels() const { return layout.size(); }
  std::size_t samples() const { return trials.empty() ? 0 : trials.front().samples(); }
  std::vector<int> labels() const;
  /// Trial indices of each subject, in dataset order.
  std::vector<std::vector<std::size_t>> by_subject() const;
};

/// Shape, label range and finiteness checks shared by the loader and the protocols.
void validate_dataset(const Dataset& dataset);

std::vector<char> encode_dataset(const Dataset& dataset);
Dataset decode_dataset(const std::vector<char>& bytes);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

struct SynthConfig {
  std::size_t subjects = 10;
  std::size_t trials_per_subject = 100;
  std::size_t channels = 16;
  std::size_t samples = 1000;
  double session_shift = 0.0;
  std::uint64_t seed = 0;
  double snr_db = 5.0;  // +inf disables noise
  double sample_rate_hz = 250.0;
  std::size_t oscillators = 6;  // per source
  std::size_t sources = 4;
  Session session = Session::I;
  Task task = Task::SYNTH;
};

/// Latent sources (narrow-band oscillator banks plus white noise, all with the same
/// spectrum); each channel reads one source through a subject-specific rotation of its
/// in-phase and quadrature parts. Every channel has the same expected spectrum for every
/// subject, so identity lives only in the inter-channel relations. Session II reassigns
/// channels and perturbs the rotations with strength `session_shift`; the task selects the
/// oscillator frequencies.
Dataset generate_synthetic(const SynthConfig& config);

/// Restricts every trial and the layout to the given channels, in the given order.
Dataset restrict_channels(const Dataset& dataset, const std::vector<std::size_t>& channels);

/// Concatenates datasets with identical layout, length and subject roster. Each trial keeps
/// its own task label; the result carries the task of the first input.
Dataset pool_datasets(const std::vector<Dataset>& parts);

/// Preprocesses every trial (filter, decimate) and updates the sample rate.
Dataset preprocess_dataset(const Dataset& dataset, const PreprocessConfig& config);

using ElectrodeGroups = std::map<std::string, std::vector<std::string>>;

/// Reads {"group": ["Fp1", ...], ...} from a JSON file.
ElectrodeGroups load_electrode_groups(const std::filesystem::path& path);

/// Channel indices for a group name, or for a comma-separated list of channel names.
std::vector<std::size_t> resolve_channels(const ElectrodeLayout& layout, const ElectrodeGroups& groups,
                                          const std::string& selection);

}  // namespace bbnet
