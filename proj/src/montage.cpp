#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <set>

#include "bbnet/connectivity.hpp"
#include "bbnet/error.hpp"

namespace bbnet {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Channel order of the 62-channel BrainAmp recording.
constexpr std::array<std::string_view, 62> kMontage62 = {
    "Fp1",   "Fp2",    "F7",     "F3",    "Fz",    "F4",    "F8",     "FC5",    "FC1",   "FC2",
    "FC6",   "T7",     "C3",     "Cz",    "C4",    "T8",    "TP9",    "CP5",    "CP1",   "CP2",
    "CP6",   "TP10",   "P7",     "P3",    "Pz",    "P4",    "P8",     "PO9",    "O1",    "Oz",
    "O2",    "PO10",   "FC3",    "FC4",   "C5",    "C1",    "C2",     "C6",     "CP3",   "CPz",
    "CP4",   "P1",     "P2",     "POz",   "FT9",   "FTT9h", "TTP7h",  "TP7",    "TPP9h", "FT10",
    "FTT10h", "TPP8h", "TP8",    "TPP10h", "F9",   "F10",   "AF7",    "AF3",    "AF4",   "AF8",
    "PO3",   "PO4"};

struct Row {
  std::string_view prefix;
  double midline_polar_deg;  // signed: positive anterior, negative posterior
  double equator_azimuth_deg;
  bool on_equator;  // Fp and O rows sit on the circumference itself
};

// Longest prefixes first so "FTT" wins over "FT" and "F".
constexpr std::array<Row, 15> kRows = {{
    {"FTT", 11.25, 81.0, false},
    {"TTP", -11.25, 99.0, false},
    {"TPP", -33.75, 117.0, false},
    {"FP", 90.0, 18.0, true},
    {"AF", 67.5, 36.0, false},
    {"FC", 22.5, 72.0, false},
    {"FT", 22.5, 72.0, false},
    {"CP", -22.5, 108.0, false},
    {"TP", -22.5, 108.0, false},
    {"PO", -67.5, 144.0, false},
    {"F", 45.0, 54.0, false},
    {"C", 0.0, 90.0, false},
    {"T", 0.0, 90.0, false},
    {"P", -45.0, 126.0, false},
    {"O", -90.0, 162.0, true},
}};

struct Vec3 {
  double x, y, z;
};

Vec3 on_sphere(double polar_deg, double azimuth_deg) {
  const double th = polar_deg * kDeg;
  const double az = azimuth_deg * kDeg;
  return {std::sin(th) * std::sin(az), std::sin(th) * std::cos(az), std::cos(th)};
}

Vec3 slerp(const Vec3& a, const Vec3& b, double f) {
  const double dot = std::clamp(a.x * b.x + a.y * b.y + a.z * b.z, -1.0, 1.0);
  const double omega = std::acos(dot);
  if (omega < 1e-12) return a;
  const double wa = std::sin((1.0 - f) * omega) / std::sin(omega);
  const double wb = std::sin(f * omega) / std::sin(omega);
  return {wa * a.x + wb * b.x, wa * a.y + wb * b.y, wa * a.z + wb * b.z};
}

Position2D project(const Vec3& v) {
  const double polar = std::acos(std::clamp(v.z, -1.0, 1.0));
  const double r = polar / (90.0 * kDeg);
  const double az = std::atan2(v.x, v.y);
  return {r * std::sin(az), r * std::cos(az)};
}

Position2D position_of(std::string_view label) {
  std::string upper(label);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (!upper.empty() && upper.back() == 'H') upper.pop_back();

  for (const Row& row : kRows) {
    if (upper.rfind(row.prefix, 0) != 0) continue;
    const std::string_view rest = std::string_view(upper).substr(row.prefix.size());
    if (rest.empty()) continue;

    const Vec3 midline = row.midline_polar_deg >= 0.0 ? on_sphere(row.midline_polar_deg, 0.0)
                                                      : on_sphere(-row.midline_polar_deg, 180.0);
    if (rest == "Z") return project(midline);
    if (!std::all_of(rest.begin(), rest.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      continue;
    }
    const int number = std::stoi(std::string(rest));
    if (number <= 0) continue;
    const double side = (number % 2 == 1) ? -1.0 : 1.0;
    const int step = (number + 1) / 2;
    const double azimuth = side * row.equator_azimuth_deg;
    if (row.on_equator) return project(on_sphere(90.0, azimuth));
    return project(slerp(midline, on_sphere(90.0, azimuth), step / 4.0));
  }
  throw ParameterError("cannot place electrode label '" + std::string(label) + "'");
}

}  // namespace

std::size_t ElectrodeLayout::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw ParameterError("unknown channel name '" + std::string(name) + "'");
}

ElectrodeLayout ElectrodeLayout::subset(const std::vector<std::size_t>& indices) const {
  ElectrodeLayout out;
  for (std::size_t i : indices) {
    if (i >= names.size()) throw ParameterError("channel index out of range");
    out.names.push_back(names[i]);
    out.positions.push_back(positions[i]);
  }
  return out;
}

void validate_layout(const ElectrodeLayout& layout) {
  if (layout.names.size() != layout.positions.size()) {
    throw InputError("layout has " + std::to_string(layout.names.size()) + " names but " +
                     std::to_string(layout.positions.size()) + " positions");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < layout.names.size(); ++i) {
    if (!seen.insert(layout.names[i]).second) throw InputError("duplicate channel name '" + layout.names[i] + "'");
    if (!std::isfinite(layout.positions[i].x) || !std::isfinite(layout.positions[i].y)) {
      throw InputError("non-finite position for channel '" + layout.names[i] + "'");
    }
  }
}

ElectrodeLayout standard_montage_62() {
  ElectrodeLayout layout;
  for (std::string_view name : kMontage62) {
    layout.names.emplace_back(name);
    layout.positions.push_back(position_of(name));
  }
  return layout;
}

ElectrodeLayout standard_montage(std::size_t n) {
  if (n < 1 || n > kMontage62.size()) {
    throw ParameterError("standard montage supports 1..62 channels, got " + std::to_string(n));
  }
  ElectrodeLayout full = standard_montage_62();
  full.names.resize(n);
  full.positions.resize(n);
  return full;
}

}  // namespace bbnet
