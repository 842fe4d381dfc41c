#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bbnet/signal.hpp"

namespace bbnet {

struct Position2D {
  double x = 0.0;
  double y = 0.0;
};

/// Electrode names (10-20 labels) and 2-D scalp positions.
struct ElectrodeLayout {
  std::vector<std::string> names;
  std::vector<Position2D> positions;

  std::size_t size() const { return names.size(); }
  /// Index of a channel label; throws ParameterError if absent.
  std::size_t index_of(std::string_view name) const;
  ElectrodeLayout subset(const std::vector<std::size_t>& indices) const;
};

void validate_layout(const ElectrodeLayout& layout);

/// The 62-channel 10-20 montage (azimuthal-equidistant projection, radius 1 at the
/// Fpz-T7-Oz-T8 circumference).
ElectrodeLayout standard_montage_62();

/// First n channels of the standard montage.
ElectrodeLayout standard_montage(std::size_t n);

enum class Measure : std::uint8_t { DIST, COR, PLV, PLI, RHO, IDN, RDM };

std::string_view to_string(Measure m);
Measure parse_measure(std::string_view name);

struct AdjacencyMatrix {
  Matrix weights;
  Measure measure = Measure::COR;

  std::size_t size() const { return static_cast<std::size_t>(weights.rows()); }
};

enum class PliConvention : std::uint8_t {
  Signed,    // wrapped difference in (-pi, pi] before sign()
  Absolute,  // literal |phi_k - phi_l| mod 2pi
};

struct ConnectivityOptions {
  PliConvention pli = PliConvention::Signed;
  /// Entropy histogram bins for RHO; 0 selects T bins.
  std::size_t rho_bins = 0;
};

AdjacencyMatrix euclidean_distance_matrix(const ElectrodeLayout& layout);
AdjacencyMatrix pearson_matrix(const Trial& trial);

/// |phi_k(t) - phi_l(t)| mod 2pi.
std::vector<double> relative_phase(const PhaseSeries& phase, std::size_t k, std::size_t l);

AdjacencyMatrix plv_matrix(const PhaseSeries& phase);
AdjacencyMatrix pli_matrix(const PhaseSeries& phase, PliConvention convention = PliConvention::Signed);
AdjacencyMatrix rho_matrix(const PhaseSeries& phase, std::size_t bins = 0);

AdjacencyMatrix identity_adjacency(std::size_t n);
AdjacencyMatrix random_adjacency(std::size_t n, std::uint64_t seed);

/// Affine min-max map of all entries onto [-1, 1]; a constant matrix maps to zeros.
AdjacencyMatrix normalize_adjacency(const AdjacencyMatrix& adj);

/// Raw (unnormalized) adjacency of `measure` for one trial. RDM uses `seed`.
AdjacencyMatrix compute_adjacency(Measure measure, const Trial& trial, const ElectrodeLayout& layout,
                                  const ConnectivityOptions& options = {}, std::uint64_t seed = 0);

/// Adjacency as fed to the graph layers: data-derived measures are min-max normalized,
/// IDN and RDM are already in [-1, 1] and pass through unchanged.
AdjacencyMatrix model_adjacency(Measure measure, const Trial& trial, const ElectrodeLayout& layout,
                                const ConnectivityOptions& options = {}, std::uint64_t seed = 0);

}  // namespace bbnet
