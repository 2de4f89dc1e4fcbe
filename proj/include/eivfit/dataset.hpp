#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "eivfit/common.hpp"
#include "eivfit/densities.hpp"

namespace eivfit {

/// One subgroup: pairing between its inputs and outputs is unknown, pairing
/// across subgroups is known not to exist. Sizes H and L may differ.
struct Group {
  std::vector<Vector> inputs;
  std::vector<Vector> outputs;
  std::vector<ErrorDensity> input_densities;
  std::vector<ErrorDensity> output_densities;

  std::size_t H() const { return inputs.size(); }
  std::size_t L() const { return outputs.size(); }
};

/// R disjoint subgroups sharing input dimension k and output dimension m.
class GroupedDataset {
 public:
  /// Validates every invariant; throws DataError on violation.
  explicit GroupedDataset(std::vector<Group> groups);

  const std::vector<Group>& groups() const { return groups_; }
  const Group& group(std::size_t r) const { return groups_.at(r); }
  std::size_t R() const { return groups_.size(); }
  std::size_t input_dim() const { return k_; }
  std::size_t output_dim() const { return m_; }
  std::size_t total_inputs() const;
  std::size_t total_outputs() const;
  bool fully_paired() const;

 private:
  std::vector<Group> groups_;
  std::size_t k_ = 0;
  std::size_t m_ = 0;
};

/// Classical supervised data: x[i] pairs with y[i].
struct PairedDataset {
  std::vector<Vector> inputs;
  std::vector<Vector> outputs;
  std::vector<ErrorDensity> input_densities;
  std::vector<ErrorDensity> output_densities;

  std::size_t size() const { return inputs.size(); }
  void validate() const;
  PairedDataset subset(const std::vector<std::size_t>& rows) const;
};

/// Groups observations by label. Groups appear in order of first appearance
/// on the input side; a label present on only one side is a DataError.
GroupedDataset build_grouped(const std::vector<Vector>& inputs, const std::vector<Vector>& outputs,
                             const std::vector<std::string>& input_labels,
                             const std::vector<std::string>& output_labels,
                             const std::vector<ErrorDensity>& input_densities,
                             const std::vector<ErrorDensity>& output_densities);

/// Flat view of a grouped dataset with one label per observation ("g<r>").
struct FlatObservations {
  std::vector<Vector> inputs;
  std::vector<Vector> outputs;
  std::vector<std::string> input_labels;
  std::vector<std::string> output_labels;
  std::vector<ErrorDensity> input_densities;
  std::vector<ErrorDensity> output_densities;
};
FlatObservations flatten(const GroupedDataset& ds);

/// Every pair becomes its own singleton group.
GroupedDataset as_grouped(const PairedDataset& ds);

/// Stable-sorts pairs by `key` ascending and chunks them into consecutive
/// groups of `group_size`; the last group holds the remainder. A group size
/// larger than the dataset yields one group and a warning in `diagnostics`.
GroupedDataset partition_by_key(const PairedDataset& ds, const std::vector<double>& key,
                                std::size_t group_size, Diagnostics* diagnostics = nullptr);

/// Heuristic interleaving score per group: the fraction of a group's inputs
/// whose nearest input from another group is strictly closer than the nearest
/// other input of the same group. Singleton groups score 0.
struct OverlapDiagnostic {
  Vector per_group;
  std::string note;
  double mean() const;
};
OverlapDiagnostic group_overlap_diagnostic(const GroupedDataset& ds);

/// Each group expanded to all H_r * L_r cross pairs (the naive expansion).
PairedDataset all_cross_pairs(const GroupedDataset& ds);

}  // namespace eivfit
