#include "eivfit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace eivfit {

namespace {

void check_side(const std::vector<Vector>& values, const std::vector<ErrorDensity>& densities,
                std::size_t dim, const char* side, std::size_t r) {
  if (values.size() != densities.size()) {
    throw DataError("group " + std::to_string(r) + ": " + side + " density count does not match data count");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != dim || densities[i].dim() != dim) {
      throw DataError("group " + std::to_string(r) + ": " + side + " dimension mismatch");
    }
    for (double v : values[i]) {
      if (!std::isfinite(v)) throw DataError("group " + std::to_string(r) + ": non-finite " + side);
    }
  }
}

double squared_distance(const Vector& a, const Vector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

}  // namespace

GroupedDataset::GroupedDataset(std::vector<Group> groups) : groups_(std::move(groups)) {
  if (groups_.empty()) throw DataError("grouped dataset needs at least one group");
  const Group& first = groups_.front();
  if (first.inputs.empty() || first.outputs.empty()) {
    throw DataError("group 0 must contain at least one input and one output");
  }
  k_ = first.inputs.front().size();
  m_ = first.outputs.front().size();
  if (k_ == 0 || m_ == 0) throw DataError("data dimensions must be positive");
  for (std::size_t r = 0; r < groups_.size(); ++r) {
    const Group& g = groups_[r];
    if (g.inputs.empty() || g.outputs.empty()) {
      throw DataError("group " + std::to_string(r) +
                      " must contain at least one input and one output; pure-input or pure-output "
                      "subsets carry no pairing information and are rejected");
    }
    check_side(g.inputs, g.input_densities, k_, "input", r);
    check_side(g.outputs, g.output_densities, m_, "output", r);
  }
}

std::size_t GroupedDataset::total_inputs() const {
  std::size_t n = 0;
  for (const auto& g : groups_) n += g.H();
  return n;
}

std::size_t GroupedDataset::total_outputs() const {
  std::size_t n = 0;
  for (const auto& g : groups_) n += g.L();
  return n;
}

bool GroupedDataset::fully_paired() const {
  return std::all_of(groups_.begin(), groups_.end(), [](const Group& g) { return g.H() == 1 && g.L() == 1; });
}

void PairedDataset::validate() const {
  if (inputs.empty()) throw DataError("paired dataset is empty");
  if (outputs.size() != inputs.size() || input_densities.size() != inputs.size() ||
      output_densities.size() != inputs.size()) {
    throw DataError("paired dataset: inputs, outputs and densities must have equal length");
  }
}

PairedDataset PairedDataset::subset(const std::vector<std::size_t>& rows) const {
  PairedDataset out;
  for (std::size_t i : rows) {
    require(i < size(), "subset: row index out of range");
    out.inputs.push_back(inputs[i]);
    out.outputs.push_back(outputs[i]);
    out.input_densities.push_back(input_densities[i]);
    out.output_densities.push_back(output_densities[i]);
  }
  return out;
}

GroupedDataset build_grouped(const std::vector<Vector>& inputs, const std::vector<Vector>& outputs,
                             const std::vector<std::string>& input_labels,
                             const std::vector<std::string>& output_labels,
                             const std::vector<ErrorDensity>& input_densities,
                             const std::vector<ErrorDensity>& output_densities) {
  if (inputs.size() != input_labels.size() || inputs.size() != input_densities.size()) {
    throw DataError("build_grouped: inputs, input labels and input densities differ in length");
  }
  if (outputs.size() != output_labels.size() || outputs.size() != output_densities.size()) {
    throw DataError("build_grouped: outputs, output labels and output densities differ in length");
  }
  std::map<std::string, std::size_t> index;
  std::vector<Group> groups;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto [it, inserted] = index.try_emplace(input_labels[i], groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].inputs.push_back(inputs[i]);
    groups[it->second].input_densities.push_back(input_densities[i]);
  }
  for (std::size_t l = 0; l < outputs.size(); ++l) {
    auto it = index.find(output_labels[l]);
    if (it == index.end()) {
      throw DataError("build_grouped: label '" + output_labels[l] + "' has outputs but no inputs");
    }
    groups[it->second].outputs.push_back(outputs[l]);
    groups[it->second].output_densities.push_back(output_densities[l]);
  }
  for (const auto& [label, r] : index) {
    if (groups[r].outputs.empty()) {
      throw DataError("build_grouped: label '" + label + "' has inputs but no outputs");
    }
  }
  return GroupedDataset(std::move(groups));
}

FlatObservations flatten(const GroupedDataset& ds) {
  FlatObservations flat;
  for (std::size_t r = 0; r < ds.R(); ++r) {
    const Group& g = ds.group(r);
    const std::string label = "g" + std::to_string(r);
    for (std::size_t h = 0; h < g.H(); ++h) {
      flat.inputs.push_back(g.inputs[h]);
      flat.input_densities.push_back(g.input_densities[h]);
      flat.input_labels.push_back(label);
    }
    for (std::size_t l = 0; l < g.L(); ++l) {
      flat.outputs.push_back(g.outputs[l]);
      flat.output_densities.push_back(g.output_densities[l]);
      flat.output_labels.push_back(label);
    }
  }
  return flat;
}

GroupedDataset as_grouped(const PairedDataset& ds) {
  ds.validate();
  std::vector<Group> groups(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    groups[i].inputs = {ds.inputs[i]};
    groups[i].outputs = {ds.outputs[i]};
    groups[i].input_densities = {ds.input_densities[i]};
    groups[i].output_densities = {ds.output_densities[i]};
  }
  return GroupedDataset(std::move(groups));
}

GroupedDataset partition_by_key(const PairedDataset& ds, const std::vector<double>& key,
                                std::size_t group_size, Diagnostics* diagnostics) {
  ds.validate();
  require(key.size() == ds.size(), "partition_by_key: key length must equal the number of pairs");
  require(group_size >= 1, "partition_by_key: group size must be at least 1");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });

  if (group_size > ds.size()) {
    if (diagnostics) {
      diagnostics->push_back("group size " + std::to_string(group_size) + " exceeds the " +
                             std::to_string(ds.size()) + " available pairs; using a single unpaired group");
    }
    group_size = ds.size();
  }
  std::vector<Group> groups;
  for (std::size_t start = 0; start < order.size(); start += group_size) {
    Group g;
    const std::size_t stop = std::min(order.size(), start + group_size);
    for (std::size_t j = start; j < stop; ++j) {
      const std::size_t i = order[j];
      g.inputs.push_back(ds.inputs[i]);
      g.outputs.push_back(ds.outputs[i]);
      g.input_densities.push_back(ds.input_densities[i]);
      g.output_densities.push_back(ds.output_densities[i]);
    }
    groups.push_back(std::move(g));
  }
  return GroupedDataset(std::move(groups));
}

double OverlapDiagnostic::mean() const {
  if (per_group.empty()) return 0.0;
  return std::accumulate(per_group.begin(), per_group.end(), 0.0) / static_cast<double>(per_group.size());
}

OverlapDiagnostic group_overlap_diagnostic(const GroupedDataset& ds) {
  OverlapDiagnostic out;
  out.per_group.assign(ds.R(), 0.0);
  if (ds.R() == 1) {
    out.note = "diagnostic undefined for R=1";
    return out;
  }
  if (ds.input_dim() > 3) out.note = "diagnostic is a heuristic intended for k <= 3";
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < ds.R(); ++r) {
    const Group& g = ds.group(r);
    if (g.H() < 2) continue;
    std::size_t interleaved = 0;
    for (std::size_t h = 0; h < g.H(); ++h) {
      double same = inf;
      double other = inf;
      for (std::size_t j = 0; j < g.H(); ++j) {
        if (j != h) same = std::min(same, squared_distance(g.inputs[h], g.inputs[j]));
      }
      for (std::size_t q = 0; q < ds.R(); ++q) {
        if (q == r) continue;
        for (const auto& x : ds.group(q).inputs) other = std::min(other, squared_distance(g.inputs[h], x));
      }
      if (other < same) ++interleaved;
    }
    out.per_group[r] = static_cast<double>(interleaved) / static_cast<double>(g.H());
  }
  return out;
}

PairedDataset all_cross_pairs(const GroupedDataset& ds) {
  PairedDataset out;
  for (const Group& g : ds.groups()) {
    for (std::size_t h = 0; h < g.H(); ++h) {
      for (std::size_t l = 0; l < g.L(); ++l) {
        out.inputs.push_back(g.inputs[h]);
        out.outputs.push_back(g.outputs[l]);
        out.input_densities.push_back(g.input_densities[h]);
        out.output_densities.push_back(g.output_densities[l]);
      }
    }
  }
  return out;
}

}  // namespace eivfit
