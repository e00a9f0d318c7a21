#pragma once

#include <string>
#include <vector>

#include "mgg/tensor.hpp"

namespace mgg {

struct GroupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ordered attribute names; attribute indices are 1-based.
struct AttributeCatalog {
  std::vector<std::string> names;

  int count() const { return static_cast<int>(names.size()); }
  const std::string& name(int attr) const;

  /// The 40-attribute catalog shared by the face datasets.
  static AttributeCatalog celeba40();
};

/// Partition of attributes 1..N into K named part-based groups.
class GroupAssignment {
 public:
  GroupAssignment(std::vector<std::string> group_names,
                  std::vector<std::vector<int>> groups, int num_attributes);

  int num_groups() const { return static_cast<int>(groups_.size()); }
  int num_attributes() const { return num_attributes_; }

  const std::string& group_name(int g) const { return group_names_.at(g); }
  const std::vector<std::string>& group_names() const { return group_names_; }

  /// 0-based group id for a 1-based attribute index; throws on unknown index.
  int group_of(int attr) const;
  const std::vector<int>& attrs_of(int g) const { return groups_.at(g); }

  /// The 8-group table over the 40-attribute catalog.
  static GroupAssignment default_celeba();

  /// CSV rows: group_name,attr_index (1-based). Group order follows first
  /// appearance.
  static GroupAssignment load_csv(const std::string& path, int num_attributes);

  /// Contiguous equal-as-possible partition — the synthetic-benchmark layout.
  static GroupAssignment contiguous(int num_attributes, int num_groups);

  void save_csv(const std::string& path) const;

 private:
  std::vector<std::string> group_names_;
  std::vector<std::vector<int>> groups_;
  std::vector<int> attr_to_group_;  // index a -> group, -1 when unassigned
  int num_attributes_;
};

struct Violation {
  std::string kind;  // "missing" | "duplicate" | "empty-group" | "out-of-range"
  std::string detail;
};

/// Partition checks; violations are data, not failures.
std::vector<Violation> validate(const GroupAssignment& assignment,
                                int num_attributes);

}  // namespace mgg
