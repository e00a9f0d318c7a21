#include "mgg/groups.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mgg {

const std::string& AttributeCatalog::name(int attr) const {
  if (attr < 1 || attr > count())
    throw GroupError("unknown attribute index: " + std::to_string(attr));
  return names[static_cast<std::size_t>(attr - 1)];
}

AttributeCatalog AttributeCatalog::celeba40() {
  return AttributeCatalog{{
      "5 o'clock shadow", "Arched eyebrows",   "Attractive",
      "Bags under eyes",  "Bald",              "Bangs",
      "Big lips",         "Big nose",          "Black hair",
      "Blond hair",       "Blurry",            "Brown hair",
      "Bushy eyebrows",   "Chubby",            "Double chin",
      "Eye glasses",      "Goatee",            "Gray hair",
      "Heavy makeup",     "High cheekbones",   "Male",
      "Mouth slightly open", "Mustache",       "Narrow eyes",
      "No beard",         "Oval face",         "Pale skin",
      "Pointy nose",      "Receding hairline", "Rosy cheeks",
      "Sideburns",        "Smiling",           "Straight hair",
      "Wavy hair",        "Wearing earrings",  "Wearing hat",
      "Wearing lipstick", "Wearing necklace",  "Wearing necktie",
      "Young",
  }};
}

GroupAssignment::GroupAssignment(std::vector<std::string> group_names,
                                 std::vector<std::vector<int>> groups,
                                 int num_attributes)
    : group_names_(std::move(group_names)),
      groups_(std::move(groups)),
      num_attributes_(num_attributes) {
  if (group_names_.size() != groups_.size())
    throw GroupError("group name/member list count mismatch");
  attr_to_group_.assign(static_cast<std::size_t>(num_attributes_) + 1, -1);
  for (std::size_t g = 0; g < groups_.size(); ++g)
    for (int a : groups_[g])
      if (a >= 1 && a <= num_attributes_)
        attr_to_group_[static_cast<std::size_t>(a)] = static_cast<int>(g);
}

int GroupAssignment::group_of(int attr) const {
  if (attr < 1 || attr > num_attributes_ ||
      attr_to_group_[static_cast<std::size_t>(attr)] < 0)
    throw GroupError("unknown attribute index: " + std::to_string(attr));
  return attr_to_group_[static_cast<std::size_t>(attr)];
}

// The published table uses short names for some attributes; the catalog
// mapping is: Lipstick=37, Beard=No beard (25), Makeup=Heavy makeup (19),
// Oval=Oval face (26), Pale=Pale skin (27), Hat=Wearing hat (36),
// Eye bags=Bags under eyes (4), Earrings=35, Necklace=38, Necktie=39.
GroupAssignment GroupAssignment::default_celeba() {
  return GroupAssignment(
      {"Mouth", "Eyes", "Whole face", "Hairline", "Around head", "Middle face",
       "Nose", "Neck"},
      {
          {7, 37, 22, 32, 17, 1, 23, 15, 25},  // Mouth
          {2, 13, 16, 24},                     // Eyes
          {3, 11, 19, 26, 40, 21, 14, 27},     // Whole face
          {5, 6, 29, 36},                      // Hairline
          {9, 10, 12, 18, 33, 34},             // Around head
          {20, 30, 4, 31, 35},                 // Middle face
          {8, 28},                             // Nose
          {38, 39},                            // Neck
      },
      40);
}

GroupAssignment GroupAssignment::load_csv(const std::string& path,
                                          int num_attributes) {
  std::ifstream is(path);
  if (!is) throw GroupError("cannot open assignment CSV: " + path);
  std::vector<std::string> names;
  std::vector<std::vector<int>> groups;
  std::map<std::string, std::size_t> index;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw GroupError("malformed assignment row " + std::to_string(line_no) +
                       ": " + line);
    const std::string group = line.substr(0, comma);
    int attr = 0;
    try {
      attr = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw GroupError("bad attribute index on row " +
                       std::to_string(line_no) + ": " + line);
    }
    auto it = index.find(group);
    if (it == index.end()) {
      it = index.emplace(group, names.size()).first;
      names.push_back(group);
      groups.emplace_back();
    }
    groups[it->second].push_back(attr);
  }
  return GroupAssignment(std::move(names), std::move(groups), num_attributes);
}

GroupAssignment GroupAssignment::contiguous(int num_attributes,
                                            int num_groups) {
  if (num_groups < 1 || num_attributes < num_groups)
    throw GroupError("contiguous assignment needs 1 <= K <= N");
  std::vector<std::string> names;
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(num_groups));
  for (int g = 0; g < num_groups; ++g)
    names.push_back("G" + std::to_string(g + 1));
  for (int a = 1; a <= num_attributes; ++a)
    groups[static_cast<std::size_t>((a - 1) * num_groups / num_attributes)]
        .push_back(a);
  return GroupAssignment(std::move(names), std::move(groups), num_attributes);
}

void GroupAssignment::save_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw GroupError("cannot write assignment CSV: " + path);
  for (int g = 0; g < num_groups(); ++g)
    for (int a : groups_[static_cast<std::size_t>(g)])
      os << group_names_[static_cast<std::size_t>(g)] << "," << a << "\n";
}

std::vector<Violation> validate(const GroupAssignment& assignment,
                                int num_attributes) {
  std::vector<Violation> out;
  std::vector<int> seen(static_cast<std::size_t>(num_attributes) + 1, 0);
  for (int g = 0; g < assignment.num_groups(); ++g) {
    const auto& attrs = assignment.attrs_of(g);
    if (attrs.empty())
      out.push_back({"empty-group", assignment.group_name(g)});
    for (int a : attrs) {
      if (a < 1 || a > num_attributes) {
        out.push_back({"out-of-range", "attribute " + std::to_string(a) +
                                           " in group " +
                                           assignment.group_name(g)});
        continue;
      }
      if (++seen[static_cast<std::size_t>(a)] == 2)
        out.push_back({"duplicate", "attribute " + std::to_string(a)});
    }
  }
  for (int a = 1; a <= num_attributes; ++a)
    if (seen[static_cast<std::size_t>(a)] == 0)
      out.push_back({"missing", "attribute " + std::to_string(a)});
  return out;
}

}  // namespace mgg
