#pragma once

#include <optional>
#include <string>
#include <vector>

#include "unoqa/error.hpp"
#include "unoqa/types.hpp"

namespace unoqa {

struct ManifestEntry {
  std::string id;
  std::string path;
  std::optional<QualityGrade> label;
};

// A labeled (or partially labeled) sample list. Ids are unique.
struct Manifest {
  std::vector<ManifestEntry> entries;

  const ManifestEntry* find(const std::string& id) const {
    for (const auto& e : entries)
      if (e.id == id) return &e;
    return nullptr;
  }

  Manifest filter_label(QualityGrade g) const {
    Manifest m;
    for (const auto& e : entries)
      if (e.label && *e.label == g) m.entries.push_back(e);
    return m;
  }
};

std::optional<QualityGrade> parse_grade(const std::string& s);

// CSV with header "id,path,label"; label is one of
// outstanding/gradable/ungradable or empty.
Manifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const Manifest& m);

}  // namespace unoqa
