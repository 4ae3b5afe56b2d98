#include "unoqa/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace unoqa {

std::optional<QualityGrade> parse_grade(const std::string& s) {
  if (s == "outstanding") return QualityGrade::Outstanding;
  if (s == "gradable") return QualityGrade::Gradable;
  if (s == "ungradable") return QualityGrade::Ungradable;
  return std::nullopt;
}

Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  Manifest m;
  std::string line;
  bool saw_header = false;
  std::unordered_set<std::string> ids;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != "id,path,label")
        throw FormatError(path + ": expected header 'id,path,label', got '" + line + "'");
      saw_header = true;
      continue;
    }
    std::istringstream ss(line);
    std::string id, p, lab;
    if (!std::getline(ss, id, ',') || !std::getline(ss, p, ','))
      throw FormatError(path + ": malformed row '" + line + "'");
    std::getline(ss, lab, ',');
    if (id.empty()) throw FormatError(path + ": empty sample id");
    if (!ids.insert(id).second) throw FormatError(path + ": duplicate sample id '" + id + "'");
    std::optional<QualityGrade> g;
    if (!lab.empty()) {
      g = parse_grade(lab);
      if (!g) throw FormatError(path + ": unknown label '" + lab + "'");
    }
    m.entries.push_back({id, p, g});
  }
  if (!saw_header) throw FormatError(path + ": empty manifest");
  return m;
}

void write_manifest(const std::string& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << "id,path,label\n";
  for (const auto& e : m.entries)
    out << e.id << "," << e.path << "," << (e.label ? grade_name(*e.label) : "") << "\n";
  if (!out) throw IoError("short write: " + path);
}

}  // namespace unoqa
