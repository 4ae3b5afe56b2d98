#include "unoqa/feature_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "unoqa/error.hpp"

namespace unoqa {
namespace {

// This codebase only targets little-endian hosts; the readers/writers below
// rely on that for fixed-width payloads.
static_assert(std::endian::native == std::endian::little);

class Reader {
 public:
  Reader(std::ifstream& in, const std::string& path) : in_(in), path_(path) {}

  void raw(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
      throw FormatError(path_ + ": truncated payload at byte " + std::to_string(offset_) +
                        " while reading " + what);
    offset_ += n;
  }

  std::uint32_t u32(const char* what) {
    std::uint32_t v;
    raw(&v, 4, what);
    return v;
  }

  std::size_t offset() const { return offset_; }

 private:
  std::ifstream& in_;
  std::string path_;
  std::size_t offset_ = 0;
};

void put_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

}  // namespace

void write_features(const std::string& path, const FeatureSet& set) {
  if (set.ids.size() != set.pyramids.size())
    throw ArgError("write_features: ids and pyramids count disagree");
  if (set.pyramids.empty()) throw ArgError("write_features: nothing to write");
  const auto& first = set.pyramids.front();
  for (const auto& p : set.pyramids) {
    if (p.num_scales() != first.num_scales())
      throw ArgError("write_features: pyramids disagree on scale count");
    for (Index k = 0; k < p.num_scales(); ++k) {
      const auto& a = p.scales[static_cast<std::size_t>(k)];
      const auto& b = first.scales[static_cast<std::size_t>(k)];
      if (a.rows != b.rows || a.cols != b.cols || a.dim() != b.dim())
        throw ArgError("write_features: pyramids disagree on scale shapes");
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file: " + path);
  out.write(kFeatureMagic, 8);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(set.pyramids.size()));
  put_u32(out, static_cast<std::uint32_t>(first.num_scales()));
  for (const auto& s : first.scales) {
    put_u32(out, static_cast<std::uint32_t>(s.rows));
    put_u32(out, static_cast<std::uint32_t>(s.cols));
    put_u32(out, static_cast<std::uint32_t>(s.dim()));
  }
  for (std::size_t i = 0; i < set.pyramids.size(); ++i) {
    put_u32(out, static_cast<std::uint32_t>(i));
    for (const auto& s : set.pyramids[i].scales)
      out.write(reinterpret_cast<const char*>(s.values.data()),
                static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(s.values.size())));
  }
  put_u32(out, static_cast<std::uint32_t>(set.ids.size()));
  for (const auto& id : set.ids) {
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  if (!out) throw IoError("short write: " + path);
}

FeatureSet read_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file: " + path);
  Reader r(in, path);

  char magic[8];
  r.raw(magic, 8, "magic");
  if (std::memcmp(magic, kFeatureMagic, 8) != 0)
    throw FormatError(path + ": bad magic at byte 0, expected \"UNOQAFT1\"");
  const std::uint32_t version = r.u32("version");
  if (version != 1)
    throw FormatError(path + ": unsupported version " + std::to_string(version) + " at byte 8");
  const std::uint32_t n_samples = r.u32("sample count");
  const std::uint32_t num_scales = r.u32("scale count");
  if (num_scales == 0) throw FormatError(path + ": zero scales at byte 16");

  struct Shape {
    std::uint32_t h, w, d;
  };
  std::vector<Shape> shapes(num_scales);
  for (auto& s : shapes) {
    s.h = r.u32("scale height");
    s.w = r.u32("scale width");
    s.d = r.u32("scale dim");
    if (s.h == 0 || s.w == 0 || s.d == 0)
      throw FormatError(path + ": zero-sized scale at byte " + std::to_string(r.offset() - 12));
  }

  FeatureSet set;
  set.pyramids.resize(n_samples);
  std::vector<std::uint32_t> id_indices(n_samples);
  for (std::uint32_t i = 0; i < n_samples; ++i) {
    id_indices[i] = r.u32("sample id index");
    auto& pyr = set.pyramids[i];
    pyr.scales.resize(num_scales);
    for (std::uint32_t k = 0; k < num_scales; ++k) {
      auto& scale = pyr.scales[k];
      scale.rows = shapes[k].h;
      scale.cols = shapes[k].w;
      scale.values.resize(static_cast<Index>(shapes[k].h) * shapes[k].w, shapes[k].d);
      r.raw(scale.values.data(), sizeof(float) * static_cast<std::size_t>(scale.values.size()),
            "feature tensor");
    }
  }

  const std::uint32_t table_count = r.u32("id table count");
  std::vector<std::string> table(table_count);
  for (auto& id : table) {
    const std::uint32_t len = r.u32("id length");
    id.resize(len);
    if (len > 0) r.raw(id.data(), len, "id bytes");
  }
  set.ids.resize(n_samples);
  for (std::uint32_t i = 0; i < n_samples; ++i) {
    if (id_indices[i] >= table_count)
      throw FormatError(path + ": sample " + std::to_string(i) + " references id index " +
                        std::to_string(id_indices[i]) + " outside table of " +
                        std::to_string(table_count));
    set.ids[i] = table[id_indices[i]];
  }
  return set;
}

}  // namespace unoqa
