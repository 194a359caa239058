#include "dpct/io/archive.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "dpct/core/error.hpp"

namespace dpct::io {

namespace {
constexpr char kMagic[8] = {'D', 'P', 'C', 'T', 'A', 'R', 'C', '1'};
}

void save_archive(const std::filesystem::path& path, const Archive& archive) {
  nlohmann::json header;
  header["meta"] = archive.meta;
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, rec] : archive.tensors) {
    std::size_t n = 1;
    for (int d : rec.shape) n *= static_cast<std::size_t>(d);
    require(n == rec.values.size(), "save_archive: tensor '" + name + "' shape does not match its values");
    header["tensors"].push_back({{"name", name}, {"shape", rec.shape}, {"offset", offset}, {"count", n}});
    offset += n;
  }
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot open " + path.string() + " for writing");
  const std::uint64_t len = text.size();
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, rec] : archive.tensors)
    out.write(reinterpret_cast<const char*>(rec.values.data()),
              static_cast<std::streamsize>(rec.values.size() * sizeof(double)));
  if (!out) throw LoadError("failed writing " + path.string());
}

Archive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open archive " + path.string());
  char magic[8];
  std::uint64_t len = 0;
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw FormatError(path.string() + ": bad archive magic");
  if (!in.read(reinterpret_cast<char*>(&len), sizeof len) || len > (1ULL << 31))
    throw FormatError(path.string() + ": bad header length");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw FormatError(path.string() + ": truncated header");

  Archive a;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": header is not JSON: " + e.what());
  }
  a.meta = header.value("meta", nlohmann::json::object());
  const auto data_start = in.tellg();
  try {
    for (const auto& t : header.at("tensors")) {
      TensorRecord rec;
      rec.shape = t.at("shape").get<std::vector<int>>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      const auto count = t.at("count").get<std::uint64_t>();
      rec.values.resize(count);
      in.seekg(data_start + static_cast<std::streamoff>(offset * sizeof(double)));
      if (!in.read(reinterpret_cast<char*>(rec.values.data()), static_cast<std::streamsize>(count * sizeof(double))))
        throw FormatError(path.string() + ": truncated payload");
      a.tensors.emplace(t.at("name").get<std::string>(), std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed tensor index: " + e.what());
  }
  return a;
}

}  // namespace dpct::io
