#include "skim/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace skim {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'S', 'K', 'W', 'T'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const NamedTensors& tensors) {
  nlohmann::json manifest = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    manifest.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += static_cast<uint64_t>(t.numel());
  }
  std::string mtext = manifest.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os.write(kMagic, 4);
  write_pod<uint32_t>(os, kVersion);
  write_pod<uint64_t>(os, static_cast<uint64_t>(mtext.size()));
  os.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  for (const auto& [name, t] : tensors) {
    os.write(reinterpret_cast<const char*>(t.data().data()),
             static_cast<std::streamsize>(t.numel() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("write failed for " + path);
}

NamedTensors load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + " is not a weight checkpoint (bad magic)");
  uint32_t version = read_pod<uint32_t>(is);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  uint64_t mlen = read_pod<uint64_t>(is);
  std::string mtext(mlen, '\0');
  is.read(mtext.data(), static_cast<std::streamsize>(mlen));
  if (!is) throw std::runtime_error("checkpoint truncated in manifest");
  nlohmann::json manifest = nlohmann::json::parse(mtext);

  std::streampos data_start = is.tellg();
  NamedTensors out;
  for (const auto& entry : manifest) {
    std::string name = entry.at("name").get<std::string>();
    Shape shape = entry.at("shape").get<Shape>();
    uint64_t offset = entry.at("offset").get<uint64_t>();
    int64_t numel = shape_numel(shape);
    std::vector<double> data(static_cast<size_t>(numel));
    is.seekg(data_start + static_cast<std::streamoff>(offset * sizeof(double)));
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(numel * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint truncated reading tensor " + name);
    out.emplace_back(name, Tensor::from_data(shape, std::move(data)));
  }
  return out;
}

void load_checkpoint_into(const std::string& path, NamedTensors& dst) {
  NamedTensors stored = load_checkpoint(path);
  for (auto& [name, target] : dst) {
    const Tensor* found = nullptr;
    for (const auto& [sname, st] : stored) {
      if (sname == name) {
        found = &st;
        break;
      }
    }
    if (!found) throw std::runtime_error("checkpoint " + path + " is missing tensor " + name);
    if (found->shape() != target.shape())
      throw std::runtime_error("shape mismatch for " + name + ": checkpoint has " +
                               shape_str(found->shape()) + ", model expects " +
                               shape_str(target.shape()));
    std::copy(found->data().begin(), found->data().end(), target.data().begin());
  }
}

}  // namespace skim
