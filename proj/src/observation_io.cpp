#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "sapr/error.hpp"
#include "sapr/mra.hpp"

namespace sapr {
namespace {

static_assert(std::endian::native == std::endian::little, "observation files assume a little-endian host");

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw FormatError("truncated observation file (" + what + ")");
  return value;
}

} // namespace

void save_observations(const MRAObservationSet& obs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write("MRA1", 4);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(obs.observations.cols()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(obs.observations.rows()));
  put<double>(out, obs.sigma);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(obs.group.kind()));
  put<std::uint64_t>(out, obs.seed);
  out.write(reinterpret_cast<const char*>(obs.observations.data()),
            static_cast<std::streamsize>(obs.observations.size() * sizeof(double)));
  if (!out) throw FormatError("failed writing " + path.string());
}

MRAObservationSet load_observations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MRA1", 4) != 0) throw FormatError(path.string() + ": bad magic");
  const auto dim = get<std::uint64_t>(in, "N");
  const auto count = get<std::uint64_t>(in, "n");
  const auto sigma = get<double>(in, "sigma");
  const auto tag = get<std::uint32_t>(in, "group");
  const auto seed = get<std::uint64_t>(in, "seed");
  if (dim < 1 || count < 1 || dim > (1u << 20) || count > (1ull << 40))
    throw FormatError(path.string() + ": implausible shape " + std::to_string(count) + "x" + std::to_string(dim));

  MRAObservationSet obs;
  obs.sigma = sigma;
  obs.seed = seed;
  const auto n = static_cast<Index>(dim);
  switch (tag) {
  case static_cast<std::uint32_t>(GroupKind::cyclic): obs.group = GroupAction::cyclic(n); break;
  case static_cast<std::uint32_t>(GroupKind::dihedral): obs.group = GroupAction::dihedral(n); break;
  case static_cast<std::uint32_t>(GroupKind::so3): {
    const auto band = static_cast<Index>(std::llround(std::sqrt(double(n)))) - 1;
    if ((band + 1) * (band + 1) != n) throw FormatError(path.string() + ": so3 data with non-square N");
    obs.group = GroupAction::so3(band);
    break;
  }
  default: throw FormatError(path.string() + ": unknown group tag " + std::to_string(tag));
  }
  obs.observations.resize(static_cast<Index>(count), n);
  if (!in.read(reinterpret_cast<char*>(obs.observations.data()),
               static_cast<std::streamsize>(obs.observations.size() * sizeof(double))))
    throw FormatError(path.string() + ": truncated observation data");
  return obs;
}

} // namespace sapr
