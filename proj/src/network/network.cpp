#include "lnnpinn/network/network.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "lnnpinn/autodiff/scalar_math.hpp"

namespace lnnpinn::net {

std::string to_string(Arch arch) { return arch == Arch::kMlp ? "mlp" : "lnn"; }

Arch parse_arch(const std::string& name) {
  if (name == "mlp") {
    return Arch::kMlp;
  }
  if (name == "lnn") {
    return Arch::kLnn;
  }
  throw std::invalid_argument("unknown architecture '" + name + "' (expected mlp or lnn)");
}

Layout compute_layout(Arch arch, GateMode gates, int in_dim, int out_dim, int width, int depth) {
  if (in_dim < 1 || out_dim < 1 || width < 1 || depth < 1) {
    throw std::invalid_argument("network dimensions must all be >= 1");
  }
  const auto w = static_cast<std::size_t>(width);
  Layout l;
  std::size_t at = 0;
  auto take = [&at](std::size_t n) {
    const std::size_t off = at;
    at += n;
    return off;
  };
  l.gate_size = gates == GateMode::kChannel ? w : 1;
  l.w_in = take(w * static_cast<std::size_t>(in_dim));
  l.b_in = take(w);
  for (int i = 0; i < depth; ++i) {
    LayerOffsets lo;
    lo.weight = take(w * w);
    if (arch == Arch::kLnn) {
      lo.input_mix = take(w * w);
    }
    lo.bias = take(w);
    if (arch == Arch::kLnn) {
      lo.raw_alpha = take(l.gate_size);
      lo.raw_beta = take(l.gate_size);
    }
    l.layers.push_back(lo);
  }
  l.w_out = take(static_cast<std::size_t>(out_dim) * w);
  l.b_out = take(static_cast<std::size_t>(out_dim));
  l.total = at;
  return l;
}

namespace {

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  // 53 random mantissa bits; portable across standard libraries.
  double operator()() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 rng_;
};

void glorot(std::vector<double>& flat, std::size_t off, int fan_out, int fan_in, Uniform& u) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  const std::size_t n = static_cast<std::size_t>(fan_out) * fan_in;
  for (std::size_t i = 0; i < n; ++i) {
    flat[off + i] = (2.0 * u() - 1.0) * bound;
  }
}

}  // namespace

NetworkParams init(Arch arch, int in_dim, int out_dim, int width, int depth, std::uint64_t seed, GateMode gates) {
  NetworkParams p;
  p.arch = arch;
  p.gates = gates;
  p.in_dim = in_dim;
  p.out_dim = out_dim;
  p.width = width;
  p.depth = depth;
  p.seed = seed;
  p.layout = compute_layout(arch, gates, in_dim, out_dim, width, depth);
  p.flat.assign(p.layout.total, 0.0);

  Uniform u(seed);
  glorot(p.flat, p.layout.w_in, width, in_dim, u);
  for (const LayerOffsets& layer : p.layout.layers) {
    glorot(p.flat, layer.weight, width, width, u);
    if (arch == Arch::kLnn) {
      glorot(p.flat, layer.input_mix, width, width, u);
      for (std::size_t g = 0; g < p.layout.gate_size; ++g) {
        p.flat[layer.raw_alpha + g] = logit(kInitialAlpha);
        p.flat[layer.raw_beta + g] = logit(kInitialBeta);
      }
    }
  }
  glorot(p.flat, p.layout.w_out, out_dim, width, u);
  return p;
}

InputMap InputMap::identity(int dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

InputMap InputMap::from_box(std::span<const double> lo, std::span<const double> hi) {
  if (lo.size() != hi.size()) {
    throw std::invalid_argument("InputMap box bounds differ in dimension");
  }
  InputMap m;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(hi[i] > lo[i])) {
      throw std::invalid_argument("InputMap box must have hi > lo");
    }
    m.shift.push_back(0.5 * (lo[i] + hi[i]));
    m.scale.push_back(2.0 / (hi[i] - lo[i]));
  }
  return m;
}

int jet_degree_for(int order) {
  if (order < 0 || order > 4) {
    throw std::invalid_argument("derivative order must be in [0, 4]");
  }
  if (order <= 1) {
    return 1;
  }
  return order == 2 ? 2 : 4;
}

// Blob layout (little-endian):
//   0  char[4] "LNNP"      4  u32 version (1)
//   8  u8 arch  9 u8 gates 10 u16 reserved
//   12 u32 in_dim  16 u32 out_dim  20 u32 width  24 u32 depth  28 u32 reserved
//   32 u64 seed    40 u64 count    48 f64[count]
namespace {

constexpr std::array<char, 4> kMagic{'L', 'N', 'N', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  const U bits = std::bit_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    os.put(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) {
      throw std::runtime_error("truncated parameter blob");
    }
    bits |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return std::bit_cast<T>(bits);
}

}  // namespace

void save_params(const NetworkParams& p, std::ostream& os) {
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kVersion);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(p.arch));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(p.gates));
  put<std::uint16_t>(os, 0);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(p.in_dim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(p.out_dim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(p.width));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(p.depth));
  put<std::uint32_t>(os, 0);
  put<std::uint64_t>(os, p.seed);
  put<std::uint64_t>(os, p.flat.size());
  for (double v : p.flat) {
    put<double>(os, v);
  }
}

NetworkParams load_params(std::istream& is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) {
    throw std::runtime_error("not a parameter blob (bad magic)");
  }
  if (get<std::uint32_t>(is) != kVersion) {
    throw std::runtime_error("unsupported parameter blob version");
  }
  const auto arch = get<std::uint8_t>(is);
  const auto gates = get<std::uint8_t>(is);
  if (arch > 1 || gates > 1) {
    throw std::runtime_error("corrupt parameter blob header");
  }
  (void)get<std::uint16_t>(is);
  NetworkParams p;
  p.arch = static_cast<Arch>(arch);
  p.gates = static_cast<GateMode>(gates);
  p.in_dim = static_cast<int>(get<std::uint32_t>(is));
  p.out_dim = static_cast<int>(get<std::uint32_t>(is));
  p.width = static_cast<int>(get<std::uint32_t>(is));
  p.depth = static_cast<int>(get<std::uint32_t>(is));
  (void)get<std::uint32_t>(is);
  p.seed = get<std::uint64_t>(is);
  const auto count = get<std::uint64_t>(is);
  p.layout = compute_layout(p.arch, p.gates, p.in_dim, p.out_dim, p.width, p.depth);
  if (count != p.layout.total) {
    throw std::runtime_error("parameter count does not match header dimensions");
  }
  p.flat.resize(count);
  for (auto& v : p.flat) {
    v = get<double>(is);
  }
  return p;
}

void save_params_file(const NetworkParams& p, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  save_params(p, os);
}

NetworkParams load_params_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw std::runtime_error("cannot open " + path);
  }
  return load_params(is);
}

}  // namespace lnnpinn::net
