#include "cfsim/prng.hpp"

#include <cmath>
#include <string>

#include "cfsim/error.hpp"

namespace cfsim {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

std::uint64_t hash_provenance(const StreamProvenance& p) {
  std::uint64_t h = mix64(kGolden);
  const std::uint64_t fields[] = {p.master_seed, p.cell_index, p.replicate_index,
                                  p.purpose_tag};
  std::uint64_t k = 1;
  for (std::uint64_t v : fields) {
    h = mix64(h ^ mix64(v + kGolden * k));
    ++k;
  }
  return h;
}

}  // namespace

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::EmptyDataset: return "empty-dataset";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::DegenerateSplit: return "degenerate-split";
    case ErrorCode::SingularDesign: return "singular-design";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::InvalidData: return "invalid-data";
    case ErrorCode::DivisionByZero: return "division-by-zero";
    case ErrorCode::EmptySummary: return "empty-summary";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

RngStream::RngStream(const StreamProvenance& provenance) : provenance_(provenance) {
  // SplitMix64 expansion of the key into the xoshiro state.
  std::uint64_t x = hash_provenance(provenance);
  for (auto& word : state_) {
    x += kGolden;
    word = mix64(x);
  }
}

std::uint64_t RngStream::next_u64() {
  auto& s = state_;
  const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
  const std::uint64_t t = s[1] << 17;
  s[2] ^= s[0];
  s[3] ^= s[1];
  s[1] ^= s[2];
  s[0] ^= s[3];
  s[2] ^= t;
  s[3] = rotl(s[3], 45);
  return result;
}

double RngStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t bound) {
  if (bound == 0) {
    throw Error(ErrorCode::InvalidParameter, "uniform_index: bound must be positive");
  }
  // Lemire's multiply-shift with rejection; unbiased.
  __uint128_t m = static_cast<__uint128_t>(next_u64()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<__uint128_t>(next_u64()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

RngStream derive_stream(std::uint64_t master_seed, std::uint64_t cell_index,
                        std::uint64_t replicate_index, std::uint64_t purpose_tag) {
  return RngStream(StreamProvenance{master_seed, cell_index, replicate_index, purpose_tag});
}

double sample_normal(RngStream& stream, double mu, double sd) {
  if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mu)) {
    throw Error(ErrorCode::InvalidParameter,
                "sample_normal: sd must be positive and finite, got " + std::to_string(sd));
  }
  auto& spare = stream.cached_normal();
  if (spare) {
    const double z = *spare;
    spare.reset();
    return mu + sd * z;
  }
  double u, v, s;
  do {
    u = 2.0 * stream.next_uniform() - 1.0;
    v = 2.0 * stream.next_uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare = v * factor;
  return mu + sd * (u * factor);
}

int sample_bernoulli(RngStream& stream, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter,
                "sample_bernoulli: p must lie in [0, 1], got " + std::to_string(p));
  }
  // p == 1 must always succeed; next_uniform() < 1 guarantees it.
  return stream.next_uniform() < p ? 1 : 0;
}

}  // namespace cfsim
