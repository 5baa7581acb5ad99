#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace cfsim {

// Purpose tags keep the data streams isolated from model randomness.
namespace purpose {
inline constexpr std::uint64_t kCovariates = 0;
inline constexpr std::uint64_t kTreatment = 1;
inline constexpr std::uint64_t kOutcomeNoise = 2;
inline constexpr std::uint64_t kModel = 3;
// A degenerate-split retry shifts every tag by this stride.
inline constexpr std::uint64_t kRetryStride = 16;
}  // namespace purpose

struct StreamProvenance {
  std::uint64_t master_seed = 0;
  std::uint64_t cell_index = 0;
  std::uint64_t replicate_index = 0;
  std::uint64_t purpose_tag = 0;

  friend bool operator==(const StreamProvenance&, const StreamProvenance&) = default;
};

/// xoshiro256** stream keyed by a hash of its provenance tuple.
///
/// Streams are not thread-safe; derive one per unit of work. The raw
/// sequence depends only on the provenance, so it is identical across
/// runs and platforms.
class RngStream {
 public:
  explicit RngStream(const StreamProvenance& provenance);

  const StreamProvenance& provenance() const noexcept { return provenance_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double next_uniform();
  // Uniform on {0, ..., bound - 1}; bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound);

  // Spare normal deviate from the polar method.
  std::optional<double>& cached_normal() noexcept { return cached_normal_; }

 private:
  StreamProvenance provenance_;
  std::array<std::uint64_t, 4> state_{};
  std::optional<double> cached_normal_;
};

RngStream derive_stream(std::uint64_t master_seed, std::uint64_t cell_index,
                        std::uint64_t replicate_index, std::uint64_t purpose_tag);

inline RngStream derive_stream(const StreamProvenance& p) {
  return RngStream(p);
}

/// One draw from N(mu, sd^2) via the Marsaglia polar method.
double sample_normal(RngStream& stream, double mu, double sd);

int sample_bernoulli(RngStream& stream, double p);

}  // namespace cfsim
