#pragma once

#include <array>
#include <cstdint>

namespace srg {

/// Philox4x32-10 counter-based generator (Salmon et al.). The output block is
/// a pure function of (counter, key), so any stream position can be reached
/// in constant time and independent streams never share state.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key);
};

/// Sequential view of one Philox stream, keyed by a 64-bit seed and a 64-bit
/// stream id. Draw i of stream s is identical no matter which thread asks.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  /// Uniform on the open interval (0, 1), 32-bit resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; consumes exactly two uniforms per pair.
  double normal();
  /// Jump to the start of block `block_index` of this stream.
  void seek(std::uint64_t block_index);

 private:
  void refill();

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter out_{};
  int used_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace srg
