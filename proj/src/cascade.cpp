#include "qkdnet/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>
#include <vector>

#include "qkdnet/errors.hpp"

namespace qkdnet {

namespace {

constexpr std::uint64_t kMersenne61 = (1ULL << 61) - 1;
constexpr std::size_t kTagBits = 64;

std::uint64_t mulmod61(std::uint64_t a, std::uint64_t b) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  std::uint64_t lo = static_cast<std::uint64_t>(p & kMersenne61);
  std::uint64_t hi = static_cast<std::uint64_t>(p >> 61);
  std::uint64_t r = lo + hi;
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

struct Pass {
  std::size_t block = 0;
  std::vector<std::uint32_t> order;  // order[k] = key position at slot k
  std::vector<std::uint32_t> slot;   // inverse of order
  std::vector<std::uint8_t> parity_a;
  std::vector<std::uint8_t> parity_b;

  std::size_t blocks() const { return parity_a.size(); }
  std::size_t block_of(std::size_t pos) const { return slot[pos] / block; }
};

// Alice's side: answers parity queries over slots of a pass, each answer
// published on the classical channel.
class ParityResponder {
 public:
  ParityResponder(const Bits& key, ClassicalChannel& channel) : key_(key), channel_(channel) {}

  std::uint8_t parity(const Pass& pass, std::size_t lo, std::size_t hi) {
    channel_.send("a", "b", "parity", 1);
    return local_parity(key_, pass, lo, hi);
  }

  static std::uint8_t local_parity(const Bits& key, const Pass& pass, std::size_t lo,
                                   std::size_t hi) {
    std::uint8_t p = 0;
    for (std::size_t k = lo; k < hi; ++k) p ^= key[pass.order[k]];
    return p;
  }

 private:
  const Bits& key_;
  ClassicalChannel& channel_;
};

}  // namespace

std::uint64_t key_tag(std::span<const std::uint8_t> bits, std::uint64_t point) {
  point %= kMersenne61;
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < bits.size(); i += 32) {
    std::uint64_t chunk = 0;
    const std::size_t end = std::min(bits.size(), i + 32);
    for (std::size_t j = i; j < end; ++j) chunk = (chunk << 1) | (bits[j] & 1U);
    // Horner step; the +1 offset keeps leading zero chunks significant.
    acc = mulmod61(acc, point) + chunk + 1;
    if (acc >= kMersenne61) acc -= kMersenne61;
  }
  return mulmod61(acc, point) ^ bits.size();
}

std::size_t initial_block_size(double qber_estimate, std::size_t key_length) {
  if (key_length == 0) return 1;
  if (qber_estimate <= 0) return key_length;
  const double k = std::ceil(0.73 / qber_estimate);
  if (k >= static_cast<double>(key_length)) return key_length;
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

Reconciliation error_correct(const KeyMaterial& key_a, const KeyMaterial& key_b,
                             ClassicalChannel& channel, const CascadeOptions& options, Rng& rng) {
  if (key_a.size() != key_b.size()) {
    throw ProtocolDesyncError("error_correct: keys differ in length");
  }
  if (options.qber_estimate > options.max_qber) {
    throw SessionAborted("qber-threshold", "estimated QBER " + std::to_string(options.qber_estimate) +
                                               " exceeds " + std::to_string(options.max_qber));
  }
  const std::size_t n = key_a.size();
  const Bits& a = key_a.bits();
  Bits b = key_b.bits();

  Reconciliation out;
  const std::size_t parity_before = channel.bits("parity");
  const std::size_t verify_before = channel.bits("verification");

  if (n == 0) {
    out.corrected_a = key_a.advance(KeyStage::corrected, {});
    out.corrected_b = key_b.advance(KeyStage::corrected, {});
    return out;
  }

  ParityResponder alice(a, channel);
  std::vector<Pass> passes;
  const std::size_t k1 = options.initial_block_size.value_or(initial_block_size(options.qber_estimate, n));
  std::size_t block = std::clamp<std::size_t>(k1, 1, n);

  auto binary_search = [&](const Pass& pass, std::size_t blk) {
    std::size_t lo = blk * pass.block;
    std::size_t hi = std::min(n, lo + pass.block);
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      const std::uint8_t pa = alice.parity(pass, lo, mid);
      const std::uint8_t pb = ParityResponder::local_parity(b, pass, lo, mid);
      if (pa != pb) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return static_cast<std::size_t>(pass.order[lo]);
  };

  bool agreed = false;
  for (int p = 0; p < options.max_passes && !agreed; ++p) {
    if (p > 0 && p < options.passes) block = std::min(n, block * 2);
    if (p > 0) block = std::min(block, std::max<std::size_t>(1, n / 2));

    Pass pass;
    pass.block = block;
    pass.order.resize(n);
    std::iota(pass.order.begin(), pass.order.end(), 0U);
    if (p > 0) {
      for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(pass.order[i], pass.order[static_cast<std::size_t>(rng.below(i + 1))]);
      }
    }
    pass.slot.resize(n);
    for (std::size_t k = 0; k < n; ++k) pass.slot[pass.order[k]] = static_cast<std::uint32_t>(k);
    const std::size_t nblocks = (n + block - 1) / block;
    pass.parity_a.resize(nblocks);
    pass.parity_b.resize(nblocks);
    for (std::size_t blk = 0; blk < nblocks; ++blk) {
      const std::size_t lo = blk * block;
      const std::size_t hi = std::min(n, lo + block);
      pass.parity_a[blk] = alice.parity(pass, lo, hi);
      pass.parity_b[blk] = ParityResponder::local_parity(b, pass, lo, hi);
    }
    passes.push_back(std::move(pass));

    std::deque<std::pair<std::size_t, std::size_t>> queue;
    const Pass& current = passes.back();
    for (std::size_t blk = 0; blk < current.blocks(); ++blk) {
      if (current.parity_a[blk] != current.parity_b[blk]) queue.emplace_back(passes.size() - 1, blk);
    }
    while (!queue.empty()) {
      const auto [j, blk] = queue.front();
      queue.pop_front();
      if (passes[j].parity_a[blk] == passes[j].parity_b[blk]) continue;
      const std::size_t pos = binary_search(passes[j], blk);
      b[pos] ^= 1U;
      ++out.bits_flipped;
      // Cascade: the flip toggles one block parity in every earlier pass.
      for (std::size_t q = 0; q < passes.size(); ++q) {
        const std::size_t other = passes[q].block_of(pos);
        passes[q].parity_b[other] ^= 1U;
        if (passes[q].parity_a[other] != passes[q].parity_b[other]) queue.emplace_back(q, other);
      }
    }
    out.passes_run = p + 1;

    const std::uint64_t point = rng.next();
    channel.send("a", "b", "verification", kTagBits);
    agreed = key_tag(a, point) == key_tag(b, point);
  }

  out.leaked_bits = channel.bits("parity") - parity_before;
  out.verification_bits = channel.bits("verification") - verify_before;
  if (!agreed) {
    throw SessionAborted("reconciliation-failed",
                         "verification tags still differ after " + std::to_string(out.passes_run) +
                             " passes");
  }
  out.corrected_a = key_a.advance(KeyStage::corrected, a);
  out.corrected_b = key_b.advance(KeyStage::corrected, std::move(b));
  return out;
}

}  // namespace qkdnet
