#include "qkdnet/classical_channel.hpp"

namespace qkdnet {

void ClassicalChannel::send(std::string_view from, std::string_view to, std::string_view topic,
                            std::size_t bits) {
  auto it = per_topic_.find(topic);
  if (it == per_topic_.end()) it = per_topic_.emplace(std::string(topic), 0).first;
  it->second += bits;
  total_bits_ += bits;
  if (keep_log_) log_.push_back({std::string(from), std::string(to), std::string(topic), bits});
}

std::size_t ClassicalChannel::bits(std::string_view topic) const {
  auto it = per_topic_.find(topic);
  return it == per_topic_.end() ? 0 : it->second;
}

}  // namespace qkdnet
