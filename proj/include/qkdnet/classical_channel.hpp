#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qkdnet {

// In-process stand-in for the authenticated, error-free public channel.
// Every message the protocol layers exchange is logged here, so disclosed
// information can be audited per topic.
class ClassicalChannel {
 public:
  struct Message {
    std::string from;
    std::string to;
    std::string topic;
    std::size_t bits;
  };

  void send(std::string_view from, std::string_view to, std::string_view topic, std::size_t bits);

  std::size_t bits(std::string_view topic) const;
  std::size_t total_bits() const noexcept { return total_bits_; }
  std::size_t message_count() const noexcept { return log_.size(); }
  const std::vector<Message>& log() const noexcept { return log_; }

  // Keep per-topic totals but drop the per-message log (long runs).
  void set_keep_log(bool keep) noexcept { keep_log_ = keep; }

 private:
  std::vector<Message> log_;
  std::map<std::string, std::size_t, std::less<>> per_topic_;
  std::size_t total_bits_ = 0;
  bool keep_log_ = false;
};

}  // namespace qkdnet
