#pragma once

#include <json.hpp>

#include "qkdnet/channel.hpp"
#include "qkdnet/transcript.hpp"

namespace qkdnet {

inline constexpr const char* kTranscriptSchema = "qkdnet-transcript/1";

nlohmann::ordered_json to_json(const ChannelParams& channel);

// Per-stage lengths, QBER figures, leak counts, seeds, knowledge, hop usage.
// Per-position sequences (bases, kept and sampled positions) only when
// `include_sequences` is set.
nlohmann::ordered_json to_json(const SessionTranscript& transcript, bool include_sequences = false);

}  // namespace qkdnet
