#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "phylomarkov/model.hpp"
#include "phylomarkov/state.hpp"

namespace phylomarkov {

struct Jump {
  double time = 0.0;
  std::size_t event = 0;
  std::uint64_t aux = 0;

  friend bool operator==(const Jump&, const Jump&) = default;
};

/// A realized trajectory on [0, horizon]: initial state plus ordered jumps.
struct JumpSequence {
  State x0;
  std::vector<Jump> jumps;
  double horizon = 0.0;

  friend bool operator==(const JumpSequence&, const JumpSequence&) = default;
};

struct HistoryEvent {
  double time = 0.0;
  std::size_t event = 0;

  friend bool operator==(const HistoryEvent&, const HistoryEvent&) = default;
};

/// The auxiliary-number-free projection of a jump sequence.
struct History {
  double horizon = 0.0;
  State x0;
  std::vector<HistoryEvent> events;

  friend bool operator==(const History&, const History&) = default;
};

History project(const JumpSequence& omega);

/// Jumps with time <= t, horizon set to t.
JumpSequence restrict_to(const JumpSequence& omega, double t);

/// Right-continuous state: x0 plus displacements of all jumps at times <= t.
State state_at(const ModelSpec& spec, const JumpSequence& omega, double t);
/// Left limit: displacements of jumps at times < t.
State state_before(const ModelSpec& spec, const JumpSequence& omega, double t);

State state_at(const ModelSpec& spec, const History& h, double t);

/// Throws ModelError naming the first violated trajectory invariant.
void check_jump_sequence(const ModelSpec& spec, const JumpSequence& omega);

/// Line-oriented CSV: a "# {json}" header line carrying x0, horizon, the
/// coordinate names and any caller metadata (a JSON object), then
/// "time,event,aux" rows. Times use 17 significant digits.
std::string trajectory_to_csv(const ModelSpec& spec, const JumpSequence& omega,
                              const std::string& metadata_json = "{}");
/// The same layout with an empty aux column.
std::string history_to_csv(const ModelSpec& spec, const History& h, const std::string& metadata_json = "{}");

struct TrajectoryFile {
  std::string header_json;  ///< the full header object
  JumpSequence omega;
  bool has_aux = true;      ///< false when every aux field is empty
};

/// Throws ModelError with a line number on malformed input.
TrajectoryFile trajectory_from_csv(const ModelSpec& spec, const std::string& text);

/// {"x0", "horizon", "coordinates", "jumps": [{"time", "event", "aux"}]} plus
/// the metadata object's keys.
std::string trajectory_to_json(const ModelSpec& spec, const JumpSequence& omega,
                               const std::string& metadata_json = "{}", int indent = -1);
JumpSequence trajectory_from_json(const ModelSpec& spec, const std::string& text);

}  // namespace phylomarkov
