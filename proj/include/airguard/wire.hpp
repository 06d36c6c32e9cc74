#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airguard/error.hpp"
#include "airguard/safety.hpp"

namespace airguard::wire {

// ---- actuator command frame ------------------------------------------------
//
//   byte 0  0xA5 header
//   byte 1  seq (wrapping u8)
//   byte 2  opcode
//   byte 3  payload (SET_DUTY: duty in 0.5 % units, 0..200; otherwise 0x00)
//   byte 4  seq ^ opcode ^ payload

inline constexpr std::uint8_t kHeader = 0xA5;
inline constexpr std::size_t kFrameSize = 5;
inline constexpr std::uint8_t kMaxDutyPayload = 200;

enum class Opcode : std::uint8_t { SetDuty = 0x01, Stop = 0x02, Ping = 0x03 };

struct CommandFrame {
  std::uint8_t seq = 0;
  Opcode opcode = Opcode::Ping;
  std::uint8_t payload = 0;

  friend bool operator==(const CommandFrame&, const CommandFrame&) = default;
};

using FrameBytes = std::array<std::uint8_t, kFrameSize>;

CommandFrame set_duty_frame(std::uint8_t seq, double duty_pct);
double frame_duty_pct(const CommandFrame& f);

/// Throws PayloadOutOfRange (or UnknownOpcode for an out-of-enum opcode).
FrameBytes encode(const CommandFrame& frame);

/// Throws BadLength, BadHeader, BadChecksum, UnknownOpcode, PayloadOutOfRange.
CommandFrame decode(std::span<const std::uint8_t> bytes);

/// The error decode() would throw, without throwing; nullopt for a valid frame.
std::optional<ErrorCode> frame_error(std::span<const std::uint8_t> bytes) noexcept;

/// Number of distinct valid frames: (201 duty payloads + STOP + PING) * 256 seq.
std::size_t valid_frame_count();

/// Calls fn(frame) for every valid frame in a fixed order.
template <typename Fn>
void for_each_valid_frame(Fn&& fn) {
  for (int seq = 0; seq < 256; ++seq) {
    for (int p = 0; p <= kMaxDutyPayload; ++p)
      fn(CommandFrame{static_cast<std::uint8_t>(seq), Opcode::SetDuty, static_cast<std::uint8_t>(p)});
    fn(CommandFrame{static_cast<std::uint8_t>(seq), Opcode::Stop, 0});
    fn(CommandFrame{static_cast<std::uint8_t>(seq), Opcode::Ping, 0});
  }
}

// ---- JSON-lines journal ----------------------------------------------------

/// One pipeline tick of telemetry.
struct TelemetryRecord {
  double t_ms = 0.0;
  double dist_m = 0.0;
  safety::SafetyState state = safety::SafetyState::Safe;
  double duty_pct = 0.0;
  std::uint64_t seq = 0;

  friend bool operator==(const TelemetryRecord&, const TelemetryRecord&) = default;
};

nlohmann::ordered_json to_json(const TelemetryRecord& r);
/// Throws MalformedRecord (line 0) on missing fields, wrong types or bad state.
TelemetryRecord telemetry_from_json(const nlohmann::ordered_json& j);

/// Append-only line writer. Each record is flushed as one complete line.
class JournalWriter {
 public:
  /// Opens for append, or truncates first when `truncate` is set.
  explicit JournalWriter(const std::filesystem::path& path, bool truncate = false);

  void append(const nlohmann::ordered_json& record);
  void append(const TelemetryRecord& r) { append(to_json(r)); }
  void flush();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

struct JournalContents {
  std::vector<nlohmann::ordered_json> records;
  std::vector<std::size_t> line_numbers;  // 1-based, parallel to records
  /// Set when the file ended in a partial line (no trailing newline), which
  /// was discarded.
  bool truncated_tail = false;
};

/// Reads every complete line. Throws IoFailure when unreadable and
/// MalformedRecord (with 1-based line number) for a complete line that is not
/// a JSON object.
JournalContents read_journal(const std::filesystem::path& path);

struct TelemetryJournal {
  std::vector<TelemetryRecord> records;
  bool truncated_tail = false;
};

void journal_append(const std::filesystem::path& path, std::span<const TelemetryRecord> records);
TelemetryJournal journal_read(const std::filesystem::path& path);

}  // namespace airguard::wire
